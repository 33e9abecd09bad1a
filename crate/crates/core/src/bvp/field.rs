//! Closed-form harmonic fields used as image terms.
//!
//! Subtracting an image that already satisfies the singular part of the
//! boundary data leaves the layer potential with smooth data, which is what
//! keeps the solver accurate for sources close to a surface.

use std::f64::consts::PI;

use crate::geometry::Vec3;
use crate::potential::{g, grad_g};

const INV_FOUR_PI: f64 = 1.0 / (4.0 * PI);

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    /// q·G(y − pos).
    Point { pos: Vec3, q: f64 },
    /// density·∫₀^len G(y − start − t·dir) dt, `dir` a unit vector.
    Line { start: Vec3, dir: Vec3, len: f64, density: f64 },
}

impl Source {
    pub fn value(&self, y: &Vec3) -> f64 {
        match self {
            Source::Point { pos, q } => q * g(&(y - pos)),
            Source::Line { start, dir, len, density } => density * INV_FOUR_PI * line_log(&(y - start), dir, *len).0,
        }
    }

    pub fn grad(&self, y: &Vec3) -> Vec3 {
        match self {
            Source::Point { pos, q } => grad_g(&(y - pos)) * *q,
            Source::Line { start, dir, len, density } => line_log(&(y - start), dir, *len).1 * (density * INV_FOUR_PI),
        }
    }

    /// Points where quadrature should refine.
    pub fn hot_spots(&self) -> Vec<Vec3> {
        match self {
            Source::Point { pos, .. } => vec![*pos],
            Source::Line { start, dir, len, .. } => vec![*start, start + dir * *len],
        }
    }
}

/// ∫₀^L dt/|d − t e| and its gradient in d, in the branch that avoids
/// cancellation for the position of d relative to the segment.
fn line_log(d: &Vec3, e: &Vec3, len: f64) -> (f64, Vec3) {
    let p = d.dot(e);
    let r = d.norm();
    let dl = d - e * len;
    let rl = dl.norm();
    if p <= 0.0 {
        let (num, den) = (len - p + rl, r - p);
        let grad = (-e + dl / rl) / num - (d / r - e) / den;
        ((num / den).ln(), grad)
    } else if p >= len {
        let (num, den) = (r + p, rl + p - len);
        let grad = (d / r + e) / num - (dl / rl + e) / den;
        ((num / den).ln(), grad)
    } else {
        let rho2 = r * r - p * p;
        let (a, b) = (len - p + rl, r + p);
        let grad = (-e + dl / rl) / a + (d / r + e) / b - (d - e * p) * (2.0 / rho2);
        ((a * b / rho2).ln(), grad)
    }
}

/// Sum of sources plus a constant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalyticField {
    pub sources: Vec<Source>,
    pub constant: f64,
}

impl AnalyticField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn point(pos: Vec3, q: f64) -> Self {
        AnalyticField { sources: vec![Source::Point { pos, q }], constant: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.sources.is_empty() && self.constant == 0.0
    }

    pub fn value(&self, y: &Vec3) -> f64 {
        self.constant + self.sources.iter().map(|s| s.value(y)).sum::<f64>()
    }

    pub fn grad(&self, y: &Vec3) -> Vec3 {
        self.sources.iter().fold(Vec3::zeros(), |a, s| a + s.grad(y))
    }

    pub fn hot_spots(&self) -> Vec<Vec3> {
        self.sources.iter().flat_map(|s| s.hot_spots()).collect()
    }

    pub fn add(mut self, other: &AnalyticField) -> Self {
        self.sources.extend(other.sources.iter().cloned());
        self.constant += other.constant;
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for s in self.sources.iter_mut() {
            match s {
                Source::Point { q, .. } => *q *= c,
                Source::Line { density, .. } => *density *= c,
            }
        }
        self.constant *= c;
        self
    }
}

/// Field harmonic inside the sphere |y − c| < R that equals q·G(y − x) on
/// the sphere, for x inside it.
pub fn kelvin_image(center: &Vec3, radius: f64, x: &Vec3, q: f64) -> AnalyticField {
    let rel = x - center;
    let s = rel.norm();
    if s < 1e-12 * radius {
        return AnalyticField { sources: vec![], constant: q * INV_FOUR_PI / radius };
    }
    let star = center + rel * (radius * radius / (s * s));
    AnalyticField::point(star, q * radius / s)
}

/// Field harmonic outside the sphere |y − c| > a, decaying at infinity, with
/// ∂ν h = −q·∂ν G(· − p) on the sphere (ν pointing away from the center),
/// for a source p outside it.
pub fn neumann_image(center: &Vec3, a: f64, p: &Vec3, q: f64) -> AnalyticField {
    let rel = p - center;
    let s = rel.norm();
    let dir = rel / s;
    let b = a * a / s;
    AnalyticField {
        sources: vec![
            Source::Point { pos: center + dir * b, q: q * a / s },
            Source::Line { start: *center, dir, len: b, density: -q / a },
        ],
        constant: 0.0,
    }
}
