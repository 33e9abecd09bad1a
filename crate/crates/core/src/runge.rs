//! Needle sequences: harmonic functions on Ω approximating G(·−x) away from
//! a needle that ends at x, and the Carleman functions they induce.
//!
//! Only ∂Ω and the needle are used to build a sequence. The obstacle is
//! unknown to the data side and never enters here.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bvp::{HarmonicSolution, Side};
use crate::dtn::TraceProjector;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Needle, TriSurface, Vec3};
use crate::io::{atomic_write, parse_err};
use crate::oracle::legendre;
use crate::potential::{g, grad_g};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Truncated harmonic expansion of G(·−x) about a centre behind the tip,
    /// on the needle's line. Each stage raises the degree.
    Expansion,
    /// Regularized least-squares fit of values and normal derivatives by
    /// point sources on the needle's exterior continuation and on a proxy
    /// sphere, matched on ∂Ω and on a shrinking tube around the needle.
    PoleFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeedleSequenceConfig {
    pub construction: Construction,
    pub n_max: usize,
    /// Tube radius of stage 0; `None` means 0.2·diam(Ω). Stage n uses
    /// δ₀·2⁻ⁿ.
    pub delta0: Option<f64>,
    /// Tikhonov weight of stage 0 relative to the largest singular value
    /// squared; stage n uses α₀·4⁻ⁿ.
    pub alpha0: f64,
    /// Stage n has `poles_base + poles_step·n` poles.
    pub poles_base: usize,
    pub poles_step: usize,
    /// Points per tube ring and per unit tube radius along the needle.
    pub matching_density: usize,
    /// Stage n of the expansion has degree `order_start + order_step·n`.
    pub order_start: usize,
    pub order_step: usize,
    /// Smallest tip-to-centre distance of the expansion, relative to the
    /// circumradius of Ω.
    pub min_center_offset: f64,
    /// Proxy sphere radius relative to the circumradius of Ω.
    pub proxy_factor: f64,
}

impl Default for NeedleSequenceConfig {
    fn default() -> Self {
        NeedleSequenceConfig {
            construction: Construction::Expansion,
            n_max: 5,
            delta0: None,
            alpha0: 1e-2,
            poles_base: 50,
            poles_step: 50,
            matching_density: 8,
            order_start: 2,
            order_step: 1,
            min_center_offset: 0.25,
            proxy_factor: 1.5,
        }
    }
}

impl NeedleSequenceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_max < 3 {
            return bad("n_max must be at least 3");
        }
        if let Some(d) = self.delta0 {
            if !(d > 0.0) {
                return bad("delta0 must be positive");
            }
        }
        if !(self.alpha0 > 0.0) {
            return bad("alpha0 must be positive");
        }
        if self.poles_base + self.poles_step < 5 {
            return bad("too few poles");
        }
        if self.matching_density < 4 {
            return bad("matching_density must be at least 4");
        }
        if self.order_step == 0 {
            return bad("order_step must be positive");
        }
        if !(self.min_center_offset > 0.0) {
            return bad("min_center_offset must be positive");
        }
        if !(self.proxy_factor > 1.0) {
            return bad("proxy_factor must exceed 1");
        }
        Ok(())
    }

    pub fn delta(&self, n: usize, diam: f64) -> f64 {
        self.delta0.unwrap_or(0.2 * diam) * 0.5f64.powi(n as i32)
    }

    pub fn alpha(&self, n: usize) -> f64 {
        self.alpha0 * 0.25f64.powi(n as i32)
    }

    pub fn poles(&self, n: usize) -> usize {
        self.poles_base + self.poles_step * n
    }

    pub fn order(&self, n: usize) -> usize {
        self.order_start + self.order_step * n
    }
}

/// One harmonic approximant v_n.
#[derive(Clone, Debug, PartialEq)]
pub enum Approximant {
    Poles { positions: Vec<Vec3>, coefficients: Vec<f64> },
    /// Σ_{l≤order} |y−c|^l / |x−c|^{l+1} P_l(cos γ) / 4π.
    Expansion { center: Vec3, source: Vec3, order: usize },
}

impl Approximant {
    pub fn value(&self, y: &Vec3) -> f64 {
        match self {
            Approximant::Poles { positions, coefficients } => positions.iter().zip(coefficients).map(|(p, a)| a * g(&(y - p))).sum(),
            Approximant::Expansion { center, source, order } => {
                let a = source - center;
                let s = a.norm();
                let d = y - center;
                let r = d.norm();
                if r == 0.0 {
                    return 1.0 / (4.0 * PI * s);
                }
                let mu = (d.dot(&a) / (r * s)).clamp(-1.0, 1.0);
                let p = legendre(*order, mu);
                let q = r / s;
                let mut sum = 0.0;
                let mut qp = 1.0;
                for pl in &p {
                    sum += qp * pl;
                    qp *= q;
                }
                sum / (4.0 * PI * s)
            }
        }
    }

    pub fn gradient(&self, y: &Vec3) -> Vec3 {
        match self {
            Approximant::Poles { positions, coefficients } => positions.iter().zip(coefficients).map(|(p, a)| grad_g(&(y - p)) * *a).sum(),
            Approximant::Expansion { center, source, order } => {
                let a = source - center;
                let s = a.norm();
                let ah = a / s;
                let d = y - center;
                let r = d.norm();
                if r == 0.0 || *order == 0 {
                    return if *order == 0 { Vec3::zeros() } else { ah / (4.0 * PI * s * s) };
                }
                let yh = d / r;
                let mu = yh.dot(&ah).clamp(-1.0, 1.0);
                let p = legendre(*order, mu);
                // P'_{l+1} = P'_{l−1} + (2l+1) P_l, stable at μ = ±1.
                let mut dp = vec![0.0; order + 1];
                dp[1] = 1.0;
                for l in 1..*order {
                    dp[l + 1] = dp[l - 1] + (2 * l + 1) as f64 * p[l];
                }
                let mut sum = Vec3::zeros();
                let mut scale = 1.0 / (s * s);
                for l in 1..=*order {
                    sum += (yh * (l as f64 * p[l] - mu * dp[l]) + ah * dp[l]) * scale;
                    scale *= r / s;
                }
                sum / (4.0 * PI)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub approximant: Approximant,
    /// Relative H¹-type discrepancy to G(·−x) on the stage's matching set.
    pub fit_error: f64,
}

#[derive(Clone, Debug)]
pub struct NeedleSequence {
    pub needle: Needle,
    pub stages: Vec<Stage>,
    /// Set when the fit error failed to decrease over three consecutive
    /// stages.
    pub fit_stagnation: bool,
    pub outer_fingerprint: String,
    /// R_x, added to every stage by [`corrected_sequence`].
    pub correction: Option<Arc<HarmonicSolution>>,
}

impl NeedleSequence {
    pub fn tip(&self) -> Vec3 {
        self.needle.tip()
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn is_corrected(&self) -> bool {
        self.correction.is_some()
    }

    /// v_n(y), plus R_x(y) for a corrected sequence.
    pub fn value(&self, n: usize, y: &Vec3) -> f64 {
        let v = self.stages[n].approximant.value(y);
        match &self.correction {
            Some(r) => v + r.value_unchecked(y),
            None => v,
        }
    }

    pub fn gradient(&self, n: usize, y: &Vec3) -> Vec3 {
        let v = self.stages[n].approximant.gradient(y);
        match &self.correction {
            Some(r) => v + r.gradient_unchecked(y),
            None => v,
        }
    }

    /// G_n(y) = G(y−x) − v_n(y). For a corrected sequence this is
    /// G_Ω(y;x) − (v_n + R_x)(y), the same function.
    pub fn carleman(&self, n: usize, y: &Vec3) -> Result<f64> {
        let r = y - self.tip();
        if r.norm() <= 1e-12 * (1.0 + self.tip().norm()) {
            return Err(Error::SingularPoint);
        }
        Ok(g(&r) - self.stages[n].approximant.value(y))
    }

    pub fn carleman_gradient(&self, n: usize, y: &Vec3) -> Result<Vec3> {
        let r = y - self.tip();
        if r.norm() <= 1e-12 * (1.0 + self.tip().norm()) {
            return Err(Error::SingularPoint);
        }
        Ok(grad_g(&r) - self.stages[n].approximant.gradient(y))
    }

    /// Projected trace of stage n on the projector's surface.
    pub fn trace(&self, n: usize, proj: &TraceProjector) -> Result<DVector<f64>> {
        self.check_surface(&proj.surface)?;
        let a = &self.stages[n].approximant;
        let mut t = proj.project(&[], |y, _| a.value(y));
        if let Some(r) = &self.correction {
            t += correction_trace(r, proj);
        }
        Ok(t)
    }

    /// Projected trace of the Carleman function G(·−x) − v_n. For a
    /// corrected sequence it agrees with −(v_n + R_x) on ∂Ω up to the
    /// accuracy of R_x; the two are computed independently.
    pub fn carleman_trace(&self, n: usize, proj: &TraceProjector) -> Result<DVector<f64>> {
        self.check_surface(&proj.surface)?;
        let a = &self.stages[n].approximant;
        let x = self.tip();
        Ok(proj.project(&[x], |y, _| g(&(y - x)) - a.value(y)))
    }

    fn check_surface(&self, s: &TriSurface) -> Result<()> {
        let fp = s.fingerprint();
        if fp != self.outer_fingerprint {
            return Err(Error::FingerprintMismatch { expected: self.outer_fingerprint.clone(), found: fp });
        }
        Ok(())
    }

    /// max |v_n| over interior sample points of the needle.
    pub fn max_on_needle(&self, n: usize) -> f64 {
        let pts = self.needle.sample(0.02 * self.needle.length().max(1e-12));
        let a = &self.stages[n].approximant;
        pts[1..pts.len() - 1].iter().map(|p| a.value(p).abs()).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("PROBEKIT-NSEQ 1\n");
        let _ = writeln!(out, "fingerprint {}", self.outer_fingerprint);
        let _ = writeln!(out, "stagnation {}", u8::from(self.fit_stagnation));
        let _ = writeln!(out, "needle {}", self.needle.points.len());
        for p in &self.needle.points {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
        }
        let _ = writeln!(out, "stages {}", self.stages.len());
        for st in &self.stages {
            match &st.approximant {
                Approximant::Expansion { center, order, .. } => {
                    let _ = writeln!(out, "expansion {:.17e} {} {:.17e} {:.17e} {:.17e}", st.fit_error, order, center.x, center.y, center.z);
                }
                Approximant::Poles { positions, coefficients } => {
                    let _ = writeln!(out, "poles {:.17e} {}", st.fit_error, positions.len());
                    for (p, a) in positions.iter().zip(coefficients) {
                        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z, a);
                    }
                }
            }
        }
        out
    }

    /// Parses a cached sequence. The correction is not stored; apply
    /// [`corrected_sequence`] again after loading.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| parse_err(0, &format!("missing {what}")));
        let (l, h) = next("header")?;
        if h != "PROBEKIT-NSEQ 1" {
            return Err(parse_err(l, "expected header PROBEKIT-NSEQ 1"));
        }
        let keyed = |l: usize, s: &str, key: &str| -> Result<String> {
            s.strip_prefix(key).map(|r| r.trim().to_string()).ok_or_else(|| parse_err(l, &format!("expected `{key}`")))
        };
        let (l, s) = next("fingerprint")?;
        let outer_fingerprint = keyed(l, s, "fingerprint")?;
        let (l, s) = next("stagnation")?;
        let fit_stagnation = keyed(l, s, "stagnation")? == "1";
        let (l, s) = next("needle")?;
        let m: usize = keyed(l, s, "needle")?.parse().map_err(|_| parse_err(l, "bad count"))?;
        let mut points = Vec::with_capacity(m);
        for _ in 0..m {
            let (l, s) = next("needle point")?;
            let v = floats(l, s, 3)?;
            points.push(Vec3::new(v[0], v[1], v[2]));
        }
        if points.len() < 2 {
            return Err(Error::InvalidNeedle("needs at least two points".into()));
        }
        let needle = Needle::new(points);
        let source = needle.tip();
        let (l, s) = next("stages")?;
        let n: usize = keyed(l, s, "stages")?.parse().map_err(|_| parse_err(l, "bad count"))?;
        let mut stages = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, s) = next("stage")?;
            let mut it = s.split_whitespace();
            let kind = it.next().unwrap_or("");
            let rest: Vec<&str> = it.collect();
            let num = |i: usize| -> Result<f64> { rest.get(i).and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(l, "bad number")) };
            let fit_error = num(0)?;
            let approximant = match kind {
                "expansion" if rest.len() == 5 => {
                    let order = rest[1].parse().map_err(|_| parse_err(l, "bad order"))?;
                    Approximant::Expansion { center: Vec3::new(num(2)?, num(3)?, num(4)?), source, order }
                }
                "poles" if rest.len() == 2 => {
                    let count: usize = rest[1].parse().map_err(|_| parse_err(l, "bad count"))?;
                    let mut positions = Vec::with_capacity(count);
                    let mut coefficients = Vec::with_capacity(count);
                    for _ in 0..count {
                        let (l, s) = next("pole")?;
                        let v = floats(l, s, 4)?;
                        positions.push(Vec3::new(v[0], v[1], v[2]));
                        coefficients.push(v[3]);
                    }
                    Approximant::Poles { positions, coefficients }
                }
                _ => return Err(parse_err(l, "expected `expansion` or `poles` stage")),
            };
            stages.push(Stage { approximant, fit_error });
        }
        if let Some((l, _)) = lines.next() {
            return Err(parse_err(l, "trailing content"));
        }
        Ok(NeedleSequence { needle, stages, fit_stagnation, outer_fingerprint, correction: None })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn floats(l: usize, s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split_whitespace().map(|t| t.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| parse_err(l, "bad number"))?;
    if v.len() != n {
        return Err(parse_err(l, &format!("expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

/// Projected ∂Ω trace of R_x: the layer part is already piecewise linear.
fn correction_trace(r: &HarmonicSolution, proj: &TraceProjector) -> DVector<f64> {
    let mut t = if r.analytic.is_zero() { DVector::zeros(proj.surface.n_vertices()) } else { proj.project(&r.analytic.hot_spots(), |y, _| r.analytic.value(y)) };
    t += r.layer_dirichlet.rows(0, proj.surface.n_vertices());
    t
}

/// `n` nearly uniform unit vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

struct OuterGeometry {
    centroid: Vec3,
    circumradius: f64,
    diam: f64,
}

fn outer_geometry(s: &TriSurface) -> OuterGeometry {
    let centroid = s.centroid();
    let circumradius = s.vertices.iter().map(|v| (v - centroid).norm()).fold(0.0, f64::max);
    let mut diam: f64 = 0.0;
    for (i, a) in s.vertices.iter().enumerate() {
        for b in &s.vertices[i + 1..] {
            diam = diam.max((a - b).norm());
        }
    }
    OuterGeometry { centroid, circumradius, diam }
}

/// Builds v_0, …, v_{n_max−1} for the needle. Only ∂Ω is consulted.
pub fn build_needle_sequence(domain: &Domain, needle: &Needle, config: &NeedleSequenceConfig) -> Result<NeedleSequence> {
    config.validate()?;
    needle.validate(domain)?;
    let outer = &domain.outer;
    let geo = outer_geometry(outer);
    let stages = match config.construction {
        Construction::Expansion => expansion_stages(needle, &geo, config),
        Construction::PoleFit => pole_fit_stages(outer, needle, &geo, config)?,
    };
    let errs: Vec<f64> = stages.iter().map(|s| s.fit_error).collect();
    let fit_stagnation = errs.windows(3).any(|w| w[1] >= w[0] && w[2] >= w[1]);
    Ok(NeedleSequence { needle: needle.clone(), stages, fit_stagnation, outer_fingerprint: outer.fingerprint(), correction: None })
}

/// Centre on the needle's line behind the tip: the foot of the centroid of
/// Ω on that line, or the minimum offset if the foot is too close.
pub fn expansion_center(needle: &Needle, centroid: &Vec3, min_offset: f64) -> Vec3 {
    let x = needle.tip();
    let prev = needle.points[needle.points.len() - 2];
    let u = (prev - x).normalize();
    let t = (x - centroid).dot(&u).max(min_offset);
    x - u * t
}

fn expansion_stages(needle: &Needle, geo: &OuterGeometry, config: &NeedleSequenceConfig) -> Vec<Stage> {
    let x = needle.tip();
    let center = expansion_center(needle, &geo.centroid, config.min_center_offset * geo.circumradius);
    let t = (x - center).norm();
    // Fixed matching sphere inside the convergence ball.
    let pts: Vec<(Vec3, Vec3)> = fibonacci_sphere(8 * config.matching_density).into_iter().map(|d| (center + d * (0.5 * t), d)).collect();
    (0..config.n_max)
        .map(|n| {
            let approximant = Approximant::Expansion { center, source: x, order: config.order(n) };
            let fit_error = discrepancy(&approximant, &x, &pts, 0.5 * t);
            Stage { approximant, fit_error }
        })
        .collect()
}

/// Relative discrepancy in values and scaled normal derivatives.
fn discrepancy(a: &Approximant, x: &Vec3, pts: &[(Vec3, Vec3)], ell: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, n) in pts {
        let (gv, gn) = (g(&(p - x)), n.dot(&grad_g(&(p - x))));
        let (dv, dn) = (a.value(p) - gv, n.dot(&a.gradient(p)) - gn);
        num += dv * dv + ell * ell * dn * dn;
        den += gv * gv + ell * ell * gn * gn;
    }
    (num / den).sqrt()
}

/// Matching points (position, unit normal) of one stage: ∂Ω vertices away
/// from the needle's entry, and the tube of radius δ around the needle.
fn matching_points(outer: &TriSurface, needle: &Needle, delta: f64, density: usize) -> Vec<(Vec3, Vec3)> {
    let mut pts: Vec<(Vec3, Vec3)> = outer.vertices.iter().zip(&outer.vertex_normals).filter(|(v, _)| needle.distance(v) >= delta).map(|(v, n)| (*v, *n)).collect();
    let mut tube = Vec::new();
    for w in needle.points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let axis = (b - a).normalize();
        let e1 = axis.cross(&if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();
        let e2 = axis.cross(&e1);
        let rings = (((b - a).norm() / delta) * density as f64 / 4.0).ceil().clamp(1.0, 400.0) as usize;
        for k in 0..=rings {
            let c = a + (b - a) * (k as f64 / rings as f64);
            for j in 0..density {
                let phi = 2.0 * PI * (j as f64 + 0.5 * (k % 2) as f64) / density as f64;
                let n = e1 * phi.cos() + e2 * phi.sin();
                tube.push((c + n * delta, n));
            }
        }
    }
    // Cap around the tip, on the side facing away from the needle.
    let x = needle.tip();
    let u = (needle.points[needle.points.len() - 2] - x).normalize();
    for d in fibonacci_sphere(density * density) {
        if d.dot(&u) < 0.0 {
            tube.push((x + d * delta, d));
        }
    }
    for (p, n) in tube {
        if outer.contains(&p) && needle.distance(&p) >= 0.999 * delta {
            pts.push((p, n));
        }
    }
    pts
}

fn pole_fit_stages(outer: &TriSurface, needle: &Needle, geo: &OuterGeometry, config: &NeedleSequenceConfig) -> Result<Vec<Stage>> {
    let x = needle.tip();
    let tol = 1e-6 * geo.diam;
    let outside = |p: &Vec3| !outer.contains(p) && outer.distance(p) > tol;
    let proxy_r = config.proxy_factor * geo.circumradius;
    let mut stages = Vec::with_capacity(config.n_max);
    for n in 0..config.n_max {
        let delta = config.delta(n + 1, geo.diam);
        let total = config.poles(n + 1);
        let n_cont = (total / 5).max(2);
        let dir = needle.exit_direction();
        let entry = needle.entry();
        let mut poles: Vec<Vec3> = (0..n_cont)
            .map(|k| entry + dir * (delta * (geo.diam / delta).powf(k as f64 / (n_cont - 1) as f64)))
            .filter(|p| outside(p))
            .collect();
        if poles.is_empty() {
            return Err(Error::PolePlacementFailure("the needle's continuation stays inside Ω".into()));
        }
        for d in fibonacci_sphere(total - n_cont) {
            let p = geo.centroid + d * proxy_r;
            if !outside(&p) {
                return Err(Error::PolePlacementFailure("proxy sphere meets Ω".into()));
            }
            poles.push(p);
        }
        let pts = matching_points(outer, needle, delta, config.matching_density);
        let m = pts.len();
        let mut a = DMatrix::zeros(2 * m, poles.len());
        let mut b = DVector::zeros(2 * m);
        for (i, (p, nrm)) in pts.iter().enumerate() {
            b[2 * i] = g(&(p - x));
            b[2 * i + 1] = delta * nrm.dot(&grad_g(&(p - x)));
            for (j, q) in poles.iter().enumerate() {
                a[(2 * i, j)] = g(&(p - q));
                a[(2 * i + 1, j)] = delta * nrm.dot(&grad_g(&(p - q)));
            }
        }
        let svd = a.clone().svd(true, true);
        let (u, vt) = (svd.u.as_ref().expect("u requested"), svd.v_t.as_ref().expect("v_t requested"));
        let smax = svd.singular_values.max();
        let alpha = config.alpha(n + 1) * smax * smax;
        let utb = u.transpose() * &b;
        let filtered = DVector::from_iterator(utb.len(), svd.singular_values.iter().zip(utb.iter()).map(|(s, c)| s * c / (s * s + alpha)));
        let coef = vt.transpose() * filtered;
        let fit_error = (&a * &coef - &b).norm() / b.norm();
        stages.push(Stage { approximant: Approximant::Poles { positions: poles, coefficients: coef.iter().copied().collect() }, fit_error });
    }
    Ok(stages)
}

/// Adds R_x to every stage, turning the sequence into one for G_Ω(·;x).
pub fn corrected_sequence(seq: &NeedleSequence, r: Arc<HarmonicSolution>) -> Result<NeedleSequence> {
    let outer = &r.op.domain.outer;
    if r.op.domain.has_obstacle() {
        return Err(Error::DomainMismatch("R_x must be solved on Ω without the obstacle".into()));
    }
    if outer.fingerprint() != seq.outer_fingerprint {
        return Err(Error::DomainMismatch("R_x was built for a different outer surface".into()));
    }
    let x = seq.tip();
    let trace = r.nodal_dirichlet(Side::Outer);
    let scale = outer.vertices.iter().map(|v| g(&(v - x))).fold(0.0, f64::max);
    let res = outer.vertices.iter().zip(trace.iter()).map(|(v, t)| (t + g(&(v - x))).abs()).fold(0.0, f64::max);
    if res > 1e-6 * scale {
        return Err(Error::DomainMismatch("R_x was built for a different source point".into()));
    }
    if seq.correction.is_some() {
        return Err(Error::DomainMismatch("sequence is already corrected".into()));
    }
    Ok(NeedleSequence { correction: Some(r), ..seq.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::Solver;
    use crate::geometry::{canonical_domain, concentric_domain, Needle};

    fn radial(x: f64) -> Needle {
        Needle::straight(Vec3::new(1.0, 0.0, 0.0), Vec3::new(x, 0.0, 0.0))
    }

    fn laplacian<F: Fn(&Vec3) -> f64>(f: F, p: &Vec3, h: f64) -> f64 {
        let mut s = -6.0 * f(p);
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            s += f(&(p + e)) + f(&(p - e));
        }
        s / (h * h)
    }

    #[test]
    fn expansion_gradient_matches_finite_differences() {
        let a = Approximant::Expansion { center: Vec3::new(0.1, -0.1, 0.0), source: Vec3::new(0.6, 0.1, 0.2), order: 9 };
        for p in [Vec3::new(0.2, 0.3, -0.1), Vec3::new(0.1, -0.1, 0.0), Vec3::new(-0.4, 0.0, 0.0)] {
            let h = 1e-5;
            let fd = Vec3::new(
                a.value(&(p + Vec3::x() * h)) - a.value(&(p - Vec3::x() * h)),
                a.value(&(p + Vec3::y() * h)) - a.value(&(p - Vec3::y() * h)),
                a.value(&(p + Vec3::z() * h)) - a.value(&(p - Vec3::z() * h)),
            ) / (2.0 * h);
            assert!((fd - a.gradient(&p)).norm() < 1e-7 * (1.0 + fd.norm()), "{fd} {}", a.gradient(&p));
        }
    }

    #[test]
    fn expansion_converges_inside_its_ball() {
        let d = concentric_domain(1.0, None, 1);
        let seq = build_needle_sequence(&d, &radial(0.6), &NeedleSequenceConfig { n_max: 12, ..Default::default() }).unwrap();
        let y = Vec3::new(0.1, 0.2, -0.1);
        let exact = g(&(y - Vec3::new(0.6, 0.0, 0.0)));
        let err = |n: usize| (seq.value(n, &y) - exact).abs();
        assert!(err(11) < 1e-3 * exact && err(11) < err(0));
        assert!(seq.stages[3].fit_error < seq.stages[0].fit_error);
        assert!(!seq.fit_stagnation);
    }

    #[test]
    fn stages_are_harmonic() {
        let d = concentric_domain(1.0, None, 1);
        for construction in [Construction::Expansion, Construction::PoleFit] {
            let cfg = NeedleSequenceConfig { construction, n_max: 3, ..Default::default() };
            let seq = build_needle_sequence(&d, &radial(0.5), &cfg).unwrap();
            let p = Vec3::new(-0.2, 0.3, 0.1);
            for n in 0..3 {
                let f = |y: &Vec3| seq.value(n, y);
                let scale = f(&p).abs().max(1e-3);
                let (l1, l2) = (laplacian(f, &p, 2e-2), laplacian(f, &p, 1e-2));
                assert!(l2.abs() < 1e-3 * scale / 1e-2 || l2.abs() < 0.3 * l1.abs(), "{construction:?} {n}: {l1} {l2}");
            }
        }
    }

    #[test]
    fn pole_fit_invariants() {
        let d = concentric_domain(1.0, None, 2);
        let cfg = NeedleSequenceConfig { construction: Construction::PoleFit, n_max: 4, ..Default::default() };
        let seq = build_needle_sequence(&d, &radial(0.2), &cfg).unwrap();
        for st in &seq.stages {
            let Approximant::Poles { positions, coefficients } = &st.approximant else { panic!() };
            assert!(positions.iter().all(|p| p.norm() > 1.0));
            assert!(coefficients.iter().all(|c| c.is_finite()));
            assert!(st.fit_error.is_finite());
        }
        // The shrinking tube makes each stage's target harder; a rising
        // error must be reported rather than hidden.
        let e: Vec<f64> = seq.stages.iter().map(|s| s.fit_error).collect();
        assert_eq!(seq.fit_stagnation, e.windows(3).any(|w| w[1] >= w[0] && w[2] >= w[1]));
    }

    #[test]
    fn blows_up_on_the_needle() {
        let d = concentric_domain(1.0, None, 1);
        let seq = build_needle_sequence(&d, &radial(0.5), &NeedleSequenceConfig { n_max: 6, ..Default::default() }).unwrap();
        let m: Vec<f64> = (0..6).map(|n| seq.max_on_needle(n)).collect();
        assert!(m.windows(2).all(|w| w[1] > w[0]), "{m:?}");
        assert!(m[5] > 3.0 * m[0]);
    }

    #[test]
    fn carleman_decreases_away_from_needle() {
        let d = concentric_domain(1.0, None, 1);
        let seq = build_needle_sequence(&d, &radial(0.6), &NeedleSequenceConfig::default()).unwrap();
        // Ball of radius 0.1 around a point 0.5 from the needle.
        let c = Vec3::new(0.1, 0.0, 0.0);
        let pts: Vec<Vec3> = fibonacci_sphere(40).into_iter().map(|v| c + v * 0.1).chain([c]).collect();
        let energy = |n: usize| -> f64 { pts.iter().map(|p| seq.carleman(n, p).unwrap().powi(2) + 0.01 * seq.carleman_gradient(n, p).unwrap().norm_squared()).sum() };
        let e: Vec<f64> = (0..seq.n_stages()).map(energy).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
        assert!(matches!(seq.carleman(0, &seq.tip()), Err(Error::SingularPoint)));
    }

    #[test]
    fn approximates_on_the_obstacle() {
        // v_n against G on a volume grid in B(0, 0.3), tip outside.
        let d = concentric_domain(1.0, None, 1);
        let seq = build_needle_sequence(&d, &radial(0.6), &NeedleSequenceConfig::default()).unwrap();
        let x = seq.tip();
        let n = seq.n_stages() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                for k in -3i32..=3 {
                    let p = Vec3::new(i as f64, j as f64, k as f64) * 0.1;
                    if p.norm() < 0.3 {
                        num += (seq.gradient(n, &p) - grad_g(&(p - x))).norm_squared() + (seq.value(n, &p) - g(&(p - x))).powi(2);
                        den += grad_g(&(p - x)).norm_squared() + g(&(p - x)).powi(2);
                    }
                }
            }
        }
        assert!((num / den).sqrt() < 0.05, "{}", (num / den).sqrt());
    }

    #[test]
    fn config_validation() {
        assert!(NeedleSequenceConfig { n_max: 2, ..Default::default() }.validate().is_err());
        assert!(NeedleSequenceConfig { alpha0: 0.0, ..Default::default() }.validate().is_err());
        let c = NeedleSequenceConfig::default();
        assert!(c.delta(2, 2.0) < c.delta(1, 2.0) && c.alpha(2) < c.alpha(1));
    }

    #[test]
    fn cache_round_trip() {
        let d = concentric_domain(1.0, None, 1);
        for construction in [Construction::Expansion, Construction::PoleFit] {
            let cfg = NeedleSequenceConfig { construction, n_max: 3, ..Default::default() };
            let seq = build_needle_sequence(&d, &radial(0.5), &cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.nseq");
            seq.write(&path).unwrap();
            let back = NeedleSequence::read(&path).unwrap();
            assert_eq!(back.stages, seq.stages);
            assert_eq!(back.needle, seq.needle);
            assert_eq!(back.outer_fingerprint, seq.outer_fingerprint);
        }
        assert!(NeedleSequence::from_text("PROBEKIT-NSEQ 2\n").is_err());
    }

    #[test]
    fn corrected_sequence_identity_on_outer_surface() {
        let dom = canonical_domain(2);
        let solver = Solver::new(&dom).unwrap();
        let x = Vec3::new(0.6, 0.0, 0.0);
        let seq = build_needle_sequence(&dom, &radial(0.6), &NeedleSequenceConfig::default()).unwrap();
        let r = Arc::new(solver.green_regular(&x).unwrap());
        let cs = corrected_sequence(&seq, r.clone()).unwrap();
        // G_n = −(v_n + R_x) on ∂Ω.
        let trace_r = r.nodal_dirichlet(Side::Outer);
        let mut worst: f64 = 0.0;
        for (i, y) in dom.outer.vertices.iter().enumerate().step_by(7) {
            let lhs = cs.carleman(2, y).unwrap();
            let rhs = -(cs.stages[2].approximant.value(y) + trace_r[i]);
            worst = worst.max((lhs - rhs).abs() / g(&(y - x)));
        }
        assert!(worst < 1e-6, "{worst}");
        let other = Arc::new(solver.green_regular(&Vec3::new(0.0, 0.5, 0.0)).unwrap());
        assert!(matches!(corrected_sequence(&seq, other), Err(Error::DomainMismatch(_))));
        let with_obstacle = Arc::new(solver.reflected(&x).unwrap());
        assert!(matches!(corrected_sequence(&seq, with_obstacle), Err(Error::DomainMismatch(_))));
    }
}
