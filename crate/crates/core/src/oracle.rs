//! Spherical-harmonics solutions for concentric spheres Ω = B(0, R₀),
//! D = B(0, R₁).
//!
//! The source x sits on a ray from the origin, so every field is a Legendre
//! series in the angle to that ray and each degree l is an independent 2×2
//! solve for the coefficients of `a r^l + b r^{-l-1}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const FOUR_PI: f64 = 4.0 * PI;

/// Coefficients (a, b) of one radial mode `a r^l + b r^{-l-1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mode {
    pub a: f64,
    pub b: f64,
}

impl Mode {
    fn value(&self, l: usize, r: f64) -> f64 {
        self.a * r.powi(l as i32) + self.b * r.powi(-(l as i32) - 1)
    }

    fn radial(&self, l: usize, r: f64) -> f64 {
        let li = l as i32;
        li as f64 * self.a * r.powi(li - 1) - (li + 1) as f64 * self.b * r.powi(-li - 2)
    }

    fn add(self, o: Mode) -> Mode {
        Mode { a: self.a + o.a, b: self.b + o.b }
    }
}

/// Which boundary-value problem a field solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// w_x: obstacle flux −∂νG, zero on ∂Ω.
    Reflected,
    /// w¹_x: zero obstacle flux, trace G on ∂Ω.
    Auxiliary,
    /// W_x = w_x + w¹_x.
    Third,
    /// R_x: harmonic in Ω with trace −G on ∂Ω.
    GreenRegular,
    /// z_x: obstacle flux −∂νR_x, zero on ∂Ω.
    Correction,
    /// w*_x = w_x + z_x.
    Star,
}

#[derive(Clone, Debug)]
pub struct ModalSolution {
    pub r0: f64,
    pub r1: f64,
    pub x: Vec3,
    pub s: f64,
    pub l_max: usize,
    pub reflected: Vec<Mode>,
    pub auxiliary: Vec<Mode>,
    pub third: Vec<Mode>,
    pub regular: Vec<Mode>,
    pub correction: Vec<Mode>,
    pub star: Vec<Mode>,
}

/// Indicator values of one source point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleIndicators {
    pub i: f64,
    pub i1: f64,
    pub w_xx: f64,
    pub w1_xx: f64,
    pub big_w_xx: f64,
    pub i_star: f64,
    pub w_star_xx: f64,
    pub w_energy: f64,
    pub obstacle_energy: f64,
    pub w1_energy: f64,
    pub exterior_energy: f64,
}

/// Degree-l Legendre coefficient of G(y − x) restricted to the sphere |y| = r,
/// for |x| = s: G = Σ g_l(r) P_l(cos γ).
fn g_mode(l: usize, r: f64, s: f64) -> f64 {
    let li = l as i32;
    if r < s {
        r.powi(li) / s.powi(li + 1) / FOUR_PI
    } else {
        s.powi(li) / r.powi(li + 1) / FOUR_PI
    }
}

/// Radial derivative of [`g_mode`] in r.
fn g_mode_radial(l: usize, r: f64, s: f64) -> f64 {
    let li = l as i32;
    if r < s {
        li as f64 * r.powi(li - 1) / s.powi(li + 1) / FOUR_PI
    } else {
        -((li + 1) as f64) * s.powi(li) / r.powi(li + 2) / FOUR_PI
    }
}

/// P_0..P_n at t.
pub fn legendre(n: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n > 0 {
        p[1] = t;
    }
    for k in 2..=n {
        p[k] = ((2 * k - 1) as f64 * t * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// Solves Dirichlet `value` at R₀ and Neumann `flux` at R₁ for degree l.
fn solve_mode(l: usize, r0: f64, r1: f64, value: f64, flux: f64) -> Mode {
    let li = l as i32;
    let m11 = r0.powi(li);
    let m12 = r0.powi(-li - 1);
    let m21 = li as f64 * r1.powi(li - 1);
    let m22 = -((li + 1) as f64) * r1.powi(-li - 2);
    let det = m11 * m22 - m12 * m21;
    Mode { a: (value * m22 - m12 * flux) / det, b: (m11 * flux - m21 * value) / det }
}

impl ModalSolution {
    /// Solves every field for the source `x` in the shell R₁ < |x| < R₀.
    pub fn new(r0: f64, r1: f64, x: Vec3, l_max: usize) -> Result<Self> {
        let s = x.norm();
        if !(0.0 < r1 && r1 < s && s < r0) || l_max < 1 {
            return Err(Error::OutsideShell);
        }
        let mut sol = ModalSolution {
            r0,
            r1,
            x,
            s,
            l_max,
            reflected: Vec::new(),
            auxiliary: Vec::new(),
            third: Vec::new(),
            regular: Vec::new(),
            correction: Vec::new(),
            star: Vec::new(),
        };
        for l in 0..=l_max {
            let li = l as i32;
            let w = solve_mode(l, r0, r1, 0.0, -g_mode_radial(l, r1, s));
            let w1 = solve_mode(l, r0, r1, g_mode(l, r0, s), 0.0);
            let c = -s.powi(li) / r0.powi(2 * li + 1) / FOUR_PI;
            let reg = Mode { a: c, b: 0.0 };
            let z = solve_mode(l, r0, r1, 0.0, -reg.radial(l, r1));
            sol.reflected.push(w);
            sol.auxiliary.push(w1);
            sol.third.push(w.add(w1));
            sol.regular.push(reg);
            sol.correction.push(z);
            sol.star.push(w.add(z));
        }
        Ok(sol)
    }

    fn modes(&self, f: Field) -> &[Mode] {
        match f {
            Field::Reflected => &self.reflected,
            Field::Auxiliary => &self.auxiliary,
            Field::Third => &self.third,
            Field::GreenRegular => &self.regular,
            Field::Correction => &self.correction,
            Field::Star => &self.star,
        }
    }

    fn cos_to(&self, y: &Vec3) -> f64 {
        let r = y.norm();
        if r == 0.0 {
            1.0
        } else {
            (self.x.dot(y) / (self.s * r)).clamp(-1.0, 1.0)
        }
    }

    /// Field value at a point of the closed shell.
    pub fn eval(&self, f: Field, y: &Vec3) -> f64 {
        let r = y.norm();
        let p = legendre(self.l_max, self.cos_to(y));
        self.modes(f).iter().enumerate().map(|(l, m)| m.value(l, r) * p[l]).sum()
    }

    /// Radial derivative at a point of the closed shell.
    pub fn eval_radial(&self, f: Field, y: &Vec3) -> f64 {
        let r = y.norm();
        let p = legendre(self.l_max, self.cos_to(y));
        self.modes(f).iter().enumerate().map(|(l, m)| m.radial(l, r) * p[l]).sum()
    }

    /// Decay ratio of the series terms at the source radius.
    pub fn tail_ratio(&self) -> f64 {
        (self.r1 / self.s).max(self.s / self.r0).powi(2)
    }

    /// Geometric bound on the omitted degrees relative to the leading term.
    pub fn tail_bound(&self) -> f64 {
        let rho = self.tail_ratio();
        rho.powi(self.l_max as i32 + 1) / (1.0 - rho)
    }

    /// Fails when the tail bound exceeds `tol`.
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let bound = self.tail_bound();
        if bound > tol {
            Err(Error::TailTooLarge { bound, tol })
        } else {
            Ok(())
        }
    }

    fn sphere_weight(l: usize, r: f64) -> f64 {
        FOUR_PI * r * r / (2 * l + 1) as f64
    }

    /// All diagonal indicator values at x.
    pub fn indicators(&self) -> OracleIndicators {
        let (r0, r1, s) = (self.r0, self.r1, self.s);
        let mut o = OracleIndicators {
            i: 0.0,
            i1: 0.0,
            w_xx: 0.0,
            w1_xx: 0.0,
            big_w_xx: 0.0,
            i_star: 0.0,
            w_star_xx: 0.0,
            w_energy: 0.0,
            obstacle_energy: 0.0,
            w1_energy: 0.0,
            exterior_energy: 0.0,
        };
        let mut star_energy = 0.0;
        let mut green_obstacle = 0.0;
        for l in 0..=self.l_max {
            let (wd, wo) = (Self::sphere_weight(l, r1), Self::sphere_weight(l, r0));
            let gn = g_mode_radial(l, r1, s);
            let gd = g_mode(l, r1, s);
            o.w_energy += self.reflected[l].value(l, r1) * gn * wd;
            o.obstacle_energy += gd * gn * wd;
            o.w1_energy += g_mode(l, r0, s) * self.auxiliary[l].radial(l, r0) * wo;
            o.exterior_energy -= g_mode_radial(l, r0, s) * g_mode(l, r0, s) * wo;
            let hn = gn + self.regular[l].radial(l, r1);
            let hd = gd + self.regular[l].value(l, r1);
            star_energy += self.star[l].value(l, r1) * hn * wd;
            green_obstacle += hd * hn * wd;
            o.w_xx += self.reflected[l].value(l, s);
            o.w1_xx += self.auxiliary[l].value(l, s);
            o.big_w_xx += self.third[l].value(l, s);
            o.w_star_xx += self.star[l].value(l, s);
        }
        o.i = o.w_energy + o.obstacle_energy;
        o.i1 = o.w1_energy + o.exterior_energy;
        o.i_star = star_energy + green_obstacle;
        o
    }
}

/// Cross quantities for two sources x, y of the same concentric geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleLifted {
    pub i_xy: f64,
    pub i1_xy: f64,
    pub w_x_at_y: f64,
    pub w1_x_at_y: f64,
    pub big_w_x_at_y: f64,
    /// ∫∇w_x·∇w_y over the shell.
    pub w_cross_energy: f64,
    /// ∫∇w¹_x·∇w¹_y over the shell.
    pub w1_cross_energy: f64,
    /// ∫_D ∇G(·−x)·∇G(·−y).
    pub obstacle_cross: f64,
    /// ∫_{ℝ³∖Ω̄} ∇G(·−x)·∇G(·−y).
    pub exterior_cross: f64,
}

/// Lifted indicators built from two modal solutions on the same spheres.
pub fn lifted(sx: &ModalSolution, sy: &ModalSolution) -> OracleLifted {
    assert!(sx.r0 == sy.r0 && sx.r1 == sy.r1);
    let (r0, r1) = (sx.r0, sx.r1);
    let l_max = sx.l_max.min(sy.l_max);
    let cos = (sx.x.dot(&sy.x) / (sx.s * sy.s)).clamp(-1.0, 1.0);
    let p = legendre(l_max, cos);
    let mut o = OracleLifted {
        i_xy: 0.0,
        i1_xy: 0.0,
        w_x_at_y: 0.0,
        w1_x_at_y: 0.0,
        big_w_x_at_y: 0.0,
        w_cross_energy: 0.0,
        w1_cross_energy: 0.0,
        obstacle_cross: 0.0,
        exterior_cross: 0.0,
    };
    for l in 0..=l_max {
        let wd = ModalSolution::sphere_weight(l, r1) * p[l];
        let wo = ModalSolution::sphere_weight(l, r0) * p[l];
        let gn_y = g_mode_radial(l, r1, sy.s);
        let gn_x = g_mode_radial(l, r1, sx.s);
        let gd_y = g_mode(l, r1, sy.s);
        let w_cross = sx.reflected[l].value(l, r1) * gn_y * wd;
        let obst = gn_x * gd_y * wd;
        o.w_cross_energy += w_cross;
        o.obstacle_cross += obst;
        o.i_xy += w_cross + obst;
        let dn_w1 = sx.auxiliary[l].radial(l, r0);
        let dn_g = g_mode_radial(l, r0, sx.s);
        let g_y = g_mode(l, r0, sy.s);
        o.w1_cross_energy += dn_w1 * g_y * wo;
        o.exterior_cross -= dn_g * g_y * wo;
        o.i1_xy += (dn_w1 - dn_g) * g_y * wo;
        o.w_x_at_y += sx.reflected[l].value(l, sy.s) * p[l];
        o.w1_x_at_y += sx.auxiliary[l].value(l, sy.s) * p[l];
        o.big_w_x_at_y += sx.third[l].value(l, sy.s) * p[l];
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ModalSolution {
        ModalSolution::new(1.0, 0.3, Vec3::new(0.6, 0.0, 0.0), 40).unwrap()
    }

    #[test]
    fn modes_satisfy_boundary_conditions() {
        let m = canonical();
        for l in 0..=m.l_max {
            let w = m.reflected[l];
            assert!(w.value(l, 1.0).abs() < 1e-12);
            let flux = w.radial(l, 0.3) + g_mode_radial(l, 0.3, 0.6);
            assert!(flux.abs() <= 1e-12 * g_mode_radial(l, 0.3, 0.6).abs().max(1.0));
            let w1 = m.auxiliary[l];
            assert!((w1.value(l, 1.0) - g_mode(l, 1.0, 0.6)).abs() < 1e-12);
            assert!(w1.radial(l, 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_holds_at_series_level() {
        let o = canonical().indicators();
        assert!((o.big_w_xx - o.i - o.i1).abs() <= 1e-8 * o.big_w_xx.abs());
        assert!((o.big_w_xx - o.w_xx - o.w1_xx).abs() <= 1e-12 * o.big_w_xx.abs());
        assert!((o.i_star - o.w_star_xx).abs() <= 1e-8 * o.i_star);
    }

    #[test]
    fn exterior_energy_at_center() {
        // Only l = 0 survives at s → 0: (1/4π)·1/R₀.
        let m = ModalSolution::new(1.0, 0.3, Vec3::new(1e-9, 0.0, 0.0), 40);
        assert!(m.is_err());
        let e: f64 = (0..=40).map(|l| -g_mode_radial(l, 1.0, 0.0) * g_mode(l, 1.0, 0.0) * ModalSolution::sphere_weight(l, 1.0)).sum();
        assert!((e - 1.0 / FOUR_PI).abs() < 1e-15);
    }

    #[test]
    fn vanishing_obstacle() {
        let a = ModalSolution::new(1.0, 1e-3, Vec3::new(0.6, 0.0, 0.0), 20).unwrap();
        assert!(a.indicators().w_xx.abs() < 1e-8);
    }

    #[test]
    fn rotation_invariance() {
        let a = canonical().indicators();
        let b = ModalSolution::new(1.0, 0.3, Vec3::new(0.0, 0.36, 0.48), 40).unwrap().indicators();
        assert!((a.i - b.i).abs() < 1e-14 && (a.w_star_xx - b.w_star_xx).abs() < 1e-14);
    }

    #[test]
    fn lifted_diagonal_and_symmetry() {
        let m = canonical();
        let d = lifted(&m, &m);
        let o = m.indicators();
        assert!((d.i_xy - o.i).abs() < 1e-14 && (d.i1_xy - o.i1).abs() < 1e-14);
        let n = ModalSolution::new(1.0, 0.3, Vec3::new(0.1, 0.5, -0.2), 40).unwrap();
        let (a, b) = (lifted(&m, &n), lifted(&n, &m));
        assert!((a.i_xy - b.i_xy).abs() < 1e-12 * a.i_xy.abs());
        assert!((a.i1_xy - b.i1_xy).abs() < 1e-12 * a.i1_xy.abs());
    }

    #[test]
    fn tail_check() {
        let m = canonical();
        assert!(m.check_tail(1e-8).is_ok());
        let near = ModalSolution::new(1.0, 0.3, Vec3::new(0.31, 0.0, 0.0), 10).unwrap();
        assert!(matches!(near.check_tail(1e-8), Err(Error::TailTooLarge { .. })));
    }
}
