use nalgebra::DVector;

use crate::bvp::{HarmonicSolution, Side, Solver};
use crate::error::Result;
use crate::geometry::{Domain, TriSurface, Vec3};
use crate::potential::{energy_integral_exterior, energy_integral_obstacle, g, grad_g, integrate};

/// Indicator values computed from boundary value problems, with D known.
#[derive(Clone, Debug)]
pub struct DirectModel {
    pub solver: Solver,
}

/// The fields of one source point.
#[derive(Clone, Debug)]
pub struct DirectFields {
    pub x: Vec3,
    pub w: HarmonicSolution,
    pub w1: HarmonicSolution,
    pub big_w: HarmonicSolution,
    pub r: HarmonicSolution,
    pub w_star: HarmonicSolution,
}

/// Self-values and energies at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectValues {
    pub i: f64,
    pub w_xx: f64,
    pub i1: f64,
    pub w1_xx: f64,
    pub big_w_xx: f64,
    pub i_star: f64,
    pub w_star_xx: f64,
    /// ∫_{∂Ω} ∂νw_x G(·−x): the gap between w_x(x) and I(x).
    pub flux: f64,
    /// ⟨(Λ₀−Λ_D)G(·−x), G(·−x)⟩ from R_x and w¹_x.
    pub gap_gg: f64,
    /// W_x(x) as the energy of W_x plus the energy of G off the shell.
    pub energy_w: f64,
}

impl DirectModel {
    pub fn new(domain: &Domain) -> Result<Self> {
        Ok(DirectModel { solver: Solver::new(domain)? })
    }

    pub fn domain(&self) -> &Domain {
        self.solver.domain()
    }

    fn obstacle(&self) -> Option<&TriSurface> {
        self.domain().obstacle.as_deref()
    }

    pub fn fields(&self, x: &Vec3) -> Result<DirectFields> {
        let s = &self.solver;
        Ok(DirectFields {
            x: *x,
            w: s.reflected(x)?,
            w1: s.auxiliary(x)?,
            big_w: s.third(x)?,
            r: s.green_regular(x)?,
            w_star: s.star_reflected(x)?,
        })
    }

    /// ∫_D ∇G(·−x)·∇G(·−y), zero without an obstacle.
    pub fn obstacle_energy(&self, x: &Vec3, y: &Vec3) -> Result<f64> {
        match self.obstacle() {
            Some(d) => energy_integral_obstacle(x, y, d),
            None => Ok(0.0),
        }
    }

    pub fn exterior_energy(&self, x: &Vec3, y: &Vec3) -> Result<f64> {
        energy_integral_exterior(x, y, &self.domain().outer)
    }

    /// ∫_{∂D} f(point, Dirichlet, Neumann) of a solution, zero without D.
    fn on_obstacle<F: FnMut(&crate::geometry::PanelPoint, f64, f64) -> f64>(&self, u: &HarmonicSolution, targets: &[Vec3], f: F) -> f64 {
        if self.obstacle().is_none() {
            return 0.0;
        }
        u.integrate_traces(Side::Obstacle, targets, f)
    }

    /// ∫_{∂D} ∂νG(·−y) w_x, refined toward the given targets.
    pub fn obstacle_flux_pair(&self, w_x: &HarmonicSolution, y: &Vec3, targets: &[Vec3]) -> f64 {
        let y = *y;
        self.on_obstacle(w_x, targets, |p, d, _| d * p.normal.dot(&grad_g(&(p.pos - y))))
    }

    /// ∫_{∂Ω} ∂νu G(·−y).
    pub fn outer_flux_pair(&self, u: &HarmonicSolution, y: &Vec3, targets: &[Vec3]) -> f64 {
        let y = *y;
        u.integrate_traces(Side::Outer, targets, |p, _, n| n * g(&(p.pos - y)))
    }

    pub fn values(&self, f: &DirectFields) -> Result<DirectValues> {
        let x = f.x;
        let t = [x];
        let e_d = self.obstacle_energy(&x, &x)?;
        let e_ext = self.exterior_energy(&x, &x)?;
        let w_xx = f.w.value(&x)?;
        let w1_xx = f.w1.value(&x)?;
        let big_w_xx = f.big_w.value(&x)?;
        let w_star_xx = f.w_star.value(&x)?;

        let i = self.obstacle_flux_pair(&f.w, &x, &t) + e_d;
        let i1 = self.outer_flux_pair(&f.w1, &x, &t) + e_ext;
        let flux = self.outer_flux_pair(&f.w, &x, &t);
        let gap_gg = -f.r.integrate_traces(Side::Outer, &t, |p, _, n| n * g(&(p.pos - x))) - self.outer_flux_pair(&f.w1, &x, &t);
        let energy_w = self.outer_flux_pair(&f.big_w, &x, &t) + self.obstacle_flux_pair(&f.big_w, &x, &t) + e_d + e_ext;
        let i_star = self.star_energy(f)?;
        Ok(DirectValues { i, w_xx, i1, w1_xx, big_w_xx, i_star, w_star_xx, flux, gap_gg, energy_w })
    }

    /// I*(x) = ∫|∇w*_x|² + ∫_D|∇G_Ω|², both reduced to ∂D:
    /// ∫_{∂D} (w*_x + G_Ω) ∂νG_Ω. R_x is smooth on ∂D, so it enters through
    /// its vertex values and normal derivatives, interpolated linearly.
    fn star_energy(&self, f: &DirectFields) -> Result<f64> {
        let Some(d) = self.obstacle() else {
            return Ok(0.0);
        };
        let x = f.x;
        let ws = &f.w_star;
        let off = ws.op.n_outer;
        let rv = DVector::from_iterator(d.n_vertices(), d.vertices.iter().map(|v| f.r.value_unchecked(v)));
        let rn = DVector::from_iterator(d.n_vertices(), d.vertices.iter().zip(&d.vertex_normals).map(|(v, n)| n.dot(&f.r.gradient_unchecked(v))));
        let mut hot = vec![x];
        hot.extend(ws.analytic.hot_spots());
        let mut sum = 0.0;
        for (k, tri) in d.triangles.iter().enumerate() {
            let lerp = |v: &DVector<f64>, b: &[f64; 3], o: usize| b[0] * v[o + tri[0]] + b[1] * v[o + tri[1]] + b[2] * v[o + tri[2]];
            crate::potential::visit_panel(d, k, &hot, &mut |p| {
                let b = &p.basis;
                let z = p.pos - x;
                let g_omega = g(&z) + lerp(&rv, b, 0);
                let dn_g_omega = p.normal.dot(&grad_g(&z)) + lerp(&rn, b, 0);
                let w_star = ws.analytic.value(&p.pos) + lerp(&ws.layer_dirichlet, b, off);
                sum += p.weight * (w_star + g_omega) * dn_g_omega;
            });
        }
        Ok(sum)
    }

    /// I(x,y) = ∫_{∂D} ∂νG(·−y) w_x + ∫_D ∇G_x·∇G_y. With `toward_y`
    /// false the quadrature is refined toward x only, which keeps the
    /// result an exactly harmonic function of y away from ∂D.
    pub fn lifted_i(&self, fx: &DirectFields, y: &Vec3, toward_y: bool) -> Result<f64> {
        let x = fx.x;
        if toward_y {
            return Ok(self.obstacle_flux_pair(&fx.w, y, &[x, *y]) + self.obstacle_energy(&x, y)?);
        }
        let Some(d) = self.obstacle() else {
            return Ok(0.0);
        };
        let y = *y;
        let e = integrate(d, &[x], |p| {
            let (dx, dy) = (p.pos - x, p.pos - y);
            0.5 * (p.normal.dot(&grad_g(&dx)) * g(&dy) + p.normal.dot(&grad_g(&dy)) * g(&dx))
        });
        Ok(self.obstacle_flux_pair(&fx.w, &y, &[x]) + e)
    }

    /// I¹(x,y) = ∫_{∂Ω} G(·−y) ∂νw¹_x + ∫_{ℝ³∖Ω̄} ∇G_x·∇G_y.
    pub fn lifted_i1(&self, fx: &DirectFields, y: &Vec3, toward_y: bool) -> Result<f64> {
        let x = fx.x;
        if toward_y {
            return Ok(self.outer_flux_pair(&fx.w1, y, &[x, *y]) + self.exterior_energy(&x, y)?);
        }
        let y = *y;
        let e = -integrate(&self.domain().outer, &[x], |p| {
            let (dx, dy) = (p.pos - x, p.pos - y);
            0.5 * (p.normal.dot(&grad_g(&dx)) * g(&dy) + p.normal.dot(&grad_g(&dy)) * g(&dx))
        });
        Ok(self.outer_flux_pair(&fx.w1, &y, &[x]) + e)
    }

    /// Relative residuals of the two boundary representations at y:
    /// w_x(y) = ∫_{∂Ω} ∂νw_x G_y + ∫_{∂D} ∂νG_x w_y + E_D(x,y), and
    /// w¹_x(y) = ∫_{∂Ω} G_y ∂νw¹_x + E_ext(x,y) − ∫_{∂Ω} G_x ∂νw_y.
    pub fn representation_residuals(&self, fx: &DirectFields, fy: &DirectFields) -> Result<RepresentationResiduals> {
        let (x, y) = (fx.x, fy.x);
        let t = [x, y];
        let w_lhs = fx.w.value(&y)?;
        let flux = self.outer_flux_pair(&fx.w, &y, &t);
        let terms_w = [flux, self.obstacle_flux_pair(&fy.w, &x, &t), self.obstacle_energy(&x, &y)?];
        let w_rhs = terms_w.iter().sum::<f64>();
        let w1_lhs = fx.w1.value(&y)?;
        let terms_w1 = [self.outer_flux_pair(&fx.w1, &y, &t), self.exterior_energy(&x, &y)?, -self.outer_flux_pair(&fy.w, &x, &t)];
        let w1_rhs = terms_w1.iter().sum::<f64>();
        Ok(RepresentationResiduals {
            w_lhs,
            w_rhs,
            w1_lhs,
            w1_rhs,
            flux,
            res_w: rel(w_lhs - w_rhs, w_lhs),
            res_w1: rel(w1_lhs - w1_rhs, w1_lhs),
        })
    }
}

/// Both sides of the representation representations at one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepresentationResiduals {
    pub w_lhs: f64,
    pub w_rhs: f64,
    pub w1_lhs: f64,
    pub w1_rhs: f64,
    /// The ∂Ω flux term ∫ ∂νw_x G(·−y).
    pub flux: f64,
    pub res_w: f64,
    pub res_w1: f64,
}

/// |diff| / |scale|, or |diff| when the scale vanishes.
pub fn rel(diff: f64, scale: f64) -> f64 {
    if scale != 0.0 {
        diff.abs() / scale.abs()
    } else {
        diff.abs()
    }
}
