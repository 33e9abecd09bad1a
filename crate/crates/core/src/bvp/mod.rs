//! Mixed boundary value problems on Ω∖D̄: Dirichlet data on ∂Ω, Neumann
//! data on ∂D.
//!
//! On spheres the singular part of point-source data is removed with a
//! closed-form image first, so the layer only carries smooth data.

pub mod assembly;
pub mod field;
pub mod solution;

use std::sync::Arc;

use nalgebra::DVector;

pub use assembly::BemOperator;
pub use field::{kelvin_image, neumann_image, AnalyticField, Source};
pub use solution::{HarmonicSolution, Side};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Region, Shape, Vec3};
use crate::potential::{g, grad_g};

/// Factorized operators for a domain and for its obstacle-free background.
#[derive(Clone, Debug)]
pub struct Solver {
    pub op: Arc<BemOperator>,
    pub background: Arc<BemOperator>,
    /// Use closed-form images on spherical surfaces.
    pub images: bool,
}

impl Solver {
    pub fn new(domain: &Domain) -> Result<Self> {
        let op = Arc::new(BemOperator::new(domain)?);
        let background = if domain.has_obstacle() { Arc::new(BemOperator::new(&domain.background())?) } else { op.clone() };
        Ok(Solver { op, background, images: true })
    }

    pub fn without_images(mut self) -> Self {
        self.images = false;
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.op.domain
    }

    fn outer_sphere(&self) -> Option<(Vec3, f64)> {
        if !self.images {
            return None;
        }
        match self.domain().outer.shape {
            Some(Shape::Sphere { center, radius }) => Some((center, radius)),
            _ => None,
        }
    }

    fn obstacle_sphere(&self) -> Option<(Vec3, f64)> {
        if !self.images {
            return None;
        }
        match self.domain().obstacle.as_ref()?.shape {
            Some(Shape::Sphere { center, radius }) => Some((center, radius)),
            _ => None,
        }
    }

    /// Source points must lie in the shell, and away from any surface whose
    /// singular data is not removed in closed form.
    fn check_source(&self, x: &Vec3, on_background: bool) -> Result<()> {
        let d = self.domain();
        let c = d.classify_point(x)?;
        let ok = match c.region {
            Region::InShell => true,
            Region::InObstacle => on_background,
            Region::Exterior => false,
        };
        if !ok {
            return Err(Error::NearSurface { distance: 0.0, limit: 0.0 });
        }
        let lim_o = if self.outer_sphere().is_some() { crate::potential::quadrature_limit(&d.outer) } else { d.eps_near_outer() };
        if c.dist_outer < lim_o {
            return Err(Error::NearSurface { distance: c.dist_outer, limit: lim_o });
        }
        if !on_background {
            if let Some(obs) = &d.obstacle {
                let lim = if self.obstacle_sphere().is_some() { crate::potential::quadrature_limit(obs) } else { d.eps_near_obstacle() };
                if c.dist_obstacle < lim {
                    return Err(Error::NearSurface { distance: c.dist_obstacle, limit: lim });
                }
            }
        }
        Ok(())
    }

    /// Solves with nodal Dirichlet data on ∂Ω and nodal Neumann data on ∂D.
    pub fn solve_mixed(&self, dirichlet_outer: &DVector<f64>, neumann_obstacle: &DVector<f64>) -> Result<HarmonicSolution> {
        let op = &self.op;
        if dirichlet_outer.len() != op.n_outer {
            return Err(Error::BasisMismatch { expected: op.n_outer, got: dirichlet_outer.len() });
        }
        if neumann_obstacle.len() != op.n_obstacle() {
            return Err(Error::BasisMismatch { expected: op.n_obstacle(), got: neumann_obstacle.len() });
        }
        let mut rhs = DVector::zeros(op.n());
        rhs.rows_mut(0, op.n_outer).copy_from(dirichlet_outer);
        rhs.rows_mut(op.n_outer, op.n_obstacle()).copy_from(neumann_obstacle);
        let density = op.solve(&rhs)?;
        Ok(HarmonicSolution::new(op.clone(), AnalyticField::zero(), density))
    }

    /// Solves for `analytic` + layer with the given boundary data functions.
    fn solve_with<FD, FN>(op: &Arc<BemOperator>, analytic: AnalyticField, dirichlet: FD, neumann: FN) -> Result<HarmonicSolution>
    where
        FD: Fn(&Vec3) -> f64,
        FN: Fn(&Vec3, &Vec3) -> f64,
    {
        let d = &op.domain;
        let mut rhs = DVector::zeros(op.n());
        for (i, v) in d.outer.vertices.iter().enumerate() {
            rhs[i] = dirichlet(v) - analytic.value(v);
        }
        if let Some(obs) = &d.obstacle {
            for (i, (v, n)) in obs.vertices.iter().zip(&obs.vertex_normals).enumerate() {
                rhs[op.n_outer + i] = neumann(v, n) - n.dot(&analytic.grad(v));
            }
        }
        let density = op.solve(&rhs)?;
        Ok(HarmonicSolution::new(op.clone(), analytic, density))
    }

    fn reflected_image(&self, x: &Vec3) -> AnalyticField {
        match self.obstacle_sphere() {
            Some((c, a)) => neumann_image(&c, a, x, 1.0),
            None => AnalyticField::zero(),
        }
    }

    fn auxiliary_image(&self, x: &Vec3) -> AnalyticField {
        match self.outer_sphere() {
            Some((c, r)) => kelvin_image(&c, r, x, 1.0),
            None => AnalyticField::zero(),
        }
    }

    /// w_x: Neumann data −∂νG(·−x) on ∂D, zero on ∂Ω.
    pub fn reflected(&self, x: &Vec3) -> Result<HarmonicSolution> {
        self.check_source(x, false)?;
        let x = *x;
        Self::solve_with(&self.op, self.reflected_image(&x), |_| 0.0, |y, n| -n.dot(&grad_g(&(y - x))))
    }

    /// w¹_x: Dirichlet data G(·−x) on ∂Ω, zero Neumann data on ∂D.
    pub fn auxiliary(&self, x: &Vec3) -> Result<HarmonicSolution> {
        self.check_source(x, false)?;
        let x = *x;
        Self::solve_with(&self.op, self.auxiliary_image(&x), |y| g(&(y - x)), |_, _| 0.0)
    }

    /// W_x: both data of w_x and w¹_x at once.
    pub fn third(&self, x: &Vec3) -> Result<HarmonicSolution> {
        self.check_source(x, false)?;
        let x = *x;
        let image = self.reflected_image(&x).add(&self.auxiliary_image(&x));
        Self::solve_with(&self.op, image, |y| g(&(y - x)), |y, n| -n.dot(&grad_g(&(y - x))))
    }

    /// R_x on Ω with the obstacle ignored: R_x = −G(·−x) on ∂Ω.
    pub fn green_regular(&self, x: &Vec3) -> Result<HarmonicSolution> {
        self.check_source(x, true)?;
        let x = *x;
        let image = self.auxiliary_image(&x).scaled(-1.0);
        Self::solve_with(&self.background, image, |y| -g(&(y - x)), |_, _| 0.0)
    }

    /// G_Ω(y; x) = G(y − x) + R_x(y).
    pub fn green_omega(&self, y: &Vec3, x: &Vec3) -> Result<f64> {
        let r = self.green_regular(x)?;
        Ok(crate::potential::g_checked(&(y - x))? + r.value_unchecked(y))
    }

    /// Images on the obstacle for the point sources of a regular field.
    fn images_of(&self, field: &AnalyticField) -> AnalyticField {
        let Some((c, a)) = self.obstacle_sphere() else {
            return AnalyticField::zero();
        };
        field.sources.iter().fold(AnalyticField::zero(), |acc, s| match s {
            Source::Point { pos, q } => acc.add(&neumann_image(&c, a, pos, *q)),
            Source::Line { .. } => acc,
        })
    }

    /// z_x: Neumann data −∂ν R_x on ∂D, zero on ∂Ω.
    pub fn correction(&self, x: &Vec3) -> Result<HarmonicSolution> {
        let r = self.green_regular(x)?;
        self.correction_from(&r)
    }

    fn correction_from(&self, r: &HarmonicSolution) -> Result<HarmonicSolution> {
        let image = self.images_of(&r.analytic);
        Self::solve_with(&self.op, image, |_| 0.0, |y, n| -n.dot(&r.gradient_unchecked(y)))
    }

    /// w*_x: Neumann data −∂ν G_Ω(·; x) on ∂D, zero on ∂Ω.
    pub fn star_reflected(&self, x: &Vec3) -> Result<HarmonicSolution> {
        self.check_source(x, false)?;
        let r = self.green_regular(x)?;
        let x = *x;
        let image = self.reflected_image(&x).add(&self.images_of(&r.analytic));
        Self::solve_with(&self.op, image, |_| 0.0, |y, n| -n.dot(&(grad_g(&(y - x)) + r.gradient_unchecked(y))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{canonical_domain, concentric_domain};
    use crate::oracle::{Field, ModalSolution};
    use std::sync::OnceLock;

    fn canonical() -> &'static Solver {
        static S: OnceLock<Solver> = OnceLock::new();
        S.get_or_init(|| Solver::new(&canonical_domain(3)).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn linear_data_reproduced_without_obstacle() {
        let s = Solver::new(&concentric_domain(1.0, None, 2)).unwrap();
        let f = DVector::from_iterator(s.op.n_outer, s.domain().outer.vertices.iter().map(|v| v.x));
        let u = s.solve_mixed(&f, &DVector::zeros(0)).unwrap();
        for y in [Vec3::new(0.2, 0.1, -0.3), Vec3::new(-0.5, 0.4, 0.1)] {
            assert!((u.value(&y).unwrap() - y.x).abs() < 2e-3);
        }
        let nt = u.nodal_neumann(Side::Outer);
        for (v, n) in s.domain().outer.vertex_normals.iter().zip(nt.iter()) {
            assert!((n - v.x).abs() < 2e-2, "{n} {}", v.x);
        }
    }

    #[test]
    fn constant_data_gives_constant() {
        let s = canonical();
        let u = s.solve_mixed(&DVector::from_element(s.op.n_outer, 1.0), &DVector::zeros(s.op.n_obstacle())).unwrap();
        for y in [Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, -0.35, 0.2)] {
            assert!((u.value(&y).unwrap() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn fields_match_oracle_at_canonical_point() {
        let s = canonical();
        let x = Vec3::new(0.6, 0.0, 0.0);
        let m = ModalSolution::new(1.0, 0.3, x, 40).unwrap();
        let y = Vec3::new(0.1, 0.5, -0.2);
        for (field, sol) in [
            (Field::Reflected, s.reflected(&x).unwrap()),
            (Field::Auxiliary, s.auxiliary(&x).unwrap()),
            (Field::Third, s.third(&x).unwrap()),
            (Field::Star, s.star_reflected(&x).unwrap()),
            (Field::Correction, s.correction(&x).unwrap()),
        ] {
            for p in [x, y] {
                let (a, b) = (sol.value(&p).unwrap(), m.eval(field, &p));
                assert!(rel(a, b) < 1e-2, "{field:?} at {p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fields_without_images_match_oracle() {
        let s = canonical().clone().without_images();
        let x = Vec3::new(0.6, 0.0, 0.0);
        let m = ModalSolution::new(1.0, 0.3, x, 40).unwrap();
        for (field, sol) in [(Field::Reflected, s.reflected(&x).unwrap()), (Field::Auxiliary, s.auxiliary(&x).unwrap())] {
            let (a, b) = (sol.value(&x).unwrap(), m.eval(field, &x));
            assert!(rel(a, b) < 1e-2, "{field:?}: {a} vs {b}");
        }
    }

    #[test]
    fn near_obstacle_against_oracle() {
        let s = canonical();
        let x = Vec3::new(0.335, 0.0, 0.0);
        let m = ModalSolution::new(1.0, 0.3, x, 400).unwrap();
        let (a, b) = (s.reflected(&x).unwrap().value(&x).unwrap(), m.eval(Field::Reflected, &x));
        assert!(rel(a, b) < 1e-2, "{a} vs {b}");
    }

    #[test]
    fn kelvin_formula_for_ball() {
        let s = Solver::new(&concentric_domain(1.0, None, 3)).unwrap().without_images();
        let x = Vec3::new(0.5, 0.0, 0.0);
        let star = x / x.norm_squared();
        for y in [Vec3::new(0.0, 0.3, 0.0), Vec3::new(-0.4, 0.2, 0.3), Vec3::new(0.7, -0.1, 0.1)] {
            let exact = g(&(y - x)) - g(&(y - star)) / x.norm();
            let got = s.green_omega(&y, &x).unwrap();
            assert!(rel(got, exact) < 5e-3, "{got} vs {exact}");
        }
    }

    #[test]
    fn flux_balances() {
        let s = canonical();
        let w = s.third(&Vec3::new(0.0, 0.5, 0.2)).unwrap();
        let scale = w.integrate_traces(Side::Outer, &[], |_, _, n| n.abs());
        assert!(w.net_flux().abs() < 1e-3 * scale, "{}", w.net_flux());
    }
}
