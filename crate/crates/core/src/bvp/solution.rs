use std::sync::Arc;

use nalgebra::DVector;

use super::assembly::BemOperator;
use super::field::AnalyticField;
use crate::error::{Error, Result};
use crate::geometry::{PanelPoint, Region, TriSurface, Vec3};
use crate::potential::{g, grad_g, quadrature_limit, visit_panel};

/// Which surface of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Outer,
    Obstacle,
}

/// Harmonic function on Ω∖D̄: closed-form part plus single layers on both
/// surfaces.
#[derive(Clone, Debug)]
pub struct HarmonicSolution {
    pub op: Arc<BemOperator>,
    pub analytic: AnalyticField,
    pub density: DVector<f64>,
    /// Layer part of the Dirichlet trace at the nodes.
    pub layer_dirichlet: DVector<f64>,
    /// Layer part of the normal derivative at the nodes (ν outward of each
    /// surface, derivative taken from the shell side).
    pub layer_neumann: DVector<f64>,
}

impl HarmonicSolution {
    pub fn new(op: Arc<BemOperator>, analytic: AnalyticField, density: DVector<f64>) -> Self {
        let layer_dirichlet = op.layer_dirichlet(&density);
        let layer_neumann = op.layer_neumann(&density);
        HarmonicSolution { op, analytic, density, layer_dirichlet, layer_neumann }
    }

    pub fn zero(op: Arc<BemOperator>) -> Self {
        let n = op.n();
        Self::new(op, AnalyticField::zero(), DVector::zeros(n))
    }

    /// Pointwise sum; both terms must share the operator.
    pub fn add(&self, other: &HarmonicSolution) -> Result<HarmonicSolution> {
        if !Arc::ptr_eq(&self.op, &other.op) {
            return Err(Error::DomainMismatch("solutions live on different operators".into()));
        }
        Ok(HarmonicSolution {
            op: self.op.clone(),
            analytic: self.analytic.clone().add(&other.analytic),
            density: &self.density + &other.density,
            layer_dirichlet: &self.layer_dirichlet + &other.layer_dirichlet,
            layer_neumann: &self.layer_neumann + &other.layer_neumann,
        })
    }

    fn check_point(&self, y: &Vec3) -> Result<()> {
        let c = self.op.domain.classify_point(y)?;
        if c.region != Region::InShell {
            return Err(Error::NearSurface { distance: 0.0, limit: 0.0 });
        }
        let lim_o = quadrature_limit(&self.op.domain.outer);
        if c.dist_outer < lim_o {
            return Err(Error::NearSurface { distance: c.dist_outer, limit: lim_o });
        }
        if let Some(d) = &self.op.domain.obstacle {
            let lim = quadrature_limit(d);
            if c.dist_obstacle < lim {
                return Err(Error::NearSurface { distance: c.dist_obstacle, limit: lim });
            }
        }
        Ok(())
    }

    /// Value at an interior point of the shell.
    pub fn value(&self, y: &Vec3) -> Result<f64> {
        self.check_point(y)?;
        Ok(self.value_unchecked(y))
    }

    pub fn gradient(&self, y: &Vec3) -> Result<Vec3> {
        self.check_point(y)?;
        Ok(self.gradient_unchecked(y))
    }

    /// Value without the location check. Meaningful anywhere off the
    /// surfaces; outside the shell it is just the analytic continuation of
    /// the representation.
    pub fn value_unchecked(&self, y: &Vec3) -> f64 {
        let mut sum = self.analytic.value(y);
        self.visit_layer(y, |w, p| sum += w * g(&(y - p.pos)));
        sum
    }

    pub fn gradient_unchecked(&self, y: &Vec3) -> Vec3 {
        let mut sum = self.analytic.grad(y);
        self.visit_layer(y, |w, p| sum += grad_g(&(y - p.pos)) * w);
        sum
    }

    fn visit_layer<F: FnMut(f64, &PanelPoint)>(&self, y: &Vec3, mut f: F) {
        if self.density.iter().all(|v| *v == 0.0) {
            return;
        }
        let targets = [*y];
        for (s, off) in self.op.surfaces() {
            for (t, tri) in s.triangles.iter().enumerate() {
                let dens = [self.density[off + tri[0]], self.density[off + tri[1]], self.density[off + tri[2]]];
                if dens.iter().all(|v| *v == 0.0) {
                    continue;
                }
                visit_panel(s, t, &targets, &mut |p| {
                    let sig = p.basis[0] * dens[0] + p.basis[1] * dens[1] + p.basis[2] * dens[2];
                    f(sig * p.weight, p)
                });
            }
        }
    }

    fn surface(&self, side: Side) -> (&TriSurface, usize) {
        match side {
            Side::Outer => (&self.op.domain.outer, 0),
            Side::Obstacle => (self.op.domain.obstacle.as_deref().expect("domain has an obstacle"), self.op.n_outer),
        }
    }

    /// Dirichlet values at the vertices of one surface.
    pub fn nodal_dirichlet(&self, side: Side) -> DVector<f64> {
        let (s, off) = self.surface(side);
        DVector::from_iterator(s.n_vertices(), s.vertices.iter().enumerate().map(|(i, v)| self.analytic.value(v) + self.layer_dirichlet[off + i]))
    }

    /// Normal derivative at the vertices of one surface.
    pub fn nodal_neumann(&self, side: Side) -> DVector<f64> {
        let (s, off) = self.surface(side);
        DVector::from_iterator(
            s.n_vertices(),
            s.vertices.iter().zip(&s.vertex_normals).enumerate().map(|(i, (v, n))| n.dot(&self.analytic.grad(v)) + self.layer_neumann[off + i]),
        )
    }

    /// ∫ over one surface of f(point, Dirichlet trace, Neumann trace),
    /// refined toward the given targets and the analytic singularities.
    pub fn integrate_traces<F: FnMut(&PanelPoint, f64, f64) -> f64>(&self, side: Side, targets: &[Vec3], mut f: F) -> f64 {
        let (s, off) = self.surface(side);
        let mut all: Vec<Vec3> = targets.to_vec();
        all.extend(self.analytic.hot_spots());
        let mut sum = 0.0;
        for (t, tri) in s.triangles.iter().enumerate() {
            let d = [self.layer_dirichlet[off + tri[0]], self.layer_dirichlet[off + tri[1]], self.layer_dirichlet[off + tri[2]]];
            let nn = [self.layer_neumann[off + tri[0]], self.layer_neumann[off + tri[1]], self.layer_neumann[off + tri[2]]];
            visit_panel(s, t, &all, &mut |p| {
                let b = p.basis;
                let dv = self.analytic.value(&p.pos) + b[0] * d[0] + b[1] * d[1] + b[2] * d[2];
                let nv = p.normal.dot(&self.analytic.grad(&p.pos)) + b[0] * nn[0] + b[1] * nn[1] + b[2] * nn[2];
                sum += p.weight * f(p, dv, nv);
            });
        }
        sum
    }

    /// Net flux ∫ ∂ν u over both surfaces with ∂D oriented into D, which
    /// vanishes for a harmonic function in the shell.
    pub fn net_flux(&self) -> f64 {
        let mut total = self.integrate_traces(Side::Outer, &[], |_, _, n| n);
        if self.op.domain.has_obstacle() {
            total -= self.integrate_traces(Side::Obstacle, &[], |_, _, n| n);
        }
        total
    }
}
