use super::direct::DirectModel;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Region, Vec3};

/// w_x(x) on a domain and on an enlarged one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceRow {
    pub x: Vec3,
    pub dist_obstacle: f64,
    pub w_inner: f64,
    pub w_outer: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub max_difference: f64,
    pub min_value: f64,
}

impl InvarianceReport {
    /// Largest difference relative to the smallest inner value.
    pub fn relative_difference(&self) -> f64 {
        super::rel(self.max_difference, self.min_value)
    }
}

/// Checks that Ω̄₁ ⊂ Ω₂, or Ω₁ = Ω₂, and that both carry the same obstacle.
pub fn check_nesting(inner: &Domain, outer: &Domain) -> Result<()> {
    let same_obstacle = match (&inner.obstacle, &outer.obstacle) {
        (None, None) => true,
        (Some(a), Some(b)) => a.fingerprint() == b.fingerprint(),
        _ => false,
    };
    if !same_obstacle {
        return Err(Error::NestingViolation("the two domains carry different obstacles".into()));
    }
    if inner.outer.fingerprint() == outer.outer.fingerprint() {
        return Ok(());
    }
    let tol = outer.mesh_tolerance();
    for v in &inner.outer.vertices {
        if !outer.outer.contains(v) || outer.outer.distance(v) <= tol {
            return Err(Error::NestingViolation(format!("vertex {v:?} of the inner boundary is not inside the outer domain")));
        }
    }
    Ok(())
}

/// w_x(x) with Ω replaced by a larger domain, at each probe.
pub fn invariance_check(inner: &DirectModel, outer: &DirectModel, probes: &[Vec3]) -> Result<InvarianceReport> {
    check_nesting(inner.domain(), outer.domain())?;
    let mut rows = Vec::with_capacity(probes.len());
    for x in probes {
        let c = inner.domain().classify_point(x)?;
        if c.region != Region::InShell {
            return Err(Error::NestingViolation(format!("probe {x:?} is not in the inner shell")));
        }
        let w_inner = inner.solver.reflected(x)?.value(x)?;
        let w_outer = outer.solver.reflected(x)?.value(x)?;
        rows.push(InvarianceRow { x: *x, dist_obstacle: c.dist_obstacle, w_inner, w_outer, difference: (w_outer - w_inner).abs() });
    }
    let max_difference = rows.iter().map(|r| r.difference).fold(0.0, f64::max);
    let min_value = rows.iter().map(|r| r.w_inner.abs()).fold(f64::INFINITY, f64::min);
    Ok(InvarianceReport { rows, max_difference, min_value })
}
