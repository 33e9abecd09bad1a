use std::sync::Arc;

use super::mesh::TriSurface;
use super::Vec3;
use crate::error::{Error, Result};

/// Outer surface ∂Ω with at most one obstacle D strictly inside.
#[derive(Clone, Debug)]
pub struct Domain {
    pub outer: Arc<TriSurface>,
    pub obstacle: Option<Arc<TriSurface>>,
    /// Minimum distance between ∂D and ∂Ω (infinite without an obstacle).
    pub clearance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Exterior,
    InShell,
    InObstacle,
}

#[derive(Clone, Copy, Debug)]
pub struct Classification {
    pub region: Region,
    pub dist_outer: f64,
    /// Infinite when there is no obstacle.
    pub dist_obstacle: f64,
}

impl Domain {
    pub fn new(outer: TriSurface, obstacle: Option<TriSurface>) -> Result<Self> {
        Self::from_arcs(Arc::new(outer), obstacle.map(Arc::new))
    }

    pub fn from_arcs(outer: Arc<TriSurface>, obstacle: Option<Arc<TriSurface>>) -> Result<Self> {
        let mut clearance = f64::INFINITY;
        if let Some(d) = &obstacle {
            for v in &d.vertices {
                if !inside(&outer, v) {
                    return Err(Error::InvalidDomain("obstacle vertex outside the outer surface".into()));
                }
                clearance = clearance.min(outer.distance(v));
            }
            if clearance <= 0.0 {
                return Err(Error::InvalidDomain("obstacle touches the outer surface".into()));
            }
        }
        Ok(Domain { outer, obstacle, clearance })
    }

    /// The same outer surface with the obstacle removed.
    pub fn background(&self) -> Domain {
        Domain { outer: self.outer.clone(), obstacle: None, clearance: f64::INFINITY }
    }

    pub fn has_obstacle(&self) -> bool {
        self.obstacle.is_some()
    }

    /// Tolerance below which a point is considered on a surface.
    pub fn mesh_tolerance(&self) -> f64 {
        1e-9 * self.outer.vertices.iter().map(|v| v.norm()).fold(1.0, f64::max)
    }

    /// Evaluation exclusion radius for the outer surface (2 edge lengths).
    pub fn eps_near_outer(&self) -> f64 {
        2.0 * self.outer.mean_edge
    }

    /// Evaluation exclusion radius for the obstacle surface.
    pub fn eps_near_obstacle(&self) -> f64 {
        self.obstacle.as_ref().map_or(0.0, |d| 2.0 * d.mean_edge)
    }

    pub fn classify_point(&self, x: &Vec3) -> Result<Classification> {
        let tol = self.mesh_tolerance();
        let dist_outer = self.outer.distance(x);
        let dist_obstacle = self.obstacle.as_ref().map_or(f64::INFINITY, |d| d.distance(x));
        if dist_outer < tol {
            return Err(Error::AmbiguousPoint(dist_outer));
        }
        if dist_obstacle < tol {
            return Err(Error::AmbiguousPoint(dist_obstacle));
        }
        let region = if !inside(&self.outer, x) {
            Region::Exterior
        } else if self.obstacle.as_ref().is_some_and(|d| inside(d, x)) {
            Region::InObstacle
        } else {
            Region::InShell
        };
        Ok(Classification { region, dist_outer, dist_obstacle })
    }
}

fn inside(s: &TriSurface, p: &Vec3) -> bool {
    match &s.shape {
        Some(shape) => shape.contains(p),
        None => s.contains(p),
    }
}
