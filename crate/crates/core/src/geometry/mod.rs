//! Surfaces, domains, needles and probe grids.

pub mod domain;
pub mod grid;
pub mod mesh;
pub mod needle;
pub mod quadrature;
pub mod shape;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use domain::{Classification, Domain, Region};
pub use grid::{GridPoint, ScanGrid};
pub use mesh::{build_ellipsoid_mesh, build_sphere_mesh, PanelPoint, TriSurface};
pub use needle::{axis_needles, nearest_boundary_needle, needle_hits_obstacle, ray_exit, Contact, Needle};
pub use shape::Shape;

/// Ω = B(0, 1) with D = B(0, 0.3), both at the given refinement level.
pub fn canonical_domain(level: usize) -> Domain {
    concentric_domain(1.0, Some(0.3), level)
}

/// Concentric spheres centered at the origin.
pub fn concentric_domain(r0: f64, r1: Option<f64>, level: usize) -> Domain {
    let outer = build_sphere_mesh(Vec3::zeros(), r0, level);
    let obstacle = r1.map(|r| build_sphere_mesh(Vec3::zeros(), r, level));
    Domain::new(outer, obstacle).expect("concentric spheres form a valid domain")
}
