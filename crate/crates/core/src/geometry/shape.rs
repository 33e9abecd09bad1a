use nalgebra::Matrix3;

use super::Vec3;

/// Analytic reference surface carried alongside a mesh.
///
/// Mesh vertices sit exactly on the surface; quadrature maps flat triangles
/// onto it through [`Shape::project`] so that integrals see the smooth
/// boundary instead of the faceted one.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Ellipsoid { center: Vec3, semi_axes: Vec3 },
}

impl Shape {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Shape::Sphere { center, radius }
    }

    pub fn center(&self) -> Vec3 {
        match self {
            Shape::Sphere { center, .. } | Shape::Ellipsoid { center, .. } => *center,
        }
    }

    fn axes(&self) -> Vec3 {
        match self {
            Shape::Sphere { radius, .. } => Vec3::repeat(*radius),
            Shape::Ellipsoid { semi_axes, .. } => *semi_axes,
        }
    }

    /// Radial projection onto the surface, along the ray from the center in
    /// the scaled frame.
    pub fn project(&self, p: &Vec3) -> Vec3 {
        let a = self.axes();
        let s = (p - self.center()).component_div(&a);
        self.center() + (s / s.norm()).component_mul(&a)
    }

    /// Derivative of [`Shape::project`] at `p`.
    pub fn project_jacobian(&self, p: &Vec3) -> Matrix3<f64> {
        let a = self.axes();
        let s = (p - self.center()).component_div(&a);
        let n = s.norm();
        let sh = s / n;
        let tangential = (Matrix3::identity() - sh * sh.transpose()) / n;
        Matrix3::from_diagonal(&a) * tangential * Matrix3::from_diagonal(&a.map(|v| 1.0 / v))
    }

    /// Outward unit normal at a point on the surface.
    pub fn normal(&self, p: &Vec3) -> Vec3 {
        let a = self.axes();
        let g = (p - self.center()).component_div(&a.component_mul(&a));
        g.normalize()
    }

    /// Level-set value: negative inside, zero on the surface.
    pub fn level(&self, p: &Vec3) -> f64 {
        let s = (p - self.center()).component_div(&self.axes());
        s.norm() - 1.0
    }

    /// Exact distance for spheres; `None` for ellipsoids, where the mesh
    /// distance is used instead.
    pub fn exact_distance(&self, p: &Vec3) -> Option<f64> {
        match self {
            Shape::Sphere { center, radius } => Some(((p - center).norm() - radius).abs()),
            Shape::Ellipsoid { .. } => None,
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.level(p) < 0.0
    }

    /// Largest distance from the center to the surface.
    pub fn circumradius(&self) -> f64 {
        self.axes().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_ellipsoid() {
        let s = Shape::Ellipsoid { center: Vec3::new(0.1, 0.0, -0.2), semi_axes: Vec3::new(1.0, 0.7, 0.5) };
        let q = s.project(&Vec3::new(0.4, 0.3, 0.1));
        assert!(s.level(&q).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let s = Shape::Ellipsoid { center: Vec3::zeros(), semi_axes: Vec3::new(1.0, 0.7, 0.5) };
        let p = Vec3::new(0.5, 0.2, 0.3);
        let j = s.project_jacobian(&p);
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (s.project(&(p + e)) - s.project(&(p - e))) / (2.0 * h);
            assert!((fd - j.column(k)).norm() < 1e-8);
        }
    }

    #[test]
    fn sphere_normal_is_radial() {
        let s = Shape::sphere(Vec3::new(1.0, 0.0, 0.0), 0.3);
        let n = s.normal(&Vec3::new(1.0, 0.3, 0.0));
        assert!((n - Vec3::y()).norm() < 1e-15);
    }
}
