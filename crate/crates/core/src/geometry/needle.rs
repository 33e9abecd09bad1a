use super::domain::{Domain, Region};
use super::mesh::TriSurface;
use super::Vec3;
use crate::error::{Error, Result};

/// Polyline from a point of ∂Ω to a tip inside Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct Needle {
    pub points: Vec<Vec3>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contact {
    Avoids,
    /// `tangential` is set when the needle only grazes ∂D within tolerance.
    Hits { tangential: bool },
}

impl Needle {
    pub fn new(points: Vec<Vec3>) -> Self {
        Needle { points }
    }

    pub fn straight(entry: Vec3, tip: Vec3) -> Self {
        Needle { points: vec![entry, tip] }
    }

    pub fn tip(&self) -> Vec3 {
        *self.points.last().expect("needle has points")
    }

    pub fn entry(&self) -> Vec3 {
        self.points[0]
    }

    /// Outward direction of the first segment, used to continue the needle
    /// outside Ω.
    pub fn exit_direction(&self) -> Vec3 {
        (self.points[0] - self.points[1]).normalize()
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Distance from `p` to the polyline.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.points.windows(2).map(|w| segment_distance(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
    }

    /// Points along the polyline at roughly the given spacing, endpoints
    /// included.
    pub fn sample(&self, spacing: f64) -> Vec<Vec3> {
        let mut out = vec![self.points[0]];
        for w in self.points.windows(2) {
            let n = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
            for k in 1..=n {
                out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
            }
        }
        out
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::InvalidNeedle("needs at least two points".into()));
        }
        let tol = 0.05 * domain.outer.mean_edge;
        let d0 = domain.outer.distance(&self.points[0]);
        if d0 > tol {
            return Err(Error::InvalidNeedle(format!("first point is {d0:.3e} away from the outer surface")));
        }
        for p in &self.points[1..] {
            match domain.classify_point(p) {
                Ok(c) if c.region != Region::Exterior => {}
                _ => return Err(Error::InvalidNeedle("interior points must lie strictly inside Ω".into())),
            }
        }
        let n = self.points.len() - 1;
        for i in 0..n {
            for j in (i + 2)..n {
                let d = segment_segment_distance(&self.points[i], &self.points[i + 1], &self.points[j], &self.points[j + 1]);
                if d < domain.mesh_tolerance() {
                    return Err(Error::InvalidNeedle("polyline intersects itself".into()));
                }
            }
        }
        Ok(())
    }
}

/// Straight needle from the nearest point of ∂Ω to `tip`.
pub fn nearest_boundary_needle(domain: &Domain, tip: &Vec3) -> Needle {
    let outer = &domain.outer;
    let entry = match &outer.shape {
        Some(s) => {
            let dir = (tip - s.center()).try_normalize(1e-14).unwrap_or(Vec3::x());
            ray_exit(outer, &s.center(), &dir).unwrap_or_else(|| s.project(tip))
        }
        None => nearest_vertex(outer, tip),
    };
    Needle::straight(entry, *tip)
}

/// The six axis-aligned straight needles ending at `tip`.
pub fn axis_needles(domain: &Domain, tip: &Vec3) -> Vec<Needle> {
    let mut out = Vec::with_capacity(6);
    for k in 0..3 {
        for sign in [1.0, -1.0] {
            let mut d = Vec3::zeros();
            d[k] = sign;
            if let Some(entry) = ray_exit(&domain.outer, tip, &d) {
                out.push(Needle::straight(entry, *tip));
            }
        }
    }
    out
}

fn nearest_vertex(s: &TriSurface, p: &Vec3) -> Vec3 {
    *s.vertices
        .iter()
        .min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm()))
        .expect("surface has vertices")
}

/// First point where the ray `origin + t·dir` (t > 0) leaves the surface.
pub fn ray_exit(s: &TriSurface, origin: &Vec3, dir: &Vec3) -> Option<Vec3> {
    if let Some(shape) = &s.shape {
        // Solve |(o + t d − c) / a| = 1 in the scaled frame.
        let a = match shape {
            super::Shape::Sphere { radius, .. } => Vec3::repeat(*radius),
            super::Shape::Ellipsoid { semi_axes, .. } => *semi_axes,
        };
        let o = (origin - shape.center()).component_div(&a);
        let d = dir.component_div(&a);
        let (qa, qb, qc) = (d.dot(&d), 2.0 * o.dot(&d), o.dot(&o) - 1.0);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let t = (-qb + disc.sqrt()) / (2.0 * qa);
        return (t > 0.0).then(|| shape.project(&(origin + t * dir)));
    }
    let mut best: Option<f64> = None;
    for t in &s.triangles {
        if let Some(h) = ray_triangle(origin, dir, &s.vertices[t[0]], &s.vertices[t[1]], &s.vertices[t[2]]) {
            if h > 0.0 && best.is_none_or(|b| h > b) {
                best = Some(h);
            }
        }
    }
    best.map(|t| origin + t * dir)
}

fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Decides whether the needle meets the closed obstacle.
pub fn needle_hits_obstacle(domain: &Domain, needle: &Needle) -> Contact {
    let Some(d) = &domain.obstacle else {
        return Contact::Avoids;
    };
    let tol = domain.mesh_tolerance();
    let min_dist = match &d.shape {
        Some(super::Shape::Sphere { center, radius }) => {
            let m = needle.distance(center) - radius;
            if m < -tol {
                return Contact::Hits { tangential: false };
            }
            m.abs()
        }
        _ => {
            for w in needle.points.windows(2) {
                let dir = w[1] - w[0];
                for t in &d.triangles {
                    if let Some(h) = ray_triangle(&w[0], &dir, &d.vertices[t[0]], &d.vertices[t[1]], &d.vertices[t[2]]) {
                        if (0.0..=1.0).contains(&h) {
                            return Contact::Hits { tangential: false };
                        }
                    }
                }
            }
            if d.contains(&needle.tip()) {
                return Contact::Hits { tangential: false };
            }
            needle.sample(0.25 * d.mean_edge).iter().map(|p| d.mesh_distance(p)).fold(f64::INFINITY, f64::min)
        }
    };
    if min_dist < tol {
        Contact::Hits { tangential: true }
    } else {
        Contact::Avoids
    }
}

pub fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let (a, e, f) = (d1.dot(&d1), d2.dot(&d2), d2.dot(&r));
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::build_sphere_mesh;

    fn canonical() -> Domain {
        Domain::new(build_sphere_mesh(Vec3::zeros(), 1.0, 2), Some(build_sphere_mesh(Vec3::zeros(), 0.3, 2))).unwrap()
    }

    #[test]
    fn radial_needle_avoids() {
        let d = canonical();
        let n = Needle::straight(Vec3::x(), Vec3::new(0.6, 0.0, 0.0));
        n.validate(&d).unwrap();
        assert_eq!(needle_hits_obstacle(&d, &n), Contact::Avoids);
    }

    #[test]
    fn through_needle_hits() {
        let d = canonical();
        let n = Needle::straight(Vec3::x(), Vec3::new(-0.6, 0.0, 0.0));
        assert_eq!(needle_hits_obstacle(&d, &n), Contact::Hits { tangential: false });
    }

    #[test]
    fn arcing_polyline_avoids() {
        let d = canonical();
        let pts: Vec<Vec3> = (0..=12)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 * (1.0 - k as f64 / 12.0);
                let r = 1.0 - 0.4 * k as f64 / 12.0;
                Vec3::new(r * a.cos(), 0.0, r * a.sin())
            })
            .collect();
        let n = Needle::new(pts);
        n.validate(&d).unwrap();
        assert!(n.distance(&Vec3::zeros()) - 0.3 >= 0.2 - 1e-12);
        assert_eq!(needle_hits_obstacle(&d, &n), Contact::Avoids);
    }

    #[test]
    fn mesh_obstacle_path_agrees() {
        let mut obstacle = build_sphere_mesh(Vec3::zeros(), 0.3, 2);
        obstacle.shape = None;
        let d = Domain::new(build_sphere_mesh(Vec3::zeros(), 1.0, 2), Some(obstacle)).unwrap();
        let through = Needle::straight(Vec3::x(), Vec3::new(-0.6, 0.0, 0.0));
        let inside = Needle::straight(Vec3::x(), Vec3::new(0.1, 0.0, 0.0));
        let clear = Needle::straight(Vec3::x(), Vec3::new(0.6, 0.0, 0.0));
        assert!(matches!(needle_hits_obstacle(&d, &through), Contact::Hits { .. }));
        assert!(matches!(needle_hits_obstacle(&d, &inside), Contact::Hits { .. }));
        assert_eq!(needle_hits_obstacle(&d, &clear), Contact::Avoids);
    }

    #[test]
    fn axis_needles_reach_boundary() {
        let d = canonical();
        let ns = axis_needles(&d, &Vec3::new(0.6, 0.0, 0.0));
        assert_eq!(ns.len(), 6);
        for n in &ns {
            assert!((n.entry().norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(ns.iter().filter(|n| needle_hits_obstacle(&d, n) == Contact::Avoids).count(), 5);
    }

    #[test]
    fn self_intersection_rejected() {
        let d = canonical();
        // Last segment crosses the first one.
        let bad = Needle::new(vec![Vec3::x(), Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.7, 0.1, 0.0), Vec3::new(0.7, -0.1, 0.0)]);
        assert!(matches!(bad.validate(&d), Err(Error::InvalidNeedle(_))));
    }
}
