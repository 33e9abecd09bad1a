use std::collections::HashMap;

use super::quadrature::{hat, TriangleRule};
use super::shape::Shape;
use super::Vec3;
use crate::error::{Error, Result};

/// Curved-panel quadrature point: position, weight including the surface
/// Jacobian, unit normal, and the three hat-function values.
#[derive(Clone, Copy, Debug)]
pub struct PanelPoint {
    pub pos: Vec3,
    pub weight: f64,
    pub normal: Vec3,
    pub basis: [f64; 3],
}

/// Closed triangulated surface, optionally carrying its analytic shape.
#[derive(Clone, Debug)]
pub struct TriSurface {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Flat outward unit normal per triangle.
    pub normals: Vec<Vec3>,
    /// Flat area per triangle.
    pub areas: Vec<f64>,
    /// Unit normal at each vertex (analytic when the shape is known).
    pub vertex_normals: Vec<Vec3>,
    pub shape: Option<Shape>,
    /// Flat-triangle quadrature, `rule.len()` points per triangle.
    pub quad_nodes: Vec<Vec3>,
    pub quad_weights: Vec<f64>,
    /// Curved-panel quadrature with the default far-field rule.
    pub panels: Vec<PanelPoint>,
    pub rule_size: usize,
    pub mean_edge: f64,
    pub max_edge: f64,
}

impl TriSurface {
    /// Builds and validates a surface. Vertices must be ordered so that
    /// triangle normals point outward.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, shape: Option<Shape>) -> Result<Self> {
        validate_topology(vertices.len(), &triangles)?;
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            let n = (b - a).cross(&(c - a));
            let area = 0.5 * n.norm();
            if !(area > 0.0) {
                return Err(Error::InvalidMesh("degenerate triangle with zero area".into()));
            }
            normals.push(n.normalize());
            areas.push(area);
        }
        let mut vertex_normals = vec![Vec3::zeros(); vertices.len()];
        match &shape {
            Some(s) => {
                for (v, n) in vertices.iter().zip(vertex_normals.iter_mut()) {
                    *n = s.normal(v);
                }
            }
            None => {
                for (k, t) in triangles.iter().enumerate() {
                    for &i in t {
                        vertex_normals[i] += areas[k] * normals[k];
                    }
                }
                for n in vertex_normals.iter_mut() {
                    *n = n.normalize();
                }
            }
        }
        let rule = TriangleRule::dunavant6();
        let mut quad_nodes = Vec::with_capacity(triangles.len() * rule.len());
        let mut quad_weights = Vec::with_capacity(triangles.len() * rule.len());
        for (k, t) in triangles.iter().enumerate() {
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                quad_nodes.push(a + p[0] * (b - a) + p[1] * (c - a));
                quad_weights.push(2.0 * w * areas[k]);
            }
        }
        let mut edges = Vec::new();
        for t in &triangles {
            for e in 0..3 {
                edges.push((vertices[t[e]] - vertices[t[(e + 1) % 3]]).norm());
            }
        }
        let mean_edge = edges.iter().sum::<f64>() / edges.len() as f64;
        let max_edge = edges.iter().cloned().fold(0.0, f64::max);
        let mut surf = TriSurface {
            vertices,
            triangles,
            normals,
            areas,
            vertex_normals,
            shape,
            quad_nodes,
            quad_weights,
            panels: Vec::new(),
            rule_size: rule.len(),
            mean_edge,
            max_edge,
        };
        let mut panels = Vec::with_capacity(surf.triangles.len() * rule.len());
        for k in 0..surf.triangles.len() {
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                panels.push(surf.panel_point(k, p[0], p[1], *w));
            }
        }
        surf.panels = panels;
        if surf.signed_volume() <= 0.0 {
            return Err(Error::InvalidMesh("normals point inward (non-positive enclosed volume)".into()));
        }
        Ok(surf)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Maps reference coordinates of triangle `t` to the surface, returning
    /// the point and the area element.
    pub fn map(&self, t: usize, xi: f64, eta: f64) -> (Vec3, f64, Vec3) {
        let tri = self.triangles[t];
        let (a, b, c) = (self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]);
        let flat = a + xi * (b - a) + eta * (c - a);
        match &self.shape {
            None => (flat, 2.0 * self.areas[t], self.normals[t]),
            Some(s) => {
                let j = s.project_jacobian(&flat);
                let dxi = j * (b - a);
                let deta = j * (c - a);
                let p = s.project(&flat);
                (p, dxi.cross(&deta).norm(), s.normal(&p))
            }
        }
    }

    /// Quadrature point for reference weight `w` (which sums to 1/2).
    pub fn panel_point(&self, t: usize, xi: f64, eta: f64, w: f64) -> PanelPoint {
        let (pos, jac, normal) = self.map(t, xi, eta);
        PanelPoint { pos, weight: w * jac, normal, basis: hat(xi, eta) }
    }

    /// Default curved quadrature points of triangle `t`.
    pub fn panel(&self, t: usize) -> &[PanelPoint] {
        &self.panels[t * self.rule_size..(t + 1) * self.rule_size]
    }

    /// Enclosed volume from the divergence theorem on the flat facets.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Enclosed volume (1/3)∫ y·ν dS on the curved panels.
    pub fn enclosed_volume(&self) -> f64 {
        self.panels.iter().map(|p| p.weight * p.pos.dot(&p.normal)).sum::<f64>() / 3.0
    }

    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Surface area measured on the curved panels.
    pub fn curved_area(&self) -> f64 {
        self.panels.iter().map(|p| p.weight).sum()
    }

    /// Distance from a point to the faceted surface.
    pub fn mesh_distance(&self, p: &Vec3) -> f64 {
        self.triangles
            .iter()
            .map(|t| point_triangle_distance(p, &self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the surface, exact when the analytic shape is a sphere.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.shape.as_ref().and_then(|s| s.exact_distance(p)).unwrap_or_else(|| self.mesh_distance(p))
    }

    /// Generalized winding number: 1 inside, 0 outside.
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        let mut total = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0]] - p;
            let b = self.vertices[t[1]] - p;
            let c = self.vertices[t[2]] - p;
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.winding_number(p) > 0.5
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().fold(Vec3::zeros(), |s, v| s + v) / self.vertices.len() as f64
    }

    /// Stable 64-bit FNV-1a hash of the vertex coordinates and connectivity.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for v in &self.vertices {
            for c in v.iter() {
                eat(&c.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for i in t {
                eat(&(*i as u64).to_le_bytes());
            }
        }
        format!("{:016x}", h)
    }
}

fn validate_topology(nv: usize, triangles: &[[usize; 3]]) -> Result<()> {
    if triangles.len() < 4 {
        return Err(Error::InvalidMesh("fewer than 4 triangles cannot close a surface".into()));
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for &i in t {
            if i >= nv {
                return Err(Error::InvalidMesh(format!("triangle references vertex {i} of {nv}")));
            }
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::InvalidMesh("triangle with repeated vertex".into()));
        }
        for e in 0..3 {
            *directed.entry((t[e], t[(e + 1) % 3])).or_insert(0) += 1;
        }
    }
    for (&(a, b), &n) in &directed {
        if n != 1 || directed.get(&(b, a)) != Some(&1) {
            return Err(Error::InvalidMesh(format!(
                "edge ({a},{b}) is not shared by exactly 2 consistently oriented triangles"
            )));
        }
    }
    let mut used = vec![false; nv];
    for t in triangles {
        for &i in t {
            used[i] = true;
        }
    }
    if used.iter().any(|u| !u) {
        return Err(Error::InvalidMesh("unreferenced vertex".into()));
    }
    Ok(())
}

/// Closest-point distance from `p` to triangle (a, b, c).
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

/// Icosahedral sphere mesh with `10·4^level + 2` vertices.
pub fn build_sphere_mesh(center: Vec3, radius: f64, level: usize) -> TriSurface {
    assert!(radius > 0.0, "radius must be positive");
    let (unit, tris) = icosphere(level);
    let vertices = unit.iter().map(|u| center + radius * u).collect();
    TriSurface::new(vertices, tris, Some(Shape::sphere(center, radius))).expect("icosphere is a valid surface")
}

/// Ellipsoid mesh obtained by scaling the icosphere along the axes.
pub fn build_ellipsoid_mesh(center: Vec3, semi_axes: Vec3, level: usize) -> TriSurface {
    assert!(semi_axes.min() > 0.0, "semi-axes must be positive");
    let (unit, tris) = icosphere(level);
    let vertices = unit.iter().map(|u| center + u.component_mul(&semi_axes)).collect();
    TriSurface::new(vertices, tris, Some(Shape::Ellipsoid { center, semi_axes }))
        .expect("scaled icosphere is a valid surface")
}

fn icosphere(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for t in &tris {
            let ab = midpoint(t[0], t[1], &mut verts);
            let bc = midpoint(t[1], t[2], &mut verts);
            let ca = midpoint(t[2], t[0], &mut verts);
            next.push([t[0], ab, ca]);
            next.push([t[1], bc, ab]);
            next.push([t[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    (verts, tris)
}
