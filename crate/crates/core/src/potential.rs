//! Fundamental solution, panel quadrature for layer kernels, and the
//! boundary-reduced energy integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::quadrature::TriangleRule;
use crate::geometry::{PanelPoint, TriSurface, Vec3};

const INV_FOUR_PI: f64 = 1.0 / (4.0 * PI);

/// Panels farther than this many panel diameters from every target use the
/// precomputed 6-point rule.
pub const FAR_RATIO: f64 = 4.0;
/// Sub-panels closer than this ratio are split further.
const SPLIT_RATIO: f64 = 2.5;
const MAX_DEPTH: usize = 14;

/// G(y) = 1/(4π|y|).
#[inline]
pub fn g(y: &Vec3) -> f64 {
    INV_FOUR_PI / y.norm()
}

/// ∇G(y) = −y/(4π|y|³).
#[inline]
pub fn grad_g(y: &Vec3) -> Vec3 {
    let r = y.norm();
    -y * (INV_FOUR_PI / (r * r * r))
}

pub fn g_checked(y: &Vec3) -> Result<f64> {
    if y.norm() == 0.0 {
        Err(Error::SingularPoint)
    } else {
        Ok(g(y))
    }
}

pub fn grad_g_checked(y: &Vec3) -> Result<Vec3> {
    if y.norm() == 0.0 {
        Err(Error::SingularPoint)
    } else {
        Ok(grad_g(y))
    }
}

fn near_rule() -> &'static TriangleRule {
    static R: OnceLock<TriangleRule> = OnceLock::new();
    R.get_or_init(|| TriangleRule::collapsed(4))
}

fn duffy_rule() -> &'static TriangleRule {
    static R: OnceLock<TriangleRule> = OnceLock::new();
    R.get_or_init(|| TriangleRule::duffy(10))
}

fn panel_diameter(s: &TriSurface, t: usize) -> f64 {
    let tri = s.triangles[t];
    let (a, b, c) = (s.vertices[tri[0]], s.vertices[tri[1]], s.vertices[tri[2]]);
    (a - b).norm().max((b - c).norm()).max((c - a).norm())
}

fn panel_center(s: &TriSurface, t: usize) -> Vec3 {
    let tri = s.triangles[t];
    (s.vertices[tri[0]] + s.vertices[tri[1]] + s.vertices[tri[2]]) / 3.0
}

/// Smallest distance from the targets to the panel centroid, in panel
/// diameters.
pub fn proximity(s: &TriSurface, t: usize, targets: &[Vec3]) -> f64 {
    let c = panel_center(s, t);
    let h = panel_diameter(s, t);
    targets.iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min) / h
}

/// Visits quadrature points of panel `t`, refining adaptively toward the
/// targets. Basis values refer to the hat functions of the whole panel.
pub fn visit_panel<F: FnMut(&PanelPoint)>(s: &TriSurface, t: usize, targets: &[Vec3], f: &mut F) {
    if proximity(s, t, targets) > FAR_RATIO {
        for p in s.panel(t) {
            f(p);
        }
        return;
    }
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    refine(s, t, corners, targets, 0, f);
}

fn refine<F: FnMut(&PanelPoint)>(s: &TriSurface, t: usize, c: [[f64; 2]; 3], targets: &[Vec3], depth: usize, f: &mut F) {
    let pts: Vec<Vec3> = c.iter().map(|q| s.map(t, q[0], q[1]).0).collect();
    let size = (pts[0] - pts[1]).norm().max((pts[1] - pts[2]).norm()).max((pts[2] - pts[0]).norm());
    let center = (pts[0] + pts[1] + pts[2]) / 3.0;
    let dist = targets.iter().map(|p| (p - center).norm()).fold(f64::INFINITY, f64::min);
    if dist > SPLIT_RATIO * size || depth >= MAX_DEPTH {
        // Sub-triangle reference area relative to the full reference triangle.
        let (e1, e2) = ([c[1][0] - c[0][0], c[1][1] - c[0][1]], [c[2][0] - c[0][0], c[2][1] - c[0][1]]);
        let scale = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let rule = near_rule();
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let xi = c[0][0] + q[0] * e1[0] + q[1] * e2[0];
            let eta = c[0][1] + q[0] * e1[1] + q[1] * e2[1];
            f(&s.panel_point(t, xi, eta, w * scale));
        }
        return;
    }
    let m01 = [(c[0][0] + c[1][0]) / 2.0, (c[0][1] + c[1][1]) / 2.0];
    let m12 = [(c[1][0] + c[2][0]) / 2.0, (c[1][1] + c[2][1]) / 2.0];
    let m20 = [(c[2][0] + c[0][0]) / 2.0, (c[2][1] + c[0][1]) / 2.0];
    for sub in [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m01, m12, m20]] {
        refine(s, t, sub, targets, depth + 1, f);
    }
}

/// Visits Duffy quadrature points of panel `t` for an integrand singular at
/// its local vertex `corner` (0, 1 or 2).
pub fn visit_panel_singular<F: FnMut(&PanelPoint)>(s: &TriSurface, t: usize, corner: usize, f: &mut F) {
    let refc = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let (a, b, c) = (refc[corner], refc[(corner + 1) % 3], refc[(corner + 2) % 3]);
    let rule = duffy_rule();
    for (q, w) in rule.points.iter().zip(&rule.weights) {
        let xi = a[0] + q[0] * (b[0] - a[0]) + q[1] * (c[0] - a[0]);
        let eta = a[1] + q[0] * (b[1] - a[1]) + q[1] * (c[1] - a[1]);
        f(&s.panel_point(t, xi, eta, *w));
    }
}

/// ∫_S f dS with refinement toward the targets.
pub fn integrate<F: FnMut(&PanelPoint) -> f64>(s: &TriSurface, targets: &[Vec3], mut f: F) -> f64 {
    let mut sum = 0.0;
    for t in 0..s.n_triangles() {
        visit_panel(s, t, targets, &mut |p| sum += p.weight * f(p));
    }
    sum
}

fn check_distance(s: &TriSurface, x: &Vec3, limit: f64) -> Result<()> {
    let d = s.distance(x);
    if d < limit {
        Err(Error::NearSurface { distance: d, limit })
    } else {
        Ok(())
    }
}

/// Smallest distance at which the adaptive quadrature is trusted.
pub fn quadrature_limit(s: &TriSurface) -> f64 {
    1e-3 * s.mean_edge
}

/// ∫_D ∇G(z−x)·∇G(z−y) dz for x, y outside D̄, as the symmetrized boundary
/// integral ½∫_{∂D} [∂νG(z−x) G(z−y) + ∂νG(z−y) G(z−x)] dS.
pub fn energy_integral_obstacle(x: &Vec3, y: &Vec3, d: &TriSurface) -> Result<f64> {
    let lim = quadrature_limit(d);
    check_distance(d, x, lim)?;
    check_distance(d, y, lim)?;
    if d.contains(x) || d.contains(y) {
        return Err(Error::NearSurface { distance: 0.0, limit: lim });
    }
    Ok(boundary_pair(d, x, y))
}

/// ∫_{ℝ³∖Ω̄} ∇G(z−x)·∇G(z−y) dz for x, y inside Ω, as
/// −½∫_{∂Ω} [∂νG(z−x) G(z−y) + ∂νG(z−y) G(z−x)] dS.
pub fn energy_integral_exterior(x: &Vec3, y: &Vec3, outer: &TriSurface) -> Result<f64> {
    let lim = quadrature_limit(outer);
    check_distance(outer, x, lim)?;
    check_distance(outer, y, lim)?;
    Ok(-boundary_pair(outer, x, y))
}

fn boundary_pair(s: &TriSurface, x: &Vec3, y: &Vec3) -> f64 {
    integrate(s, &[*x, *y], |p| {
        let (dx, dy) = (p.pos - x, p.pos - y);
        0.5 * (p.normal.dot(&grad_g(&dx)) * g(&dy) + p.normal.dot(&grad_g(&dy)) * g(&dx))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_sphere_mesh;
    use crate::oracle::ModalSolution;

    #[test]
    fn green_values() {
        assert!((g(&Vec3::x()) - 0.0795774715459477).abs() < 1e-15);
        assert!((g(&Vec3::new(0.0, 2.0, 0.0)) - 1.0 / (8.0 * PI)).abs() < 1e-16);
        assert!(matches!(g_checked(&Vec3::zeros()), Err(Error::SingularPoint)));
    }

    #[test]
    fn gradient_by_central_differences() {
        let y = Vec3::new(0.3, 0.4, 0.5);
        let h = 1e-5;
        let gr = grad_g(&y);
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (g(&(y + e)) - g(&(y - e))) / (2.0 * h);
            assert!((fd - gr[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn obstacle_energy_matches_series() {
        let d = build_sphere_mesh(Vec3::zeros(), 0.3, 3);
        let x = Vec3::new(0.6, 0.0, 0.0);
        let e = energy_integral_obstacle(&x, &x, &d).unwrap();
        let o = ModalSolution::new(1.0, 0.3, x, 40).unwrap().indicators();
        assert!((e / o.obstacle_energy - 1.0).abs() < 1e-4, "{e} {}", o.obstacle_energy);
    }

    #[test]
    fn obstacle_energy_swap_symmetric() {
        let d = build_sphere_mesh(Vec3::zeros(), 0.3, 2);
        let (x, y) = (Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, 0.6, 0.0));
        let a = energy_integral_obstacle(&x, &y, &d).unwrap();
        let b = energy_integral_obstacle(&y, &x, &d).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn exterior_energy_at_center() {
        let o = build_sphere_mesh(Vec3::zeros(), 1.0, 3);
        let e = energy_integral_exterior(&Vec3::zeros(), &Vec3::zeros(), &o).unwrap();
        // Radial quadrature of ∫_{r>1} (4π)^{-2} r^{-4} 4π r² dr.
        let (x, w) = crate::geometry::quadrature::gauss_legendre(20);
        let radial: f64 = x.iter().zip(&w).map(|(t, w)| {
            // r = 1/t maps (1, ∞) onto (0, 1).
            let r = 1.0 / t;
            w * INV_FOUR_PI * INV_FOUR_PI * 4.0 * PI * r.powi(-2) / (t * t)
        }).sum();
        assert!((e - radial).abs() < 1e-6 && (radial - INV_FOUR_PI).abs() < 1e-12);
    }

    #[test]
    fn exterior_energy_grows_toward_boundary() {
        let o = build_sphere_mesh(Vec3::zeros(), 1.0, 3);
        let at = |r: f64| {
            let x = Vec3::new(r, 0.0, 0.0);
            energy_integral_exterior(&x, &x, &o).unwrap()
        };
        assert!(at(0.9) > at(0.5));
    }

    #[test]
    fn near_refinement_is_accurate() {
        let d = build_sphere_mesh(Vec3::zeros(), 0.3, 3);
        let x = Vec3::new(0.335, 0.0, 0.0);
        let e = energy_integral_obstacle(&x, &x, &d).unwrap();
        let o = ModalSolution::new(1.0, 0.3, x, 400).unwrap().indicators();
        assert!((e / o.obstacle_energy - 1.0).abs() < 1e-3, "{e} {}", o.obstacle_energy);
    }

    #[test]
    fn singular_panel_integral_of_one_over_r() {
        // ∫_{S} 1/|z−y| dS = 4πR for y on a sphere of radius R.
        let s = build_sphere_mesh(Vec3::zeros(), 1.0, 2);
        let y = s.vertices[0];
        let mut sum = 0.0;
        for t in 0..s.n_triangles() {
            let tri = s.triangles[t];
            match tri.iter().position(|&v| v == 0) {
                Some(c) => visit_panel_singular(&s, t, c, &mut |p| sum += p.weight / (p.pos - y).norm()),
                None => visit_panel(&s, t, &[y], &mut |p| sum += p.weight / (p.pos - y).norm()),
            }
        }
        assert!((sum / (4.0 * PI) - 1.0).abs() < 1e-5, "{sum}");
    }
}
