//! Cross-checks of the solvers against independent computations: volume
//! quadrature of the energies, orthogonality, the DtN energy identity,
//! harmonicity, positivity and refinement.

use std::f64::consts::PI;
use std::sync::OnceLock;

use probekit::bvp::{Side, Solver};
use probekit::geometry::{build_sphere_mesh, canonical_domain, Vec3};
use probekit::indicator::{rel, DataModel, DirectModel};
use probekit::oracle::ModalSolution;
use probekit::potential::{energy_integral_exterior, energy_integral_obstacle, g, grad_g};

struct Models {
    direct: DirectModel,
    data: DataModel,
}

fn canonical() -> &'static Models {
    static M: OnceLock<Models> = OnceLock::new();
    M.get_or_init(|| {
        let direct = DirectModel::new(&canonical_domain(3)).unwrap();
        let data = DataModel::synthesize(&direct.solver, Default::default(), Default::default()).unwrap();
        Models { direct, data }
    })
}

/// Midpoint rule on a spherical tensor grid.
fn ball_energy(x: &Vec3, y: &Vec3, radius: f64, n: usize) -> f64 {
    let (nr, nt, np) = (n, n, 2 * n);
    let mut sum = 0.0;
    for i in 0..nr {
        let r = radius * (i as f64 + 0.5) / nr as f64;
        for j in 0..nt {
            let t = PI * (j as f64 + 0.5) / nt as f64;
            for k in 0..np {
                let p = 2.0 * PI * (k as f64 + 0.5) / np as f64;
                let z = Vec3::new(r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos());
                sum += grad_g(&(z - x)).dot(&grad_g(&(z - y))) * r * r * t.sin();
            }
        }
    }
    sum * (radius / nr as f64) * (PI / nt as f64) * (2.0 * PI / np as f64)
}

/// The exterior of the unit ball with r = 1/s, s ∈ (0, 1).
fn exterior_energy_grid(x: &Vec3, y: &Vec3, n: usize) -> f64 {
    let (ns, nt, np) = (n, n, 2 * n);
    let mut sum = 0.0;
    for i in 0..ns {
        let s = (i as f64 + 0.5) / ns as f64;
        let r = 1.0 / s;
        for j in 0..nt {
            let t = PI * (j as f64 + 0.5) / nt as f64;
            for k in 0..np {
                let p = 2.0 * PI * (k as f64 + 0.5) / np as f64;
                let z = Vec3::new(r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos());
                // dr = ds / s², volume element r² sinθ.
                sum += grad_g(&(z - x)).dot(&grad_g(&(z - y))) * r * r * t.sin() / (s * s);
            }
        }
    }
    sum * (1.0 / ns as f64) * (PI / nt as f64) * (2.0 * PI / np as f64)
}

#[test]
fn energies_match_volume_quadrature() {
    let d = build_sphere_mesh(Vec3::zeros(), 0.3, 3);
    let o = build_sphere_mesh(Vec3::zeros(), 1.0, 3);
    let pairs = [(Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.6, 0.0, 0.0)), (Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, 0.5, 0.3))];
    for (x, y) in pairs {
        let a = energy_integral_obstacle(&x, &y, &d).unwrap();
        let b = ball_energy(&x, &y, 0.3, 60);
        assert!(rel(a - b, b) < 1e-2, "obstacle {a} vs {b}");
        let a = energy_integral_exterior(&x, &y, &o).unwrap();
        let b = exterior_energy_grid(&x, &y, 80);
        assert!(rel(a - b, b) < 1e-2, "exterior {a} vs {b}");
    }
}

fn laplacian<F: Fn(&Vec3) -> f64>(f: F, y: &Vec3, h: f64) -> f64 {
    let mut s = -6.0 * f(y);
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        s += f(&(y + e)) + f(&(y - e));
    }
    s / (h * h)
}

fn assert_second_order<F: Fn(&Vec3) -> f64>(name: &str, f: F, y: &Vec3) {
    let a = laplacian(&f, y, 0.04);
    let b = laplacian(&f, y, 0.02);
    assert!((3.0..=5.0).contains(&(a / b)), "{name}: {a} {b}");
}

#[test]
fn obstacle_energy_is_harmonic_in_y() {
    let d = build_sphere_mesh(Vec3::zeros(), 0.3, 3);
    let x = Vec3::new(0.6, 0.0, 0.0);
    assert_second_order("energy", |y| energy_integral_obstacle(&x, y, &d).unwrap(), &Vec3::new(-0.1, 0.6, 0.1));
}

#[test]
fn fields_are_harmonic() {
    let m = canonical();
    let f = m.direct.fields(&Vec3::new(0.6, 0.0, 0.0)).unwrap();
    let y = Vec3::new(-0.1, 0.6, 0.1);
    for (name, u) in [("w", &f.w), ("w1", &f.w1), ("W", &f.big_w)] {
        assert_second_order(name, |p| u.value(p).unwrap(), &y);
    }
}

#[test]
fn reflected_and_auxiliary_are_orthogonal() {
    let m = canonical();
    let x = Vec3::new(0.6, 0.0, 0.0);
    let f = m.direct.fields(&x).unwrap();
    let dg = |p: &probekit::geometry::PanelPoint| p.normal.dot(&grad_g(&(p.pos - x)));
    // ∫ ∇w1·∇w = ∫_{∂Ω} w1 ∂νw − ∫_{∂D} w1 ∂νw, with w1 = G on ∂Ω and
    // ∂νw = −∂νG on ∂D.
    let cross = f.w.integrate_traces(Side::Outer, &[x], |p, _, n| g(&(p.pos - x)) * n)
        + f.w1.integrate_traces(Side::Obstacle, &[x], |p, d, _| d * dg(p));
    let ew = f.w.integrate_traces(Side::Obstacle, &[x], |p, d, _| d * dg(p));
    let ew1 = f.w1.integrate_traces(Side::Outer, &[x], |p, _, n| g(&(p.pos - x)) * n);
    assert!(ew > 0.0 && ew1 > 0.0, "{ew} {ew1}");
    let scale = (ew * ew1).sqrt();
    assert!(cross.abs() <= 1e-2 * scale, "cross {cross} vs {scale}");
}

#[test]
fn dtn_pairing_is_the_auxiliary_energy() {
    let m = canonical();
    // The P1 pairing of the projected trace carries about 1% of
    // discretization error at this level.
    for (x, tol) in [(Vec3::new(0.6, 0.0, 0.0), 1e-2), (Vec3::new(0.0, -0.5, 0.4), 1.5e-2)] {
        let g = m.data.g_trace(&x);
        let pair = m.data.ld.pair(&g, &g).unwrap();
        let w1 = m.direct.solver.auxiliary(&x).unwrap();
        let energy = w1.integrate_traces(Side::Outer, &[x], |_, d, n| d * n);
        assert!(rel(pair - energy, energy) < tol, "{pair} vs {energy}");
    }
}

#[test]
fn refinement_changes_little() {
    let x = Vec3::new(0.6, 0.0, 0.0);
    let w2 = Solver::new(&canonical_domain(2)).unwrap().reflected(&x).unwrap().value(&x).unwrap();
    let w3 = canonical().direct.solver.reflected(&x).unwrap().value(&x).unwrap();
    assert!(rel(w3 - w2, w3) < 3e-2, "{w2} {w3}");
}

#[test]
fn indicators_are_nonnegative() {
    let m = canonical();
    let tau = 1e-8;
    for r in [0.45, 0.6, 0.75] {
        for d in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, -0.6, 0.8), Vec3::new(-0.48, 0.6, 0.64)] {
            let x = d * r;
            let v = m.direct.values(&m.direct.fields(&x).unwrap()).unwrap();
            assert!(v.i >= -tau && v.i1 >= -tau && v.i_star >= -tau, "{x:?}: {v:?}");
        }
    }
}

#[test]
fn profiles_match_near_each_surface() {
    let m = canonical();
    let v = m.direct.values(&m.direct.fields(&Vec3::new(0.335, 0.0, 0.0)).unwrap()).unwrap();
    for (name, r) in [("I*/I", v.i_star / v.i), ("w/I", v.w_xx / v.i), ("W/I", v.big_w_xx / v.i)] {
        assert!((r - 1.0).abs() <= 0.2, "{name} = {r}");
    }
    let v = m.direct.values(&m.direct.fields(&Vec3::new(0.965, 0.0, 0.0)).unwrap()).unwrap();
    assert!((v.big_w_xx / v.i1 - 1.0).abs() <= 0.2, "{v:?}");
}

#[test]
fn invariance_values_match_the_series() {
    // The series solution on both radii, frozen.
    let o1 = ModalSolution::new(1.0, 0.3, Vec3::new(0.6, 0.0, 0.0), 80).unwrap().indicators();
    let o2 = ModalSolution::new(1.5, 0.3, Vec3::new(0.6, 0.0, 0.0), 80).unwrap().indicators();
    assert!((o1.w_xx - 9.98915e-3).abs() < 1e-7 && (o2.w_xx - 1.15177e-2).abs() < 1e-7, "{} {}", o1.w_xx, o2.w_xx);
    let a = Solver::new(&canonical_domain(3)).unwrap();
    let b = Solver::new(&probekit::geometry::concentric_domain(1.5, Some(0.3), 3)).unwrap();
    let x = Vec3::new(0.6, 0.0, 0.0);
    let (w1, w2) = (a.reflected(&x).unwrap().value(&x).unwrap(), b.reflected(&x).unwrap().value(&x).unwrap());
    assert!(rel(w1 - o1.w_xx, o1.w_xx) < 1e-2 && rel(w2 - o2.w_xx, o2.w_xx) < 1e-2, "{w1} {w2}");
}
