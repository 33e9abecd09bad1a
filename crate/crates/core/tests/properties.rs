//! Randomized properties of the kernels, meshes, series solution, file
//! formats and sequence classification.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Rotation3, Unit};
use proptest::prelude::*;

use probekit::dtn::{DtNMatrix, Tag};
use probekit::geometry::{build_sphere_mesh, canonical_domain, Domain, Needle, Region, Vec3};
use probekit::indicator::{
    csv_from_str, rows_to_csv, RepresentationResiduals, DataModel, DirectValues, LimitCriteria, Residuals, ScanRow, SequenceStatus, SequenceValue,
    Verdict,
};
use probekit::io::{mesh_from_str, mesh_to_string, needle_from_str, needle_to_string};
use probekit::oracle::ModalSolution;
use probekit::potential::{energy_integral_obstacle, g};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter("nonzero", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn canonical2() -> &'static Domain {
    static D: OnceLock<Domain> = OnceLock::new();
    D.get_or_init(|| canonical_domain(2))
}

fn data1() -> &'static DataModel {
    static M: OnceLock<DataModel> = OnceLock::new();
    M.get_or_init(|| {
        let solver = probekit::bvp::Solver::new(&canonical_domain(1)).unwrap();
        DataModel::synthesize(&solver, Default::default(), Default::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_is_symmetric_and_harmonic(x in vec3(), y in vec3()) {
        let d = (x - y).norm();
        prop_assume!(d > 0.05);
        prop_assert_eq!(g(&(x - y)), g(&(y - x)));
        let h = 1e-3 * d;
        let mut lap = -6.0 * g(&(y - x));
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            lap += g(&(y + e - x)) + g(&(y - e - x));
        }
        lap /= h * h;
        prop_assert!(lap.abs() * d * d / g(&(y - x)) < 1e-3, "{}", lap);
    }

    #[test]
    fn sphere_meshes_are_closed_and_sized(c in vec3(), r in 0.1..3.0f64, level in 0usize..=3) {
        let s = build_sphere_mesh(c, r, level);
        let f = 20 * 4usize.pow(level as u32);
        prop_assert_eq!(s.n_vertices(), 10 * 4usize.pow(level as u32) + 2);
        prop_assert_eq!(s.triangles.len(), f);
        // Euler characteristic of a sphere with E = 3F/2.
        prop_assert_eq!(s.n_vertices() + f - 3 * f / 2, 2);
        for v in &s.vertices {
            prop_assert!(((v - c).norm() - r).abs() < 1e-12 * r);
        }
        let exact = 4.0 / 3.0 * PI * r.powi(3);
        prop_assert!((s.enclosed_volume() / exact - 1.0).abs() < 0.05);
        prop_assert!(s.enclosed_volume() > 0.0);
    }

    #[test]
    fn classification_agrees_with_the_spheres(p in vec3().prop_map(|v| v * 1.2)) {
        let r = p.norm();
        prop_assume!((r - 1.0).abs() > 0.05 && (r - 0.3).abs() > 0.03);
        let c = canonical2().classify_point(&p).unwrap();
        let expected = if r > 1.0 { Region::Exterior } else if r < 0.3 { Region::InObstacle } else { Region::InShell };
        prop_assert_eq!(c.region, expected);
    }

    #[test]
    fn series_is_rotation_invariant(dir in direction(), r in 0.4..0.9f64, axis in direction(), angle in 0.0..(2.0 * PI)) {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let x = dir * r;
        let a = ModalSolution::new(1.0, 0.3, x, 40).unwrap().indicators();
        let b = ModalSolution::new(1.0, 0.3, rot * x, 40).unwrap().indicators();
        for (u, v) in [(a.i, b.i), (a.i1, b.i1), (a.big_w_xx, b.big_w_xx), (a.w_xx, b.w_xx), (a.w1_xx, b.w1_xx), (a.i_star, b.i_star), (a.w_star_xx, b.w_star_xx)] {
            prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1e-300), "{} {}", u, v);
        }
    }

    #[test]
    fn series_decomposes(r0 in 0.8..1.5f64, frac in 0.1..0.5f64, t in 0.3..0.7f64, dir in direction()) {
        let r1 = frac * r0;
        let x = dir * (r1 + t * (r0 - r1));
        let o = ModalSolution::new(r0, r1, x, 60).unwrap().indicators();
        prop_assert!((o.big_w_xx - o.i - o.i1).abs() <= 1e-8 * o.big_w_xx.abs());
        prop_assert!((o.big_w_xx - o.w_xx - o.w1_xx).abs() <= 1e-8 * o.big_w_xx.abs());
        prop_assert!(o.i >= 0.0 && o.i1 >= 0.0 && o.i_star >= 0.0);
    }

    #[test]
    fn mesh_text_round_trip(c in vec3(), r in 0.1..2.0f64) {
        let s = build_sphere_mesh(c, r, 1);
        let back = mesh_from_str(&mesh_to_string(&s)).unwrap();
        prop_assert_eq!(&back.vertices, &s.vertices);
        prop_assert_eq!(&back.triangles, &s.triangles);
        prop_assert_eq!(back.fingerprint(), s.fingerprint());
    }

    #[test]
    fn needle_text_round_trip(pts in prop::collection::vec(vec3(), 2..6)) {
        let n = Needle::new(pts);
        let back = needle_from_str(&needle_to_string(&n)).unwrap();
        prop_assert_eq!(back, n);
    }

    #[test]
    fn csv_round_trip(vals in prop::collection::vec(prop::array::uniform10(-1e3..1e3f64), 1..6), verdict in 0usize..4) {
        let rows: Vec<ScanRow> = vals.iter().enumerate().map(|(k, a)| {
            let v = DirectValues { i: a[0], w_xx: a[1], i1: a[2], w1_xx: a[3], big_w_xx: a[4], i_star: a[5], w_star_xx: a[6], flux: a[7], gap_gg: a[8], energy_w: a[9] };
            let app = RepresentationResiduals { w_lhs: 0.0, w_rhs: 0.0, w1_lhs: 0.0, w1_rhs: 0.0, flux: 0.0, res_w: 0.0, res_w1: 0.0 };
            let verdict = [None, Some(Verdict::Converged(a[0])), Some(Verdict::BlowsUp), Some(Verdict::Inconclusive)][verdict];
            ScanRow { x: Vec3::new(k as f64, a[1], -a[2]), values: Some((v, Residuals::from_values(&v, a[8], app))), verdict, error: None }
        }).collect();
        let back = csv_from_str(&rows_to_csv(&rows)).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            prop_assert_eq!(r.x, b.x);
            prop_assert_eq!(r.columns(), b.values);
        }
    }

    #[test]
    fn dtn_file_round_trip(entries in prop::collection::vec(-1e6..1e6f64, 16), binary in any::<bool>()) {
        let lambda = DMatrix::from_row_slice(4, 4, &entries);
        let m = DtNMatrix { lambda: lambda.clone(), mass: lambda.transpose(), tag: Tag::WithObstacle, fingerprint: "0123456789abcdef".into() };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dtn");
        m.write(&p, binary).unwrap();
        prop_assert_eq!(DtNMatrix::read(&p).unwrap(), m);
    }

    #[test]
    fn settled_and_growing_sequences(v in 1e-6..1e3f64, q in 2.0..50.0f64, n in 3usize..7) {
        let c = LimitCriteria::default();
        let flat = SequenceValue { stages: vec![v; n] };
        prop_assert_eq!(flat.status(&c, None), SequenceStatus::Converged(v));
        let grow = SequenceValue { stages: (0..n).map(|k| v * q.powi(k as i32)).collect() };
        prop_assert_eq!(grow.status(&c, Some(v)), SequenceStatus::Grows);
        // Growth that stays below the baseline is not called a blow-up.
        let last = grow.last();
        prop_assert_eq!(grow.status(&c, Some(last)), SequenceStatus::Undecided);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn obstacle_energy_is_symmetric(a in direction(), b in direction(), s in 0.4..0.9f64, t in 0.4..0.9f64) {
        let d = build_sphere_mesh(Vec3::zeros(), 0.3, 1);
        let (x, y) = (a * s, b * t);
        let e1 = energy_integral_obstacle(&x, &y, &d).unwrap();
        let e2 = energy_integral_obstacle(&y, &x, &d).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-10 * e1.abs().max(1e-300));
    }

    #[test]
    fn gap_is_positive_and_symmetric(a in direction(), b in direction(), s in 1.2..2.0f64, t in 1.2..2.0f64) {
        let data = data1();
        let (ta, tb) = (data.g_trace(&(a * s)), data.g_trace(&(b * t)));
        prop_assert!(data.gap(&ta, &ta) > 0.0);
        let (ab, ba) = (data.gap(&ta, &tb), data.gap(&tb, &ta));
        prop_assert!((ab - ba).abs() <= 1e-10 * data.gap(&ta, &ta).max(data.gap(&tb, &tb)));
    }
}
