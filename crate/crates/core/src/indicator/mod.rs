//! Indicator functions of the probe, singular sources and integrated
//! methods. Each quantity is computed directly from boundary value
//! problems with D known, and from the DtN pair with needle sequences, so
//! the two can be checked against each other.

mod data;
mod direct;
mod export;
mod invariance;
mod lifted;
mod record;
mod sideb;

pub use data::{DataModel, DataValues, LimitCriteria, SequenceStatus, SequenceValue, StarSequences};
pub use direct::{rel, RepresentationResiduals, DirectFields, DirectModel, DirectValues};
pub use export::{csv_from_str, rows_to_csv, rows_to_vtk, scan, write_csv, write_vtk, CsvRow, Lattice, ScanRow, COLUMNS, CSV_HEADER};
pub use invariance::{check_nesting, invariance_check, InvarianceReport, InvarianceRow};
pub use lifted::{lifted_from_fields, lifted_indicators, lifted_laplacian, LiftedData, LiftedSample};
pub use record::{star_indicator, third_indicator, DataComparison, IndicatorRecord, Residuals, StarReport};
pub use sideb::{reference_baseline, reference_points, sideb_classify, NeedleStrategy, NeedleTrial, SideBVerdict, Verdict};

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use super::*;
    use crate::geometry::{canonical_domain, concentric_domain, nearest_boundary_needle, Needle, ScanGrid, Vec3};
    use crate::oracle::ModalSolution;
    use crate::runge::NeedleSequenceConfig;

    struct Models {
        direct: DirectModel,
        data: DataModel,
    }

    fn canonical() -> &'static Models {
        static M: OnceLock<Models> = OnceLock::new();
        M.get_or_init(|| {
            let direct = DirectModel::new(&canonical_domain(2)).unwrap();
            let data = DataModel::synthesize(&direct.solver, NeedleSequenceConfig::default(), LimitCriteria::default()).unwrap();
            Models { direct, data }
        })
    }

    fn empty() -> &'static Models {
        static M: OnceLock<Models> = OnceLock::new();
        M.get_or_init(|| {
            let direct = DirectModel::new(&concentric_domain(1.0, None, 2)).unwrap();
            let data = DataModel::synthesize(&direct.solver, NeedleSequenceConfig::default(), LimitCriteria::default()).unwrap();
            Models { direct, data }
        })
    }

    #[test]
    fn direct_values_match_oracle() {
        let m = canonical();
        let x = Vec3::new(0.6, 0.0, 0.0);
        let v = m.direct.values(&m.direct.fields(&x).unwrap()).unwrap();
        let o = ModalSolution::new(1.0, 0.3, x, 60).unwrap().indicators();
        for (name, a, b) in [
            ("I", v.i, o.i),
            ("w", v.w_xx, o.w_xx),
            ("I1", v.i1, o.i1),
            ("w1", v.w1_xx, o.w1_xx),
            ("W", v.big_w_xx, o.big_w_xx),
            ("I*", v.i_star, o.i_star),
            ("w*", v.w_star_xx, o.w_star_xx),
        ] {
            assert!(rel(a - b, b) < 1e-2, "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn record_identities_and_data_side() {
        let m = canonical();
        let rec = third_indicator(&m.direct, Some(&m.data), &Vec3::new(0.6, 0.0, 0.0), None).unwrap();
        let r = rec.residuals;
        for (name, v) in [("natural", r.r_natural), ("split", r.r_split), ("cross", r.r_cross), ("flux", r.r_flux), ("energy", r.r_energy)] {
            assert!(v < 5e-3, "{name}: {v}");
        }
        assert!(r.r_star < 2e-2 && r.r_star_sum < 3e-2 && r.r_wstar_sum < 3e-2, "{r:?}");
        assert_eq!(rec.contact, Some(crate::geometry::Contact::Avoids));
        let c = rec.comparison.unwrap();
        assert!(c.res_i.unwrap() < 5e-2, "{c:?}");
        assert!(c.res_w_xx.unwrap() < 5e-2, "{c:?}");
        assert!(c.res_w1_xx.unwrap() < 5e-2 && c.res_i1 < 5e-2, "{c:?}");
        assert!(c.res_star.unwrap() < 3e-2, "{c:?}");
    }

    #[test]
    fn empty_obstacle_is_degenerate() {
        let m = empty();
        let x = Vec3::new(0.3, -0.2, 0.1);
        let rec = third_indicator(&m.direct, Some(&m.data), &x, None).unwrap();
        let v = rec.direct;
        assert_eq!((v.i, v.i_star), (0.0, 0.0));
        assert!(v.w_xx.abs() < 1e-14 && v.w_star_xx.abs() < 1e-14);
        assert!(rel(v.big_w_xx - v.w1_xx, v.big_w_xx) < 1e-12);
        assert!(rel(v.big_w_xx - v.i1, v.big_w_xx) < 1e-3);
        let d = rec.data.unwrap();
        assert!(d.probe.stages.iter().chain(&d.sss.stages).chain(&d.star.carleman.stages).all(|s| *s == 0.0));
        assert_eq!(d.gap_gg, 0.0);
        let o = Vec3::zeros();
        assert!(rel(m.data.i1(&o).unwrap() - 1.0 / (4.0 * std::f64::consts::PI), 1.0 / (4.0 * std::f64::consts::PI)) < 1e-2);
    }

    #[test]
    fn sequence_status() {
        let c = LimitCriteria::default();
        let s = |v: &[f64]| SequenceValue { stages: v.to_vec() };
        assert_eq!(s(&[1.0, 1.5, 1.004, 1.0]).status(&c, None), SequenceStatus::Converged(1.0));
        assert_eq!(s(&[1.0, 10.0, 100.0]).status(&c, Some(1.0)), SequenceStatus::Grows);
        assert_eq!(s(&[1.0, 10.0, 100.0]).status(&c, Some(20.0)), SequenceStatus::Undecided);
        assert_eq!(s(&[1.0, 1.2, 1.4]).status(&c, None), SequenceStatus::Undecided);
        assert_eq!(s(&[0.0, 0.0]).status(&c, None), SequenceStatus::Converged(0.0));
        assert!(matches!(s(&[1.0, 2.0]).value(&c), Err(crate::Error::NotConverged(_))));
        assert!(LimitCriteria { plateau: 0.0, ..c }.validate().is_err());
    }

    #[test]
    fn lifted_symmetry_and_diagonal() {
        let m = canonical();
        let (x, y) = (Vec3::new(0.6, 0.0, 0.0), Vec3::new(0.0, 0.55, 0.2));
        let s = lifted_indicators(&m.direct, None, &x, &y).unwrap();
        assert!(s.sym_i < 1e-2 && s.sym_i1 < 1e-2, "{s:?}");
        for v in [s.res_w_gap, s.res_w1_gap, s.res_big_w_gap, s.res_sym, s.res_cross_xy, s.res_cross_yx] {
            assert!(v < 1e-2, "{s:?}");
        }
        let fx = m.direct.fields(&x).unwrap();
        let v = m.direct.values(&fx).unwrap();
        assert!(rel(m.direct.lifted_i(&fx, &x, true).unwrap() - v.i, v.i) < 1e-12);
        assert!(rel(m.direct.lifted_i1(&fx, &x, true).unwrap() - v.i1, v.i1) < 1e-12);
    }

    #[test]
    fn lifted_indicators_are_harmonic_in_y() {
        let m = canonical();
        let fx = m.direct.fields(&Vec3::new(0.6, 0.0, 0.0)).unwrap();
        let y = Vec3::new(-0.1, 0.6, 0.1);
        let (a1, b1) = lifted_laplacian(&m.direct, &fx, &y, 0.04).unwrap();
        let (a2, b2) = lifted_laplacian(&m.direct, &fx, &y, 0.02).unwrap();
        assert!((3.0..=5.0).contains(&(a1 / a2)), "{a1} {a2}");
        assert!((3.0..=5.0).contains(&(b1 / b2)), "{b1} {b2}");
    }

    #[test]
    fn side_b_dichotomy() {
        let m = canonical();
        let base = reference_baseline(&m.data);
        let out = sideb_classify(&m.data, &Vec3::new(0.6, 0.0, 0.0), &NeedleStrategy::default(), base);
        assert!(matches!(out.verdict, Verdict::Converged(_)), "{:?}", out.verdict);
        assert_eq!(out.trials.len(), 6);
        let inside = sideb_classify(&m.data, &Vec3::zeros(), &NeedleStrategy::AxisSet, base);
        assert_eq!(inside.verdict, Verdict::BlowsUp);
        let none = sideb_classify(&m.data, &Vec3::zeros(), &NeedleStrategy::Polylines(vec![]), base);
        assert_eq!(none.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn nesting_is_checked() {
        let a = DirectModel::new(&canonical_domain(1)).unwrap();
        let b = DirectModel::new(&concentric_domain(1.5, Some(0.3), 1)).unwrap();
        let x = [Vec3::new(0.6, 0.0, 0.0)];
        let rep = invariance_check(&a, &b, &x).unwrap();
        assert!(rep.max_difference > 0.0);
        assert!(matches!(invariance_check(&b, &a, &x), Err(crate::Error::NestingViolation(_))));
        let same = invariance_check(&a, &a, &x).unwrap();
        assert_eq!(same.max_difference, 0.0);
    }

    #[test]
    fn csv_and_vtk_round_trip() {
        let m = canonical();
        let (lo, hi) = (Vec3::new(-0.8, -0.8, 0.0), Vec3::new(0.8, 0.8, 0.0));
        let grid = ScanGrid::from_box(m.direct.domain(), lo, hi, 0.4);
        let rows = scan(&m.direct, None, &grid);
        let text = rows_to_csv(&rows);
        let back = csv_from_str(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (r, b) in rows.iter().zip(&back) {
            assert_eq!(r.x, b.x);
            for (u, v) in r.columns().iter().zip(&b.values) {
                assert!(u == v || (u.is_nan() && v.is_nan()));
            }
        }
        assert!(back.iter().any(|r| r.values[0].is_nan()), "the center lies in D");
        let lat = Lattice::from_box(lo, hi, 0.4);
        let vtk = rows_to_vtk(&rows, &lat, "I").unwrap();
        assert!(vtk.contains("DIMENSIONS 5 5 1") && vtk.contains("POINT_DATA 25"));
        assert!(rows_to_vtk(&rows, &lat, "nope").is_err());
    }

    #[test]
    fn needle_through_obstacle_grows() {
        let m = canonical();
        let x = Vec3::new(-0.6, 0.0, 0.0);
        let through = Needle::straight(Vec3::x(), x);
        let seq = m.data.sequence(&through).unwrap();
        let s = m.data.probe(&seq).unwrap();
        assert!(s.stages.windows(2).all(|w| w[1] > w[0]), "{s:?}");
        let direct = m.direct.values(&m.direct.fields(&x).unwrap()).unwrap();
        assert!(s.last() > 10.0 * direct.i);
        let avoiding = m.data.sequence(&nearest_boundary_needle(m.direct.domain(), &x)).unwrap();
        assert!(m.data.probe(&avoiding).unwrap().limit(&m.data.criteria).is_some());
    }
}
