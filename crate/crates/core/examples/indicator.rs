//! One full indicator record: direct values, identity residuals and the
//! same quantities recovered from the DtN data.
use probekit::geometry::{canonical_domain, Vec3};
use probekit::indicator::{third_indicator, DataModel, DirectModel};

fn main() -> probekit::Result<()> {
    let direct = DirectModel::new(&canonical_domain(2))?;
    let data = DataModel::synthesize(&direct.solver, Default::default(), Default::default())?;
    let rec = third_indicator(&direct, Some(&data), &Vec3::new(0.6, 0.0, 0.0), None)?;
    let v = rec.direct;
    println!("I {:.5e}  I1 {:.5e}  W {:.5e}  w {:.5e}  w1 {:.5e}  I* {:.5e}", v.i, v.i1, v.big_w_xx, v.w_xx, v.w1_xx, v.i_star);
    println!("residuals {:#?}", rec.residuals);
    println!("from data {:#?}", rec.comparison);
    Ok(())
}
