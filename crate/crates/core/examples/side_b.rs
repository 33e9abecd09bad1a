//! Classifies points from the data alone by trying several needles.
use probekit::geometry::{canonical_domain, Vec3};
use probekit::indicator::{reference_baseline, sideb_classify, DataModel, DirectModel, NeedleStrategy};

fn main() -> probekit::Result<()> {
    let direct = DirectModel::new(&canonical_domain(3))?;
    let data = DataModel::synthesize(&direct.solver, Default::default(), Default::default())?;
    let base = reference_baseline(&data);
    println!("baseline {base:?}");
    for p in [[0.6, 0.0, 0.0], [0.0, 0.0, -0.7], [0.1, 0.0, 0.0], [0.0, 0.0, 0.0]] {
        let x = Vec3::new(p[0], p[1], p[2]);
        let v = sideb_classify(&data, &x, &NeedleStrategy::default(), base);
        println!("{p:?}: {:?}", v.verdict);
        for t in &v.trials {
            println!("  entry {:.2?}: {:?}", t.needle.entry().as_slice(), t.status);
        }
    }
    Ok(())
}
