//! Builds the harmonic needle sequence for a point and shows the probe
//! indicator sequence settling, and blowing up for a needle through D.
use probekit::geometry::{canonical_domain, nearest_boundary_needle, Needle, Vec3};
use probekit::indicator::{DataModel, DirectModel};

fn main() -> probekit::Result<()> {
    let direct = DirectModel::new(&canonical_domain(2))?;
    let data = DataModel::synthesize(&direct.solver, Default::default(), Default::default())?;
    let x = Vec3::new(-0.6, 0.0, 0.0);
    let i = direct.values(&direct.fields(&x)?)?.i;
    let clear = data.sequence(&nearest_boundary_needle(data.domain(), &x))?;
    println!("avoiding needle: {:?}", data.probe(&clear)?.stages);
    for n in 0..clear.n_stages() {
        println!("  stage {n}: |G - v_n| on the needle side is {:.3e}", clear.max_on_needle(n));
    }
    let through = data.sequence(&Needle::straight(Vec3::x(), x))?;
    println!("needle through D: {:?}", data.probe(&through)?.stages);
    println!("direct I(x) = {i:.6e}");
    Ok(())
}
