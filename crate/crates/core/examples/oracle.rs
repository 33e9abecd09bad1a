//! The series solution for concentric spheres along a radial line.
use probekit::geometry::Vec3;
use probekit::oracle::ModalSolution;

fn main() -> probekit::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "r", "I", "I1", "W", "I*");
    for r in [0.32, 0.35, 0.4, 0.5, 0.65, 0.8, 0.9, 0.95] {
        let m = ModalSolution::new(1.0, 0.3, Vec3::new(r, 0.0, 0.0), 60)?;
        let o = m.indicators();
        println!("{r:6.2} {:12.5e} {:12.5e} {:12.5e} {:12.5e}   tail {:.1e}", o.i, o.i1, o.big_w_xx, o.i_star, m.tail_bound());
    }
    Ok(())
}
