//! Solves the reflected, auxiliary and third problems at one point and
//! compares the self-values with the series solution.
use probekit::bvp::Solver;
use probekit::geometry::{canonical_domain, Vec3};
use probekit::oracle::ModalSolution;

fn main() -> probekit::Result<()> {
    let solver = Solver::new(&canonical_domain(3))?;
    let x = Vec3::new(0.6, 0.0, 0.0);
    let o = ModalSolution::new(1.0, 0.3, x, 60)?.indicators();
    let w = solver.reflected(&x)?.value(&x)?;
    let w1 = solver.auxiliary(&x)?.value(&x)?;
    let big_w = solver.third(&x)?.value(&x)?;
    for (name, a, b) in [("w_x(x)", w, o.w_xx), ("w1_x(x)", w1, o.w1_xx), ("W_x(x)", big_w, o.big_w_xx)] {
        println!("{name:8} {a:.6e}  series {b:.6e}  rel {:.1e}", (a - b).abs() / b);
    }
    println!("net flux of w_x through both surfaces: {:.2e}", solver.reflected(&x)?.net_flux());
    Ok(())
}
