//! Assembles both DtN maps, writes them and reads them back.
use probekit::bvp::Solver;
use probekit::dtn::{assemble_dtn, DtNMatrix};
use probekit::geometry::canonical_domain;

fn main() -> probekit::Result<()> {
    let solver = Solver::new(&canonical_domain(2))?;
    let l0 = assemble_dtn(&solver.background)?;
    let ld = assemble_dtn(&solver.op)?;
    println!("n = {}, symmetry residual {:.1e}, constants residual {:.1e}", l0.n(), ld.symmetry_residual(), ld.constant_residual());
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("lambdaD.dtn");
    ld.write(&path, true)?;
    let back = DtNMatrix::read(&path)?;
    println!("binary round trip exact: {}", back == ld);
    let gap = &l0.lambda - &ld.lambda;
    println!("|Lambda_0 - Lambda_D| / |Lambda_0| = {:.3e}", gap.norm() / l0.lambda.norm());
    Ok(())
}
