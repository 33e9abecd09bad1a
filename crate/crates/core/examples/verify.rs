//! The identity suite on the canonical configuration at a coarse level.
use probekit::geometry::{canonical_domain, Vec3};
use probekit::verify::{report, Geometry, Suite};

fn main() -> probekit::Result<()> {
    let level = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let geometry = Geometry::Concentric { center: Vec3::zeros(), r0: 1.0, r1: Some(0.3) };
    let suite = Suite::synthesize(&canonical_domain(level), geometry, 7)?;
    print!("{}", report(&suite.run_all()));
    Ok(())
}
