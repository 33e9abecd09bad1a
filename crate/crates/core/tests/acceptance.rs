//! Acceptance run on the canonical configuration: Ω = B(0,1), D = B(0,0.3),
//! mesh level 3. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::time::Instant;

use probekit::geometry::{canonical_domain, Vec3};
use probekit::verify::{Geometry, Status, Suite};

fn main() {
    let start = Instant::now();
    let geometry = Geometry::Concentric { center: Vec3::zeros(), r0: 1.0, r1: Some(0.3) };
    let suite = match Suite::synthesize(&canonical_domain(3), geometry, 20240607) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("acceptance setup failed: {e}");
            std::process::exit(2);
        }
    };
    let mut failed = 0;
    for id in 1..=13 {
        let r = suite.run(id);
        if r.status != Status::Pass {
            failed += 1;
        }
        println!("{}", r.line());
    }
    println!("acceptance: {} of 13 criteria passed in {:.1?}", 13 - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
