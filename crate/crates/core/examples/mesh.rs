//! Builds the canonical surfaces and prints their invariants.
use probekit::geometry::{build_ellipsoid_mesh, canonical_domain, Vec3};
use probekit::io::{mesh_from_str, mesh_to_string};

fn main() -> probekit::Result<()> {
    let d = canonical_domain(3);
    let obstacle = d.obstacle.as_ref().expect("canonical domain has an obstacle");
    for (name, s) in [("outer", &d.outer), ("obstacle", obstacle)] {
        println!(
            "{name}: {} vertices, area {:.5} (curved {:.5}), volume {:.5}, fingerprint {}",
            s.n_vertices(),
            s.area(),
            s.curved_area(),
            s.enclosed_volume(),
            s.fingerprint()
        );
    }
    let e = build_ellipsoid_mesh(Vec3::zeros(), Vec3::new(0.4, 0.3, 0.2), 2);
    let back = mesh_from_str(&mesh_to_string(&e))?;
    println!("ellipsoid round trip keeps the fingerprint: {}", back.fingerprint() == e.fingerprint());
    let c = d.classify_point(&Vec3::new(0.6, 0.0, 0.0))?;
    println!("(0.6,0,0): {:?}, {:.3} from the outer surface, {:.3} from the obstacle", c.region, c.dist_outer, c.dist_obstacle);
    Ok(())
}
