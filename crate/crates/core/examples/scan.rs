//! Scans a plane through the shell and writes CSV and VTK to a temporary
//! directory. The largest I values sit next to the obstacle.
use probekit::geometry::{canonical_domain, ScanGrid, Vec3};
use probekit::indicator::{scan, write_csv, write_vtk, DirectModel, Lattice};

fn main() -> probekit::Result<()> {
    let direct = DirectModel::new(&canonical_domain(3))?;
    let (lo, hi) = (Vec3::new(-0.8, -0.8, 0.0), Vec3::new(0.8, 0.8, 0.0));
    let grid = ScanGrid::from_box(direct.domain(), lo, hi, 0.1);
    let rows = scan(&direct, None, &grid);
    let dir = tempfile::tempdir()?;
    write_csv(&dir.path().join("scan.csv"), &rows)?;
    write_vtk(&dir.path().join("scan.vtk"), &rows, &Lattice::from_box(lo, hi, 0.1), "I")?;
    let mut by_i: Vec<_> = rows.iter().filter_map(|r| Some((r.column("I")?, r.x))).filter(|(v, _)| v.is_finite()).collect();
    by_i.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (v, x) in by_i.iter().take(5) {
        println!("I = {v:.4e} at |x| = {:.3}", x.norm());
    }
    Ok(())
}
