//! Text formats for meshes and needles, and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Needle, TriSurface, Vec3};

pub(crate) fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse { line, msg: msg.to_string() }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_numbers<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(line, "bad number"))?;
    if v.len() != n {
        return Err(parse_err(line, &format!("expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

pub fn mesh_to_string(s: &TriSurface) -> String {
    let mut out = String::from("PROBEKIT-MESH 1\n");
    let _ = writeln!(out, "{} {}", s.n_vertices(), s.n_triangles());
    for v in &s.vertices {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for t in &s.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

/// Parses a mesh; the analytic shape is not stored in the file.
pub fn mesh_from_str(text: &str) -> Result<TriSurface> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "PROBEKIT-MESH 1")) => {}
        Some((l, _)) => return Err(parse_err(l, "expected header PROBEKIT-MESH 1")),
        None => return Err(parse_err(1, "empty file")),
    }
    let (l, counts) = lines.next().ok_or_else(|| parse_err(2, "missing counts"))?;
    let c: Vec<usize> = parse_numbers(l, counts, 2)?;
    let mut vertices = Vec::with_capacity(c[0]);
    for _ in 0..c[0] {
        let (l, s) = lines.next().ok_or_else(|| parse_err(l, "missing vertex lines"))?;
        let v: Vec<f64> = parse_numbers(l, s, 3)?;
        vertices.push(Vec3::new(v[0], v[1], v[2]));
    }
    let mut triangles = Vec::with_capacity(c[1]);
    for _ in 0..c[1] {
        let (l, s) = lines.next().ok_or_else(|| parse_err(l, "missing triangle lines"))?;
        let t: Vec<usize> = parse_numbers(l, s, 3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    if let Some((l, _)) = lines.next() {
        return Err(parse_err(l, "trailing content"));
    }
    TriSurface::new(vertices, triangles, None)
}

pub fn read_mesh(path: &Path) -> Result<TriSurface> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(path: &Path, s: &TriSurface) -> Result<()> {
    atomic_write(path, mesh_to_string(s).as_bytes())
}

pub fn needle_to_string(n: &Needle) -> String {
    let mut out = String::from("PROBEKIT-NEEDLE 1\n");
    for p in &n.points {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    out
}

pub fn needle_from_str(text: &str) -> Result<Needle> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "PROBEKIT-NEEDLE 1")) => {}
        Some((l, _)) => return Err(parse_err(l, "expected header PROBEKIT-NEEDLE 1")),
        None => return Err(parse_err(1, "empty file")),
    }
    let mut points = Vec::new();
    for (l, s) in lines {
        let v: Vec<f64> = parse_numbers(l, s, 3)?;
        points.push(Vec3::new(v[0], v[1], v[2]));
    }
    if points.len() < 2 {
        return Err(Error::InvalidNeedle("needs at least two points".into()));
    }
    Ok(Needle::new(points))
}

pub fn read_needle(path: &Path) -> Result<Needle> {
    needle_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_sphere_mesh;

    #[test]
    fn mesh_round_trip() {
        let s = build_sphere_mesh(Vec3::new(0.1, 0.0, 0.0), 0.5, 1);
        let back = mesh_from_str(&mesh_to_string(&s)).unwrap();
        assert_eq!(back.vertices, s.vertices);
        assert_eq!(back.triangles, s.triangles);
        assert_eq!(back.fingerprint(), s.fingerprint());
    }

    #[test]
    fn open_mesh_rejected_with_reason() {
        let s = build_sphere_mesh(Vec3::zeros(), 1.0, 0);
        let text = mesh_to_string(&s).replace("\n20\n", "\n19\n");
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = "12 19";
        lines.pop();
        let err = mesh_from_str(&lines.join("\n")).unwrap_err();
        assert!(err.to_string().contains("edge"), "{err}");
    }

    #[test]
    fn bad_header() {
        assert!(matches!(mesh_from_str("MESH\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn needle_round_trip() {
        let n = Needle::straight(Vec3::x(), Vec3::new(0.6, 0.0, 0.0));
        assert_eq!(needle_from_str(&needle_to_string(&n)).unwrap(), n);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
    }
}
