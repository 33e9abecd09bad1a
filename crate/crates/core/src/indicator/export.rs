use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::data::DataModel;
use super::direct::{DirectModel, DirectValues};
use super::record::Residuals;
use super::sideb::{sideb_classify, NeedleStrategy, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{Region, ScanGrid, Vec3};
use crate::io::{atomic_write, parse_err};

pub const CSV_HEADER: &str = "x,y,z,I,w_xx,I1,w1_xx,W_xx,I_star,res_1_17,res_1_18,res_4_7,verdict";

/// Value columns, in file order.
pub const COLUMNS: [&str; 9] = ["I", "w_xx", "I1", "w1_xx", "W_xx", "I_star", "res_1_17", "res_1_18", "res_4_7"];

/// One scan point. Direct values are absent inside D or when a solve
/// failed; the verdict is absent without data.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub x: Vec3,
    pub values: Option<(DirectValues, Residuals)>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn columns(&self) -> [f64; 9] {
        match &self.values {
            Some((v, r)) => [v.i, v.w_xx, v.i1, v.w1_xx, v.big_w_xx, v.i_star, r.r_natural, r.r_split, r.r_star],
            None => [f64::NAN; 9],
        }
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == name).map(|k| self.columns()[k])
    }

    fn verdict_label(&self) -> &str {
        match (&self.error, &self.verdict) {
            (Some(_), _) => "error",
            (None, Some(v)) => v.label(),
            (None, None) => "none",
        }
    }
}

fn direct_row(direct: &DirectModel, x: &Vec3) -> Result<(DirectValues, Residuals)> {
    let f = direct.fields(x)?;
    let v = direct.values(&f)?;
    let a = direct.representation_residuals(&f, &f)?;
    Ok((v, Residuals::from_values(&v, v.gap_gg, a)))
}

/// Evaluates every admissible grid point in parallel; rows keep grid
/// order. Points flagged near a surface are skipped.
pub fn scan(direct: &DirectModel, data: Option<(&DataModel, &NeedleStrategy, Option<f64>)>, grid: &ScanGrid) -> Vec<ScanRow> {
    grid.points
        .par_iter()
        .filter(|p| !p.near)
        .map(|p| {
            let mut row = ScanRow { x: p.x, values: None, verdict: None, error: None };
            if p.region == Region::InShell {
                match direct_row(direct, &p.x) {
                    Ok(v) => row.values = Some(v),
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            if let Some((dm, strategy, baseline)) = data {
                row.verdict = Some(sideb_classify(dm, &p.x, strategy, baseline).verdict);
            }
            row
        })
        .collect()
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn rows_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cols: Vec<String> = [r.x.x, r.x.y, r.x.z].into_iter().chain(r.columns()).map(num).collect();
        let _ = writeln!(out, "{},{}", cols.join(","), r.verdict_label());
    }
    out
}

pub fn write_csv(path: &Path, rows: &[ScanRow]) -> Result<()> {
    atomic_write(path, rows_to_csv(rows).as_bytes())
}

/// One parsed CSV line: coordinates, the nine value columns, the verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub x: Vec3,
    pub values: [f64; 9],
    pub verdict: String,
}

pub fn csv_from_str(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(parse_err(1, "unexpected CSV header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 13 {
                return Err(parse_err(i + 1, "expected 13 fields"));
            }
            let n: Vec<f64> = f[..12].iter().map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| parse_err(i + 1, "bad number"))?;
            let mut values = [0.0; 9];
            values.copy_from_slice(&n[3..12]);
            Ok(CsvRow { x: Vec3::new(n[0], n[1], n[2]), values, verdict: f[12].to_string() })
        })
        .collect()
}

/// Regular lattice behind a box scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl Lattice {
    /// The lattice of `ScanGrid::from_box`.
    pub fn from_box(lo: Vec3, hi: Vec3, spacing: f64) -> Self {
        let n = ((hi - lo) / spacing).map(|v| v.round() as usize + 1);
        Lattice { origin: lo, spacing, dims: [n.x, n.y, n.z] }
    }

    fn index(&self, x: &Vec3) -> Option<usize> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = (x[k] - self.origin[k]) / self.spacing;
            let r = f.round();
            if (f - r).abs() > 1e-6 || r < 0.0 || r as usize >= self.dims[k] {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2]))
    }
}

/// Legacy VTK structured points with one scalar column; lattice points
/// without a row are written as NaN.
pub fn rows_to_vtk(rows: &[ScanRow], lattice: &Lattice, column: &str) -> Result<String> {
    if !COLUMNS.contains(&column) {
        return Err(Error::Config(format!("unknown column {column}")));
    }
    let [nx, ny, nz] = lattice.dims;
    let mut vals = vec![f64::NAN; nx * ny * nz];
    for r in rows {
        if let Some(i) = lattice.index(&r.x) {
            vals[i] = r.column(column).unwrap_or(f64::NAN);
        }
    }
    let o = lattice.origin;
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nprobekit {column}\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} {nz}\nORIGIN {} {} {}", num(o.x), num(o.y), num(o.z));
    let _ = writeln!(out, "SPACING {0} {0} {0}\nPOINT_DATA {1}\nSCALARS {column} double 1\nLOOKUP_TABLE default", num(lattice.spacing), vals.len());
    for v in vals {
        let _ = writeln!(out, "{}", num(v));
    }
    Ok(out)
}

pub fn write_vtk(path: &Path, rows: &[ScanRow], lattice: &Lattice, column: &str) -> Result<()> {
    atomic_write(path, rows_to_vtk(rows, lattice, column)?.as_bytes())
}
