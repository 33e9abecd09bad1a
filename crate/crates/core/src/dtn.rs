//! Discrete Dirichlet-to-Neumann maps on the outer surface and the
//! M-weighted pairing used by every data-side formula.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::bvp::BemOperator;
use crate::error::{Error, Result};
use crate::geometry::{TriSurface, Vec3};
use crate::io::{atomic_write, parse_err};
use crate::potential::visit_panel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    WithObstacle,
    Background,
}

impl Tag {
    fn name(self) -> &'static str {
        match self {
            Tag::WithObstacle => "with-obstacle",
            Tag::Background => "background",
        }
    }
}

/// Λ on the nodal piecewise-linear basis of ∂Ω: nodal Dirichlet values to
/// nodal Neumann values. The pairing is ⟨h, f⟩ = hᵀ M f.
#[derive(Clone, Debug, PartialEq)]
pub struct DtNMatrix {
    pub lambda: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub tag: Tag,
    pub fingerprint: String,
}

/// Consistent P1 mass matrix on the curved panels.
pub fn mass_matrix(s: &TriSurface) -> DMatrix<f64> {
    let n = s.n_vertices();
    let mut m = DMatrix::zeros(n, n);
    for (t, tri) in s.triangles.iter().enumerate() {
        for p in s.panel(t) {
            for a in 0..3 {
                for b in 0..3 {
                    m[(tri[a], tri[b])] += p.weight * p.basis[a] * p.basis[b];
                }
            }
        }
    }
    m
}

/// Collocation DtN matrix exactly as the block system produces it.
pub fn assemble_dtn_raw(op: &BemOperator) -> Result<DMatrix<f64>> {
    let n = op.n_outer;
    let mut rhs = DMatrix::zeros(op.n(), n);
    for i in 0..n {
        rhs[(i, i)] = 1.0;
    }
    let density = op.solve_many(&rhs)?;
    Ok(op.outer_neumann_rows() * density)
}

/// Assembles Λ column by column from the factorized block system.
///
/// Collocation reproduces three exact properties of the continuous map
/// (Λ1 = 0, zero net flux, M-self-adjointness) only up to discretization
/// error, so the raw matrix is projected onto operators that have them.
pub fn assemble_dtn(op: &BemOperator) -> Result<DtNMatrix> {
    let raw = assemble_dtn_raw(op)?;
    let mass = mass_matrix(&op.domain.outer);
    let tag = if op.domain.has_obstacle() { Tag::WithObstacle } else { Tag::Background };
    Ok(DtNMatrix { lambda: regularize(raw, &mass), mass, tag, fingerprint: op.domain.outer.fingerprint() })
}

/// ‖ΛᵀM − MΛ‖ / ‖MΛ‖ of a raw matrix.
pub fn asymmetry(lambda: &DMatrix<f64>, mass: &DMatrix<f64>) -> f64 {
    let ml = mass * lambda;
    (ml.transpose() - &ml).norm() / ml.norm()
}

fn regularize(raw: DMatrix<f64>, mass: &DMatrix<f64>) -> DMatrix<f64> {
    let p = constant_projector(mass);
    let l = &p * raw * &p;
    // M-symmetric part ½(Λ + M⁻¹ΛᵀM); it keeps P on both sides.
    let chol = mass.clone().cholesky().expect("mass matrix is positive definite");
    let adj = chol.solve(&(l.transpose() * mass));
    (l + adj) * 0.5
}

/// P = I − 1 mᵀ/(mᵀ1) with m = M1: kills constants and has mᵀP = 0.
fn constant_projector(mass: &DMatrix<f64>) -> DMatrix<f64> {
    let n = mass.nrows();
    let m = mass * DVector::from_element(n, 1.0);
    let total = m.sum();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - m[j] / total)
}

impl DtNMatrix {
    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    /// ⟨Λ f, h⟩.
    pub fn pair(&self, f: &DVector<f64>, h: &DVector<f64>) -> Result<f64> {
        self.check(f)?;
        self.check(h)?;
        Ok((&self.lambda * f).dot(&(&self.mass * h)))
    }

    fn check(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::BasisMismatch { expected: self.n(), got: v.len() });
        }
        Ok(())
    }

    /// ‖ΛᵀM − MΛ‖ / ‖MΛ‖ in the Frobenius norm.
    pub fn symmetry_residual(&self) -> f64 {
        asymmetry(&self.lambda, &self.mass)
    }

    /// ‖Λ1‖ / ‖Λ‖.
    pub fn constant_residual(&self) -> f64 {
        (&self.lambda * DVector::from_element(self.n(), 1.0)).norm() / self.lambda.norm()
    }

    pub fn check_compatible(&self, other: &DtNMatrix) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::FingerprintMismatch { expected: self.fingerprint.clone(), found: other.fingerprint.clone() });
        }
        if self.n() != other.n() {
            return Err(Error::BasisMismatch { expected: self.n(), got: other.n() });
        }
        Ok(())
    }

    pub fn write(&self, path: &Path, binary: bool) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "PROBEKIT-DTN 1")?;
        writeln!(out, "fingerprint {}", self.fingerprint)?;
        writeln!(out, "tag {}", self.tag.name())?;
        writeln!(out, "n {}", self.n())?;
        writeln!(out, "encoding {}", if binary { "binary" } else { "text" })?;
        for m in [&self.lambda, &self.mass] {
            for i in 0..m.nrows() {
                if binary {
                    for j in 0..m.ncols() {
                        out.extend_from_slice(&m[(i, j)].to_le_bytes());
                    }
                } else {
                    let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
                    writeln!(out, "{}", row.join(" "))?;
                }
            }
        }
        atomic_write(path, &out)
    }

    pub fn read(path: &Path) -> Result<DtNMatrix> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut line_no = 0;
        let mut next = |r: &mut std::io::BufReader<std::fs::File>| -> Result<(usize, String)> {
            let mut s = String::new();
            line_no += 1;
            if r.read_line(&mut s)? == 0 {
                return Err(parse_err(line_no, "unexpected end of file"));
            }
            Ok((line_no, s.trim_end().to_string()))
        };
        let (l, h) = next(&mut r)?;
        if h != "PROBEKIT-DTN 1" {
            return Err(parse_err(l, "expected header PROBEKIT-DTN 1"));
        }
        let mut field = |r: &mut std::io::BufReader<std::fs::File>, key: &str| -> Result<(usize, String)> {
            let (l, s) = next(r)?;
            match s.split_once(' ') {
                Some((k, v)) if k == key => Ok((l, v.to_string())),
                _ => Err(parse_err(l, &format!("expected `{key} <value>`"))),
            }
        };
        let (_, fingerprint) = field(&mut r, "fingerprint")?;
        let (l, tag) = field(&mut r, "tag")?;
        let tag = match tag.as_str() {
            "with-obstacle" => Tag::WithObstacle,
            "background" => Tag::Background,
            _ => return Err(parse_err(l, "unknown tag")),
        };
        let (l, n) = field(&mut r, "n")?;
        let n: usize = n.parse().map_err(|_| parse_err(l, "bad dimension"))?;
        let (l, enc) = field(&mut r, "encoding")?;
        let mut mats = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        match enc.as_str() {
            "binary" => {
                let mut buf = [0u8; 8];
                for m in mats.iter_mut() {
                    for i in 0..n {
                        for j in 0..n {
                            r.read_exact(&mut buf).map_err(|_| parse_err(l + 1, "truncated binary data"))?;
                            m[(i, j)] = f64::from_le_bytes(buf);
                        }
                    }
                }
            }
            "text" => {
                let mut line = l;
                for m in mats.iter_mut() {
                    for i in 0..n {
                        let mut s = String::new();
                        line += 1;
                        if r.read_line(&mut s)? == 0 {
                            return Err(parse_err(line, "unexpected end of file"));
                        }
                        let vals: Vec<f64> = s
                            .split_whitespace()
                            .map(|t| t.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| parse_err(line, "bad number"))?;
                        if vals.len() != n {
                            return Err(parse_err(line, &format!("expected {n} values, found {}", vals.len())));
                        }
                        for (j, v) in vals.into_iter().enumerate() {
                            m[(i, j)] = v;
                        }
                    }
                }
            }
            _ => return Err(parse_err(l, "encoding must be text or binary")),
        }
        let [lambda, mass] = mats;
        Ok(DtNMatrix { lambda, mass, tag, fingerprint })
    }

    /// Transfers a map assembled on a finer mesh of the same surface to the
    /// nodal basis of `coarse`, so that ⟨Λ_c f, g⟩ on the coarse mesh equals
    /// the fine pairing of the interpolated functions: Λ_c = M_c⁻¹TᵀM_fΛ_fT.
    pub fn project_to(&self, fine: &TriSurface, coarse: &TriSurface) -> DtNMatrix {
        let t = interpolation_matrix(coarse, &fine.vertices);
        let mass = mass_matrix(coarse);
        let rhs = t.transpose() * &self.mass * &self.lambda * &t;
        let raw = mass.clone().cholesky().expect("mass matrix is positive definite").solve(&rhs);
        DtNMatrix { lambda: regularize(raw, &mass), mass, tag: self.tag, fingerprint: coarse.fingerprint() }
    }
}

/// ⟨(Λ₀ − Λ_D) g, h⟩.
pub fn gap_pair(l0: &DtNMatrix, ld: &DtNMatrix, g: &DVector<f64>, h: &DVector<f64>) -> Result<f64> {
    l0.check_compatible(ld)?;
    l0.check(g)?;
    l0.check(h)?;
    let diff = &l0.lambda - &ld.lambda;
    Ok((diff * g).dot(&(&l0.mass * h)))
}

/// Gap applied to nodal Dirichlet values: (Λ₀ − Λ_D) g.
pub fn gap_apply(l0: &DtNMatrix, ld: &DtNMatrix, g: &DVector<f64>) -> Result<DVector<f64>> {
    l0.check_compatible(ld)?;
    l0.check(g)?;
    Ok(&l0.lambda * g - &ld.lambda * g)
}

/// Load vector b_i = ∫ φ_i f dS, refined toward the targets, so that the
/// pairing of a nodal Neumann vector h with f is hᵀ b.
pub fn load_vector<F: Fn(&Vec3, &Vec3) -> f64>(s: &TriSurface, targets: &[Vec3], f: F) -> DVector<f64> {
    let mut b = DVector::zeros(s.n_vertices());
    for (t, tri) in s.triangles.iter().enumerate() {
        visit_panel(s, t, targets, &mut |p| {
            let v = f(&p.pos, &p.normal) * p.weight;
            for c in 0..3 {
                b[tri[c]] += v * p.basis[c];
            }
        });
    }
    b
}

/// L² projection of boundary functions onto the piecewise-linear space of
/// one surface. Traces of rapidly varying functions are far better
/// represented this way than by nodal sampling.
#[derive(Clone)]
pub struct TraceProjector {
    pub surface: Arc<TriSurface>,
    chol: Cholesky<f64, Dyn>,
}

impl TraceProjector {
    pub fn new(surface: Arc<TriSurface>) -> Result<Self> {
        let chol = mass_matrix(&surface).cholesky().ok_or_else(|| Error::InvalidMesh("mass matrix is not positive definite".into()))?;
        Ok(TraceProjector { surface, chol })
    }

    pub fn project<F: Fn(&Vec3, &Vec3) -> f64>(&self, targets: &[Vec3], f: F) -> DVector<f64> {
        self.chol.solve(&load_vector(&self.surface, targets, f))
    }
}

impl std::fmt::Debug for TraceProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceProjector").field("n", &self.surface.n_vertices()).finish()
    }
}

/// Nodal values of a function on the surface.
pub fn nodal<F: Fn(&Vec3) -> f64>(s: &TriSurface, f: F) -> DVector<f64> {
    DVector::from_iterator(s.n_vertices(), s.vertices.iter().map(f))
}

/// Rows interpolate the piecewise-linear field of `from` at `points`,
/// using the closest triangle and barycentric coordinates of the projection
/// onto its plane.
pub fn interpolation_matrix(from: &TriSurface, points: &[Vec3]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(points.len(), from.n_vertices());
    for (i, p) in points.iter().enumerate() {
        let (t, _) = from
            .triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| (t, crate::geometry::mesh::point_triangle_distance(p, &from.vertices[tri[0]], &from.vertices[tri[1]], &from.vertices[tri[2]])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("surface has triangles");
        let tri = from.triangles[t];
        let (a, b, c) = (from.vertices[tri[0]], from.vertices[tri[1]], from.vertices[tri[2]]);
        let n = (b - a).cross(&(c - a));
        let area2 = n.norm_squared();
        let l1 = (c - b).cross(&(p - b)).dot(&n) / area2;
        let l2 = (a - c).cross(&(p - c)).dot(&n) / area2;
        let mut bary = [l1, l2, 1.0 - l1 - l2];
        for v in bary.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let sum: f64 = bary.iter().sum();
        for k in 0..3 {
            m[(i, tri[k])] += bary[k] / sum;
        }
    }
    m
}
