//! Collocation matrices of the single-layer ansatz on ∂Ω ∪ ∂D.
//!
//! Unknowns are nodal values of a piecewise-linear density, outer vertices
//! first. Rows on ∂Ω impose Dirichlet values, rows on ∂D impose the normal
//! derivative from the shell side.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, TriSurface, Vec3};
use crate::potential::{g, grad_g, visit_panel, visit_panel_singular};

/// Condition estimates above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub struct BemOperator {
    pub domain: Domain,
    pub n_outer: usize,
    /// Single-layer values at every node, V[i, j] for density hat j.
    pub v: DMatrix<f64>,
    /// Adjoint double layer (direct value) at every node.
    pub kp: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    /// 1-norm condition estimate of the block system.
    pub condition: f64,
}

impl std::fmt::Debug for BemOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BemOperator").field("n", &self.n()).field("condition", &self.condition).finish()
    }
}

impl BemOperator {
    pub fn new(domain: &Domain) -> Result<Self> {
        let n_outer = domain.outer.n_vertices();
        let n = n_outer + domain.obstacle.as_ref().map_or(0, |d| d.n_vertices());
        let surfaces = surface_list(domain);
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (si, vi) = locate(&surfaces, i);
                let s = surfaces[si].0;
                assemble_row(&surfaces, si, vi, &s.vertices[vi], &s.vertex_normals[vi], n)
            })
            .collect();
        let mut v = DMatrix::zeros(n, n);
        let mut kp = DMatrix::zeros(n, n);
        for (i, (vr, kr)) in rows.into_iter().enumerate() {
            for j in 0..n {
                v[(i, j)] = vr[j];
                kp[(i, j)] = kr[j];
            }
        }
        let a = system_matrix(&v, &kp, n_outer);
        let norm = one_norm(&a);
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let condition = norm * inverse_one_norm(&lu, n);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        Ok(BemOperator { domain: domain.clone(), n_outer, v, kp, lu, condition })
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn n_obstacle(&self) -> usize {
        self.n() - self.n_outer
    }

    /// Density for the stacked right-hand side (outer Dirichlet values,
    /// then obstacle Neumann values).
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        if rhs.len() != self.n() {
            return Err(Error::BasisMismatch { expected: self.n(), got: rhs.len() });
        }
        self.lu.solve(rhs).ok_or(Error::IllConditioned(f64::INFINITY))
    }

    pub fn solve_many(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.lu.solve(rhs).ok_or(Error::IllConditioned(f64::INFINITY))
    }

    /// Dirichlet values of the layer at all nodes.
    pub fn layer_dirichlet(&self, density: &DVector<f64>) -> DVector<f64> {
        &self.v * density
    }

    /// Normal derivative of the layer at all nodes, taken from the shell
    /// side on both surfaces.
    pub fn layer_neumann(&self, density: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.kp * density;
        for i in 0..self.n() {
            out[i] += if i < self.n_outer { 0.5 } else { -0.5 } * density[i];
        }
        out
    }

    /// Normal-derivative operator on ∂Ω rows, ½I + K'.
    pub fn outer_neumann_rows(&self) -> DMatrix<f64> {
        let mut m = self.kp.rows(0, self.n_outer).into_owned();
        for i in 0..self.n_outer {
            m[(i, i)] += 0.5;
        }
        m
    }

    pub fn surfaces(&self) -> Vec<(&TriSurface, usize)> {
        surface_list(&self.domain)
    }
}

fn surface_list(domain: &Domain) -> Vec<(&TriSurface, usize)> {
    let mut out = vec![(&*domain.outer, 0)];
    if let Some(d) = &domain.obstacle {
        out.push((&**d, domain.outer.n_vertices()));
    }
    out
}

fn locate(surfaces: &[(&TriSurface, usize)], i: usize) -> (usize, usize) {
    for (k, (s, off)) in surfaces.iter().enumerate().rev() {
        if i >= *off {
            let _ = s;
            return (k, i - off);
        }
    }
    unreachable!()
}

fn assemble_row(
    surfaces: &[(&TriSurface, usize)],
    si: usize,
    vi: usize,
    x: &Vec3,
    nx: &Vec3,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut vr = vec![0.0; n];
    let mut kr = vec![0.0; n];
    let targets = [*x];
    for (k, (s, off)) in surfaces.iter().enumerate() {
        for (t, tri) in s.triangles.iter().enumerate() {
            let mut f = |p: &crate::geometry::PanelPoint| {
                let r = x - p.pos;
                let gv = g(&r) * p.weight;
                let kv = nx.dot(&grad_g(&r)) * p.weight;
                for c in 0..3 {
                    vr[off + tri[c]] += gv * p.basis[c];
                    kr[off + tri[c]] += kv * p.basis[c];
                }
            };
            match (k == si).then(|| tri.iter().position(|&j| j == vi)).flatten() {
                Some(corner) => visit_panel_singular(s, t, corner, &mut f),
                None => visit_panel(s, t, &targets, &mut f),
            }
        }
    }
    (vr, kr)
}

fn system_matrix(v: &DMatrix<f64>, kp: &DMatrix<f64>, n_outer: usize) -> DMatrix<f64> {
    let n = v.nrows();
    let mut a = v.clone();
    for i in n_outer..n {
        for j in 0..n {
            a[(i, j)] = kp[(i, j)];
        }
        a[(i, i)] -= 0.5;
    }
    a
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager's estimate of ‖A⁻¹‖₁ from the LU factors.
fn inverse_one_norm(lu: &LU<f64, Dyn, Dyn>, n: usize) -> f64 {
    let l = lu.l();
    let u = lu.u();
    let solve_t = |b: &DVector<f64>| -> DVector<f64> {
        let w = u.tr_solve_upper_triangular(b).expect("nonsingular U");
        let mut y = l.tr_solve_lower_triangular(&w).expect("unit L");
        lu.p().inv_permute_rows(&mut y);
        y
    };
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x).expect("invertible");
        let new_est = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = solve_t(&xi);
        let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0), |b, (j, v)| if v.abs() > b.1 { (j, v.abs()) } else { b });
        let done = new_est <= est || zmax <= z.dot(&x);
        est = f64::max(est, new_est);
        if done {
            break;
        }
        x = DVector::zeros(n);
        x[jmax] = 1.0;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::concentric_domain;

    #[test]
    fn hager_matches_exact_inverse_norm() {
        let a = DMatrix::from_fn(8, 8, |i, j| if i == j { 4.0 } else { ((i * 7 + j * 3) % 5) as f64 - 2.0 });
        let lu = a.clone().lu();
        let exact = one_norm(&a.try_inverse().unwrap());
        let est = inverse_one_norm(&lu, 8);
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact, "{est} {exact}");
    }

    #[test]
    fn adjoint_double_layer_of_constant() {
        let op = BemOperator::new(&concentric_domain(1.0, None, 2)).unwrap();
        let ones = DVector::from_element(op.n(), 1.0);
        let k1 = &op.kp * &ones;
        for v in k1.iter() {
            assert!((v + 0.5).abs() < 2e-3, "{v}");
        }
        // Single layer of a unit density on the unit sphere is 1 on the surface.
        let v1 = &op.v * &ones;
        for v in v1.iter() {
            assert!((v - 1.0).abs() < 2e-3, "{v}");
        }
        assert!(op.condition > 1.0 && op.condition < MAX_CONDITION);
    }
}
