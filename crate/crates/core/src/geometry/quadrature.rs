//! Quadrature rules on the reference triangle {ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}.
//!
//! Weights of every triangle rule sum to 1/2, the reference area.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric 6-point rule, exact for degree 4.
    pub fn dunavant6() -> Self {
        let (a1, b1, w1) = (0.445948490915965, 0.108103018168070, 0.223381589678011);
        let (a2, b2, w2) = (0.091576213509771, 0.816847572980459, 0.109951743655322);
        let points = vec![[a1, a1], [a1, b1], [b1, a1], [a2, a2], [a2, b2], [b2, a2]];
        let weights = vec![w1, w1, w1, w2, w2, w2].into_iter().map(|w| 0.5 * w).collect();
        TriangleRule { points, weights }
    }

    /// Collapsed Gauss product rule with n² points, exact for degree 2n − 2.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (x[i], x[j]);
                points.push([u * (1.0 - v), u * v]);
                weights.push(w[i] * w[j] * u);
            }
        }
        TriangleRule { points, weights }
    }

    /// Duffy rule for an integrand with a 1/r singularity at the vertex
    /// (0, 0). The Jacobian u of the collapse cancels the singularity.
    pub fn duffy(n: usize) -> Self {
        Self::collapsed(n)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Linear basis functions at a reference point.
#[inline]
pub fn hat(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(rule: &TriangleRule, p: i32, q: i32) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x[0].powi(p) * x[1].powi(q)).sum()
    }

    // ∫ ξ^p η^q over the reference triangle = p! q! / (p + q + 2)!
    fn exact(p: i32, q: i32) -> f64 {
        let f = |k: i32| (1..=k).map(|v| v as f64).product::<f64>();
        f(p) * f(q) / f(p + q + 2)
    }

    #[test]
    fn dunavant_is_degree_four() {
        let r = TriangleRule::dunavant6();
        for p in 0..=4 {
            for q in 0..=(4 - p) {
                assert!((monomial(&r, p, q) - exact(p, q)).abs() < 1e-13, "{p} {q}");
            }
        }
    }

    #[test]
    fn collapsed_rule_degree() {
        let r = TriangleRule::collapsed(5);
        for p in 0..=8 {
            for q in 0..=(8 - p) {
                assert!((monomial(&r, p, q) - exact(p, q)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(13)).sum();
        assert!((s - 1.0 / 14.0).abs() < 1e-15);
    }
}
