//! Gauss–Jacobi quadrature for the symmetric weight `(1 - r²)^(β-1)` on `[-1, 1]`.
//!
//! Nodes come from the Golub–Welsch eigenproblem and are then polished by
//! Newton steps on the orthonormal recurrence. Weights are recomputed as
//! `1 / Σ p̂_k(x)²`, which keeps them relatively accurate near the endpoints
//! where the eigenvector route loses digits.

use nalgebra::{DMatrix, SymmetricEigen};

/// Quadrature rule whose weights sum to one, so `Σ wᵢ g(xᵢ)` approximates
/// the expectation of `g` under the normalized symmetric Beta law.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn symmetric_beta(beta: f64, n: usize) -> Self {
        assert!(beta > 0.0 && n >= 2);
        let a = beta - 1.0;
        // sqrt of the monic recurrence coefficients b_1..b_{n-1}
        let offdiag: Vec<f64> = (1..n).map(|k| recurrence_coef(k, a).sqrt()).collect();

        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for (i, &b) in offdiag.iter().enumerate() {
            jacobi[(i, i + 1)] = b;
            jacobi[(i + 1, i)] = b;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|x, y| x.total_cmp(y));

        let b_n = recurrence_coef(n, a).sqrt();
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, dp, _) = orthonormal(*x, &offdiag, b_n);
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                *x = (*x - step).clamp(-1.0, 1.0);
                if step.abs() < 1e-17 {
                    break;
                }
            }
            let (_, _, norm_sq) = orthonormal(*x, &offdiag, b_n);
            weights.push(1.0 / norm_sq);
        }

        // exact symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Monic three-term recurrence coefficient for Jacobi(a, a) polynomials.
fn recurrence_coef(k: usize, a: f64) -> f64 {
    let k = k as f64;
    if k == 1.0 {
        1.0 / (2.0 * a + 3.0)
    } else {
        k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0))
    }
}

/// Returns `(p̂_n(x), p̂_n'(x), Σ_{k<n} p̂_k(x)²)` for the orthonormal family.
fn orthonormal(x: f64, offdiag: &[f64], b_n: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut norm_sq = 1.0;
    let n = offdiag.len() + 1;
    for k in 0..n {
        let b_next = if k + 1 < n { offdiag[k] } else { b_n };
        let b_cur = if k == 0 { 0.0 } else { offdiag[k - 1] };
        let p_next = (x * p - b_cur * p_prev) / b_next;
        let d_next = (p + x * d - b_cur * d_prev) / b_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        if k + 1 < n {
            norm_sq += p * p;
        }
    }
    (p, d, norm_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = GaussJacobi::symmetric_beta(1.0, 12);
        // uniform law on [-1,1]: E[r^(2k)] = 1/(2k+1)
        for k in 0..12 {
            let m: f64 = rule.iter().map(|(x, w)| w * x.powi(2 * k)).sum();
            assert!((m - 1.0 / (2 * k + 1) as f64).abs() < 1e-14, "k={k} m={m}");
        }
    }

    #[test]
    fn singular_weight_moments() {
        // β = 0.3: E[r²] = (1/2) / (β + 1/2)
        let beta = 0.3;
        let rule = GaussJacobi::symmetric_beta(beta, 40);
        let m2: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        assert!((m2 - 0.5 / (beta + 0.5)).abs() < 1e-14);
        let m4: f64 = rule.iter().map(|(x, w)| w * x.powi(4)).sum();
        let expected = 0.5 / (beta + 0.5) * 1.5 / (beta + 1.5);
        assert!((m4 - expected).abs() < 1e-14);
    }

    #[test]
    fn nodes_symmetric_and_inside() {
        let rule = GaussJacobi::symmetric_beta(2.5, 33);
        let n = rule.nodes().len();
        for i in 0..n {
            assert_eq!(rule.nodes()[i], -rule.nodes()[n - 1 - i]);
            assert!(rule.nodes()[i].abs() < 1.0);
            assert!(rule.weights()[i] > 0.0);
        }
    }
}
