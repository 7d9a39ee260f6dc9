//! Gauss–Hermite quadrature in the form needed for Hermite-function integrands.
//!
//! The rule approximates `∫ f(s) ds` directly; the usual Gauss–Hermite weights
//! `wₖ` are replaced by `wₖ e^{xₖ²} = 1 / Σ_{j<n} u_j(xₖ)²`, which stays well
//! scaled for large node counts where `wₖ` itself underflows.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::smooth_basis::{hermite_functions, SmoothBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule {
    nodes: Vec<f64>,
    function_weights: Vec<f64>,
}

impl HermiteRule {
    /// `n`-point rule, exact for `e^{-s²}` times polynomials of degree `< 2n`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        // Golub–Welsch: eigenvalues of the Jacobi matrix of the Hermite recurrence.
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        for x in nodes.iter_mut() {
            // Newton polish on uₙ(x) = 0 with uₙ' = √(n/2) u_{n-1} - √((n+1)/2) u_{n+1}.
            for _ in 0..3 {
                let u = hermite_functions(n + 2, *x);
                let nf = n as f64;
                let d = (nf / 2.0).sqrt() * u[n - 1] - ((nf + 1.0) / 2.0).sqrt() * u[n + 1];
                if d == 0.0 {
                    break;
                }
                let step = u[n] / d;
                *x -= step;
                if step.abs() < 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        let function_weights = nodes
            .iter()
            .map(|&x| 1.0 / hermite_functions(n, x).iter().map(|u| u * u).sum::<f64>())
            .collect();
        Ok(Self {
            nodes,
            function_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `wₖ e^{xₖ²}`, weights for integrating `f` itself.
    pub fn function_weights(&self) -> &[f64] {
        &self.function_weights
    }

    /// `∫ f(s) ds`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.function_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `∫ u_p(s) u_q(s) e^{-(c-1) s²} ds` evaluated by the rule scaled to `e^{-c s²}`.
    pub(crate) fn gram(&self, basis: &SmoothBasis, c: f64) -> DMatrix<f64> {
        let n = basis.size();
        let scale = c.sqrt().recip();
        let mut g = DMatrix::zeros(n, n);
        for (&x, &w) in self.nodes.iter().zip(&self.function_weights) {
            let s = x * scale;
            let weight = w * scale * (-(c - 1.0) * s * s).exp();
            let u = hermite_functions(n, s);
            for q in 0..n {
                for p in 0..n {
                    g[(p, q)] += weight * u[p] * u[q];
                }
            }
        }
        g
    }
}
