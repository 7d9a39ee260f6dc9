//! Hermite functions on `ℝ` and the positive multiplier `m`.
//!
//! `uₙ(s) = (2ⁿ n! √π)^{-1/2} Hₙ(s) e^{-s²/2}` are evaluated with the
//! three-term recurrence
//!
//! ```text
//! u_{n+1} = √(2/(n+1)) s uₙ - √(n/(n+1)) u_{n-1}
//! ```
//!
//! and differentiated exactly through the ladder identity
//! `uₙ' = √(n/2) u_{n-1} - √((n+1)/2) u_{n+1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::HermiteRule;

/// Rescale threshold for the recurrence; keeps intermediate values in range
/// far in the tails where `e^{-s²/2}` alone would underflow.
const RESCALE: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Hermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmoothBasis {
    size: usize,
    kind: BasisKind,
}

impl SmoothBasis {
    pub fn hermite(size: usize) -> Self {
        Self {
            size,
            kind: BasisKind::Hermite,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// `uₙ^{(order)}(s)`.
    pub fn value(&self, n: usize, order: usize, s: f64) -> f64 {
        hermite_derivatives(n + 1, order, s)[n]
    }

    /// `(u₀^{(order)}(s), …, u_{N-1}^{(order)}(s))`.
    pub fn values(&self, order: usize, s: f64) -> Vec<f64> {
        hermite_derivatives(self.size, order, s)
    }

    /// Rows are points, columns basis indices.
    pub fn value_matrix(&self, order: usize, points: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(points.len(), self.size);
        for (r, &s) in points.iter().enumerate() {
            for (c, v) in hermite_derivatives(self.size, order, s).into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// `uₙ^{(i)}(s)` for the Hermite family.
pub fn basis_value(n: usize, i: usize, s: f64) -> f64 {
    SmoothBasis::hermite(n + 1).value(n, i, s)
}

/// `u₀(s), …, u_{count-1}(s)`.
pub fn hermite_functions(count: usize, s: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    // Run the recurrence on a scaled sequence and fold the Gaussian factor
    // back in at the end, tracking the scale as a logarithm.
    let log_base = -0.5 * s * s - 0.25 * std::f64::consts::PI.ln();
    let mut log_scale = 0.0f64;
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut scaled = vec![(0.0f64, 0.0f64); count];
    scaled[0] = (cur, log_scale);
    for n in 0..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * s * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        scaled[n + 1] = (cur, log_scale);
    }
    for (o, (v, ls)) in out.iter_mut().zip(scaled) {
        *o = if v == 0.0 { 0.0 } else { v * (ls + log_base).exp() };
    }
    out
}

/// Derivatives of order `order` of `u₀, …, u_{count-1}` at `s`.
pub fn hermite_derivatives(count: usize, order: usize, s: f64) -> Vec<f64> {
    let mut d = hermite_functions(count + order, s);
    for _ in 0..order {
        let len = d.len() - 1;
        let next: Vec<f64> = (0..len)
            .map(|n| {
                let nf = n as f64;
                let down = if n > 0 { (nf / 2.0).sqrt() * d[n - 1] } else { 0.0 };
                down - ((nf + 1.0) / 2.0).sqrt() * d[n + 1]
            })
            .collect();
        d = next;
    }
    d.truncate(count);
    d
}

/// Smooth positive weight `m` multiplying the reduced first-kind equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    /// `m(s) = exp(-s² / (2 w²))`.
    Gaussian { width: f64 },
    /// `m ≡ 1`; not in `L²`, kept as the neutral element for checks.
    Unit,
}

impl Default for Multiplier {
    fn default() -> Self {
        Multiplier::Gaussian { width: 1.0 }
    }
}

impl Multiplier {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "multiplier width must be positive, got {width}"
            )));
        }
        Ok(Multiplier::Gaussian { width })
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Multiplier::Gaussian { width } => (-0.5 * (s / width).powi(2)).exp(),
            Multiplier::Unit => 1.0,
        }
    }

    /// `m(s), m'(s), …, m^{(max_order)}(s)`.
    pub fn derivatives(&self, max_order: usize, s: f64) -> Vec<f64> {
        match *self {
            Multiplier::Gaussian { width } => {
                // m^{(k)}(s) = (-1/w)^k He_k(s/w) m(s), He the probabilists' Hermite polynomials.
                let x = s / width;
                let m = self.value(s);
                let mut out = Vec::with_capacity(max_order + 1);
                let (mut he_prev, mut he) = (0.0, 1.0);
                let mut factor = 1.0;
                for k in 0..=max_order {
                    out.push(factor * he * m);
                    let next = x * he - k as f64 * he_prev;
                    he_prev = he;
                    he = next;
                    factor *= -1.0 / width;
                }
                out
            }
            Multiplier::Unit => {
                let mut out = vec![0.0; max_order + 1];
                out[0] = 1.0;
                out
            }
        }
    }

    pub fn derivative(&self, order: usize, s: f64) -> f64 {
        self.derivatives(order, s)[order]
    }

    /// `‖m‖_{L²}`, `None` when `m ∉ L²`.
    pub fn l2_norm(&self) -> Option<f64> {
        match *self {
            Multiplier::Gaussian { width } => Some((width * std::f64::consts::PI.sqrt()).sqrt()),
            Multiplier::Unit => None,
        }
    }

    /// `m²`, which is again a multiplier of the same family.
    pub fn squared(&self) -> Multiplier {
        match *self {
            Multiplier::Gaussian { width } => Multiplier::Gaussian {
                width: width / std::f64::consts::SQRT_2,
            },
            Multiplier::Unit => Multiplier::Unit,
        }
    }

    /// `c` in `m(s) e^{-s²} = e^{-c s²}`.
    fn gaussian_exponent(&self) -> f64 {
        match *self {
            Multiplier::Gaussian { width } => 1.0 + 0.5 / (width * width),
            Multiplier::Unit => 1.0,
        }
    }
}

/// Default node count for [`multiplier_matrix`]: enough for exactness.
pub fn default_quad_nodes(basis: &SmoothBasis) -> usize {
    basis.size() + 8
}

/// `M_{pq} = ∫ m(s) u_p(s) u_q(s) ds`.
///
/// `m u_p u_q` is `e^{-c s²}` times a polynomial of degree `p + q`, so after
/// the substitution `s = x / √c` a Gauss–Hermite rule with at least `N` nodes
/// integrates it exactly. The same rule, unscaled, must reproduce
/// `⟨u_p, u_q⟩ = δ_{pq}` to 1e-10 or the call fails.
pub fn multiplier_matrix(
    multiplier: &Multiplier,
    basis: &SmoothBasis,
    quad_nodes: usize,
) -> Result<DMatrix<Complex64>> {
    let n = basis.size();
    let rule = HermiteRule::new(quad_nodes)?;

    let gram = rule.gram(basis, 1.0);
    let defect = (&gram - DMatrix::<f64>::identity(n, n)).amax();
    if !(defect <= 1e-10) {
        return Err(Error::QuadratureInsufficient {
            nodes: quad_nodes,
            defect,
        });
    }

    let c = multiplier.gaussian_exponent();
    let mut m = DMatrix::zeros(n, n);
    let scale = c.sqrt().recip();
    for (&x, &w) in rule.nodes().iter().zip(rule.function_weights()) {
        let s = x * scale;
        let weight = w * scale * multiplier.value(s);
        let u = hermite_functions(n, s);
        for q in 0..n {
            let wq = weight * u[q];
            if wq == 0.0 {
                continue;
            }
            for p in q..n {
                m[(p, q)] += wq * u[p];
            }
        }
    }
    for q in 0..n {
        for p in 0..q {
            m[(p, q)] = m[(q, p)];
        }
    }
    Ok(m.map(|v| Complex64::new(v, 0.0)))
}
