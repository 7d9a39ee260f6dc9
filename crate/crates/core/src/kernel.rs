//! Bilinear-series kernels over the Hermite basis.
//!
//! A coefficient matrix `A` defines
//!
//! ```text
//! T(s, t) = Σ_{m,n} a_{mn} uₘ(s) conj(uₙ(t))
//! ```
//!
//! together with all partial derivatives and the Carleman functions
//! `t(s) = conj(T(s, ·))`, `t'(t) = T(·, t)`, all in closed form. Kernels
//! may carry a multiplier `m`, representing `Γ(s, t) = m(s) T(s, t)`; their
//! `s`-derivatives follow the Leibniz rule.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::smooth_basis::{default_quad_nodes, multiplier_matrix, Multiplier, SmoothBasis};
use crate::unitary::CoefficientMatrix;

/// Multiplier data attached to a `Γ = m T` kernel.
#[derive(Debug, Clone)]
struct Scaled {
    multiplier: Multiplier,
    /// `M·A`, the coefficient matrix of `Γ` truncated to the basis.
    product: DMatrix<Complex64>,
    /// Matrix of `m²`, for the exact Hilbert–Schmidt norm.
    squared: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct BilinearKernel {
    coeffs: CoefficientMatrix,
    basis: SmoothBasis,
    scaled: Option<Scaled>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarlemanSide {
    /// `s ↦ conj(T(s, ·))`
    Row,
    /// `t ↦ T(·, t)`
    Column,
}

pub fn synthesize(a: &CoefficientMatrix, basis: &SmoothBasis) -> Result<BilinearKernel> {
    if a.size() != basis.size() {
        return Err(Error::SizeMismatch {
            expected: basis.size(),
            found: a.size(),
        });
    }
    Ok(BilinearKernel {
        coeffs: a.clone(),
        basis: *basis,
        scaled: None,
    })
}

fn real_vector(values: Vec<f64>) -> DVector<Complex64> {
    DVector::from_iterator(values.len(), values.into_iter().map(|v| Complex64::new(v, 0.0)))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl BilinearKernel {
    pub fn coefficients(&self) -> &CoefficientMatrix {
        &self.coeffs
    }

    pub fn basis(&self) -> &SmoothBasis {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn multiplier(&self) -> Option<&Multiplier> {
        self.scaled.as_ref().map(|s| &s.multiplier)
    }

    /// `M·A` for multiplier kernels, `A` otherwise.
    pub fn hs_coefficients(&self) -> &DMatrix<Complex64> {
        match &self.scaled {
            Some(s) => &s.product,
            None => self.coeffs.entries(),
        }
    }

    /// `Σ_{m,n} a_{mn} uₘ^{(i)}(s) conj(uₙ^{(j)}(t))` without the multiplier.
    fn plain(&self, i: usize, j: usize, s: f64, t: f64) -> Complex64 {
        let us = real_vector(self.basis.values(i, s));
        let vt = real_vector(self.basis.values(j, t));
        (us.transpose() * self.coeffs.entries() * vt)[(0, 0)]
    }

    /// `∂^{i+j} T / ∂sⁱ ∂tʲ (s, t)`.
    pub fn eval(&self, i: usize, j: usize, s: f64, t: f64) -> Complex64 {
        match &self.scaled {
            None => self.plain(i, j, s, t),
            Some(sc) => {
                let md = sc.multiplier.derivatives(i, s);
                (0..=i)
                    .map(|r| self.plain(r, j, s, t) * (binomial(i, r) * md[i - r]))
                    .sum()
            }
        }
    }

    /// Coefficients in `{uₙ}` of `t^{(order)}(x)` (row side) or
    /// `(t')^{(order)}(x)` (column side).
    ///
    /// For multiplier kernels the row side is exact (Leibniz in `s`); the
    /// column side is `M (A u^{(order)}(x))`, the projection of
    /// `m(·) T^{(0,order)}(·, x)` onto the basis.
    pub fn carleman(&self, side: CarlemanSide, order: usize, x: f64) -> DVector<Complex64> {
        let a = self.coeffs.entries();
        match side {
            CarlemanSide::Row => {
                let row = |r: usize| -> DVector<Complex64> {
                    let u = real_vector(self.basis.values(r, x));
                    (a.transpose() * u).map(|z| z.conj())
                };
                match &self.scaled {
                    None => row(order),
                    Some(sc) => {
                        let md = sc.multiplier.derivatives(order, x);
                        let mut acc = DVector::zeros(self.size());
                        for r in 0..=order {
                            acc += row(r) * Complex64::new(binomial(order, r) * md[order - r], 0.0);
                        }
                        acc
                    }
                }
            }
            CarlemanSide::Column => {
                let u = real_vector(self.basis.values(order, x));
                match &self.scaled {
                    None => a * u,
                    Some(sc) => &sc.product * u,
                }
            }
        }
    }

    pub fn carleman_norm(&self, side: CarlemanSide, order: usize, x: f64) -> f64 {
        self.carleman(side, order, x).norm()
    }

    /// `(∫∫ |T(s, t)|² ds dt)^{1/2}`.
    ///
    /// Plain kernels: Frobenius norm of `A`. Multiplier kernels:
    /// `tr(A* M₂ A)^{1/2}` with `M₂` the matrix of `m²`, which is exact
    /// because `m(s) T(s, t)` is square integrable in `s` against `m²`.
    pub fn hs_norm(&self) -> f64 {
        match &self.scaled {
            None => self.coeffs.frobenius_norm(),
            Some(sc) => {
                let a = self.coeffs.entries();
                (a.adjoint() * &sc.squared * a).trace().re.max(0.0).sqrt()
            }
        }
    }

    /// Frobenius norm of `M·A` (or `A`): the Hilbert–Schmidt norm of the
    /// kernel's projection onto the basis.
    pub fn coefficient_hs_norm(&self) -> f64 {
        self.hs_coefficients().norm()
    }

    /// Kernel values (or derivatives) on a tensor grid; rows follow `s`.
    pub fn sample(&self, i: usize, j: usize, s_points: &[f64], t_points: &[f64]) -> DMatrix<Complex64> {
        let a = self.coeffs.entries();
        let vt = self.basis.value_matrix(j, t_points).map(|v| Complex64::new(v, 0.0));
        let plain = |r: usize| {
            let us = self.basis.value_matrix(r, s_points).map(|v| Complex64::new(v, 0.0));
            &us * a * vt.transpose()
        };
        match &self.scaled {
            None => plain(i),
            Some(sc) => {
                let mut out = DMatrix::zeros(s_points.len(), t_points.len());
                for r in 0..=i {
                    let block = plain(r);
                    for (row, &s) in s_points.iter().enumerate() {
                        let w = binomial(i, r) * sc.multiplier.derivative(i - r, s);
                        for col in 0..t_points.len() {
                            out[(row, col)] += block[(row, col)] * w;
                        }
                    }
                }
                out
            }
        }
    }

    /// Largest discrepancy over the probe grid between the exact form
    /// `m(s) T(s, t)` and the truncated coefficient form `Σ (MA)_{mn} uₘ(s) uₙ(t)`.
    /// Zero for plain kernels.
    pub fn truncation_discrepancy(&self, probe: &ProbeGrid) -> f64 {
        let Some(sc) = &self.scaled else {
            return 0.0;
        };
        let pts = probe.points();
        let exact = self.sample(0, 0, &pts, &pts);
        let u = self.basis.value_matrix(0, &pts).map(|v| Complex64::new(v, 0.0));
        let coeff = &u * &sc.product * u.transpose();
        (exact - coeff).camax()
    }
}

pub fn eval_kernel(t: &BilinearKernel, i: usize, j: usize, s: f64, x: f64) -> Complex64 {
    t.eval(i, j, s, x)
}

pub fn carleman(t: &BilinearKernel, side: CarlemanSide, order: usize, x: f64) -> DVector<Complex64> {
    t.carleman(side, order, x)
}

pub fn hs_norm(t: &BilinearKernel) -> f64 {
    t.hs_norm()
}

/// Attaches `m`, turning `T` into `Γ(s, t) = m(s) T(s, t)`.
pub fn scale_by_multiplier(
    t: &BilinearKernel,
    multiplier: &Multiplier,
    m_matrix: &DMatrix<Complex64>,
) -> Result<BilinearKernel> {
    if t.scaled.is_some() {
        return Err(Error::InvalidArgument("kernel already carries a multiplier".into()));
    }
    if m_matrix.nrows() != t.size() || m_matrix.ncols() != t.size() {
        return Err(Error::SizeMismatch {
            expected: t.size(),
            found: m_matrix.nrows(),
        });
    }
    let squared = multiplier_matrix(&multiplier.squared(), &t.basis, default_quad_nodes(&t.basis))?;
    Ok(BilinearKernel {
        coeffs: t.coeffs.clone(),
        basis: t.basis,
        scaled: Some(Scaled {
            multiplier: *multiplier,
            product: m_matrix * t.coeffs.entries(),
            squared,
        }),
    })
}

/// `A = W V*` with `W = U_pol P`, `V = P`, `P = |A|^{1/2}`.
#[derive(Debug, Clone)]
pub struct MFactorization {
    pub w: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    /// Partial isometry of the polar decomposition `A = U_pol |A|`.
    pub polar: DMatrix<Complex64>,
    /// `|A| = (A* A)^{1/2}`.
    pub modulus: DMatrix<Complex64>,
}

impl MFactorization {
    /// `‖A - W V*‖_F`.
    pub fn reconstruction_error(&self, a: &CoefficientMatrix) -> f64 {
        (a.entries() - &self.w * self.v.adjoint()).norm()
    }

    /// Smallest eigenvalues of `W W*` and `V V*`.
    pub fn min_gram_eigenvalues(&self) -> (f64, f64) {
        let min_eig = |m: DMatrix<Complex64>| m.symmetric_eigen().eigenvalues.min();
        (
            min_eig(&self.w * self.w.adjoint()),
            min_eig(&self.v * self.v.adjoint()),
        )
    }
}

/// Polar M-factorization through the singular value decomposition
/// `A = X Σ Y*`: `|A| = Y Σ Y*`, `P = Y Σ^{1/2} Y*`, `U_pol = X_r Y_r*` on the
/// numerically nonzero singular values.
pub fn m_factorize(a: &CoefficientMatrix) -> MFactorization {
    let n = a.size();
    if n == 0 {
        let empty = DMatrix::zeros(0, 0);
        return MFactorization {
            w: empty.clone(),
            v: empty.clone(),
            polar: empty.clone(),
            modulus: empty,
        };
    }
    let svd = a.entries().clone().svd(true, true);
    let x = svd.u.expect("left singular vectors requested");
    let y = svd.v_t.expect("right singular vectors requested").adjoint();
    let sigma = svd.singular_values;
    let tol = sigma.max() * n as f64 * f64::EPSILON;

    let scaled_cols = |m: &DMatrix<Complex64>, f: &dyn Fn(f64) -> f64| {
        let mut out = m.clone();
        for (k, mut col) in out.column_iter_mut().enumerate() {
            col *= Complex64::new(f(sigma[k]), 0.0);
        }
        out
    };
    let modulus = scaled_cols(&y, &|s| s) * y.adjoint();
    let root = scaled_cols(&y, &|s| s.sqrt()) * y.adjoint();
    let support = |s: f64| if s > tol { 1.0 } else { 0.0 };
    let polar = scaled_cols(&x, &support) * y.adjoint();
    let w = &polar * &root;
    MFactorization {
        w,
        v: root,
        polar,
        modulus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConsistency {
    pub direct: Complex64,
    pub via_factorization: Complex64,
    /// Running sums of `|termₙ|`.
    pub abs_partial_sums: Vec<f64>,
}

impl SeriesConsistency {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.via_factorization).norm()
    }
}

/// Terms `[W uₙ]^{(i)}(s) conj([V uₙ]^{(j)}(t))` of the factorized series; with
/// a multiplier the left factor is `[M W uₙ]^{(i)}` by Leibniz.
fn factorized_terms(
    t: &BilinearKernel,
    f: &MFactorization,
    i: usize,
    j: usize,
    s: f64,
    x: f64,
) -> Vec<Complex64> {
    let left_plain = |r: usize| f.w.transpose() * real_vector(t.basis.values(r, s));
    let left = match &t.scaled {
        None => left_plain(i),
        Some(sc) => {
            let md = sc.multiplier.derivatives(i, s);
            let mut acc = DVector::zeros(t.size());
            for r in 0..=i {
                acc += left_plain(r) * Complex64::new(binomial(i, r) * md[i - r], 0.0);
            }
            acc
        }
    };
    let right = f.v.transpose() * real_vector(t.basis.values(j, x));
    left.iter().zip(right.iter()).map(|(l, r)| l * r.conj()).collect()
}

/// Evaluates `∂^{i+j}T(s, t)` directly and through the factorized series.
pub fn series_consistency(
    t: &BilinearKernel,
    f: &MFactorization,
    i: usize,
    j: usize,
    s: f64,
    x: f64,
) -> Result<SeriesConsistency> {
    if f.w.nrows() != t.size() || f.v.nrows() != t.size() {
        return Err(Error::SizeMismatch {
            expected: t.size(),
            found: f.w.nrows(),
        });
    }
    let terms = factorized_terms(t, f, i, j, s, x);
    let mut running = 0.0;
    let abs_partial_sums = terms
        .iter()
        .map(|z| {
            running += z.norm();
            running
        })
        .collect();
    Ok(SeriesConsistency {
        direct: t.eval(i, j, s, x),
        via_factorization: terms.iter().sum(),
        abs_partial_sums,
    })
}

/// Uniform tensor probe grid on `[-radius, radius]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub radius: f64,
    pub points: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            radius: 8.0,
            points: 41,
        }
    }
}

impl ProbeGrid {
    pub fn new(radius: f64, points: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || points < 2 {
            return Err(Error::InvalidArgument(format!(
                "probe grid needs radius > 0 and at least 2 points, got ({radius}, {points})"
            )));
        }
        Ok(Self { radius, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|k| -self.radius + k as f64 * h).collect()
    }
}

/// `sup` over the probe grid of `Σ_{n ≥ from} |termₙ|` for `i = j = 0`: the
/// observable witness of absolute, uniform convergence of the factorized series.
pub fn absolute_tail_sup(t: &BilinearKernel, f: &MFactorization, probe: &ProbeGrid, from: usize) -> f64 {
    let pts = probe.points();
    let n = t.size();
    let to_c = |m: DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let u = to_c(t.basis.value_matrix(0, &pts));
    // Rows: probe points; columns: series index.
    let mut left = &u * &f.w;
    if let Some(sc) = &t.scaled {
        for (r, &s) in pts.iter().enumerate() {
            let m = sc.multiplier.value(s);
            for c in 0..n {
                left[(r, c)] *= m;
            }
        }
    }
    let right = &u * &f.v;
    let left_abs: Vec<Vec<f64>> = (0..pts.len())
        .map(|r| (from..n).map(|c| left[(r, c)].norm()).collect())
        .collect();
    let right_abs: Vec<Vec<f64>> = (0..pts.len())
        .map(|r| (from..n).map(|c| right[(r, c)].norm()).collect())
        .collect();
    let mut sup = 0.0f64;
    for l in &left_abs {
        for r in &right_abs {
            let tail: f64 = l.iter().zip(r).map(|(a, b)| a * b).sum();
            sup = sup.max(tail);
        }
    }
    sup
}

/// Sup of the row Carleman norm `‖t(s)‖` over a uniform scan of
/// `[-radius, radius]`, plus a first-order allowance for peaks between scan
/// points: `spacing/2 · max |d/ds ‖t(s)‖²|`, the latter computed exactly from
/// the order-1 Carleman function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanSup {
    pub sup: f64,
    /// Allowance on `sup²`.
    pub squared_slack: f64,
    pub radius: f64,
    pub points: usize,
}

pub fn carleman_sup(t: &BilinearKernel, radius: f64, points: usize) -> CarlemanSup {
    let probe = ProbeGrid {
        radius,
        points: points.max(2),
    };
    let h = probe.spacing();
    let mut sup = 0.0f64;
    let mut max_slope = 0.0f64;
    for s in probe.points() {
        let c0 = t.carleman(CarlemanSide::Row, 0, s);
        let c1 = t.carleman(CarlemanSide::Row, 1, s);
        sup = sup.max(c0.norm());
        // d/ds ‖t(s)‖² = 2 Re ⟨t'(s), t(s)⟩
        let slope = 2.0 * c1.dotc(&c0).re;
        max_slope = max_slope.max(slope.abs());
    }
    CarlemanSup {
        sup,
        squared_slack: 0.5 * h * max_slope,
        radius,
        points: probe.points,
    }
}

/// Radius beyond which every basis function and derivative of low order is
/// negligible: `8 + √(2N)`.
pub fn vanishing_radius(basis: &SmoothBasis) -> f64 {
    8.0 + (2.0 * basis.size() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn single(n: usize) -> CoefficientMatrix {
        let mut a = DMatrix::zeros(n, n);
        a[(0, 0)] = c(1.0);
        CoefficientMatrix::new(a).unwrap()
    }

    fn random(n: usize, seed: u64) -> CoefficientMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CoefficientMatrix::new(DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))
        .unwrap()
    }

    #[test]
    fn rank_one_values() {
        let t = synthesize(&single(4), &SmoothBasis::hermite(4)).unwrap();
        assert!((t.eval(0, 0, 0.0, 0.0) - c(PI.powf(-0.5))).norm() < 1e-15);
        assert!((t.eval(0, 0, 0.0, 0.0).re - 0.56419).abs() < 1e-5);
        let expected = -PI.powf(-0.5) * (-0.5f64).exp();
        assert!((t.eval(1, 0, 1.0, 0.0) - c(expected)).norm() < 1e-15);
        assert!((t.eval(1, 0, 1.0, 0.0).re + 0.342_198_280_312_216_5).abs() < 1e-15);
    }

    #[test]
    fn zero_and_size_checks() {
        let t = synthesize(&CoefficientMatrix::zeros(5), &SmoothBasis::hermite(5)).unwrap();
        assert_eq!(t.eval(2, 1, 0.3, -1.2), c(0.0));
        assert_eq!(t.carleman(CarlemanSide::Row, 0, 0.4).norm(), 0.0);
        assert!(synthesize(&CoefficientMatrix::zeros(5), &SmoothBasis::hermite(4)).is_err());
    }

    #[test]
    fn hermitian_coefficients_give_hermitian_kernel() {
        let a = random(8, 3);
        let h = CoefficientMatrix::new(a.entries() + a.entries().adjoint()).unwrap();
        let t = synthesize(&h, &SmoothBasis::hermite(8)).unwrap();
        for (s, x) in [(0.1, -0.4), (1.5, 0.2), (-2.0, 2.5)] {
            assert!((t.eval(0, 0, s, x) - t.eval(0, 0, x, s).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn finite_differences_match_derivatives() {
        let t = synthesize(&random(6, 11), &SmoothBasis::hermite(6)).unwrap();
        let h = 1e-4;
        for (s, x) in [(0.3, -0.7), (-1.2, 0.9), (2.0, 1.0)] {
            let ds = (t.eval(0, 0, s + h, x) - t.eval(0, 0, s - h, x)) / (2.0 * h);
            let dt = (t.eval(0, 0, s, x + h) - t.eval(0, 0, s, x - h)) / (2.0 * h);
            assert!((ds - t.eval(1, 0, s, x)).norm() < 1e-6);
            assert!((dt - t.eval(0, 1, s, x)).norm() < 1e-6);
        }
    }

    #[test]
    fn carleman_examples() {
        let t = synthesize(&single(5), &SmoothBasis::hermite(5)).unwrap();
        let v = t.carleman(CarlemanSide::Row, 0, 0.0);
        assert!((v[0] - c(PI.powf(-0.25))).norm() < 1e-15);
        assert!(v.iter().skip(1).all(|z| *z == c(0.0)));
    }

    #[test]
    fn carleman_norm_matches_quadrature() {
        let t = synthesize(&random(6, 5), &SmoothBasis::hermite(6)).unwrap();
        for s in [-1.0, 0.0, 0.8] {
            let h = 0.01;
            let mut integral = 0.0;
            let mut x = -12.0;
            while x <= 12.0 {
                integral += h * t.eval(0, 0, s, x).norm_sqr();
                x += h;
            }
            let norm = t.carleman_norm(CarlemanSide::Row, 0, s);
            assert!((norm - integral.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn column_side_is_row_side_of_adjoint() {
        let a = random(7, 8);
        let basis = SmoothBasis::hermite(7);
        let t = synthesize(&a, &basis).unwrap();
        let ta = synthesize(&a.adjoint(), &basis).unwrap();
        for order in 0..3 {
            for x in [-1.5, 0.2, 3.0] {
                let col = t.carleman(CarlemanSide::Column, order, x);
                let row = ta.carleman(CarlemanSide::Row, order, x);
                assert!((col - row).camax() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_examples() {
        let f = m_factorize(&CoefficientMatrix::identity(3));
        assert!((&f.w - DMatrix::<Complex64>::identity(3, 3)).camax() < 1e-14);
        assert!((&f.v - DMatrix::<Complex64>::identity(3, 3)).camax() < 1e-14);

        let mut d = DMatrix::zeros(2, 2);
        d[(0, 0)] = c(2.0);
        let a = CoefficientMatrix::new(d).unwrap();
        let f = m_factorize(&a);
        let r2 = 2f64.sqrt();
        let expected = DMatrix::from_row_slice(2, 2, &[c(r2), c(0.0), c(0.0), c(0.0)]);
        assert!((&f.v - &expected).camax() < 1e-15);
        assert!((&f.w - &expected).camax() < 1e-15);
        assert!((&f.modulus - a.entries()).camax() < 1e-15);
        assert!(f.reconstruction_error(&a) < 1e-15);

        let a = random(8, 21);
        let f = m_factorize(&a);
        assert!(f.reconstruction_error(&a) <= 1e-10 * a.frobenius_norm());
        let (ww, vv) = f.min_gram_eigenvalues();
        assert!(ww > -1e-12 && vv > -1e-12);
        // Polar factor is unitary for full-rank A.
        let p = &f.polar * f.polar.adjoint();
        assert!((p - DMatrix::<Complex64>::identity(8, 8)).camax() < 1e-12);
    }

    #[test]
    fn series_consistency_examples() {
        let basis = SmoothBasis::hermite(6);
        let a = single(6);
        let t = synthesize(&a, &basis).unwrap();
        let sc = series_consistency(&t, &m_factorize(&a), 0, 0, 0.2, 0.5).unwrap();
        assert!(sc.discrepancy() < 1e-15);

        let r = random(8, 2);
        let h = CoefficientMatrix::new(r.entries() + r.entries().adjoint()).unwrap();
        let t = synthesize(&h, &SmoothBasis::hermite(8)).unwrap();
        let f = m_factorize(&h);
        let sc = series_consistency(&t, &f, 0, 0, 0.3, -0.7).unwrap();
        assert!(sc.discrepancy() <= 1e-10);
        assert!(sc.abs_partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert!(*sc.abs_partial_sums.last().unwrap() >= sc.direct.norm() - 1e-15);
    }

    #[test]
    fn multiplier_kernel_examples() {
        let basis = SmoothBasis::hermite(6);
        let a = single(6);
        let t = synthesize(&a, &basis).unwrap();

        let unit = multiplier_matrix(&Multiplier::Unit, &basis, 14).unwrap();
        let g = scale_by_multiplier(&t, &Multiplier::Unit, &unit).unwrap();
        for (s, x) in [(0.0, 0.0), (0.4, -1.1)] {
            assert!((g.eval(1, 1, s, x) - t.eval(1, 1, s, x)).norm() < 1e-15);
        }

        let m = Multiplier::default();
        let mm = multiplier_matrix(&m, &basis, 14).unwrap();
        let g = scale_by_multiplier(&t, &m, &mm).unwrap();
        assert!((g.eval(0, 0, 0.0, 0.0) - c(PI.powf(-0.5))).norm() < 1e-15);
        assert!(scale_by_multiplier(&g, &m, &mm).is_err());

        // ‖Γ‖_HS ≤ sup‖t(s)‖ · ‖m‖ with ‖m‖² = √π.
        let sup = carleman_sup(&t, 12.0, 2401);
        let bound = (sup.sup.powi(2) + sup.squared_slack).sqrt() * PI.sqrt().sqrt();
        assert!(g.hs_norm() <= bound);
        assert!(g.coefficient_hs_norm() <= g.hs_norm() + 1e-14);
    }

    #[test]
    fn hs_norm_examples() {
        let mut one = DMatrix::zeros(3, 3);
        one[(1, 2)] = Complex64::new(3.0, -4.0);
        let t = synthesize(&CoefficientMatrix::new(one).unwrap(), &SmoothBasis::hermite(3)).unwrap();
        assert!((hs_norm(&t) - 5.0).abs() < 1e-15);
        let t = synthesize(&CoefficientMatrix::identity(9), &SmoothBasis::hermite(9)).unwrap();
        assert!((hs_norm(&t) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn probe_grid() {
        let p = ProbeGrid::default();
        let pts = p.points();
        assert_eq!(pts.len(), 41);
        assert_eq!(pts[0], -8.0);
        assert!((pts[40] - 8.0).abs() < 1e-12);
        assert!((pts[20]).abs() < 1e-12);
        assert!(ProbeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn sample_matches_pointwise_eval() {
        let basis = SmoothBasis::hermite(5);
        let t = synthesize(&random(5, 9), &basis).unwrap();
        let m = Multiplier::default();
        let g = scale_by_multiplier(&t, &m, &multiplier_matrix(&m, &basis, 13).unwrap()).unwrap();
        let s = [-1.0, 0.5, 2.0];
        let x = [0.0, 1.5];
        for k in [&t, &g] {
            for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 1)] {
                let grid = k.sample(i, j, &s, &x);
                for (r, &sv) in s.iter().enumerate() {
                    for (cc, &xv) in x.iter().enumerate() {
                        assert!((grid[(r, cc)] - k.eval(i, j, sv, xv)).norm() < 1e-13);
                    }
                }
            }
        }
    }
}
