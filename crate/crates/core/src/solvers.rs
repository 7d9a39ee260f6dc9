//! Third-kind problems, their reduced second-kind pencil and the first-kind
//! form obtained by multiplying with a positive weight.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{
    absolute_tail_sup, carleman_sup, m_factorize, scale_by_multiplier, synthesize, vanishing_radius,
    BilinearKernel, ProbeGrid,
};
use crate::measure_space::{GridFunction, GridKernel, MeasureSpace};
use crate::rademacher::KorotkovSequence;
use crate::smooth_basis::{default_quad_nodes, multiplier_matrix, Multiplier, SmoothBasis};
use crate::unitary::{matrix_elements, CoefficientMatrix, GridOperator, UnitarySurrogate};

/// Condition estimate above which a system counts as singular.
pub const NEAR_SINGULAR: f64 = 1e12;

/// Default relative cutoff of the truncated-spectral first-kind solve.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// `H(x) φ(x) - λ ∫ K(x, y) φ(y) dμ(y) = ψ(x)`.
#[derive(Debug, Clone)]
pub struct ThirdKindProblem {
    h: GridFunction,
    k: GridKernel,
    lambda: Complex64,
    psi: GridFunction,
}

impl ThirdKindProblem {
    pub fn new(h: GridFunction, k: GridKernel, lambda: Complex64, psi: GridFunction) -> Result<Self> {
        h.space().ensure_same(&k.space())?;
        h.space().ensure_same(&psi.space())?;
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        Ok(Self { h, k, lambda, psi })
    }

    /// Problem whose right-hand side is manufactured from `phi`.
    pub fn manufactured(h: GridFunction, k: GridKernel, lambda: Complex64, phi: &GridFunction) -> Result<Self> {
        let psi = GridFunction::zeros(h.space());
        let mut p = Self::new(h, k, lambda, psi)?;
        p.psi = forward_third_kind(&p, phi)?;
        Ok(p)
    }

    pub fn space(&self) -> MeasureSpace {
        self.h.space()
    }

    pub fn coefficient(&self) -> &GridFunction {
        &self.h
    }

    pub fn kernel(&self) -> &GridKernel {
        &self.k
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn psi(&self) -> &GridFunction {
        &self.psi
    }

    pub fn with_lambda(&self, lambda: Complex64) -> Result<Self> {
        Self::new(self.h.clone(), self.k.clone(), lambda, self.psi.clone())
    }

    pub fn with_psi(&self, psi: GridFunction) -> Result<Self> {
        Self::new(self.h.clone(), self.k.clone(), self.lambda, psi)
    }

    /// Moves the problem to a finer grid: cells of `H` and `ψ` are split,
    /// `K` is re-sampled from its source when it has one.
    pub fn at_depth(&self, depth: u32) -> Result<Self> {
        Self::new(
            self.h.split_to_depth(depth)?,
            self.k.at_depth(depth)?,
            self.lambda,
            self.psi.split_to_depth(depth)?,
        )
    }
}

/// `ψ = Hφ - λ K φ` on the grid.
pub fn forward_third_kind(p: &ThirdKindProblem, phi: &GridFunction) -> Result<GridFunction> {
    p.space().ensure_same(&phi.space())?;
    let hphi = p.h.multiply(phi)?;
    let kphi = p.k.apply(phi)?;
    hphi.sub(&kphi.scale(p.lambda))
}

/// `α I + A₀ - λ A`, the reduced second-kind family.
#[derive(Debug, Clone)]
pub struct KernelPencil {
    pub alpha: Complex64,
    pub a0: CoefficientMatrix,
    pub a: CoefficientMatrix,
    pub basis: SmoothBasis,
}

impl KernelPencil {
    pub fn new(alpha: Complex64, a0: CoefficientMatrix, a: CoefficientMatrix) -> Result<Self> {
        if a0.size() != a.size() {
            return Err(Error::SizeMismatch {
                expected: a0.size(),
                found: a.size(),
            });
        }
        let basis = SmoothBasis::hermite(a.size());
        Ok(Self { alpha, a0, a, basis })
    }

    pub fn size(&self) -> usize {
        self.a.size()
    }

    /// `A₀ - λ A`.
    pub fn kernel_matrix(&self, lambda: Complex64) -> CoefficientMatrix {
        self.a0.pencil(lambda, &self.a).expect("pencil sizes agree")
    }

    /// `(α I + A₀) - λ A`, evaluated in that order so that
    /// `system_matrix(λ) == system_matrix(0) - λ A` holds bit for bit.
    pub fn system_matrix(&self, lambda: Complex64) -> DMatrix<Complex64> {
        let n = self.size();
        let base = DMatrix::<Complex64>::identity(n, n) * self.alpha + self.a0.entries();
        base - self.a.entries() * lambda
    }

    pub fn t0(&self) -> BilinearKernel {
        synthesize(&self.a0, &self.basis).expect("pencil sizes agree")
    }

    pub fn t(&self) -> BilinearKernel {
        synthesize(&self.a, &self.basis).expect("pencil sizes agree")
    }

    /// Kernel of `T₀ - λ T`.
    pub fn kernel(&self, lambda: Complex64) -> BilinearKernel {
        synthesize(&self.kernel_matrix(lambda), &self.basis).expect("pencil sizes agree")
    }
}

/// `A₀ = ⟨(H - α) bₙ, bₘ⟩`, `A = ⟨K bₙ, bₘ⟩`, `g = Uψ`.
pub fn reduce(
    p: &ThirdKindProblem,
    alpha: Complex64,
    seq: &KorotkovSequence,
    u: &UnitarySurrogate,
) -> Result<(KernelPencil, DVector<Complex64>)> {
    let pencil = reduce_pencil(p.coefficient(), p.kernel(), alpha, seq, u)?;
    let g = u.forward(p.psi())?;
    Ok((pencil, g))
}

/// The λ-independent part of [`reduce`].
pub fn reduce_pencil(
    h: &GridFunction,
    k: &GridKernel,
    alpha: Complex64,
    seq: &KorotkovSequence,
    u: &UnitarySurrogate,
) -> Result<KernelPencil> {
    if seq.alpha() != alpha {
        return Err(Error::InvalidArgument(format!(
            "sequence was built for alpha = {}, not {alpha}",
            seq.alpha()
        )));
    }
    h.space().ensure_same(&seq.space())?;
    h.space().ensure_same(&u.space())?;
    let a0 = matrix_elements(&GridOperator::multiplication(h, alpha), u)?;
    let a = matrix_elements(&GridOperator::integral(k), u)?;
    KernelPencil::new(alpha, a0, a)
}

/// `σ_max / σ_min`, infinite for singular or empty-rank matrices.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let s = m.singular_values();
    let (max, min) = (s.max(), s.min());
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondKindSolution {
    pub c: DVector<Complex64>,
    /// `‖(αI + A₀ - λA) c - g‖`.
    pub residual: f64,
    pub condition: f64,
}

pub fn solve_second_kind(
    pencil: &KernelPencil,
    lambda: Complex64,
    g: &DVector<Complex64>,
) -> Result<SecondKindSolution> {
    if pencil.alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::AlphaZero);
    }
    if g.len() != pencil.size() {
        return Err(Error::SizeMismatch {
            expected: pencil.size(),
            found: g.len(),
        });
    }
    let system = pencil.system_matrix(lambda);
    let condition = condition_number(&system);
    if !(condition <= NEAR_SINGULAR) {
        return Err(Error::NearSingular { condition });
    }
    let c = system
        .clone()
        .lu()
        .solve(g)
        .ok_or(Error::NearSingular { condition })?;
    let residual = (&system * &c - g).norm();
    Ok(SecondKindSolution { c, residual, condition })
}

/// `M (A₀ - λ A) c = w` with `w = M g`.
#[derive(Debug, Clone)]
pub struct FirstKindProblem {
    pub pencil: KernelPencil,
    pub multiplier: Multiplier,
    pub m: DMatrix<Complex64>,
    pub w: DVector<Complex64>,
}

impl FirstKindProblem {
    /// `M (A₀ - λ A)`.
    pub fn system_matrix(&self, lambda: Complex64) -> DMatrix<Complex64> {
        &self.m * self.pencil.kernel_matrix(lambda).entries()
    }

    /// `Γ₀ = m T₀`.
    pub fn gamma0(&self) -> Result<BilinearKernel> {
        scale_by_multiplier(&self.pencil.t0(), &self.multiplier, &self.m)
    }

    /// `Γ = m T`.
    pub fn gamma(&self) -> Result<BilinearKernel> {
        scale_by_multiplier(&self.pencil.t(), &self.multiplier, &self.m)
    }
}

pub fn make_first_kind(
    pencil: &KernelPencil,
    multiplier: &Multiplier,
    g: &DVector<Complex64>,
) -> Result<FirstKindProblem> {
    if pencil.alpha != Complex64::new(0.0, 0.0) {
        return Err(Error::AlphaNotZero);
    }
    if g.len() != pencil.size() {
        return Err(Error::SizeMismatch {
            expected: pencil.size(),
            found: g.len(),
        });
    }
    let m = multiplier_matrix(multiplier, &pencil.basis, default_quad_nodes(&pencil.basis))?;
    let w = &m * g;
    Ok(FirstKindProblem {
        pencil: pencil.clone(),
        multiplier: *multiplier,
        m,
        w,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstKindSolution {
    pub c: DVector<Complex64>,
    /// Fraction of `‖w‖²` carried by discarded singular directions.
    pub discarded_energy: f64,
    pub kept: usize,
    /// `σ_max / σ_min` over the kept singular values.
    pub condition: f64,
}

/// Truncated-spectral pseudoinverse: singular values below
/// `cutoff · σ_max` are dropped.
pub fn solve_first_kind(fp: &FirstKindProblem, lambda: Complex64, cutoff: f64) -> Result<FirstKindSolution> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidArgument(format!("cutoff must lie in (0, 1), got {cutoff}")));
    }
    let system = fp.system_matrix(lambda);
    let n = system.nrows();
    let svd = system.svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    if !(sigma_max > 0.0) {
        return Err(Error::DegenerateSystem);
    }
    let threshold = cutoff * sigma_max;
    let projections = u.ad_mul(&fp.w);
    let total: f64 = fp.w.norm_squared();
    let mut c = DVector::zeros(n);
    let mut discarded = 0.0;
    let mut kept = 0;
    let mut sigma_min = sigma_max;
    for k in 0..sigma.len() {
        if sigma[k] >= threshold {
            let coeff = projections[k] / sigma[k];
            c += v_t.row(k).adjoint() * coeff;
            kept += 1;
            sigma_min = sigma_min.min(sigma[k]);
        } else {
            discarded += projections[k].norm_sqr();
        }
    }
    if kept == 0 {
        return Err(Error::DegenerateSystem);
    }
    Ok(FirstKindSolution {
        c,
        discarded_energy: if total > 0.0 { discarded / total } else { 0.0 },
        kept,
        condition: sigma_max / sigma_min,
    })
}

/// Norms of `Γ uₙ` (columns of `M A`) and `Γ* uₙ` (rows), compared between
/// the first and last quarter of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactDecay {
    pub column_first_quarter_max: f64,
    pub column_last_quarter_max: f64,
    pub row_first_quarter_max: f64,
    pub row_last_quarter_max: f64,
}

impl CompactDecay {
    pub fn of(ma: &DMatrix<Complex64>) -> Self {
        let n = ma.ncols();
        let q = (n / 4).max(1);
        let quarter_max = |norms: &[f64], last: bool| {
            let slice = if last { &norms[n - q..] } else { &norms[..q] };
            slice.iter().copied().fold(0.0, f64::max)
        };
        let cols: Vec<f64> = ma.column_iter().map(|c| c.norm()).collect();
        let rows: Vec<f64> = ma.row_iter().map(|r| r.norm()).collect();
        Self {
            column_first_quarter_max: quarter_max(&cols, false),
            column_last_quarter_max: quarter_max(&cols, true),
            row_first_quarter_max: quarter_max(&rows, false),
            row_last_quarter_max: quarter_max(&rows, true),
        }
    }

    /// `‖Γ* uₙ‖` decays: `Γ* uₙ = T*(m uₙ)` and `‖m uₙ‖ → 0`.
    pub fn adjoint_decays(&self) -> bool {
        self.row_last_quarter_max < self.row_first_quarter_max
    }

    pub fn columns_decay(&self) -> bool {
        self.column_last_quarter_max < self.column_first_quarter_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub multiplier: Multiplier,
    pub cutoff: f64,
    pub probe: ProbeGrid,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            multiplier: Multiplier::default(),
            cutoff: DEFAULT_CUTOFF,
            probe: ProbeGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstKindReport {
    /// `‖M(A₀ - λA) f - M g‖ / ‖M g‖`.
    pub multiplied_residual: f64,
    pub hs_norm: f64,
    pub hs_norm_gamma0: f64,
    /// `‖M A‖_F`, the basis projection of `Γ`.
    pub coefficient_hs_norm: f64,
    pub carleman_sup: f64,
    /// `(sup² + slack)^{1/2} · ‖m‖`.
    pub hs_bound: f64,
    /// Allowance on `sup²` for peaks between scan points.
    pub bound_slack: f64,
    pub multiplier_norm: f64,
    /// `max |m(s) T(s, t) - Σ (MA)ₘₙ uₘ(s) uₙ(t)|` over the probe grid.
    pub truncation_discrepancy: f64,
    pub recovery_error: f64,
    pub discarded_energy: f64,
    pub kept: usize,
    pub condition: f64,
    pub compact_decay: CompactDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub passage_residual: f64,
    pub round_trip_error: f64,
    pub condition: f64,
    /// Hilbert–Schmidt norm of the kernel of `T₀ - λT`.
    pub hs_norm: f64,
    pub carleman_sup: f64,
    pub tail_sup: f64,
    pub discarded_energy: f64,
    pub factorization_error: f64,
    pub basis_size: usize,
    pub cells: usize,
    pub projected: bool,
    /// `‖c - Uφ‖ / ‖Uφ‖` for the second-kind solve; `None` when `α = 0` or
    /// the system is near singular.
    pub solve_error: Option<f64>,
    pub first_kind: Option<FirstKindReport>,
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Manufactures `ψ` from `φ`, reduces, and measures how well the reduced
/// equation holds at `f = Uφ`.
pub fn verify_equivalence(
    p: &ThirdKindProblem,
    alpha: Complex64,
    seq: &KorotkovSequence,
    u: &UnitarySurrogate,
    phi: &GridFunction,
    options: &VerifyOptions,
) -> Result<Report> {
    let (pencil, _) = reduce(p, alpha, seq, u)?;
    verify_with_pencil(p, &pencil, u, phi, options)
}

/// [`verify_equivalence`] with the λ-independent matrices already computed.
pub fn verify_with_pencil(
    p: &ThirdKindProblem,
    pencil: &KernelPencil,
    u: &UnitarySurrogate,
    phi: &GridFunction,
    options: &VerifyOptions,
) -> Result<Report> {
    let lambda = p.lambda();
    let psi = forward_third_kind(p, phi)?;
    let g = u.forward(&psi)?;
    let f = u.forward(phi)?;
    let system = pencil.system_matrix(lambda);
    let passage_residual = relative((&system * &f - &g).norm(), g.norm());
    let round_trip_error = u.projection_error(phi)?;

    let kernel = pencil.kernel(lambda);
    let radius = vanishing_radius(&pencil.basis);
    let points = (2.0 * radius / 0.05).ceil() as usize + 1;
    let sup = carleman_sup(&kernel, radius, points);
    let factorization = m_factorize(kernel.coefficients());
    let factorization_error = factorization.reconstruction_error(kernel.coefficients());
    let tail_sup = absolute_tail_sup(&kernel, &factorization, &options.probe, pencil.size() / 2);

    let zero = Complex64::new(0.0, 0.0);
    let (condition, solve_error, discarded_energy, first_kind) = if pencil.alpha != zero {
        match solve_second_kind(pencil, lambda, &g) {
            Ok(sol) => (sol.condition, Some(relative((&sol.c - &f).norm(), f.norm())), 0.0, None),
            Err(Error::NearSingular { condition }) => (condition, None, 0.0, None),
            Err(e) => return Err(e),
        }
    } else {
        let fp = make_first_kind(pencil, &options.multiplier, &g)?;
        let fk = first_kind_report(&fp, lambda, &f, options)?;
        (fk.condition, None, fk.discarded_energy, Some(fk))
    };

    Ok(Report {
        passage_residual,
        round_trip_error,
        condition,
        hs_norm: kernel.hs_norm(),
        carleman_sup: sup.sup,
        tail_sup,
        discarded_energy,
        factorization_error,
        basis_size: u.size(),
        cells: u.space().cell_count(),
        projected: u.is_projected(),
        solve_error,
        first_kind,
    })
}

fn first_kind_report(
    fp: &FirstKindProblem,
    lambda: Complex64,
    f: &DVector<Complex64>,
    options: &VerifyOptions,
) -> Result<FirstKindReport> {
    let system = fp.system_matrix(lambda);
    let multiplied_residual = relative((&system * f - &fp.w).norm(), fp.w.norm());
    let gamma = fp.gamma()?;
    let gamma0 = fp.gamma0()?;
    let t = fp.pencil.t();
    let radius = vanishing_radius(&fp.pencil.basis);
    let points = (2.0 * radius / 0.05).ceil() as usize + 1;
    let sup = carleman_sup(&t, radius, points);
    let multiplier_norm = fp.multiplier.l2_norm().unwrap_or(f64::INFINITY);
    let hs_bound = (sup.sup * sup.sup + sup.squared_slack).sqrt() * multiplier_norm;
    let solution = solve_first_kind(fp, lambda, options.cutoff)?;
    Ok(FirstKindReport {
        multiplied_residual,
        hs_norm: gamma.hs_norm(),
        hs_norm_gamma0: gamma0.hs_norm(),
        coefficient_hs_norm: gamma.coefficient_hs_norm(),
        carleman_sup: sup.sup,
        hs_bound,
        bound_slack: sup.squared_slack,
        multiplier_norm,
        truncation_discrepancy: gamma.truncation_discrepancy(&options.probe),
        recovery_error: relative((&solution.c - f).norm(), f.norm()),
        discarded_energy: solution.discarded_energy,
        kept: solution.kept,
        condition: solution.condition,
        compact_decay: CompactDecay::of(gamma.hs_coefficients()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::build_space;
    use crate::rademacher::{build_sequence, SequenceParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_function(space: MeasureSpace, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = DVector::from_fn(space.cell_count(), |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        GridFunction::from_values(space, values).unwrap()
    }

    fn pencil_from(alpha: f64, a0: DMatrix<Complex64>, a: DMatrix<Complex64>) -> KernelPencil {
        KernelPencil::new(
            c(alpha),
            CoefficientMatrix::new(a0).unwrap(),
            CoefficientMatrix::new(a).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let s = build_space(4).unwrap();
        let phi = random_function(s, 1);
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::from_fn(s, |x, y| c(x + y));
        let p = ThirdKindProblem::new(h.clone(), k.clone(), c(0.0), GridFunction::zeros(s)).unwrap();
        assert_eq!(forward_third_kind(&p, &phi).unwrap(), h.multiply(&phi).unwrap());

        let p = ThirdKindProblem::new(
            GridFunction::zeros(s),
            GridKernel::from_fn(s, |_, _| c(1.0)),
            c(1.0),
            GridFunction::zeros(s),
        )
        .unwrap();
        let psi = forward_third_kind(&p, &GridFunction::constant(s, c(1.0))).unwrap();
        assert!(psi.values().iter().all(|v| (v - c(-1.0)).norm() < 1e-15));
        let psi = forward_third_kind(&p, &GridFunction::zeros(s)).unwrap();
        assert!(psi.values().iter().all(|v| *v == c(0.0)));
    }

    #[test]
    fn second_kind_examples() {
        let n = 4;
        let z = DMatrix::zeros(n, n);
        let g = DVector::from_fn(n, |i, _| c(i as f64 + 1.0));
        let p = pencil_from(1.0, z.clone(), z.clone());
        assert_eq!(solve_second_kind(&p, c(0.7), &g).unwrap().c, g);

        let mut e00 = DMatrix::zeros(n, n);
        e00[(0, 0)] = c(1.0);
        let p = pencil_from(1.0, z.clone(), e00.clone());
        let mut e0 = DVector::zeros(n);
        e0[0] = c(1.0);
        let sol = solve_second_kind(&p, c(0.5), &e0).unwrap();
        assert!((sol.c[0] - c(2.0)).norm() < 1e-15);
        assert!(sol.c.iter().skip(1).all(|v| v.norm() < 1e-15));

        assert!(matches!(
            solve_second_kind(&p, c(1.0), &e0),
            Err(Error::NearSingular { .. })
        ));
        let p0 = pencil_from(0.0, z.clone(), z);
        assert_eq!(solve_second_kind(&p0, c(1.0), &e0), Err(Error::AlphaZero));
    }

    #[test]
    fn system_matrix_is_affine_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = || DMatrix::from_fn(5, 5, |_, _| Complex64::new(rng.gen(), rng.gen()));
        let p = pencil_from(0.3, m(), m());
        let lambda = Complex64::new(0.7, -1.3);
        let lhs = p.system_matrix(lambda);
        let rhs = p.system_matrix(c(0.0)) - p.a.entries() * lambda;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn first_kind_examples() {
        let n = 6;
        let z = DMatrix::<Complex64>::zeros(n, n);
        let p = pencil_from(0.0, z.clone(), DMatrix::identity(n, n));
        let fp = make_first_kind(&p, &Multiplier::default(), &DVector::zeros(n)).unwrap();
        assert!(fp.w.iter().all(|v| *v == c(0.0)));
        assert_eq!(
            make_first_kind(&pencil_from(1.0, z.clone(), z.clone()), &Multiplier::default(), &DVector::zeros(n))
                .unwrap_err(),
            Error::AlphaNotZero
        );

        // M (A₀ - λA) = identity.
        let unit = FirstKindProblem {
            pencil: pencil_from(0.0, DMatrix::identity(n, n), z.clone()),
            multiplier: Multiplier::Unit,
            m: DMatrix::identity(n, n),
            w: DVector::from_fn(n, |i, _| c(i as f64)),
        };
        for cutoff in [1e-12, 0.5, 0.99] {
            let sol = solve_first_kind(&unit, c(2.0), cutoff).unwrap();
            assert!((&sol.c - &unit.w).norm() < 1e-14);
            assert_eq!(sol.discarded_energy, 0.0);
        }

        let zero = FirstKindProblem {
            pencil: pencil_from(0.0, z.clone(), z),
            ..unit.clone()
        };
        assert_eq!(solve_first_kind(&zero, c(1.0), 1e-10).unwrap_err(), Error::DegenerateSystem);
        assert!(solve_first_kind(&unit, c(1.0), 1.0).is_err());
    }

    #[test]
    fn first_kind_manufacture_then_solve() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a0 = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 3.0 } else { 0.0 };
            Complex64::new(d + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
        });
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-0.3..0.3), 0.0));
        let p = pencil_from(0.0, a0, a);
        let c0 = DVector::from_fn(n, |_, _| Complex64::new(rng.gen(), rng.gen()));
        let lambda = Complex64::new(0.4, 0.1);
        let g = p.kernel_matrix(lambda).entries() * &c0;
        let fp = make_first_kind(&p, &Multiplier::default(), &g).unwrap();
        let sol = solve_first_kind(&fp, lambda, DEFAULT_CUTOFF).unwrap();
        assert_eq!(sol.discarded_energy, 0.0);
        assert!((&sol.c - &c0).norm() <= 1e-8 * c0.norm());
    }

    #[test]
    fn trivial_reduction() {
        let s = build_space(4).unwrap();
        let alpha = c(0.5);
        // H ≡ α has no bands, so reduce against the plain indicator basis.
        let h = GridFunction::constant(s, alpha);
        let k = GridKernel::zeros(s);
        let other = GridFunction::from_fn(s, |y| c(y));
        let seq = build_sequence(&other, &k, alpha, &SequenceParams::new(2)).unwrap();
        let u = UnitarySurrogate::from_sequence(&seq, None).unwrap();
        let phi = random_function(s, 3);
        let p = ThirdKindProblem::manufactured(h, k, c(0.0), &phi).unwrap();
        let (pencil, g) = reduce(&p, alpha, &seq, &u).unwrap();
        assert!(pencil.a0.frobenius_norm() < 1e-15);
        let f = u.forward(&phi).unwrap();
        assert!((f * alpha - g).norm() < 1e-13);
    }

    #[test]
    fn passage_identity_linear_coefficient() {
        let s = build_space(6).unwrap();
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::from_fn(s, |x, y| c(x * y));
        let alpha = c(0.5);
        let seq = build_sequence(&h, &k, alpha, &SequenceParams::new(3)).unwrap();
        let p = ThirdKindProblem::new(h, k, c(0.0), GridFunction::zeros(s)).unwrap();
        let p = p.at_depth(seq.space().depth()).unwrap();
        let u = UnitarySurrogate::from_sequence(&seq, None).unwrap();
        let phi = random_function(seq.space(), 9);
        let report = verify_equivalence(&p, alpha, &seq, &u, &phi, &VerifyOptions::default()).unwrap();
        assert!(report.passage_residual <= 1e-10, "{}", report.passage_residual);
        assert!(report.round_trip_error <= 1e-10);
        assert!(report.solve_error.unwrap() <= 1e-9);
        assert!(report.first_kind.is_none());
    }

    #[test]
    fn zero_phi_gives_zero_residuals() {
        let s = build_space(5).unwrap();
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::from_fn(s, |x, y| c(x * y));
        let seq = build_sequence(&h, &k, c(0.25), &SequenceParams::new(2)).unwrap();
        let p = ThirdKindProblem::new(h, k, c(1.0), GridFunction::zeros(s))
            .unwrap()
            .at_depth(seq.space().depth())
            .unwrap();
        let u = UnitarySurrogate::from_sequence(&seq, None).unwrap();
        let r = verify_equivalence(&p, c(0.25), &seq, &u, &GridFunction::zeros(seq.space()), &VerifyOptions::default())
            .unwrap();
        assert_eq!(r.passage_residual, 0.0);
        assert_eq!(r.round_trip_error, 0.0);
    }

    #[test]
    fn alpha_mismatch_is_rejected() {
        let s = build_space(4).unwrap();
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::zeros(s);
        let seq = build_sequence(&h, &k, c(0.0), &SequenceParams::new(2)).unwrap();
        let u = UnitarySurrogate::from_sequence(&seq, None).unwrap();
        let p = ThirdKindProblem::new(h, k, c(1.0), GridFunction::zeros(s))
            .unwrap()
            .at_depth(seq.space().depth())
            .unwrap();
        assert!(reduce(&p, c(0.5), &seq, &u).is_err());
    }

    #[test]
    fn compact_decay_of_identity_multiplier() {
        let basis = SmoothBasis::hermite(32);
        let m = multiplier_matrix(&Multiplier::default(), &basis, 40).unwrap();
        let d = CompactDecay::of(&m);
        assert!(d.adjoint_decays());
        assert!(d.columns_decay());
    }
}
