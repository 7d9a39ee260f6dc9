//! Generalized Rademacher functions and the Korotkov orthonormal sequence.
//!
//! For a set `E` of positive measure, `R_{n,E}` is `±(μE)^{-1/2}` on the `2ⁿ`
//! leaves of an n-fold equal-measure bisection of `E`, with signs alternating
//! `+, -, +, -` in tree order. For the pair `S₁ = H - αI`, `S₂ = K` the
//! sequence `eₙ = R_{kₙ,Eₙ}` lives on the disjoint bands
//! `Eₙ = {ε_{n+1} < |H - α| ≤ εₙ}` and satisfies
//!
//! * `‖S₁ eₙ‖ ≤ εₙ` because `|H - α| ≤ εₙ` on `Eₙ`,
//! * `‖K eₙ‖ + ‖K* eₙ‖ ≤ 1/n` by the choice of `kₙ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure_space::{band_set, GridFunction, GridKernel, MeasurableSet, MeasureSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherFunction {
    base: MeasurableSet,
    level: u32,
    signs: Vec<i8>,
    function: GridFunction,
}

impl RademacherFunction {
    pub fn base_set(&self) -> &MeasurableSet {
        &self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn function(&self) -> &GridFunction {
        &self.function
    }

    pub fn into_function(self) -> GridFunction {
        self.function
    }

    /// `(μE)^{-1/2}`.
    pub fn amplitude(&self) -> f64 {
        self.base.measure().sqrt().recip()
    }

    /// Sign of the function on each cell of the base set, in cell order.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }
}

/// `R_{level,E}`. The cell count of `E` must be divisible by `2^level`.
pub fn rademacher(set: &MeasurableSet, level: u32) -> Result<RademacherFunction> {
    let pieces = 1usize
        .checked_shl(level)
        .filter(|&p| p != 0)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} too large")))?;
    let cells = set.len();
    if level == 0 || cells == 0 || cells % pieces != 0 {
        return Err(Error::NotBisectable { cells, pieces });
    }
    let piece = cells / pieces;
    // Leaves of the sorted-half bisection tree are contiguous runs of the
    // sorted index list.
    let signs: Vec<i8> = (0..cells)
        .map(|p| if (p / piece) % 2 == 0 { 1 } else { -1 })
        .collect();
    let amp = set.measure().sqrt().recip();
    let space = set.space();
    let mut values = nalgebra::DVector::zeros(space.cell_count());
    for (&cell, &s) in set.cells().iter().zip(&signs) {
        values[cell] = Complex64::new(amp * f64::from(s), 0.0);
    }
    let function = GridFunction::from_values(space, values)?;
    Ok(RademacherFunction {
        base: set.clone(),
        level,
        signs,
        function,
    })
}

/// `(‖K R‖, ‖K* R‖)` computed from the integer sign pattern, so that kernels
/// constant in the integration variable give exactly zero.
pub fn rademacher_operator_norms(kernel: &GridKernel, r: &RademacherFunction) -> Result<(f64, f64)> {
    let space = kernel.space();
    if space != r.base.space() {
        return Err(Error::SpaceMismatch {
            left: space.depth(),
            right: r.base.space().depth(),
        });
    }
    let k = kernel.entries();
    let n = space.cell_count();
    let h = space.cell_measure();
    let scale = r.amplitude() * h;
    let cells = r.base.cells();

    let mut forward = vec![Complex64::new(0.0, 0.0); n];
    for (&j, &s) in cells.iter().zip(&r.signs) {
        let col = k.column(j);
        if s > 0 {
            forward.iter_mut().zip(col.iter()).for_each(|(acc, v)| *acc += v);
        } else {
            forward.iter_mut().zip(col.iter()).for_each(|(acc, v)| *acc -= v);
        }
    }
    // (K* R)(xᵢ) = Σⱼ conj(K(yⱼ, xᵢ)) R(yⱼ) h
    let mut backward = vec![Complex64::new(0.0, 0.0); n];
    for (i, acc) in backward.iter_mut().enumerate() {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&j, &s) in cells.iter().zip(&r.signs) {
            let v = k[(j, i)].conj();
            if s > 0 {
                sum += v;
            } else {
                sum -= v;
            }
        }
        *acc = sum;
    }
    let norm = |v: &[Complex64]| (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt() * scale;
    Ok((norm(&forward), norm(&backward)))
}

/// Outcome of the search for an index `k` with `‖K R_{k,E}‖ + ‖K* R_{k,E}‖ ≤ 1/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexChoice {
    pub level: u32,
    pub achieved: f64,
    /// Grid on which the index was found; deeper than the input grid when the
    /// search had to refine.
    pub space: MeasureSpace,
}

/// Smallest `k` with `‖K R_{k,E}‖ + ‖K* R_{k,E}‖ ≤ 1/n`.
///
/// When `E` cannot be bisected further the grid is refined (kernel and set
/// re-sampled) up to `depth_max` and the search continues at the next level.
pub fn select_index(
    kernel: &GridKernel,
    set: &MeasurableSet,
    n: usize,
    depth_max: u32,
) -> Result<IndexChoice> {
    if set.is_empty() {
        return Err(Error::InvalidSet("index search needs a set of positive measure".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("band numbers start at 1".into()));
    }
    kernel.space().ensure_same(&set.space())?;
    let target = 1.0 / n as f64;
    let mut kernel = std::borrow::Cow::Borrowed(kernel);
    let mut set = std::borrow::Cow::Borrowed(set);
    let mut best = f64::INFINITY;
    let mut level = 1u32;
    loop {
        let pieces = 1usize << level;
        if set.len() % pieces == 0 {
            let r = rademacher(&set, level)?;
            let (fwd, adj) = rademacher_operator_norms(&kernel, &r)?;
            let achieved = fwd + adj;
            if achieved <= target {
                return Ok(IndexChoice {
                    level,
                    achieved,
                    space: set.space(),
                });
            }
            best = best.min(achieved);
            level += 1;
            continue;
        }
        let depth = set.space().depth();
        if depth >= depth_max {
            return Err(Error::ToleranceUnreachable {
                band: n,
                achieved: best,
                target,
                depth,
            });
        }
        kernel = std::borrow::Cow::Owned(kernel.refined()?);
        set = std::borrow::Cow::Owned(set.refined()?);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceParams {
    /// Number of bands.
    pub count: usize,
    /// `εₙ = eps0 · ratioⁿ`.
    pub eps0: f64,
    pub ratio: f64,
    pub depth_max: u32,
}

impl SequenceParams {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            ..Self::default()
        }
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        self.eps0 * self.ratio.powi(n as i32)
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidArgument("at least one band is required".into()));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        Ok(())
    }
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self {
            count: 4,
            eps0: 1.0,
            ratio: 0.5,
            depth_max: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandDiagnostics {
    /// `‖(H - α) eₙ‖`
    pub norm_s1: f64,
    /// `‖(H - α)* eₙ‖`
    pub norm_s1_adjoint: f64,
    /// `‖K eₙ‖`
    pub norm_s2: f64,
    /// `‖K* eₙ‖`
    pub norm_s2_adjoint: f64,
}

#[derive(Debug, Clone)]
pub struct KorotkovSequence {
    space: MeasureSpace,
    alpha: Complex64,
    epsilons: Vec<f64>,
    bands: Vec<MeasurableSet>,
    levels: Vec<u32>,
    functions: Vec<GridFunction>,
    diagnostics: Vec<BandDiagnostics>,
}

impl KorotkovSequence {
    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// `ε₁, …, ε_count`.
    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn bands(&self) -> &[MeasurableSet] {
        &self.bands
    }

    /// Bisection depths `kₙ`.
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn functions(&self) -> &[GridFunction] {
        &self.functions
    }

    pub fn diagnostics(&self) -> &[BandDiagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Serializable summary, one entry per band.
    pub fn report(&self) -> SequenceReport {
        SequenceReport {
            alpha: [self.alpha.re, self.alpha.im],
            depth: self.space.depth(),
            bands: (0..self.len())
                .map(|i| BandReport {
                    n: i + 1,
                    epsilon: self.epsilons[i],
                    band_cells: self.bands[i].cells().to_vec(),
                    band_measure: self.bands[i].measure(),
                    k: self.levels[i],
                    norm_s1: self.diagnostics[i].norm_s1,
                    norm_s2_sum: self.diagnostics[i].norm_s2 + self.diagnostics[i].norm_s2_adjoint,
                    norm_s2: self.diagnostics[i].norm_s2,
                    norm_s2_adjoint: self.diagnostics[i].norm_s2_adjoint,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub alpha: [f64; 2],
    pub depth: u32,
    pub bands: Vec<BandReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub n: usize,
    pub epsilon: f64,
    pub band_cells: Vec<usize>,
    pub band_measure: f64,
    pub k: u32,
    #[serde(rename = "norm_S1")]
    pub norm_s1: f64,
    #[serde(rename = "norm_S2_sum")]
    pub norm_s2_sum: f64,
    #[serde(rename = "norm_S2")]
    pub norm_s2: f64,
    #[serde(rename = "norm_S2_adjoint")]
    pub norm_s2_adjoint: f64,
}

/// Builds `eₙ = R_{kₙ,Eₙ}` for `n = 1..=count`.
///
/// If an index search has to refine the grid, the whole construction restarts
/// on the finer grid: cells of `H` are split with their values kept, so each
/// band is the refinement of its coarse counterpart, and `K` is re-sampled.
pub fn build_sequence(
    coefficient: &GridFunction,
    kernel: &GridKernel,
    alpha: Complex64,
    params: &SequenceParams,
) -> Result<KorotkovSequence> {
    params.validate()?;
    coefficient.space().ensure_same(&kernel.space())?;
    let mut h = std::borrow::Cow::Borrowed(coefficient);
    let mut k = std::borrow::Cow::Borrowed(kernel);
    'restart: loop {
        let space = h.space();
        let mut bands = Vec::with_capacity(params.count);
        let mut levels = Vec::with_capacity(params.count);
        let mut functions = Vec::with_capacity(params.count);
        let mut diagnostics = Vec::with_capacity(params.count);
        let shifted: Vec<f64> = h.values().iter().map(|v| (v - alpha).norm()).collect();
        for n in 1..=params.count {
            let hi = params.epsilon(n);
            let lo = params.epsilon(n + 1);
            let band = band_set(&h, alpha, lo, hi)?;
            if band.is_empty() {
                return Err(Error::EmptyBand { band: n, lo, hi });
            }
            let choice = select_index(&k, &band, n, params.depth_max)?;
            if choice.space != space {
                let depth = choice.space.depth();
                h = std::borrow::Cow::Owned(h.split_to_depth(depth)?);
                k = std::borrow::Cow::Owned(k.at_depth(depth)?);
                continue 'restart;
            }
            let r = rademacher(&band, choice.level)?;
            let (norm_s2, norm_s2_adjoint) = rademacher_operator_norms(&k, &r)?;
            let cell_h = space.cell_measure();
            let s1_sq: f64 = band
                .cells()
                .iter()
                .map(|&c| shifted[c] * shifted[c])
                .sum::<f64>()
                * cell_h
                / band.measure();
            let norm_s1 = s1_sq.sqrt();
            diagnostics.push(BandDiagnostics {
                norm_s1,
                norm_s1_adjoint: norm_s1,
                norm_s2,
                norm_s2_adjoint,
            });
            levels.push(choice.level);
            functions.push(r.into_function());
            bands.push(band);
        }
        return Ok(KorotkovSequence {
            space,
            alpha,
            epsilons: (1..=params.count).map(|n| params.epsilon(n)).collect(),
            bands,
            levels,
            functions,
            diagnostics,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::build_space;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn level_two_on_unit_interval() {
        let s = build_space(4).unwrap();
        let r = rademacher(&s.whole(), 2).unwrap();
        let v = r.function().values();
        for i in 0..16 {
            let expected = match i / 4 {
                0 | 2 => 1.0,
                _ => -1.0,
            };
            assert_eq!(v[i], c(expected), "cell {i}");
        }
    }

    #[test]
    fn level_one_on_half_interval() {
        let s = build_space(3).unwrap();
        let e = MeasurableSet::interval(s, 0.0, 0.5);
        let r = rademacher(&e, 1).unwrap();
        let v = r.function().values();
        let root2 = 2f64.sqrt();
        for (i, sign) in [1.0, 1.0, -1.0, -1.0].into_iter().enumerate() {
            assert!((v[i] - c(sign * root2)).norm() < 1e-15);
        }
        assert!(v.iter().skip(4).all(|z| *z == c(0.0)));
        assert!((r.function().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_two_levels_orthogonal() {
        let s = build_space(2).unwrap();
        let r1 = rademacher(&s.whole(), 1).unwrap();
        let r2 = rademacher(&s.whole(), 2).unwrap();
        assert_eq!(r1.function().inner_product(r2.function()).unwrap(), c(0.0));
    }

    #[test]
    fn matches_recursive_bisection() {
        let s = build_space(6).unwrap();
        let e = MeasurableSet::new(s, (3..35).step_by(1).collect()).unwrap();
        for level in 1..=5u32 {
            let mut leaves = vec![e.clone()];
            for _ in 0..level {
                leaves = leaves
                    .iter()
                    .flat_map(|l| {
                        let (a, b) = l.bisect().unwrap();
                        [a, b]
                    })
                    .collect();
            }
            let r = rademacher(&e, level).unwrap();
            for (p, leaf) in leaves.iter().enumerate() {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                for &cell in leaf.cells() {
                    assert_eq!(r.function().values()[cell].re, sign * r.amplitude());
                }
            }
        }
    }

    #[test]
    fn divisibility_is_enforced() {
        let s = build_space(3).unwrap();
        let e = MeasurableSet::new(s, vec![0, 1, 2, 3, 4, 5]).unwrap();
        assert!(rademacher(&e, 1).is_ok());
        assert_eq!(
            rademacher(&e, 2).unwrap_err(),
            Error::NotBisectable { cells: 6, pieces: 4 }
        );
    }

    #[test]
    fn constant_kernel_is_annihilated() {
        let s = build_space(5).unwrap();
        let k = GridKernel::from_fn(s, |_, _| c(1.0));
        let e = MeasurableSet::new(s, (4..12).collect()).unwrap();
        for n in [1, 3, 10] {
            let choice = select_index(&k, &e, n, 5).unwrap();
            assert_eq!(choice.level, 1);
            assert_eq!(choice.achieved, 0.0);
        }
    }

    #[test]
    fn rank_one_constant_kernel_is_annihilated() {
        let s = build_space(4).unwrap();
        let a = s.whole().indicator();
        let b = s.whole().indicator();
        let (av, bv) = (a.values().clone(), b.values().clone());
        let k = GridKernel::from_entries(s, &av * bv.adjoint()).unwrap();
        let r = rademacher(&s.whole(), 3).unwrap();
        assert_eq!(rademacher_operator_norms(&k, &r).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn search_refines_when_set_runs_out_of_cells() {
        // Two cells allow only level 1; an unreachable target forces refinement.
        let s = build_space(3).unwrap();
        let k = GridKernel::from_fn(s, |x, y| c((3.0 * x * y).exp()));
        let e = MeasurableSet::new(s, vec![0, 1]).unwrap();
        let err = select_index(&k, &e, 1_000_000, 5).unwrap_err();
        match err {
            Error::ToleranceUnreachable { depth, achieved, .. } => {
                assert_eq!(depth, 5);
                assert!(achieved.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
        let choice = select_index(&k, &e, 30, 8).unwrap();
        assert!(choice.space.depth() > 3);
        assert!(choice.achieved <= 1.0 / 30.0);
    }

    #[test]
    fn constant_coefficient_off_alpha_has_empty_band() {
        let s = build_space(6).unwrap();
        let h = GridFunction::constant(s, c(5.0));
        let k = GridKernel::zeros(s);
        let err = build_sequence(&h, &k, c(3.0), &SequenceParams::new(3)).unwrap_err();
        assert!(matches!(err, Error::EmptyBand { band: 1, .. }));
    }

    #[test]
    fn linear_coefficient_with_constant_kernel() {
        let s = build_space(8).unwrap();
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::from_fn(s, |_, _| c(1.0));
        let seq = build_sequence(&h, &k, c(0.0), &SequenceParams::new(5)).unwrap();
        assert_eq!(seq.levels(), &[1, 1, 1, 1, 1]);
        for d in seq.diagnostics() {
            assert_eq!(d.norm_s2 + d.norm_s2_adjoint, 0.0);
        }
    }

    #[test]
    fn sequence_invariants_hold() {
        let s = build_space(9).unwrap();
        let h = GridFunction::from_fn(s, |y| Complex64::new(y, 0.5 * y));
        let k = GridKernel::from_fn(s, |x, y| Complex64::new((x * y).exp(), x - y));
        let params = SequenceParams {
            count: 5,
            eps0: 1.2,
            ratio: 0.6,
            depth_max: 10,
        };
        let seq = build_sequence(&h, &k, c(0.0), &params).unwrap();
        for (n, d) in seq.diagnostics().iter().enumerate() {
            assert!(d.norm_s1 <= seq.epsilons()[n]);
            assert_eq!(d.norm_s1, d.norm_s1_adjoint);
            assert!(d.norm_s2 + d.norm_s2_adjoint <= 1.0 / (n + 1) as f64);
        }
        let f = seq.functions();
        for i in 0..f.len() {
            for j in 0..f.len() {
                let g = f[i].inner_product(&f[j]).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(expected)).norm() < 1e-12);
            }
        }
        // Diagnostics agree with generic operator application.
        let depth = seq.space().depth();
        let h = h.split_to_depth(depth).unwrap();
        let k = k.at_depth(depth).unwrap();
        for (e, d) in f.iter().zip(seq.diagnostics()) {
            assert!((k.apply(e).unwrap().norm() - d.norm_s2).abs() < 1e-12);
            assert!((k.apply_adjoint(e).unwrap().norm() - d.norm_s2_adjoint).abs() < 1e-12);
            let shifted = GridFunction::from_values(
                seq.space(),
                h.values().map(|v| v - c(0.0)),
            )
            .unwrap();
            assert!((shifted.multiply(e).unwrap().norm() - d.norm_s1).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let s = build_space(4).unwrap();
        let h = GridFunction::from_fn(s, |y| c(y));
        let k = GridKernel::zeros(s);
        for params in [
            SequenceParams { ratio: 1.0, ..SequenceParams::default() },
            SequenceParams { ratio: 0.0, ..SequenceParams::default() },
            SequenceParams { eps0: -1.0, ..SequenceParams::default() },
            SequenceParams { count: 0, ..SequenceParams::default() },
        ] {
            assert!(matches!(
                build_sequence(&h, &k, c(0.0), &params),
                Err(Error::InvalidArgument(_))
            ));
        }
    }
}
