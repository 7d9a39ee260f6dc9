//! The λ-independent construction chain: sequence, completion, surrogate and
//! pencil matrices, computed once and shared by every λ.

use num_complex::Complex64;

use crate::error::Result;
use crate::measure_space::{GridFunction, GridKernel};
use crate::rademacher::{build_sequence, KorotkovSequence, SequenceParams};
use crate::solvers::{reduce_pencil, verify_with_pencil, KernelPencil, Report, ThirdKindProblem, VerifyOptions};
use crate::unitary::UnitarySurrogate;

#[derive(Debug, Clone)]
pub struct Reduction {
    /// Coefficient on the grid of the sequence.
    pub coefficient: GridFunction,
    /// Kernel on the grid of the sequence.
    pub kernel: GridKernel,
    pub sequence: KorotkovSequence,
    pub surrogate: UnitarySurrogate,
    pub pencil: KernelPencil,
}

/// Builds the sequence for `(H, K, α)`, moves `H` and `K` to its grid, and
/// reduces. `basis_size = None` keeps the full grid basis.
pub fn reduce_chain(
    h: &GridFunction,
    k: &GridKernel,
    alpha: Complex64,
    params: &SequenceParams,
    basis_size: Option<usize>,
) -> Result<Reduction> {
    let sequence = build_sequence(h, k, alpha, params)?;
    let depth = sequence.space().depth();
    let coefficient = h.split_to_depth(depth)?;
    let kernel = k.at_depth(depth)?;
    let surrogate = UnitarySurrogate::from_sequence(&sequence, basis_size)?;
    let pencil = reduce_pencil(&coefficient, &kernel, alpha, &sequence, &surrogate)?;
    Ok(Reduction {
        coefficient,
        kernel,
        sequence,
        surrogate,
        pencil,
    })
}

impl Reduction {
    pub fn alpha(&self) -> Complex64 {
        self.pencil.alpha
    }

    /// Third-kind problem at `λ` with `ψ` manufactured from `phi`.
    pub fn problem(&self, lambda: Complex64, phi: &GridFunction) -> Result<ThirdKindProblem> {
        ThirdKindProblem::manufactured(self.coefficient.clone(), self.kernel.clone(), lambda, phi)
    }

    pub fn verify(&self, lambda: Complex64, phi: &GridFunction, options: &VerifyOptions) -> Result<Report> {
        let p = self.problem(lambda, phi)?;
        verify_with_pencil(&p, &self.pencil, &self.surrogate, phi, options)
    }
}
