//! Unitary reduction of third-kind linear integral equations.
//!
//! A third-kind equation `H(x) φ(x) - λ ∫ K(x, y) φ(y) dμ(y) = ψ(x)` on a
//! discretized measure space is carried, by an explicit finite unitary map, to
//! an equivalent second-kind equation on `L²(ℝ)`
//!
//! ```text
//! α f(s) + ∫ (T₀(s, t) - λ T(s, t)) f(t) dt = g(s)
//! ```
//!
//! whose kernels are bilinear series over smooth Hermite functions. When
//! `α = 0` the equation is further recast as a first-kind equation with
//! Hilbert–Schmidt kernels `m(s) T₀(s, t)` and `m(s) T(s, t)`.
//!
//! The building blocks, bottom up:
//!
//! * [`measure_space`]: dyadic model of `L²([0, 1))`, measurable sets, bisection.
//! * [`rademacher`]: generalized Rademacher functions and the orthonormal
//!   sequence on which `H - α` and `K` become uniformly small.
//! * [`smooth_basis`]: Hermite functions with exact derivatives, the multiplier
//!   `m`, and the Gauss rule used for its matrix.
//! * [`unitary`]: the basis-pairing unitary map and operator matrix elements.
//! * [`kernel`]: bilinear kernels, derivatives, Carleman functions and the
//!   polar M-factorization.
//! * [`solvers`]: forward operator, reduction, second- and first-kind solves
//!   and the end-to-end equivalence report.
//! * [`pipeline`]: glue running the whole chain from a sampled problem.

pub mod error;
pub mod kernel;
pub mod measure_space;
pub mod pipeline;
pub mod quadrature;
pub mod rademacher;
pub mod smooth_basis;
pub mod solvers;
pub mod unitary;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use measure_space::{
    band_set, build_space, inner_product, GridFunction, GridKernel, MeasurableSet, MeasureSpace,
};
pub use rademacher::{
    build_sequence, rademacher, select_index, KorotkovSequence, RademacherFunction,
    SequenceParams,
};
pub use smooth_basis::{basis_value, multiplier_matrix, Multiplier, SmoothBasis};
pub use kernel::{
    absolute_tail_sup, carleman, carleman_sup, eval_kernel, hs_norm, m_factorize, scale_by_multiplier,
    series_consistency, synthesize, BilinearKernel, CarlemanSide, CarlemanSup, MFactorization, ProbeGrid,
    SeriesConsistency,
};
pub use unitary::{complete_basis, matrix_elements, CoefficientMatrix, GridOperator, UnitarySurrogate};
pub use solvers::{
    forward_third_kind, make_first_kind, reduce, solve_first_kind, solve_second_kind, verify_equivalence,
    FirstKindProblem, KernelPencil, Report, ThirdKindProblem, VerifyOptions,
};
pub use pipeline::{reduce_chain, Reduction};
