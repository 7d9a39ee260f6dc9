//! Finite unitary map `U: L²(Y, μ) → L²(ℝ)` and operator matrix elements.
//!
//! `U` is fixed by pairing an orthonormal basis `{bₙ}` of the grid space,
//! whose first members are the Korotkov functions `eₙ`, with the Hermite
//! functions `{uₙ}`: `U bₙ = uₙ`. A grid operator `S` then becomes the
//! bilinear kernel with coefficients `a_{mn} = ⟨S bₙ, bₘ⟩`, which is exactly
//! the matrix of `U S U⁻¹` in `{uₙ}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure_space::{GridFunction, GridKernel, MeasureSpace};
use crate::rademacher::KorotkovSequence;
use crate::smooth_basis::SmoothBasis;

const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of the grid space starting with `leading`, completed by
/// Gram–Schmidt on the cell indicators in index order. Indicators already in
/// the span (residual norm below 1e-10) are skipped.
pub fn complete_functions(leading: &[GridFunction], space: MeasureSpace) -> Result<Vec<GridFunction>> {
    for f in leading {
        space.ensure_same(&f.space())?;
    }
    let q = complete_columns(leading, space);
    let inv_sqrt_h = space.cell_measure().sqrt().recip();
    q.column_iter()
        .map(|col| GridFunction::from_values(space, col.into_owned() * Complex64::new(inv_sqrt_h, 0.0)))
        .collect()
}

/// [`complete_functions`] applied to the sequence `{eₙ}`.
pub fn complete_basis(seq: &KorotkovSequence, space: MeasureSpace) -> Result<Vec<GridFunction>> {
    complete_functions(seq.functions(), space)
}

/// Columns are the basis scaled by `√h`, so the matrix is unitary in the
/// plain Euclidean product.
fn complete_columns(leading: &[GridFunction], space: MeasureSpace) -> DMatrix<Complex64> {
    let n = space.cell_count();
    let sqrt_h = Complex64::new(space.cell_measure().sqrt(), 0.0);
    let mut q = DMatrix::<Complex64>::zeros(n, n);
    let mut filled = 0usize;
    let push = |q: &mut DMatrix<Complex64>, filled: &mut usize, mut v: DVector<Complex64>| {
        if *filled == n {
            return;
        }
        let start = v.norm();
        // Two passes of classical Gram–Schmidt.
        for _ in 0..2 {
            if *filled == 0 {
                break;
            }
            let basis = q.columns(0, *filled);
            let coeffs = basis.ad_mul(&v);
            v -= basis * coeffs;
        }
        let norm = v.norm();
        if start == 0.0 || norm < RANK_TOL * start.max(1.0) {
            return;
        }
        q.set_column(*filled, &(v / Complex64::new(norm, 0.0)));
        *filled += 1;
    };
    for f in leading {
        push(&mut q, &mut filled, f.values() * sqrt_h);
    }
    for cell in 0..n {
        let mut v = DVector::zeros(n);
        v[cell] = Complex64::new(1.0, 0.0);
        push(&mut q, &mut filled, v);
    }
    debug_assert_eq!(filled, n);
    q
}

/// The truncated basis pairing `bₙ ↔ uₙ`, `n < N`.
#[derive(Debug, Clone)]
pub struct UnitarySurrogate {
    space: MeasureSpace,
    /// Column `n` holds the cell values of `bₙ`.
    b: DMatrix<Complex64>,
    basis: SmoothBasis,
}

impl UnitarySurrogate {
    /// `size = None` pairs the full grid basis (exact unitary); a smaller
    /// size keeps only the first `size` functions (projected mode).
    pub fn new(space: MeasureSpace, functions: &[GridFunction], size: Option<usize>) -> Result<Self> {
        let cells = space.cell_count();
        let size = size.unwrap_or(cells);
        if size == 0 || size > cells {
            return Err(Error::InvalidArgument(format!(
                "basis size must lie in 1..={cells}, got {size}"
            )));
        }
        if functions.len() < size {
            return Err(Error::SizeMismatch {
                expected: size,
                found: functions.len(),
            });
        }
        let mut b = DMatrix::zeros(cells, size);
        for (n, f) in functions.iter().take(size).enumerate() {
            space.ensure_same(&f.space())?;
            b.set_column(n, f.values());
        }
        Ok(Self {
            space,
            b,
            basis: SmoothBasis::hermite(size),
        })
    }

    /// Completes `{eₙ}` to a basis and pairs it with the Hermite functions.
    pub fn from_sequence(seq: &KorotkovSequence, size: Option<usize>) -> Result<Self> {
        let functions = complete_basis(seq, seq.space())?;
        Self::new(seq.space(), &functions, size)
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn size(&self) -> usize {
        self.b.ncols()
    }

    pub fn basis(&self) -> &SmoothBasis {
        &self.basis
    }

    /// True when only part of the grid basis is paired.
    pub fn is_projected(&self) -> bool {
        self.size() < self.space.cell_count()
    }

    pub fn b_values(&self) -> &DMatrix<Complex64> {
        &self.b
    }

    pub fn b_function(&self, n: usize) -> GridFunction {
        GridFunction::from_values(self.space, self.b.column(n).into_owned())
            .expect("basis columns are finite")
    }

    /// `max |⟨bₘ, bₙ⟩ - δₘₙ|`.
    pub fn gram_defect(&self) -> f64 {
        let h = self.space.cell_measure();
        let g = self.b.ad_mul(&self.b) * Complex64::new(h, 0.0);
        (g - DMatrix::identity(self.size(), self.size())).camax()
    }

    /// Coefficients `cₙ = ⟨φ, bₙ⟩` of `Uφ` in `{uₙ}`.
    pub fn forward(&self, phi: &GridFunction) -> Result<DVector<Complex64>> {
        self.space.ensure_same(&phi.space())?;
        Ok(self.b.ad_mul(phi.values()) * Complex64::new(self.space.cell_measure(), 0.0))
    }

    /// `Σ cₙ bₙ`; shorter coefficient vectors are zero-padded.
    pub fn inverse(&self, coeffs: &DVector<Complex64>) -> Result<GridFunction> {
        if coeffs.len() > self.size() {
            return Err(Error::SizeMismatch {
                expected: self.size(),
                found: coeffs.len(),
            });
        }
        let values = self.b.columns(0, coeffs.len()) * coeffs;
        GridFunction::from_values(self.space, values)
    }

    /// `‖φ - U⁻¹Uφ‖ / ‖φ‖`, zero for `φ = 0`.
    pub fn projection_error(&self, phi: &GridFunction) -> Result<f64> {
        let back = self.inverse(&self.forward(phi)?)?;
        let norm = phi.norm();
        let diff = back.sub(phi)?.norm();
        Ok(if norm == 0.0 { diff } else { diff / norm })
    }
}

pub fn apply_forward(u: &UnitarySurrogate, phi: &GridFunction) -> Result<DVector<Complex64>> {
    u.forward(phi)
}

pub fn apply_inverse(u: &UnitarySurrogate, coeffs: &DVector<Complex64>) -> Result<GridFunction> {
    u.inverse(coeffs)
}

/// Bounded operator on the grid space.
#[derive(Debug, Clone, Copy)]
pub enum GridOperator<'a> {
    Identity(MeasureSpace),
    /// Multiplication by `coefficient - shift`.
    Multiplication {
        coefficient: &'a GridFunction,
        shift: Complex64,
        adjoint: bool,
    },
    Integral {
        kernel: &'a GridKernel,
        adjoint: bool,
    },
}

impl<'a> GridOperator<'a> {
    pub fn multiplication(coefficient: &'a GridFunction, shift: Complex64) -> Self {
        GridOperator::Multiplication {
            coefficient,
            shift,
            adjoint: false,
        }
    }

    pub fn integral(kernel: &'a GridKernel) -> Self {
        GridOperator::Integral {
            kernel,
            adjoint: false,
        }
    }

    pub fn space(&self) -> MeasureSpace {
        match self {
            GridOperator::Identity(s) => *s,
            GridOperator::Multiplication { coefficient, .. } => coefficient.space(),
            GridOperator::Integral { kernel, .. } => kernel.space(),
        }
    }

    pub fn adjoint(&self) -> Self {
        match *self {
            GridOperator::Identity(s) => GridOperator::Identity(s),
            GridOperator::Multiplication {
                coefficient,
                shift,
                adjoint,
            } => GridOperator::Multiplication {
                coefficient,
                shift,
                adjoint: !adjoint,
            },
            GridOperator::Integral { kernel, adjoint } => GridOperator::Integral {
                kernel,
                adjoint: !adjoint,
            },
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.space().ensure_same(&f.space())?;
        let values = self.apply_columns(&DMatrix::from_column_slice(
            f.values().len(),
            1,
            f.values().as_slice(),
        ));
        GridFunction::from_values(f.space(), values.column(0).into_owned())
    }

    /// Applies the operator to every column of a matrix of cell values.
    pub fn apply_columns(&self, columns: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match *self {
            GridOperator::Identity(_) => columns.clone(),
            GridOperator::Multiplication {
                coefficient,
                shift,
                adjoint,
            } => {
                let mut out = columns.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    let d = coefficient.values()[i] - shift;
                    let d = if adjoint { d.conj() } else { d };
                    row *= d;
                }
                out
            }
            GridOperator::Integral { kernel, adjoint } => {
                let h = Complex64::new(kernel.space().cell_measure(), 0.0);
                if adjoint {
                    kernel.entries().ad_mul(columns) * h
                } else {
                    kernel.entries() * columns * h
                }
            }
        }
    }
}

/// Matrix of an operator in an orthonormal basis of `L²(ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix(DMatrix<Complex64>);

impl CoefficientMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::SizeMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.0 - self.0.adjoint()).camax() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `self - λ other`.
    pub fn pencil(&self, lambda: Complex64, other: &CoefficientMatrix) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::SizeMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        Ok(Self(&self.0 - &other.0 * lambda))
    }
}

/// `a_{mn} = ⟨S bₙ, bₘ⟩` for the basis of `u`.
pub fn matrix_elements(op: &GridOperator<'_>, u: &UnitarySurrogate) -> Result<CoefficientMatrix> {
    op.space().ensure_same(&u.space())?;
    let applied = op.apply_columns(&u.b);
    let h = Complex64::new(u.space.cell_measure(), 0.0);
    CoefficientMatrix::new(u.b.ad_mul(&applied) * h)
}
