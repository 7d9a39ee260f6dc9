//! Dyadic model of `L²(Y, μ)` with `Y = [0, 1)` and Lebesgue measure.
//!
//! The space at depth `d` has `2^d` half-open cells of measure `2^-d`.
//! Functions are piecewise constant (one complex value per cell) and kernels
//! are sampled at cell centers, so every integral is a midpoint sum.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DEPTH: u32 = 24;

/// Closed-form description of a function on `[0, 1)`, kept so a grid function
/// can be re-sampled after refinement.
pub type PointFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Closed-form description of a kernel on `[0, 1)²`.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasureSpace {
    depth: u32,
}

impl MeasureSpace {
    pub fn new(depth: u32) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(Error::DepthOutOfRange(depth));
        }
        Ok(Self { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cell_count(&self) -> usize {
        1usize << self.depth
    }

    /// `2^-depth`, exact in binary floating point.
    pub fn cell_measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn total_measure(&self) -> f64 {
        1.0
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        let h = self.cell_measure();
        (cell as f64 * h, (cell + 1) as f64 * h)
    }

    pub fn cell_center(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.cell_measure()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cell_count()).map(move |i| self.cell_center(i))
    }

    /// The same interval with every cell halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.depth + 1)
    }

    /// `Y` itself as a measurable set.
    pub fn whole(&self) -> MeasurableSet {
        MeasurableSet {
            space: *self,
            cells: (0..self.cell_count()).collect(),
        }
    }

    pub(crate) fn ensure_same(&self, other: &MeasureSpace) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(())
    }
}

pub fn build_space(depth: u32) -> Result<MeasureSpace> {
    MeasureSpace::new(depth)
}

/// A finite union of grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurableSet {
    space: MeasureSpace,
    cells: Vec<usize>,
}

impl MeasurableSet {
    /// `cells` must be strictly increasing and inside the grid.
    pub fn new(space: MeasureSpace, cells: Vec<usize>) -> Result<Self> {
        if let Some(&last) = cells.last() {
            if last >= space.cell_count() {
                return Err(Error::InvalidSet(format!(
                    "cell {last} outside a grid of {} cells",
                    space.cell_count()
                )));
            }
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSet("cell indices must be strictly increasing".into()));
        }
        Ok(Self { space, cells })
    }

    pub fn empty(space: MeasureSpace) -> Self {
        Self {
            space,
            cells: Vec::new(),
        }
    }

    /// All cells whose closed interval lies inside `[lo, hi)`.
    pub fn interval(space: MeasureSpace, lo: f64, hi: f64) -> Self {
        let cells = (0..space.cell_count())
            .filter(|&i| {
                let (a, b) = space.cell_bounds(i);
                a >= lo && b <= hi
            })
            .collect();
        Self { space, cells }
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.space.cell_measure()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn is_disjoint(&self, other: &MeasurableSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Splits into the first and second half of the sorted cell list.
    pub fn bisect(&self) -> Result<(MeasurableSet, MeasurableSet)> {
        let n = self.cells.len();
        if n == 0 || n % 2 != 0 {
            return Err(Error::NotBisectable { cells: n, pieces: 2 });
        }
        let (a, b) = self.cells.split_at(n / 2);
        Ok((
            MeasurableSet {
                space: self.space,
                cells: a.to_vec(),
            },
            MeasurableSet {
                space: self.space,
                cells: b.to_vec(),
            },
        ))
    }

    /// The same set on the grid of twice the resolution.
    pub fn refined(&self) -> Result<MeasurableSet> {
        let space = self.space.refined()?;
        let cells = self.cells.iter().flat_map(|&c| [2 * c, 2 * c + 1]).collect();
        Ok(MeasurableSet { space, cells })
    }

    /// Characteristic function `χ_E`.
    pub fn indicator(&self) -> GridFunction {
        let mut values = DVector::zeros(self.space.cell_count());
        for &c in &self.cells {
            values[c] = Complex64::new(1.0, 0.0);
        }
        GridFunction {
            space: self.space,
            values,
            source: None,
        }
    }
}

/// Piecewise-constant element of `L²(Y, μ)`.
#[derive(Clone)]
pub struct GridFunction {
    space: MeasureSpace,
    values: DVector<Complex64>,
    source: Option<PointFn>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("depth", &self.space.depth)
            .field("values", &self.values.as_slice())
            .field("sampled", &self.source.is_some())
            .finish()
    }
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.values == other.values
    }
}

impl GridFunction {
    pub fn zeros(space: MeasureSpace) -> Self {
        Self {
            space,
            values: DVector::zeros(space.cell_count()),
            source: None,
        }
    }

    pub fn constant(space: MeasureSpace, value: Complex64) -> Self {
        let f: PointFn = Arc::new(move |_| value);
        Self::sample(space, f)
    }

    pub fn from_values(space: MeasureSpace, values: DVector<Complex64>) -> Result<Self> {
        if values.len() != space.cell_count() {
            return Err(Error::SizeMismatch {
                expected: space.cell_count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(Self {
            space,
            values,
            source: None,
        })
    }

    /// Samples `f` at the cell centers and remembers it for later refinement.
    pub fn sample(space: MeasureSpace, f: PointFn) -> Self {
        let values = DVector::from_iterator(space.cell_count(), space.centers().map(|y| f(y)));
        Self {
            space,
            values,
            source: Some(f),
        }
    }

    pub fn from_fn(space: MeasureSpace, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::sample(space, Arc::new(f))
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<Complex64> {
        self.values
    }

    pub fn source(&self) -> Option<&PointFn> {
        self.source.as_ref()
    }

    pub fn inner_product(&self, other: &GridFunction) -> Result<Complex64> {
        self.space.ensure_same(&other.space)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(sum * self.space.cell_measure())
    }

    pub fn norm(&self) -> f64 {
        (self.values.norm_squared() * self.space.cell_measure()).sqrt()
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> Complex64 {
        self.values.sum() * self.space.cell_measure()
    }

    /// Pointwise product with another grid function.
    pub fn multiply(&self, other: &GridFunction) -> Result<GridFunction> {
        self.space.ensure_same(&other.space)?;
        Ok(GridFunction {
            space: self.space,
            values: self.values.component_mul(&other.values),
            source: None,
        })
    }

    pub fn scale(&self, factor: Complex64) -> GridFunction {
        GridFunction {
            space: self.space,
            values: &self.values * factor,
            source: None,
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.space.ensure_same(&other.space)?;
        Ok(GridFunction {
            space: self.space,
            values: &self.values - &other.values,
            source: None,
        })
    }

    /// Re-samples the closed form on the finer grid, or duplicates cell values
    /// when only samples are known.
    pub fn refined(&self) -> Result<GridFunction> {
        let space = self.space.refined()?;
        Ok(match &self.source {
            Some(f) => Self::sample(space, f.clone()),
            None => GridFunction {
                space,
                values: DVector::from_fn(space.cell_count(), |i, _| self.values[i / 2]),
                source: None,
            },
        })
    }

    /// Refines repeatedly until the grid has the requested depth.
    pub fn at_depth(&self, depth: u32) -> Result<GridFunction> {
        if depth < self.space.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen depth {} to {depth}",
                self.space.depth
            )));
        }
        let mut f = self.clone();
        while f.space.depth < depth {
            f = f.refined()?;
        }
        Ok(f)
    }
}

impl GridFunction {
    /// Refines to `depth` by splitting cells, keeping every value; level sets
    /// of the result are exactly the refined level sets of `self`.
    pub fn split_to_depth(&self, depth: u32) -> Result<GridFunction> {
        if depth < self.space.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen depth {} to {depth}",
                self.space.depth
            )));
        }
        let space = MeasureSpace::new(depth)?;
        let shift = depth - self.space.depth;
        Ok(GridFunction {
            space,
            values: DVector::from_fn(space.cell_count(), |i, _| self.values[i >> shift]),
            source: self.source.clone(),
        })
    }
}

pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.inner_product(g)
}

/// Cells whose center value satisfies `lo < |H - α| ≤ hi`.
pub fn band_set(h: &GridFunction, alpha: Complex64, lo: f64, hi: f64) -> Result<MeasurableSet> {
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "band bounds must satisfy 0 <= lo < hi, got ({lo}, {hi}]"
        )));
    }
    let cells = h
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            let d = (*v - alpha).norm();
            lo < d && d <= hi
        })
        .map(|(i, _)| i)
        .collect();
    Ok(MeasurableSet {
        space: h.space,
        cells,
    })
}

/// Kernel of an integral operator sampled at pairs of cell centers.
///
/// `(Kf)(xᵢ) = Σⱼ K(xᵢ, yⱼ) f(yⱼ) 2^-depth`; the adjoint kernel is the
/// conjugate transpose, so every grid kernel is bi-integral.
#[derive(Clone)]
pub struct GridKernel {
    space: MeasureSpace,
    entries: DMatrix<Complex64>,
    source: Option<KernelFn>,
}

impl fmt::Debug for GridKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridKernel")
            .field("depth", &self.space.depth)
            .field("sampled", &self.source.is_some())
            .finish_non_exhaustive()
    }
}

impl GridKernel {
    pub fn zeros(space: MeasureSpace) -> Self {
        let n = space.cell_count();
        Self {
            space,
            entries: DMatrix::zeros(n, n),
            source: None,
        }
    }

    pub fn from_entries(space: MeasureSpace, entries: DMatrix<Complex64>) -> Result<Self> {
        let n = space.cell_count();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("kernel"));
        }
        Ok(Self {
            space,
            entries,
            source: None,
        })
    }

    pub fn sample(space: MeasureSpace, f: KernelFn) -> Self {
        let n = space.cell_count();
        let centers: Vec<f64> = space.centers().collect();
        let entries = DMatrix::from_fn(n, n, |i, j| f(centers[i], centers[j]));
        Self {
            space,
            entries,
            source: Some(f),
        }
    }

    pub fn from_fn(
        space: MeasureSpace,
        f: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::sample(space, Arc::new(f))
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn source(&self) -> Option<&KernelFn> {
        self.source.as_ref()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.space.ensure_same(&f.space)?;
        Ok(GridFunction {
            space: self.space,
            values: (&self.entries * &f.values) * Complex64::new(self.space.cell_measure(), 0.0),
            source: None,
        })
    }

    pub fn apply_adjoint(&self, f: &GridFunction) -> Result<GridFunction> {
        self.space.ensure_same(&f.space)?;
        Ok(GridFunction {
            space: self.space,
            values: self.entries.ad_mul(&f.values) * Complex64::new(self.space.cell_measure(), 0.0),
            source: None,
        })
    }

    /// The adjoint operator as a kernel in its own right.
    pub fn adjoint(&self) -> GridKernel {
        GridKernel {
            space: self.space,
            entries: self.entries.adjoint(),
            source: self.source.clone().map(|f| {
                let g: KernelFn = Arc::new(move |x, y| f(y, x).conj());
                g
            }),
        }
    }

    pub fn refined(&self) -> Result<GridKernel> {
        let space = self.space.refined()?;
        Ok(match &self.source {
            Some(f) => Self::sample(space, f.clone()),
            None => {
                let n = space.cell_count();
                GridKernel {
                    space,
                    entries: DMatrix::from_fn(n, n, |i, j| self.entries[(i / 2, j / 2)]),
                    source: None,
                }
            }
        })
    }

    pub fn at_depth(&self, depth: u32) -> Result<GridKernel> {
        if depth < self.space.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen depth {} to {depth}",
                self.space.depth
            )));
        }
        let mut k = self.clone();
        while k.space.depth < depth {
            k = k.refined()?;
        }
        Ok(k)
    }
}
