//! Run configuration: a single TOML file, unknown keys rejected.

use std::path::{Path, PathBuf};

use kernel_reduction::kernel::ProbeGrid;
use kernel_reduction::measure_space::MAX_DEPTH;
use kernel_reduction::solvers::{VerifyOptions, DEFAULT_CUTOFF};
use kernel_reduction::{Complex64, GridFunction, GridKernel, MeasureSpace, Multiplier, SequenceParams};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::CliError;

/// `[re, im]`.
pub type ComplexPair = [f64; 2];

fn pair(z: ComplexPair) -> Complex64 {
    Complex64::new(z[0], z[1])
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub depth: u32,
    #[serde(default = "default_depth_max")]
    pub depth_max: u32,
    #[serde(default)]
    pub alpha: ComplexPair,
    /// Ignored when `lambdas` is present.
    #[serde(default)]
    pub lambda: ComplexPair,
    /// λ sweep.
    #[serde(default)]
    pub lambdas: Option<Vec<ComplexPair>>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_bands")]
    pub bands: usize,
    #[serde(default)]
    pub basis_size: BasisSize,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    pub coefficient: CoefficientSpec,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub multiplier: MultiplierSpec,
    #[serde(default)]
    pub probe: ProbeSpec,
    /// Directory for outputs when `--out` is not given, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_depth_max() -> u32 {
    SequenceParams::default().depth_max
}
fn default_eps0() -> f64 {
    SequenceParams::default().eps0
}
fn default_ratio() -> f64 {
    SequenceParams::default().ratio
}
fn default_bands() -> usize {
    SequenceParams::default().count
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BasisSize {
    #[default]
    Full,
    Size(usize),
}

impl<'de> Deserialize<'de> for BasisSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Size(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Size(n) => Ok(BasisSize::Size(n)),
            Raw::Word(w) if w == "full" => Ok(BasisSize::Full),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "basis_size must be a positive integer or \"full\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// `H ≡ 1`.
    Identity {},
    /// `H(y) = offset + slope·y`.
    Linear {
        #[serde(default)]
        offset: ComplexPair,
        #[serde(default = "unit_pair")]
        slope: ComplexPair,
    },
    Constant { value: ComplexPair },
    /// One `re,im` row per cell.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(x, y) = exp(scale·x·y)`.
    Exp {
        #[serde(default = "unit")]
        scale: f64,
    },
    Constant { value: ComplexPair },
    /// `K(x, y) = a(x) b(y)` with polynomial coefficients in ascending order.
    RankOne { a: Vec<ComplexPair>, b: Vec<ComplexPair> },
    Zero {},
    /// One row per cell, `2·cells` columns of `re,im` pairs.
    Csv { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}
fn unit_pair() -> ComplexPair {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierSpec {
    Gaussian {
        #[serde(default = "unit")]
        width: f64,
    },
    Unit {},
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        MultiplierSpec::Gaussian { width: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_radius() -> f64 {
    ProbeGrid::default().radius
}
fn default_points() -> usize {
    ProbeGrid::default().points
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            points: default_points(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn finite_pair(name: &str, z: ComplexPair) -> Result<Complex64, CliError> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(pair(z))
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn polynomial(coeffs: &[ComplexPair], x: f64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + pair(c))
}

/// A validated configuration with file references resolved.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    base: PathBuf,
}

impl Run {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let run = Self { config, base };
        run.validate()?;
        Ok(run)
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.depth > MAX_DEPTH || c.depth_max > MAX_DEPTH {
            return Err(invalid(format!("depths must not exceed {MAX_DEPTH}")));
        }
        if c.depth_max < c.depth {
            return Err(invalid("depth_max must be at least depth"));
        }
        finite_pair("alpha", c.alpha)?;
        for l in self.lambdas() {
            if !(l.re.is_finite() && l.im.is_finite()) {
                return Err(invalid("lambda values must be finite"));
            }
        }
        if let Some(ls) = &c.lambdas {
            if ls.is_empty() {
                return Err(invalid("lambdas must not be empty"));
            }
        }
        if !(c.eps0 > 0.0 && c.eps0.is_finite()) {
            return Err(invalid("eps0 must be positive"));
        }
        if !(c.ratio > 0.0 && c.ratio < 1.0) {
            return Err(invalid("ratio must lie in (0, 1)"));
        }
        if c.bands == 0 {
            return Err(invalid("bands must be at least 1"));
        }
        if let BasisSize::Size(n) = c.basis_size {
            if n == 0 {
                return Err(invalid("basis_size must be positive"));
            }
        }
        if !(c.cutoff > 0.0 && c.cutoff < 1.0) {
            return Err(invalid("cutoff must lie in (0, 1)"));
        }
        self.multiplier()?;
        self.probe()?;
        if let KernelSpec::Exp { scale } = c.kernel {
            if !scale.is_finite() {
                return Err(invalid("kernel scale must be finite"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Complex64 {
        pair(self.config.alpha)
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        match &self.config.lambdas {
            Some(ls) => ls.iter().copied().map(pair).collect(),
            None => vec![pair(self.config.lambda)],
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.config.lambdas.is_some()
    }

    pub fn params(&self) -> SequenceParams {
        SequenceParams {
            count: self.config.bands,
            eps0: self.config.eps0,
            ratio: self.config.ratio,
            depth_max: self.config.depth_max,
        }
    }

    pub fn basis_size(&self) -> Option<usize> {
        match self.config.basis_size {
            BasisSize::Full => None,
            BasisSize::Size(n) => Some(n),
        }
    }

    pub fn multiplier(&self) -> Result<Multiplier, CliError> {
        match self.config.multiplier {
            MultiplierSpec::Gaussian { width } => {
                Multiplier::gaussian(width).map_err(|e| invalid(e.to_string()))
            }
            MultiplierSpec::Unit {} => Ok(Multiplier::Unit),
        }
    }

    pub fn probe(&self) -> Result<ProbeGrid, CliError> {
        ProbeGrid::new(self.config.probe.radius, self.config.probe.points).map_err(|e| invalid(e.to_string()))
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, CliError> {
        Ok(VerifyOptions {
            multiplier: self.multiplier()?,
            cutoff: self.config.cutoff,
            probe: self.probe()?,
        })
    }

    pub fn space(&self) -> Result<MeasureSpace, CliError> {
        MeasureSpace::new(self.config.depth).map_err(|e| invalid(e.to_string()))
    }

    /// `output`, resolved against the config directory.
    pub fn output(&self) -> Option<PathBuf> {
        self.config.output.as_deref().map(|p| self.resolve(p))
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }

    fn read_csv(&self, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
        let full = self.resolve(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| invalid(format!("cannot read {}: {e}", full.display())))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(row, line)| {
                line.split(',')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|e| {
                            invalid(format!("{} row {}: {e}", full.display(), row + 1))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn coefficient(&self, space: MeasureSpace) -> Result<GridFunction, CliError> {
        Ok(match &self.config.coefficient {
            CoefficientSpec::Identity {} => GridFunction::from_fn(space, |_| Complex64::new(1.0, 0.0)),
            CoefficientSpec::Linear { offset, slope } => {
                let (a, b) = (finite_pair("offset", *offset)?, finite_pair("slope", *slope)?);
                GridFunction::from_fn(space, move |y| a + b * y)
            }
            CoefficientSpec::Constant { value } => {
                let v = finite_pair("value", *value)?;
                GridFunction::from_fn(space, move |_| v)
            }
            CoefficientSpec::Csv { path } => {
                let rows = self.read_csv(path)?;
                if rows.len() != space.cell_count() || rows.iter().any(|r| r.len() != 2) {
                    return Err(invalid(format!(
                        "coefficient CSV needs {} rows of re,im",
                        space.cell_count()
                    )));
                }
                let values = DVector::from_iterator(rows.len(), rows.iter().map(|r| Complex64::new(r[0], r[1])));
                GridFunction::from_values(space, values).map_err(|e| invalid(e.to_string()))?
            }
        })
    }

    pub fn kernel(&self, space: MeasureSpace) -> Result<GridKernel, CliError> {
        Ok(match &self.config.kernel {
            KernelSpec::Exp { scale } => {
                let s = *scale;
                GridKernel::from_fn(space, move |x, y| Complex64::new((s * x * y).exp(), 0.0))
            }
            KernelSpec::Constant { value } => {
                let v = finite_pair("value", *value)?;
                GridKernel::from_fn(space, move |_, _| v)
            }
            KernelSpec::RankOne { a, b } => {
                if a.iter().chain(b).any(|z| !z.iter().all(|v| v.is_finite())) {
                    return Err(invalid("rank_one coefficients must be finite"));
                }
                let (a, b) = (a.clone(), b.clone());
                GridKernel::from_fn(space, move |x, y| polynomial(&a, x) * polynomial(&b, y))
            }
            KernelSpec::Zero {} => GridKernel::zeros(space),
            KernelSpec::Csv { path } => {
                let rows = self.read_csv(path)?;
                let n = space.cell_count();
                if rows.len() != n || rows.iter().any(|r| r.len() != 2 * n) {
                    return Err(invalid(format!("kernel CSV needs {n} rows of {} values", 2 * n)));
                }
                let entries = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][2 * j], rows[i][2 * j + 1]));
                GridKernel::from_entries(space, entries).map_err(|e| invalid(e.to_string()))?
            }
        })
    }
}
