use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid depth {0} is outside 1..=24")]
    DepthOutOfRange(u32),

    #[error("operands live on different grids (depth {left} vs depth {right})")]
    SpaceMismatch { left: u32, right: u32 },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid measurable set: {0}")]
    InvalidSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("a set of {cells} cells cannot be split into {pieces} equal pieces")]
    NotBisectable { cells: usize, pieces: usize },

    /// No cell of the grid has `|H - α|` inside band `n`: `α` fails the
    /// essential-range test at this resolution.
    #[error("band {band} ({lo:e}, {hi:e}] is empty; refine the grid or change eps0/ratio")]
    EmptyBand { band: usize, lo: f64, hi: f64 },

    #[error("band {band}: best achieved {achieved:e} > target {target:e} up to depth {depth}")]
    ToleranceUnreachable {
        band: usize,
        achieved: f64,
        target: f64,
        depth: u32,
    },

    #[error("Gauss rule with {nodes} nodes fails the orthonormality self-check (defect {defect:e})")]
    QuadratureInsufficient { nodes: usize, defect: f64 },

    #[error("system is nearly singular (condition estimate {condition:e})")]
    NearSingular { condition: f64 },

    #[error("alpha must be zero for the first-kind reduction")]
    AlphaNotZero,

    #[error("alpha is zero; the reduced equation is of the first kind")]
    AlphaZero,

    #[error("every singular value falls below the cutoff")]
    DegenerateSystem,
}
