use thiserror::Error;

/// Errors raised by the geometry, LP, and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exact H-rep unsupported above limit: dimension {dim} > {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("point outside polytope")]
    OutsidePolytope,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("z not in Minkowski sum")]
    NotInMinkowskiSum,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("shift vectors not generic; resample")]
    NonGenericShifts,

    #[error("sampler acceptance rate {rate:.3e} below threshold after {trials} trials; try hit-and-run mode")]
    SamplerStalled { trials: u64, rate: f64 },

    #[error("degenerate chord at boundary point")]
    DegenerateChord,

    #[error("too many face tuples: {count} exceeds cap {cap}")]
    TooManyTuples { count: u128, cap: u128 },

    #[error("capacity optimization did not converge after {iterations} iterations (gap {gap:.3e}, best g = {best_value:.12e} at y = {best_y:?})")]
    NoConvergence { iterations: usize, gap: f64, best_y: Vec<f64>, best_value: f64 },

    #[error("bound violated: {0}")]
    Inconsistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Input-validation failures, as opposed to numerical/LP failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyPointSet
                | Error::DimensionMismatch { .. }
                | Error::DimensionLimit { .. }
                | Error::InvalidInput(_)
                | Error::TooManyTuples { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
