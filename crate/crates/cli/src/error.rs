use std::path::PathBuf;

use serde_json::json;

/// Failures surfaced by the command line, each with a fixed exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("malformed instance: {0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] mixvol::Error),
}

impl CliError {
    /// 2 for anything the caller can fix in the input, 3 for numerical or LP failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use mixvol::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Core(e) => match e {
                E::EmptyPointSet => "empty_point_set",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::DimensionLimit { .. } => "dimension_limit",
                E::OutsidePolytope => "outside_polytope",
                E::InvalidInput(_) => "invalid_input",
                E::NotInMinkowskiSum => "not_in_minkowski_sum",
                E::Lp(_) => "lp",
                E::NonGenericShifts => "non_generic_shifts",
                E::SamplerStalled { .. } => "sampler_stalled",
                E::DegenerateChord => "degenerate_chord",
                E::TooManyTuples { .. } => "too_many_tuples",
                E::NoConvergence { .. } => "no_convergence",
                E::Inconsistency(_) => "inconsistency",
                E::Numerical(_) => "numerical",
            },
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
            .to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
