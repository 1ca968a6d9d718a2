use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon-number cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("operands live on different bases (cutoff {left} vs {right})")]
    BasisMismatch { left: usize, right: usize },

    #[error("polarization amplitudes are not normalized: |c_H|^2 + |c_V|^2 = {0}")]
    UnnormalizedQubit(f64),

    #[error("reflectivity {0} is outside the admissible range {1}")]
    InvalidReflectivity(f64, &'static str),

    #[error("feedback factor must be finite and nonnegative, got {0}")]
    InvalidFeedback(f64),

    #[error("gain {gain} is not reachable at reflectivity {reflectivity} with nonnegative feedback")]
    UnreachableGain { gain: f64, reflectivity: f64 },

    #[error("{what} = {value} is out of range ({allowed})")]
    OutOfRange {
        what: &'static str,
        value: String,
        allowed: String,
    },

    #[error("displacement |alpha|^2 = {magnitude_sqr} exceeds the safety bound {bound} for this cutoff")]
    DisplacementTooLarge { magnitude_sqr: f64, bound: f64 },

    #[error("beam-splitter oracle accepts at most {max} photons, input carries {photons}")]
    OracleCapacity { photons: usize, max: usize },

    #[error("photon-number sector {0} carries no weight")]
    EmptySector(usize),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid experiment configuration:\n{}", format_issues(.0))]
    InvalidConfig(Vec<ConfigIssue>),
}

/// A single configuration problem, addressed by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
