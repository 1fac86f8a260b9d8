use thiserror::Error;

/// Errors raised by cluster construction, operator assembly, solvers and analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rejected cell: {0}")]
    RejectedCell(String),

    #[error("momentum {0} is not an allowed momentum of this cluster")]
    MissingPoint(String),

    #[error("no preset {geometry} cluster with N = {n}")]
    UnknownPreset { geometry: String, n: usize },

    #[error("dimension {dim} exceeds budget of {budget} amplitudes")]
    DimensionOverflow { dim: u128, budget: u128 },

    #[error("classical ground manifold has more than {budget} states")]
    ManifoldOverflow { budget: usize },

    #[error("Lanczos did not converge after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        energy: f64,
        /// Best Ritz vector found, in the operator's basis.
        ritz_vector: RitzVector,
    },

    #[error("operation not defined in frame {0}")]
    WrongFrame(String),

    #[error("operation requires a triangular cluster")]
    WrongGeometry,

    #[error("no interior peak: {0}")]
    NoInteriorPeak(String),

    /// Carries the per-level trace `(n_ph_max, observable values)` collected so far.
    #[error("cutoff budget exceeded at n_ph_max = {last_cutoff}")]
    BudgetExceeded {
        last_cutoff: usize,
        trace: Vec<(usize, Vec<f64>)>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RejectedCell(_) => "rejected_cell",
            Error::MissingPoint(_) => "missing_point",
            Error::UnknownPreset { .. } => "unknown_preset",
            Error::DimensionOverflow { .. } => "dimension_overflow",
            Error::ManifoldOverflow { .. } => "manifold_overflow",
            Error::NoConvergence { .. } => "no_convergence",
            Error::WrongFrame(_) => "wrong_frame",
            Error::WrongGeometry => "wrong_geometry",
            Error::NoInteriorPeak(_) => "no_interior_peak",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            kind: self.kind().to_string(),
            message: self.to_string(),
        }
    }
}

/// Serializable summary of an [`Error`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

/// Shared eigenvector estimate whose `Debug` output omits the amplitudes.
#[derive(Clone, PartialEq)]
pub struct RitzVector(pub std::sync::Arc<Vec<f64>>);

impl std::fmt::Debug for RitzVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RitzVector(len = {})", self.0.len())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
