use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which side of the photonic band a bound-state pole lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Upper => f.write_str("upper"),
            Branch::Lower => f.write_str("lower"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{branch} pole function evaluated at x = {x} outside its domain")]
    OutsideDomain { branch: Branch, x: f64 },

    #[error("pole not found: no sign change of the {branch} pole function in [{lo}, {hi}]")]
    PoleNotFound { branch: Branch, lo: f64, hi: f64 },

    #[error("band-edge degeneracy: atom frequency sits on a band edge (Ω = ω₀ ± 2ξ)")]
    BandEdgeDegeneracy,

    #[error("singular time point t = {t}: {reason}")]
    SingularPoint { t: f64, reason: &'static str },

    #[error("degenerate population P_e = {pe}: Fisher information undefined")]
    DegeneratePopulation { pe: f64 },

    #[error("branch-cut quadrature did not converge at order {order} (last change {change:e})")]
    QuadratureNotConverged { order: usize, change: f64 },

    #[error("eigendecomposition failed for a {dim}x{dim} Hamiltonian")]
    Eigen { dim: usize },

    #[error("no regular-oscillation window found")]
    NoRegularWindow,

    #[error("time grid is not uniform")]
    NonUniformGrid,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller supplied something unusable.
    Usage,
    /// Well-formed request with no answer in this regime.
    Domain,
    /// A numerical routine failed.
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_) | Error::InvalidGrid(_) | Error::Parse(_) => ErrorClass::Usage,
            Error::OutsideDomain { .. }
            | Error::PoleNotFound { .. }
            | Error::BandEdgeDegeneracy
            | Error::SingularPoint { .. }
            | Error::DegeneratePopulation { .. }
            | Error::NoRegularWindow
            | Error::NonUniformGrid
            | Error::InsufficientData(_) => ErrorClass::Domain,
            Error::QuadratureNotConverged { .. } | Error::Eigen { .. } => ErrorClass::Numerical,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ErrorClass::Io,
        }
    }
}
