use thiserror::Error;

pub type Result<T, E = VssError> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum VssError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("frequency {omega_ev} eV lies within {distance_ev:e} eV of the level at {level_ev} eV and the linewidth is zero")]
    PoleProximity {
        omega_ev: f64,
        level_ev: f64,
        distance_ev: f64,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("ensemble member with crystal length {length_m} m failed: {source}")]
    Ensemble {
        length_m: f64,
        #[source]
        source: Box<VssError>,
    },
}

impl VssError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            VssError::Config(_)
            | VssError::Domain(_)
            | VssError::Input(_)
            | VssError::PoleProximity { .. } => ErrorKind::Config,
            VssError::Degenerate(_)
            | VssError::UndefinedCorrelation(_)
            | VssError::Numerical(_) => ErrorKind::Numerical,
            VssError::Ensemble { source, .. } => source.kind(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        VssError::Config(msg.into())
    }
}
