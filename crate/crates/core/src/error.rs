use thiserror::Error;

/// Errors produced by the simulation and reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdmrError {
    #[error("transverse field outside perturbative regime: g*mu_B*B_perp/(h*D) = {ratio:.4} (must be < 0.1)")]
    PerturbationInvalid { ratio: f64 },

    #[error("near-resonant TIPT denominator: |h*D - g*mu_B*B_par| = {gap:.3e} J for D = {d_hz:.6e} Hz")]
    ResonantDenominator { d_hz: f64, gap: f64 },

    #[error("singular rate system: {0}")]
    SingularRates(String),

    #[error("negative steady-state population {value:.3e} at level {level}")]
    NegativePopulation { level: usize, value: f64 },

    #[error("zero total baseline photoluminescence")]
    ZeroBaseline,

    #[error("expected {expected} peaks, found {found}")]
    PeakCount { expected: usize, found: usize },

    #[error("rank-deficient axis matrix")]
    RankDeficient,

    #[error("invalid pairing: {0}")]
    Pairing(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("orientation {orientation}, frequency index {index}: {source}")]
    AtPoint {
        orientation: usize,
        index: usize,
        #[source]
        source: Box<OdmrError>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl OdmrError {
    pub(crate) fn at(self, orientation: usize, index: usize) -> Self {
        OdmrError::AtPoint {
            orientation,
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        OdmrError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for OdmrError {
    fn from(e: std::io::Error) -> Self {
        OdmrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, OdmrError>;
