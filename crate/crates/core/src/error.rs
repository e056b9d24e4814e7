use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate field: |B| = 0 leaves the field direction undefined")]
    DegenerateField,
    #[error("no information: Bt is a multiple of pi, the probe returns to its initial state")]
    NoInformation,
    #[error("division guard: 1 - n^2 sin^2(Bt) vanishes (field along the corrected axis at Bt = pi/2)")]
    DivisionGuard,
    #[error("singular matrix: |det| = {det:e} is below the relative guard")]
    Singular { det: f64 },
    #[error("unsupported protocol variant: {0}")]
    Variant(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("invalid evolution time: t must be positive and finite")]
    InvalidTime,
    #[error("size limit: {qubits} qubits exceeds the exact-simulation budget of {limit}")]
    SizeLimit { qubits: usize, limit: usize },
    #[error("insufficient points for a scaling fit: {0}")]
    InsufficientPoints(String),
    #[error("invalid outcome model: {0}")]
    InvalidModel(String),
    #[error("posterior vanishes everywhere on the grid (data impossible under the model)")]
    AllZeroPosterior,
    #[error("empty overlap between the effective-field band and the syndrome posterior")]
    EmptyOverlap,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerics (singularity, lost information) as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateField
                | Error::NoInformation
                | Error::DivisionGuard
                | Error::Singular { .. }
                | Error::AllZeroPosterior
                | Error::EmptyOverlap
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
