use thiserror::Error;

pub type Result<T> = std::result::Result<T, QmciError>;

#[derive(Debug, Error)]
pub enum QmciError {
    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("qubit {0} appears more than once in a gate")]
    DuplicateQubit(usize),

    #[error("gate angle is not finite: {0}")]
    NonFiniteAngle(f64),

    #[error("state has {found} amplitudes, circuit expects {expected}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("non-finite amplitude produced at index {0}")]
    NonFiniteAmplitude(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("distribution has no probability mass")]
    ZeroMass,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("function applied violates smoothness requirement: {0}")]
    NotSmooth(String),

    #[error("missing estimate for term {0}")]
    MissingEstimate(usize),

    #[error("analytic backend requires a known amplitude")]
    MissingAmplitude,

    #[error("cut cannot be expressed on the register layout: {0}")]
    UnsupportedCut(String),

    #[error("frequency {freq} overflows a {bits}-qubit register")]
    FrequencyOverflow { freq: i64, bits: usize },

    #[error("precision target {target:e} is below the achievable floor {floor:e}")]
    InfeasiblePrecision { target: f64, floor: f64 },

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}
