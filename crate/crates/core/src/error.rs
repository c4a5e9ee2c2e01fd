use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("distance to an empty region is undefined")]
    EmptyRegion,
    #[error("window has a zero-length side")]
    EmptyWindow,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InteractionError {
    #[error("q must be at least 2, got {0}")]
    TooFewColors(usize),
    #[error("phi is not ferromagnetic: phi(0) = {phi0} is not strictly above phi({n}) = {value}")]
    NotFerromagnetic { phi0: f64, n: usize, value: f64 },
    #[error("lattice sum diverges: alpha = {alpha} must exceed d = {dim}")]
    Divergent { alpha: f64, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("requested tolerance {requested:e} not reachable (best bound {achieved:e})")]
    ToleranceUnreachable { requested: f64, achieved: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("inconsistent number of colors: {0}")]
    InconsistentQ(String),
    #[error("site {0} is outside the window")]
    OutsideWindow(String),
    #[error("spin value {value} out of range for q = {q}")]
    SpinOutOfRange { value: u8, q: usize },
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("window dimension {window} does not match model dimension {model}")]
    DimensionMismatch { window: usize, model: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("spins on the boundary read for a label are not constant: {0}")]
    LabelInconsistency(String),
    #[error("contour is not external for this configuration")]
    NotExternal,
    #[error("contour family was extracted from a different configuration")]
    StaleFamily,
    #[error("erasure needs exterior color 0 (the reference color), got {0}")]
    ExteriorNotReference(u8),
    #[error("erasure would change a spin outside the window at {0}")]
    EscapesWindow(String),
    #[error("invalid (M, a) parameters: {0}")]
    InvalidParams(String),
    #[error("window too large for the bitboard path: {0}")]
    GridTooLarge(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("Peierls series diverges: beta*c2 - c1 - ln q = {0} <= 0")]
    Divergent(f64),
    #[error("the lemma needs distinct sites")]
    SameSite,
    #[error("the lemma needs a long-range kernel")]
    NeedsLongRange,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("contour is empty")]
    EmptyContour,
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnumerationError {
    #[error("state space q^N = {states} exceeds budget {budget}")]
    BudgetExceeded { states: f64, budget: u64 },
    #[error("function support is not inside the window")]
    SupportOutsideWindow,
    #[error("function table has {found} entries, expected {expected}")]
    BadTable { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),
    #[error("explicit transition matrix needs q^N <= 64, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse TOML config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot parse JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
