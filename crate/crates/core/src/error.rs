use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("CWENO7 interpolation needs at least 7 samples, got {0}")]
    TooFewSamples(usize),

    #[error("sample abscissae are not uniformly spaced")]
    NonUniform,

    #[error("{value} lies outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("hierarchy mismatch: {0}")]
    HierarchyMismatch(String),

    #[error("only the uniform probability density is supported")]
    UnsupportedWeight,

    #[error("solver blow-up at t = {time} (stage {stage:?}): {cause}")]
    Blowup {
        time: f64,
        stage: Option<usize>,
        cause: String,
    },

    #[error("step limit of {steps} reached at t = {time}")]
    MaxStepsExceeded { steps: u64, time: f64 },

    #[error("perturbed interfaces may cross: {0}")]
    InterfaceCross(String),

    #[error("missing mesh level {0}")]
    MissingLevel(usize),

    #[error("campaign incomplete; failed or missing runs (xi index, level): {runs:?}")]
    PartialCampaign { runs: Vec<(usize, usize)> },

    #[error("window contains too few nodes: {0}")]
    EmptyWindow(String),

    #[error("SVD did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("index {index} out of range 0..={max}")]
    Index { index: usize, max: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
