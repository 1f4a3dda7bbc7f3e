use thiserror::Error;

/// Errors produced while building, simulating or analysing reaction networks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),

    #[error("species `{0}` is registered twice")]
    DuplicateSpecies(String),

    #[error("reaction index {index} out of range for a network with {len} reactions")]
    ReactionIndex { index: usize, len: usize },

    #[error("state has {got} entries but the registry holds {expected} species")]
    Dimension { expected: usize, got: usize },

    #[error("invalid reaction: {0}")]
    InvalidReaction(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("step size underflow at t = {time:.6}: fastest-changing species is `{species}`")]
    StepUnderflow { time: f64, species: String },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("unknown phase `{0}`")]
    UnknownPhase(String),

    #[error("clock windows overlap: {first} [{first_start:.3}, {first_end:.3}] and {second} [{second_start:.3}, {second_end:.3}]")]
    OverlappingWindows {
        first: String,
        first_start: f64,
        first_end: f64,
        second: String,
        second_start: f64,
        second_end: f64,
    },

    #[error("exponential rate fit failed: {0}")]
    FitFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
