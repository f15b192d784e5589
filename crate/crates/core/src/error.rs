use crate::lattice::OrientedEdge;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed path: {0}")]
    MalformedPath(String),

    #[error("one-form is not exact: circulation {circulation:e} around a witness cycle of {} edges", witness.len())]
    Inexact {
        witness: Vec<OrientedEdge>,
        circulation: f64,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: binomial({sites}, {particles}) = {dim} exceeds cap {cap}")]
    Capacity {
        sites: usize,
        particles: usize,
        dim: u128,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operators live on different sector bases: {0} vs {1}")]
    BasisMismatch(String, String),

    #[error("flux {phi} is not in 2πZ/{l}")]
    Incommensurate { phi: f64, l: usize },

    #[error("gap assumption violated ({context}): gap {gap:e} below floor {floor:e}")]
    GapViolation { gap: f64, floor: f64, context: String },

    #[error("gap closes at {} flux grid points (minimum gap {min_gap:e}): {points:?}", points.len())]
    GapClosure {
        points: Vec<(usize, usize)>,
        min_gap: f64,
    },

    #[error("solver failed to converge: {message} (residual {residual:e})")]
    Solver { message: String, residual: f64 },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("frequency {nu} is outside the half gap {half_gap}")]
    FrequencyOutOfGap { nu: f64, half_gap: f64 },

    #[error("orientation error: {0}")]
    Orientation(String),

    #[error("band touching: bands {lower} and {upper} approach within {gap:e}")]
    BandTouching { lower: usize, upper: usize, gap: f64 },

    #[error("norm drift {drift:e} exceeds {bound:e}; reduce the time step")]
    StepSize { drift: f64, bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
