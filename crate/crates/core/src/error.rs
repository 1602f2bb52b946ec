use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("edge ({0}, {1}) references a vertex outside the graph")]
    EdgeOutOfRange(usize, usize),

    #[error("invalid lattice shape: {0}")]
    InvalidShape(String),

    #[error("invalid decay profile: {0}")]
    InvalidProfile(String),

    #[error("decay profile vanishes at distance {distance}")]
    VanishingProfile { distance: f64 },

    #[error("vertex {vertex} is not in the lattice (valid ids 0..{len})")]
    VertexOutOfRange { vertex: usize, len: usize },

    #[error("term on {support:?} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { support: Vec<usize>, deviation: f64 },

    #[error("matrix shape {rows}x{cols} does not match Hilbert dimension {expected}")]
    ShapeMismatch { rows: usize, cols: usize, expected: usize },

    #[error("Hilbert dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("support {support:?} is not contained in volume {volume:?}")]
    SupportNotContained { support: Vec<usize>, volume: Vec<usize> },

    #[error("operators act on different volumes {left:?} and {right:?}")]
    VolumeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("supports {x:?} and {y:?} must be separated (d > 0)")]
    NotSeparated { x: Vec<usize>, y: Vec<usize> },

    #[error("supports overlap: {x:?} and {y:?}")]
    OverlappingSupports { x: Vec<usize>, y: Vec<usize> },

    #[error("empty support set")]
    EmptySupport,

    #[error("tilt must be positive for this bound (got {0})")]
    NonPositiveTilt(f64),

    #[error("volumes are not nested: {inner:?} is not contained in {outer:?}")]
    NotNested { inner: Vec<usize>, outer: Vec<usize> },

    #[error("invalid density matrix at site {site}: {reason}")]
    InvalidState { site: usize, reason: String },

    #[error("objective is not finite anywhere on the search grid")]
    NonFiniteObjective,

    #[error("step size control failed on [{t0}, {t1}]")]
    StepControl { t0: f64, t1: f64 },

    #[error("generator is not anti-Hermitian at t = {t} (deviation {deviation:e})")]
    NotAntiHermitian { t: f64, deviation: f64 },

    #[error("time {t} is outside the horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed interaction record: {0}")]
    Record(String),
}
