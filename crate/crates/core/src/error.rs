use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("log parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sensor log contains no records")]
    EmptySeries,

    #[error("patch contains no points")]
    EmptyPatch,

    #[error("patch has no {0} data")]
    MissingModality(&'static str),

    #[error("degenerate patch: {0} points, at least 3 required")]
    DegeneratePatch(usize),

    #[error("rank-deficient point set: points are collinear or coincident")]
    RankDeficient,

    #[error("invalid wheel load {0} N: must be positive")]
    InvalidLoad(f64),

    #[error("invalid kinematics: {0}")]
    InvalidKinematics(String),

    #[error("empty acceleration window")]
    EmptyWindow,

    #[error("missing data in stream `{stream}` around t = {time:.3} s")]
    MissingData { stream: &'static str, time: f64 },

    #[error("no straight-motion samples in window for slip estimation")]
    NoStraightMotion,

    #[error("integration step {dt} s too large; must be at most {max} s")]
    Stability { dt: f64, max: f64 },

    #[error("profile covers {available} m but {required} m are required")]
    OutOfProfile { required: f64, available: f64 },

    #[error("profile calibration failed: {0}")]
    Calibration(String),

    #[error("training labels contain a single class")]
    DegenerateLabels,

    #[error("class {class} has {count} samples, at least {required} required")]
    InsufficientClassData {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid fold count k = {k} for {n} samples")]
    InvalidK { k: usize, n: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
