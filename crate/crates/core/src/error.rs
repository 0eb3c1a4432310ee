use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("arrival time {time} on site {site} occurs twice in the configuration")]
    TimeCollision { site: usize, time: f64 },

    #[error("point ({site}, {time}) coincides with an arrival or mark on its circle")]
    PointCollision { site: usize, time: f64 },

    #[error("enumeration cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("labels are not compatible with the arrivals: {0}")]
    IncompatibleLabels(String),

    #[error("overlapping region segments on site {0}")]
    OverlappingSegments(usize),

    #[error("no unblocked path between the requested endpoints")]
    NoPath,

    #[error("path is not valid for this configuration: {0}")]
    InvalidPath(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("ratio estimator denominator has mean zero")]
    ZeroDenominator,

    #[error("system too large for dense evaluation: {sites} sites (cap {cap})")]
    DimensionCap { sites: usize, cap: usize },

    #[error("insertion times must be non-decreasing")]
    UnsortedInsertions,

    #[error("numerical anomaly: {0}")]
    Numerical(String),

    #[error("beta / delta = {0} is not an integer")]
    NonIntegralSlots(f64),

    #[error("too few positive values for a decay fit: {0} (need 3)")]
    TooFewPoints(usize),

    #[error("left ground path walk failed: {0}")]
    WalkFailed(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
