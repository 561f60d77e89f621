use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: row {row}: {message}")]
    Parse {
        file: String,
        row: usize,
        message: String,
    },

    #[error("respondent {respondent}, task {task}: comparison relation violated: {relation}")]
    ComparisonRelation {
        respondent: u32,
        task: u32,
        relation: &'static str,
    },

    #[error("respondent {respondent}: {indicator} = {value} is outside 1..=5")]
    IndicatorDomain {
        respondent: u32,
        indicator: String,
        value: i64,
    },

    #[error("unknown {field} level `{level}`")]
    UnknownLevel { field: &'static str, level: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("correlation must lie in (-1, 1), got {0}")]
    Correlation(f64),

    #[error("invalid design spec: {0}")]
    Design(String),

    #[error("invalid model spec: {0}")]
    ModelSpec(String),

    #[error("invalid parameters: {0}")]
    Parameters(String),

    #[error("attribute `{0}` is not defined for this alternative")]
    AbsentAttribute(String),

    #[error("non-finite objective for respondent {respondent}")]
    NonFiniteObjective { respondent: u32 },

    #[error("singular point for `{attribute}`: |deviation| = {deviation:e} below guard")]
    Singularity { attribute: String, deviation: f64 },

    #[error("marginal utility of price is zero")]
    ZeroPriceMarginal,

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
