use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy error: {what} (achieved {achieved:e}, wanted {wanted:e})")]
    Accuracy {
        what: String,
        achieved: f64,
        wanted: f64,
    },
    #[error("singular transformation: generator {generator} divides by a vanishing field")]
    SingularTransformation { generator: String },
    #[error("singular shift or recurrence: {0}")]
    Singular(String),
    #[error("pole encountered near t = {last_good_t}")]
    Pole { last_good_t: f64 },
    #[error("anchoring failed: {0}")]
    Anchoring(String),
    #[error("sigma-form integrity lost at t = {t}: residual {residual:e} exceeds {limit:e}")]
    Integrity { t: f64, residual: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
