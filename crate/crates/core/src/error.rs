use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-side precondition (shape, range, symmetry) did not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("value out of range: {0}")]
    Range(String),

    /// The form is not quasi-sectorial for the requested angle and vertex.
    #[error("not quasi-sectorial: {0}")]
    NotSectorial(String),

    #[error("form/j not well-defined on quotient (residual_form = {residual_form:e}, residual_j = {residual_j:e})")]
    NotWellDefined { residual_form: f64, residual_j: f64 },

    #[error("operator is not continuous w.r.t. the form seminorm (residual = {0:e})")]
    NotSeminormContinuous(f64),

    #[error("form is not coercive (alpha = {0:e})")]
    NotCoercive(f64),

    #[error("lambda = {lambda} is not in the resolvent set (requires lambda > {bound})")]
    NotInResolventSet { lambda: f64, bound: f64 },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("problem too large for dense oracle: {0}")]
    TooLarge(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid input field `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
