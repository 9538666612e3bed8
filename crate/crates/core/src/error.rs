use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("rational input: continued fraction terminates with denominator {denominator}")]
    RationalInput { denominator: u128 },
    #[error("insufficient input precision for {requested} partial quotients; largest safe n is {largest_safe}")]
    InsufficientPrecision { requested: usize, largest_safe: usize },
    #[error("invalid alpha specification: {0}")]
    InvalidAlpha(String),
    #[error("denominators overflow 127 bits beyond n = {0}")]
    DenominatorOverflow(usize),
    #[error("{value} is beyond the computed denominator table (q_max = {limit})")]
    OutOfTable { value: f64, limit: u128 },
    #[error("singularity proximity: distance {distance:e} at orbit index {index}")]
    SingularityProximity { distance: f64, index: i64 },
    #[error("non-integrable singularity: gamma = {0} must be < 1")]
    NonIntegrable(f64),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("t = {t} too small: bracket index {n} < 3")]
    TooSmall { t: f64, n: usize },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("insufficient samples: {got} < {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("insufficient usable points for a fit: {usable}")]
    InsufficientPoints { usable: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("tower levels overlap: S = {sum} < height {height} at base point {x}")]
    TowerOverlap { x: f64, sum: f64, height: f64 },
    #[error("drop rate {0} exceeds the allowed fraction")]
    ExcessiveDrops(f64),
    #[error("combinatorial refinement bound violated: covered {covered} <= bound {bound}")]
    RefinementBound { covered: f64, bound: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
