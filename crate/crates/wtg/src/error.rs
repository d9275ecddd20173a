use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("indeterminate sum (+inf) + (-inf)")]
    IndeterminateSum,
    #[error("cannot parse `{0}` as a rational")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PwaError {
    #[error("valuation {0} outside domain [{1}, {2}]")]
    OutOfDomain(String, String, String),
    #[error("pointwise optimum of an empty list")]
    EmptyList,
    #[error("domains differ: [{0}] vs [{1}]")]
    MismatchedDomains(String, String),
    #[error("guard window [{0}, {1}] not inside successor domain")]
    GuardOutsideSuccessorDomain(String, String),
    #[error("edge enabled on only part of the source domain")]
    PartiallyEnabled,
    #[error("slope of an infinite function")]
    SlopeOfInfinity,
    #[error("malformed breakpoint list: {0}")]
    Malformed(String),
}
