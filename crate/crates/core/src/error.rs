use alloc::string::String;

/// Errors raised by the scalar building blocks (families, exponent
/// recursions, grids) and the eigensolver. Newton and continuation failures
/// carry diagnostics and have their own types in [`crate::branch`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("nonpositive denominator {denominator} in exponent recursion")]
    NonpositiveDenominator { denominator: f64 },
    #[error("singular case: {0}")]
    Singular(&'static str),
    #[error("eigensolver did not converge within {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("cannot parse nonlinearity family `{0}` (expected exp, power:p=<real> or mems:p=<real>)")]
    ParseFamily(String),
}
