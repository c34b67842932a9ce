use alloc::string::String;
use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial has degree 0, no roots to compute")]
    ConstantPolynomial,
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("transfer function evaluated at a pole, s = {0}")]
    PoleEvaluation(Complex64),
    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },
    #[error("characteristic polynomial vanishes identically at gain {0}")]
    DegenerateCharacteristic(f64),
    #[error("open-loop transfer function has an unstable pole at {0}")]
    OpenLoopUnstable(Complex64),
    #[error("loop gain must be nonnegative, got {0}")]
    NegativeGain(f64),
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    #[error("observer design: {0}")]
    Design(String),
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("regressor is rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
