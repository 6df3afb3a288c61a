use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument {value} outside [-1, 1]")]
    ArgumentOutOfDomain { value: f64 },

    #[error("invalid harmonic index (ell={ell}, m={m})")]
    InvalidIndex { ell: usize, m: i64 },

    #[error("point is not on the unit sphere (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("band limit {requested} exceeds configured maximum {max}")]
    BandLimitTooLarge { requested: usize, max: usize },

    #[error("band limit mismatch: need at least {required}, have {available}")]
    BandLimitMismatch { required: usize, available: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid Schatten exponent p={0}; need p >= 1 or infinity")]
    InvalidSchattenExponent(f64),

    #[error("operator has non-finite entries")]
    NonFinite,

    #[error("frame is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("basis pair requires j >= j' >= 1, got ({j}, {j_prime})")]
    InvalidBasisPair { j: usize, j_prime: usize },

    #[error("negative eigenvalue {value} at position {index}")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("degree {ell} outside model band limit {band_limit}")]
    EllOutOfRange { ell: usize, band_limit: usize },

    #[error("power spectrum operator vanishes at ell={0}; statistic undefined")]
    Degenerate(usize),

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("sample variance is zero; statistic undefined")]
    ZeroVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
