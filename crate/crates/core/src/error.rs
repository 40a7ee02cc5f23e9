use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("hbar exponent {exponent} falls below window floor {floor}")]
    WindowUnderflow { exponent: i32, floor: i32 },
    #[error("series needs zero constant term")]
    NonzeroConstant,
    #[error("series needs constant term 1")]
    ConstantNotOne,
    #[error("series has no invertible leading term")]
    NotInvertible,
    #[error("reversion needs a nonzero linear coefficient")]
    ZeroLinearCoefficient,
    #[error("partition sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("missing specialization value for p_{0}")]
    MissingValue(u32),
    #[error("residual hbar dependence in H_({g},{n})")]
    ResidualHbar { g: u32, n: u32 },
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error("not in intersection table: {0}")]
    OutOfTable(String),
    #[error("non-simple ramification at {0}")]
    NonSimpleZero(String),
    #[error("spectral curve not representable over the rationals: {0}")]
    IrrationalPoint(String),
    #[error("truncation too shallow: {0}")]
    Truncation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
