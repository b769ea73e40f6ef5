use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field of order {order} exceeds the table budget {budget}")]
    TableBudget { order: u64, budget: u64 },
    #[error("no shipped Conway polynomial for p = {p}, degree {degree}; supply a modulus")]
    NoDefaultModulus { p: u32, degree: u32 },
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("{e} does not divide m = {m}")]
    NotDivisor { e: u32, m: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("enumeration of {needed} items exceeds the budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("code is degenerate: its columns are F_q-linearly dependent")]
    Degenerate,
    #[error("subspace does not span F_(q^m)^k over F_(q^m)")]
    NotSpanning,
    #[error("subspace is not F_(q^{e})-linear")]
    NotLinear { e: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal identity violated: {0}")]
    Invariant(String),
    #[error("construction failed self-check: {0}")]
    Certification(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
