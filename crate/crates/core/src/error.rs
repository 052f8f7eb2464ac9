use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("level {0} is too small (need N >= 5)")]
    LevelTooSmall(u64),
    #[error("bad auxiliary prime {0} (need a prime p >= 5)")]
    BadPrime(u64),
    #[error("p={p} does not divide N-1={n1}")]
    NotAdmissible { p: u64, n1: u64 },
    #[error("s={s} outside 1..={t}")]
    BadLayer { s: u32, t: u32 },
    #[error("{0} is not a unit mod N")]
    NotUnit(i64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
