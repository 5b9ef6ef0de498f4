use std::fmt;

/// Library-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Input is not a permutation word (duplicate values, gaps, bad literal).
    InvalidPermutation(String),
    /// A permutation would exceed the configured maximum length.
    LengthLimit { len: usize, max: usize },
    /// A basis failed validation (empty, contains the empty permutation, ...).
    InvalidBasis(String),
    /// Two basis patterns are comparable; `outer` contains `inner`.
    NotAntichain { outer: String, inner: String },
    /// A rule literal or rule construction was malformed.
    BadRule(String),
    /// A peg permutation literal, filling vector or vector set was malformed.
    BadPeg(String),
    /// A counting sequence for `basis` was required up to `size` but not supplied.
    MissingCounts { basis: String, size: usize },
    /// Counting recursion is not well founded: `rule` mentions the class being
    /// counted but has no point cell, so lengths do not decrease.
    IllFoundedCover { basis: String, rule: String },
    /// Two registered covers depend on each other (other than direct self-reference).
    CyclicCovers { basis: String },
    /// Sampling at a length where the class has no permutations.
    EmptyClassAtLength { basis: String, len: usize },
    /// A search budget (node count, rule count or deadline) was exhausted.
    /// `explored` counts candidates visited before giving up.
    Budget { what: &'static str, explored: usize },
    Io(std::io::Error),
    Json(serde_json::Error),
    Msg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidPermutation(s) => write!(f, "invalid permutation: {s}"),
            Error::LengthLimit { len, max } => {
                write!(f, "permutation length {len} exceeds configured maximum {max}")
            }
            Error::InvalidBasis(s) => write!(f, "invalid basis: {s}"),
            Error::NotAntichain { outer, inner } => {
                write!(f, "not an antichain: {outer} contains {inner}")
            }
            Error::BadRule(s) => write!(f, "bad rule: {s}"),
            Error::BadPeg(s) => write!(f, "bad peg permutation: {s}"),
            Error::MissingCounts { basis, size } => {
                write!(f, "missing counting sequence for Av({basis}) at length {size}")
            }
            Error::IllFoundedCover { basis, rule } => write!(
                f,
                "counting Av({basis}) is not well founded: rule {rule} repeats the class without a point cell"
            ),
            Error::CyclicCovers { basis } => {
                write!(f, "cyclic cover dependency involving Av({basis})")
            }
            Error::EmptyClassAtLength { basis, len } => {
                write!(f, "Av({basis}) has no permutations of length {len}")
            }
            Error::Budget { what, explored } => {
                write!(f, "{what} budget exhausted after exploring {explored} candidates")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::Msg(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
