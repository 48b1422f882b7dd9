use alloc::string::String;
use core::fmt;

use crate::graph::Hypothesis;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Broad failure categories, used by callers to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A score or parameter lies outside its domain.
    Domain,
    /// A histogram could not be fitted.
    Fit,
    /// A required pairwise score was not supplied.
    Ingestion,
    /// The caller violated an operation's contract.
    Contract,
    /// No hypothesis has a finite likelihood.
    Decision,
    /// The brute-force oracle refused an oversized graph.
    Refusal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptySamples,
    ScoreOutOfRange { value: f64 },
    InvalidParameter { name: &'static str, reason: &'static str },
    InvalidDensity(&'static str),
    MissingScore { first: String, second: String },
    IdTooLarge { images: usize, max: usize },
    SubsetArity { hypothesis: Hypothesis },
    NoFiniteLikelihood,
    InfiniteLikelihood { hypothesis: Hypothesis },
    OracleTooLarge { n_probe: usize, n_gallery: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EmptySamples => ErrorKind::Fit,
            Error::ScoreOutOfRange { .. } | Error::InvalidDensity(_) => ErrorKind::Domain,
            Error::MissingScore { .. } => ErrorKind::Ingestion,
            Error::InvalidParameter { .. }
            | Error::IdTooLarge { .. }
            | Error::SubsetArity { .. }
            | Error::InfiniteLikelihood { .. } => ErrorKind::Contract,
            Error::NoFiniteLikelihood => ErrorKind::Decision,
            Error::OracleTooLarge { .. } => ErrorKind::Refusal,
        }
    }

    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySamples => write!(f, "cannot fit a histogram to an empty sample set"),
            Error::ScoreOutOfRange { value } => write!(f, "score {value} is outside [0, 1]"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::InvalidDensity(reason) => write!(f, "invalid histogram density: {reason}"),
            Error::MissingScore { first, second } => {
                write!(f, "no matcher score for image pair ({first}, {second})")
            }
            Error::IdTooLarge { images, max } => {
                write!(f, "identity has {images} images, more than the limit of {max}")
            }
            Error::SubsetArity { hypothesis } => {
                write!(f, "subsets supplied do not match the terms of hypothesis {}", hypothesis.number())
            }
            Error::NoFiniteLikelihood => write!(f, "every hypothesis has zero likelihood"),
            Error::InfiniteLikelihood { hypothesis } => write!(
                f,
                "hypothesis {} has an infinite log-likelihood and cannot be scored",
                hypothesis.number()
            ),
            Error::OracleTooLarge { n_probe, n_gallery } => write!(
                f,
                "brute-force oracle refuses a ({n_probe},{n_gallery}) graph; at most 6 images per identity"
            ),
        }
    }
}

impl core::error::Error for Error {}
