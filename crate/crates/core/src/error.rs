use std::io;

use thiserror::Error;

use crate::counting::TripleKey;
use crate::ingest::CountryCode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid country code {0:?}: expected two ASCII letters")]
    InvalidCode(String),

    #[error("duplicate user ids in migrant records: {}", .0.join(", "))]
    DuplicateUsers(Vec<String>),

    #[error("country metadata: {0}")]
    Metadata(String),

    #[error("min_residents must be at least 1")]
    ZeroThreshold,

    #[error("key needs distinct countries, got {0} twice")]
    RepeatedCountry(CountryCode),

    #[error("triple {triple} has no count for constituent pair {a}-{b}")]
    MissingPair {
        triple: TripleKey,
        a: CountryCode,
        b: CountryCode,
    },

    #[error("cannot rank an empty list")]
    EmptyRanking,

    #[error("score list contains NaN at position {0}")]
    NanScore(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("stratification needs at least 5 triples, got {0}")]
    TooFewTriples(usize),

    #[error("country {0} is not in the registry")]
    UnknownCountry(CountryCode),

    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),

    #[error("class {0} has no members")]
    MissingClass(&'static str),

    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),

    #[error("invalid synthetic config: {0}")]
    SynthConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
}
