use std::path::PathBuf;

use crate::types::{Asn, RouterId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("conflicting relationship for AS{a}-AS{b}: line {first_line} and line {second_line}")]
    ConflictingRelationship {
        a: Asn,
        b: Asn,
        first_line: usize,
        second_line: usize,
    },

    #[error("IP {ip} appears in alias lines {first_line} and {second_line}")]
    AliasOverlap {
        ip: RouterId,
        first_line: usize,
        second_line: usize,
    },

    #[error("prefix {prefix} is mapped to both AS{first} and AS{second}")]
    ConflictingPrefixOrigin {
        prefix: crate::types::Prefix,
        first: Asn,
        second: Asn,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("AS{0} is not in the relationship graph")]
    UnknownAs(Asn),

    #[error("country code {0:?} does not occur in the country map")]
    UnknownCountry(String),

    #[error("valley-free enumeration refused: {vertices} vertices exceeds the limit of {limit}")]
    TooManyVertices { vertices: usize, limit: usize },

    #[error("candidate path list is empty")]
    NoCandidates,

    #[error("path corpus is empty")]
    EmptyCorpus,

    #[error("no traces touch AS{0}")]
    NoTraces(Asn),

    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
