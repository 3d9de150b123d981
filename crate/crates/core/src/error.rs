use thiserror::Error;

use crate::lattice::{Edge, LatticeCoord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid lattice coordinate ({x}, {y}): x + y must be even")]
    InvalidCoordinate { x: i64, y: i64 },

    #[error("edge {edge} is not incident to {at}")]
    EdgeNotIncident { edge: Edge, at: LatticeCoord },

    #[error("{0} is not an edge of the triangular lattice")]
    NotAnEdge(String),

    #[error("a region must contain at least one vertex")]
    EmptyRegion,

    #[error("vertex {0} listed twice")]
    DuplicateVertex(LatticeCoord),

    #[error("number of colours must be between 3 and 31, got {0}")]
    InvalidColourCount(u32),

    #[error("colour {colour} is outside 0..={q}")]
    ColourOutOfRange { colour: u32, q: u32 },

    #[error("boundary colouring does not match the region: {0}")]
    DomainMismatch(String),

    #[error("vertex {0} is not in the region")]
    VertexNotInRegion(LatticeCoord),

    #[error("brute force limited to {cap} vertices, region has {len}")]
    CapExceeded { cap: usize, len: usize },

    #[error("no proper colouring agrees with the boundary")]
    NoValidColouring,

    #[error("invalid boundary pair: {0}")]
    InvalidPair(String),

    #[error("mu is undefined: no colouring agrees with either boundary")]
    UndefinedMu,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Geometry(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("epsilon must lie strictly between 0 and 1")]
    EpsilonOutOfRange,

    #[error("state space has {len} states, limit is {cap}")]
    StateSpaceTooLarge { cap: usize, len: usize },

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
