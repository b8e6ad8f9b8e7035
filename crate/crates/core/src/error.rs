use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped by the stage that raises them; callers that need to
/// tell validation failures from I/O failures can use [`Error::is_io`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("query ({x}, {y}) lies outside the field extent")]
    OutOfBounds { x: f64, y: f64 },
    #[error("bad partition parameters: {0}")]
    BadParams(String),

    #[error("tier {requested:?} cannot be placed after {completed:?}")]
    TierOrder {
        requested: crate::placement::Tier,
        completed: Option<crate::placement::Tier>,
    },
    #[error("hero placements alone disconnect the free space")]
    NavigabilityImpossible,

    #[error("unknown box id {0}")]
    UnknownId(u32),
    #[error("mesh bounds are degenerate")]
    DegenerateBounds,
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("failed to parse {format} input: {message}")]
    Import { format: &'static str, message: String },

    #[error("no walkable surface found")]
    EmptyResult,
    #[error("mesh has zero surface area")]
    ZeroArea,
    #[error("sample count {k} outside 1..={n}")]
    BadK { k: usize, n: usize },

    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud is degenerate (needs at least 3 non-collinear points)")]
    DegenerateCloud,
    #[error("part set is empty")]
    EmptySet,
    #[error("mask dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },

    #[error("grid needs {needed} assets but only {available} were given")]
    InsufficientAssets { needed: usize, available: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Encode { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }

    /// True for failures caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Encode { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
