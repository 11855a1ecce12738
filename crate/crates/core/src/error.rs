use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the grasp-planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    FileFormat { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        what: &'static str,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("mask has no object pixels")]
    EmptyMask,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point cloud is degenerate: {0}")]
    DegeneratePointCloud(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("polygon is not simple")]
    NonSimplePolygon,

    #[error("part {0} has no pixels")]
    DegeneratePart(usize),

    #[error("no valid depth available for the selected part")]
    NoValidDepth,

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("structured response violated schema after {attempts} attempts: {message}")]
    SchemaViolation { attempts: u32, message: String },

    #[error("structured response is missing node ids {missing:?}")]
    MissingNodeInResponse { missing: Vec<usize> },

    #[error("rulebook has no entry for {0}")]
    RulebookMissingEntry(String),

    #[error("synthetic spec {name}: parts {a} and {b} overlap outside a declared junction")]
    SpecOverlap { name: String, a: String, b: String },
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::FileFormat {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileFormat { .. } => "FileFormatError",
            Error::Io { .. } => "IoError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyMask => "EmptyMask",
            Error::InvalidInput(_) => "InvalidInput",
            Error::DegeneratePointCloud(_) => "DegeneratePointCloud",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::NonSimplePolygon => "NonSimplePolygon",
            Error::DegeneratePart(_) => "DegeneratePart",
            Error::NoValidDepth => "NoValidDepth",
            Error::BackendUnavailable(_) => "BackendUnavailable",
            Error::SchemaViolation { .. } => "SchemaViolation",
            Error::MissingNodeInResponse { .. } => "MissingNodeInResponse",
            Error::RulebookMissingEntry(_) => "RulebookMissingEntry",
            Error::SpecOverlap { .. } => "SpecOverlapError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
