use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud contains a non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("all points coincide; cannot normalize")]
    DegenerateCloud,
    #[error("need more than {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("mesh has zero surface area")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    BadTriangle {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("invalid field spec at {path}: {reason}")]
    InvalidSpec { path: String, reason: String },
    #[error("bad magic at byte offset {offset}")]
    BadMagic { offset: usize },
    #[error("file truncated at byte offset {offset} while reading {what}")]
    TruncatedFile { offset: usize, what: &'static str },
    #[error("dimension mismatch at byte offset {offset}: {reason}")]
    DimensionMismatch { offset: usize, reason: String },
    #[error("no grid cell straddles iso level {iso}")]
    EmptySurface { iso: f64 },
    #[error("occupancy gradient vanishes at point {index}")]
    FlatGradient { index: usize },
    #[error("part removal deleted every point")]
    CloudAnnihilated,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error in {path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
