use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {0}: expected 4 numeric fields")]
    MalformedLine(usize),
    #[error("line {0}: box width and height must be positive")]
    NonPositiveSize(usize),
    #[error("no images found under {0}")]
    MissingImages(PathBuf),
    #[error("{frames} frames but {boxes} ground-truth boxes")]
    GroundTruthMismatch { frames: usize, boxes: usize },
    #[error("degenerate box ({w} x {h})")]
    DegenerateBox { w: f64, h: f64 },
    #[error("patch {width}x{height} is not divisible by cell size {cell}")]
    BadGeometry { width: usize, height: usize, cell: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),
    #[error("too few keypoints ({0} found, need 3)")]
    TooFewKeypoints(usize),
    #[error("no point correspondences survived matching")]
    NoMatches,
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
    #[error("affine model is not invertible")]
    DegenerateModel,
    #[error("difference profile is empty")]
    NoShape,
    #[error("trajectory needs at least 2 boxes")]
    InsufficientHistory,
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("length mismatch: {pred} predictions vs {gt} ground-truth boxes")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("synthetic spec infeasible: {0}")]
    SpecInfeasible(String),
    #[error("no sequence could be evaluated")]
    EmptyDataset,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("color-name table must hold {expected} bytes, got {got}")]
    BadColorTable { expected: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
