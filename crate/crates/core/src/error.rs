use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {index} at ({x}, {y}) is outside the {width}x{height} grid")]
    PointOutOfBounds {
        index: usize,
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("degenerate PDF: density is zero everywhere on the domain")]
    DegeneratePdf,
    #[error("empty distribution: grid has no black cells")]
    EmptyDistribution,
    #[error("empty boundary: mask has no black cells")]
    EmptyBoundary,
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("value {name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("size policy 'modulated' requires a tone image")]
    MissingToneImage,
    #[error("textured rendering requires a texture atlas")]
    MissingTextureAtlas,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
