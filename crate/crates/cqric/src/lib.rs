//! File formats, experiments and rendering on top of [`cqric_core`].
//!
//! - [`points`]: the plain-text point file and point generators.
//! - [`treefile`]: parsing of the canonical tree serialization.
//! - [`experiments`]: Monte Carlo and scaling harnesses with CSV output.
//! - [`render`]: SVG drawing of planar tile maps.

pub mod experiments;
pub mod points;
pub mod render;
pub mod treefile;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rendering needs d = 2, got d = {0}")]
    UnsupportedDimension(usize),

    #[error(transparent)]
    Core(#[from] cqric_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
