use alloc::string::String;

/// Errors raised by geometry, construction and oracle routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate {axis} of point {point} is {value}, outside [0, 1)")]
    OutOfDomain { point: usize, axis: usize, value: f64 },

    #[error("point {point} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        point: usize,
        expected: usize,
        found: usize,
    },

    #[error(
        "points {first} and {second} coincide at resolution {resolution} \
         (duplicate policy: reject)"
    )]
    DuplicatePoint {
        first: usize,
        second: usize,
        resolution: u32,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("cell at level {level} is indivisible at resolution {resolution}")]
    Indivisible { level: u32, resolution: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("tile is not a tile of the quadtree of the given point set")]
    TileNotPresent,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
