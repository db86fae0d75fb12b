//! Compressed quadtrees built by randomized incremental construction.
//!
//! Points of `[0, 1)^d` are snapped once to a `2^L` integer lattice, after
//! which every cell operation is exact. [`builder::build`] inserts the points
//! in random order, keeping for each tile of the current tree the list of
//! not-yet-inserted points inside it. [`oracle`] holds brute-force
//! references used to check the construction.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod builder;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod tree;

pub use builder::{build, build_quantized, BuildConfig, BuildStats, IncrementalBuild, IterationRecord};
pub use error::{Error, Result};
pub use geometry::{CanonicalCell, DuplicatePolicy, GeometryConfig, QuantizedPoint, Region, Tile};
pub use oracle::{build_topdown, tiles_of, SubsetCensus, TileKey, TileModel};
pub use tree::{CompressedQuadtree, InsertCase, Node, NodeId, RestructureReport, SerializedNode, Violation};
