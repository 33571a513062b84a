//! Spatial-context toolkit for multi-class cell detection and classification.
//!
//! The crate covers the non-network parts of a spatially aware cell
//! detection pipeline:
//!
//! * [`grid`]: exact fixed-radius range counting over point patterns;
//! * [`stats`]: Ripley K / K-cross with CSR envelopes, cell-specific
//!   K-vectors, nearest-neighbour and density descriptors, curve distances;
//! * [`groundtruth`] and [`loss`]: detection/class/K-vector training maps and
//!   the reference losses;
//! * [`clustering`]: per-class k-means pseudo-labels with warm starts;
//! * [`infer`] and [`eval`]: output maps to cell predictions, and the
//!   point-matching F-score protocol;
//! * [`cli`]: the `cellctx` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod components;
pub mod config;
pub mod error;
pub mod eval;
pub mod grid;
pub mod groundtruth;
pub mod infer;
pub mod io;
pub mod loss;
pub mod parallel;
pub mod pattern;
pub mod radii;
pub mod raster;
pub mod stats;

pub use error::{Error, Result};
pub use pattern::{Point, PointPattern, Window};
pub use radii::RadiiGrid;
pub use raster::RasterMap;

/// Toolkit version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
