//! Spectral community detection on the two-community stochastic block model
//! using matrices that count self-avoiding paths.
//!
//! The pipeline samples a graph ([`sbm`]), builds the path-count matrix
//! ([`paths`]), extracts its leading eigenvectors ([`spectral`]) and thresholds
//! the second one into spin estimates ([`detection`]). Supporting modules cover
//! neighborhood statistics ([`graph`]), the branching process that describes
//! neighborhoods in the limit ([`tree`]), and an exhaustive check of the path
//! expansion identity on toy graphs ([`expansion`]).

pub mod cli;
pub mod detection;
pub mod error;
pub mod expansion;
pub mod graph;
pub mod io;
pub mod par;
pub mod paths;
pub mod rng;
pub mod sbm;
pub mod spectral;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use graph::Graph;
pub use paths::{PathCountMatrix, PathGuard};
pub use sbm::{DerivedParams, SbmParams, SpinAssignment};
