//! Density-preserving subsampling of scattered 2-D node sets and a geometric
//! multilevel RBF-FD solver built on the resulting node hierarchies.

pub mod cli;
pub mod error;
pub mod multilevel;
pub mod nodeset;
pub mod problems;
pub mod quality;
pub mod rbffd;
pub mod subsample;

pub use error::{Error, Result};
