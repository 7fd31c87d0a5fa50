//! Restless randomized-benchmarking simulation and gate tuneup.

pub mod analysis;
pub mod clifford;
pub mod cost;
pub mod error;
pub mod experiments;
pub mod gst;
pub mod optimize;
pub mod seeds;
pub mod shots;
pub mod t1_psd;
pub mod transmon;
pub mod tuneup;

pub use error::{Error, Result};
