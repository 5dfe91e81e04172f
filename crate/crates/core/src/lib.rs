//! Matrix factorization with trust and distrust triplet constraints.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod factors;
pub mod io;
pub mod metrics;
pub mod neighborhood;
pub mod objective;
pub mod optimize;
pub mod params;
pub mod registry;
pub mod rng;
pub mod triplets;

pub use error::{Error, Result};
