//! Simulation and numerical verification for the scaled median of `n`
//! independent Brownian motions.

pub mod cli;
pub mod error;
pub mod kernel;
pub mod limit;
pub mod rng;
pub mod sim;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
