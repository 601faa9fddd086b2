//! Fractional Poisson processes and Poisson fields of order k.

pub mod combinatorics;
pub mod error;
pub mod fields;
pub mod io;
pub mod processes;
pub mod rng;
pub mod specfun;
pub mod subordinators;
pub mod verify;

pub use error::{Error, Result};
pub use rng::RngStream;
