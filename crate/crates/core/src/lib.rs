//! Fast sweeping solvers for steady states of hyperbolic balance laws in one
//! and two space dimensions.

pub mod cli;
pub mod error;
pub mod match2d;
pub mod numerics;
pub mod reference;
pub mod shock1d;
pub mod sweep1d;
pub mod sweep2d;
pub mod systems;

pub use error::{Error, Result};
