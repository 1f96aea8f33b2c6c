//! Optimal withdrawal and allocation controls for pension decumulation.

mod atomic;
pub mod control;
pub mod error;
pub mod lattice;
pub mod market;
pub mod pide;
pub mod report;
pub mod simulation;

pub use atomic::write_atomic;
pub use error::{Error, Result};
