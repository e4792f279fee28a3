//! Simulation and exact audit toolkit for BB84-style quantum key distribution
//! and composable secure message transmission.

pub mod ac;
pub mod bits;
pub mod error;
pub mod gf;
pub mod metrics;
pub mod postprocessing;
pub mod qkd;
pub mod quantum;
pub mod smt;

pub use error::{Error, Result};
