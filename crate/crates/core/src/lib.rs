//! Quantum Monte Carlo integration of resonant cross sections on a simulated
//! quantum computer.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod fourier;
pub mod hep;
pub mod optim;
pub mod qae;
pub mod quad;
pub mod resources;
pub mod state_prep;

pub use error::{QmciError, Result};
