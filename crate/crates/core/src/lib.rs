//! Margin InfoNCE with the equivalent rule for the number of negatives.
//!
//! The crate covers the loss and its analytic gradients, Monte-Carlo
//! mutual-information oracles on a correlated Gaussian, a small MLP encoder
//! with a momentum key encoder, toy contrastive training with linear-probe
//! evaluation, and the experiment drivers behind the `eqco` binary.

pub mod critic;
pub mod csvlog;
pub mod encoder;
pub mod error;
pub mod experiments;
pub mod loss;
pub mod math;
pub mod mi;
pub mod svg;
pub mod train;

pub use error::{EqcoError, Result};
