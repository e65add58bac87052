//! Complex-valued 1D residual networks for classifying raw I/Q radar pulses.
//!
//! The crate is organised around the pipeline it implements:
//!
//! - [`waveform`] synthesizes labeled phase-coded pulses, datasets and
//!   multi-pulse scenes.
//! - [`augment`] turns variable-length pulses into fixed-length network inputs
//!   by noise padding or truncation with a random delay.
//! - [`nn`] is a small reverse-mode engine with complex convolution, split
//!   ReLU, split batch-norm and the classification losses.
//! - [`resnet`] builds real, IQ two-channel and complex 1D ResNets.
//! - [`train`] runs minibatch training with early stopping and randomized
//!   evaluation.
//! - [`metrics`] holds the single- and multi-label error definitions and the
//!   report emitters.

pub mod augment;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod resnet;
pub mod rng;
pub mod train;
pub mod waveform;

pub use error::{Error, Result};

/// Toolkit version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
