//! Disjoint LDPC coding for the two-user Gaussian broadcast channel.
//!
//! The transmitter superimposes two binary codewords on a 4-point PAM-like
//! constellation whose labeling switches with the power split so that it is
//! always Gray. Each receiver computes bitwise LLRs for its own bit (the other
//! user's bit is marginalized, never decoded) and runs an ordinary single-user
//! sum-product decoder.
//!
//! Modules:
//! - [`ensemble`]: degree distributions, design rate, parity-check sampling.
//! - [`channel`]: broadcast channel, labelings, LLR demapping, LLR densities.
//! - [`capacity`]: capacity regions for Gaussian, binary-superposition and
//!   Gray-labeled inputs.
//! - [`de`]: quantized density evolution.
//! - [`design`]: LP-based optimization of the variable degree distribution.
//! - [`codec`]: encoder, decoder and the end-to-end Monte Carlo harness.

pub mod capacity;
pub mod channel;
pub mod codec;
pub mod de;
pub mod design;
pub mod ensemble;
pub mod error;
mod numeric;
pub mod units;

pub use error::{Error, Result};
