//! Coded-bit importance discovery and permutation mapping for polar
//! codes under successive cancellation decoding.
//!
//! Not every coded bit of a polar codeword matters equally to the
//! decoder. When the transmission channels are unequal — some positions
//! cleaner than others — routing the right coded bits onto the reliable
//! positions measurably lowers the post-decoding error rate. This crate
//! provides the pieces to measure and exploit that effect:
//!
//! - [`polar`]: encoding with the standard 1024-entry reliability
//!   sequence and LLR-domain successive cancellation decoding;
//! - [`mapping`]: the permutation layer between encoder and channel;
//! - [`channels`]: per-position binary symmetric channels and correlated
//!   slow fading with BPSK;
//! - [`search`]: seeded Monte Carlo BER estimation, exhaustive selection
//!   search and surrogate optimization over selections and permutations;
//! - [`ofdm`]: pilot-estimated and sorted-subcarrier link simulations;
//! - [`reference`]: independent naive implementations used by the test
//!   suites to cross-check the fast paths.
//!
//! Every simulation takes an explicit seed and derives one RNG substream
//! per frame, so results are bit-identical across reruns and worker
//! counts.

pub mod channels;
pub mod error;
pub mod mapping;
pub mod ofdm;
pub mod polar;
pub mod reference;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
