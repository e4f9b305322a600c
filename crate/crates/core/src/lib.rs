//! Syndrome-based neural decoding (SBND) for linear block codes.
//!
//! The crate is organised bottom-up:
//!
//! - [`gf2`]: bit-packed vectors and matrices over GF(2).
//! - [`codes`]: polar construction, parity-check ingestion, pseudo-inverses.
//! - [`channel`]: BPSK, AWGN in additive and multiplicative form, estimator inputs.
//! - [`estimator`]: stacked-GRU bit-flip estimator with hand-written BPTT.
//! - [`training`]: single-message batch synthesis, loss, Adam, checkpoints.
//! - [`baselines`]: hard decision, exhaustive MAP and ordered statistics decoding.
//! - [`eval`]: the full SBND pipeline and Monte Carlo BER/FER sweeps.
//! - [`plot`]: SVG rendering of sweep CSV output.

pub mod baselines;
pub mod channel;
pub mod codes;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod gf2;
pub mod plot;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector};
