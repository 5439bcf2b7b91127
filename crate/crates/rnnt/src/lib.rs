//! A sequence transducer built from two LSTM networks coupled through a
//! joint softmax over an extended label alphabet.
//!
//! The transcription network reads the input feature sequence in both
//! directions; the prediction network reads the previously emitted labels.
//! Their outputs meet in a `T x (U+1)` lattice of per-cell output
//! distributions. Marginalising over all monotone lattice paths gives the
//! exact probability of a label sequence, computed here by a log-space
//! forward-backward recursion with hand-derived gradients, so the whole
//! model trains by plain backpropagation through time. Decoding is a
//! fixed-width prefix beam search with cached prediction states.
//!
//! The crate is `no_std`-compatible (requires `alloc`; enable the `libm`
//! feature when building without `std`). All randomness flows through a
//! single seeded generator, so every run is reproducible bit for bit.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature");

pub mod decoder;
pub mod error;
pub mod gradcheck;
pub mod joint;
pub mod lattice;
pub mod lstm;
pub mod math;
pub mod metrics;
pub mod model;
pub mod networks;
pub mod oracle;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{Sample, TransducerModel};
