//! Analog delivery of neural-network parameters over simulated wireless
//! channels.
//!
//! The library covers the full chain: a compact feed-forward network is
//! trained with channel-equivalent noise injection ([`pipeline`]), its
//! parameters are mapped to channel symbols either directly, by repetition,
//! or with Archimedes-spiral bandwidth expansion ([`codec`]), transmitted
//! over AWGN or block-Rayleigh fading ([`channel`]), decoded, and scored by
//! post-delivery accuracy. Layer sensitivities ([`sensitivity`]) drive an
//! unequal-error-protection allocator that spends spare bandwidth on the
//! most fragile layers, and [`digital`] provides a capacity-bound
//! separation baseline (quantize + ideal channel code) for comparison.
//! [`experiments`] orchestrates config-driven sweeps with cached training
//! runs and CSV output.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, and the `airlink` binary for the command-line interface.

pub mod channel;
pub mod codec;
pub mod digital;
pub mod error;
pub mod experiments;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;

pub use error::{Error, Result};
