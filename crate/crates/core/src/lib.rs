//! Link-level simulator and library for pragmatic semantic communication
//! between two agents.
//!
//! The transmitter extracts a causal state from observed time series,
//! maintains a Bayesian belief over the receiver's private network
//! parameters, and encodes semantic symbols whose choice is driven by
//! belief-weighted Q-values. A two-level feedback loop (scalar semantic
//! effectiveness plus channel-quality reports) closes the adaptation loop
//! over a Rayleigh-fading BPSK channel.
//!
//! Module map:
//! - [`tensor`]: fp64 parameter store, reverse-mode tape, layers, optimizers
//! - [`channel`]: modulation, block-fading channel, demodulation, CQI
//! - [`scenario`]: synthetic SCM time series, action oracle, task switching
//! - [`causal`]: graph encoder/decoder, ELBO training, state extraction
//! - [`metrics`]: semantic information/effectiveness/reliability, records
//! - [`agents`]: transmitter and receiver with belief machinery
//! - [`training`]: replay buffer, Q/policy/belief losses, alternating loop
//! - [`baselines`]: repetition, HARQ, no-ToM ablation, classical pipeline
//! - [`experiments`]: sweeps, CSV/SVG emission, manifests

pub mod agents;
pub mod baselines;
pub mod causal;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod gradcheck;
pub mod metrics;
pub mod scenario;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
