//! Phase-noise, LO distribution and multi-user uplink simulation for mm-wave
//! array receivers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constellation;
pub mod error;
pub mod link;
pub mod lo_arch;
pub mod phase_noise;
pub mod power;
pub mod rng;
pub mod rx;
pub mod sim;
pub mod spectrum;
pub mod units;

pub use constellation::Constellation;
pub use error::{Error, Result};
