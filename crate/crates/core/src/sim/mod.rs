//! End-to-end uplink simulation, metrics and figure sweeps.

pub mod config;
pub mod metrics;
pub mod sweep;
pub mod uplink;

pub use config::SimConfig;
pub use metrics::{awgn_ber, measure_ber, measure_evm, measure_sinr, SimMetrics, UserMetrics};
pub use sweep::*;
pub use uplink::run_uplink;
