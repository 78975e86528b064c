//! Receive-side processing: beamforming, AGC and carrier recovery.

pub mod agc;
pub mod beamform;
pub mod carrier;
pub mod selfint;

pub use agc::slow_agc;
pub use beamform::{
    apply_phase_noise_rx, beamform_conj, beamform_zf, estimate_channel, Beamformer,
    BeamformerKind, DEFAULT_COND_LIMIT,
};
pub use carrier::{carrier_recovery, CarrierLoop, CarrierRecoveryParams};
pub use selfint::{coherent_gain_predict, taylor_residuals};
