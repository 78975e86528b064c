use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::lo_arch::LoArchitecture;
use crate::phase_noise::{IfStage, PhaseNoisePsd, PllParams, DEFAULT_DAMPING};
use crate::rx::{BeamformerKind, CarrierRecoveryParams};
use crate::units::db_to_lin;

pub const CRYSTAL_HZ: f64 = 100e6;
pub const IF_HZ: f64 = 5e9;
pub const CARRIER_HZ: f64 = 75e9;

/// 100 MHz crystal with a −140 dBc/Hz floor multiplied directly to the
/// carrier by a PLL of bandwidth `loop_bandwidth_hz`. The VCO PSD is the
/// single-VCO target of −90 dBc/Hz at 1 MHz.
pub fn direct_pll(loop_bandwidth_hz: f64) -> PllParams {
    PllParams {
        f_ref_hz: CRYSTAL_HZ,
        f_out_hz: CARRIER_HZ,
        loop_bandwidth_hz,
        damping: DEFAULT_DAMPING,
        ref_psd: PhaseNoisePsd::white(-140.0),
        vco_psd: PhaseNoisePsd::wiener(1e6, -90.0),
    }
}

/// Same carrier PLL referenced to a 5 GHz IF distribution instead.
pub fn if_referenced_pll(loop_bandwidth_hz: f64) -> PllParams {
    PllParams {
        f_ref_hz: IF_HZ,
        ref_psd: PhaseNoisePsd::none(),
        ..direct_pll(loop_bandwidth_hz)
    }
}

/// 300 kHz IF PLL with a −110 dBc/Hz at 1 MHz, 5 GHz VCO and −135 dBc/Hz
/// distribution buffers.
pub fn default_if_stage() -> IfStage {
    IfStage {
        pll: PllParams {
            f_ref_hz: CRYSTAL_HZ,
            f_out_hz: IF_HZ,
            loop_bandwidth_hz: 300e3,
            damping: DEFAULT_DAMPING,
            ref_psd: PhaseNoisePsd::white(-140.0),
            vco_psd: PhaseNoisePsd::wiener(1e6, -110.0),
        },
        dist_floor_dbc_hz: -135.0,
    }
}

pub fn architecture(m: usize, n_per_pll: usize, pll_bw_hz: f64, with_if_pll: bool) -> LoArchitecture {
    LoArchitecture {
        m,
        n_per_pll,
        mmw_pll: if with_if_pll {
            if_referenced_pll(pll_bw_hz)
        } else {
            direct_pll(pll_bw_hz)
        },
        if_pll: with_if_pll.then(default_if_stage),
        budget_scaling: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub symbol_rate_hz: f64,
    pub constellation: Constellation,
    pub k: usize,
    pub user_separation_deg: f64,
    pub element_spacing_wavelengths: f64,
    pub arch: LoArchitecture,
    pub beamformer: BeamformerKind,
    pub cr: CarrierRecoveryParams,
    pub epoch_s: f64,
    /// Pilot span over which the channel estimate averages the element LO
    /// phases at the start of each epoch. One symbol period gives an
    /// instantaneous snapshot.
    pub estimation_window_s: f64,
    pub n_symbols: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Nominal per-user SNR after a unit-gain beamformer; `None` disables
    /// thermal noise.
    pub thermal_snr_db: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 2e9,
            constellation: Constellation::Qam256,
            k: 16,
            user_separation_deg: 10.0,
            element_spacing_wavelengths: 0.5,
            arch: architecture(128, 32, 5e6, true),
            beamformer: BeamformerKind::ZeroForcing,
            cr: CarrierRecoveryParams::new(10e6, Constellation::Qam256),
            epoch_s: 1e-4,
            estimation_window_s: 1e-6,
            n_symbols: 100_000,
            n_trials: 10,
            seed: 1,
            thermal_snr_db: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "symbol_rate_hz must be > 0, got {}",
                self.symbol_rate_hz
            )));
        }
        self.arch.validate()?;
        self.cr.validate(self.symbol_rate_hz)?;
        if self.cr.constellation != self.constellation {
            return Err(Error::Config(
                "carrier recovery and transmit constellations differ".into(),
            ));
        }
        if self.k == 0 || self.k > self.arch.m {
            return Err(Error::Config(format!(
                "k must be in [1, {}], got {}",
                self.arch.m, self.k
            )));
        }
        if self.epoch_symbols() < 1 {
            return Err(Error::Config(format!(
                "epoch_s·symbol_rate_hz must be >= 1, got {}",
                self.epoch_s * self.symbol_rate_hz
            )));
        }
        if !(self.estimation_window_s > 0.0) || self.estimation_window_s > self.epoch_s {
            return Err(Error::Config(format!(
                "estimation_window_s must be in (0, epoch_s], got {}",
                self.estimation_window_s
            )));
        }
        if self.n_symbols == 0 || self.n_trials == 0 {
            return Err(Error::Config("n_symbols and n_trials must be >= 1".into()));
        }
        let half_span = self.user_separation_deg.abs() * (self.k as f64 - 1.0) / 2.0;
        if half_span >= 90.0 {
            return Err(Error::Config(format!(
                "user_separation_deg {} places users beyond ±90°",
                self.user_separation_deg
            )));
        }
        if !(self.element_spacing_wavelengths > 0.0) {
            return Err(Error::Config("element_spacing_wavelengths must be > 0".into()));
        }
        Ok(())
    }

    /// Non-fatal issues worth reporting.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let needed = 10.0 * self.symbol_rate_hz / self.cr.bandwidth_hz;
        if (self.n_symbols as f64) < needed {
            w.push(format!(
                "n_symbols {} is below 10·symbol_rate/cr_bandwidth = {needed:.0}; carrier recovery sees few loop time constants",
                self.n_symbols
            ));
        }
        w
    }

    pub fn epoch_symbols(&self) -> usize {
        (self.epoch_s * self.symbol_rate_hz).round() as usize
    }

    pub fn estimation_symbols(&self) -> usize {
        ((self.estimation_window_s * self.symbol_rate_hz).round() as usize).max(1)
    }

    /// Symbols excluded at the start of each epoch: five loop time
    /// constants, at most a tenth of the epoch.
    pub fn transient_symbols(&self) -> usize {
        let full = (5.0 / self.cr.bandwidth_hz * self.symbol_rate_hz).ceil() as usize;
        full.min(self.epoch_symbols() / 10)
    }

    /// Per-element noise power for unit-power symbols.
    pub fn element_noise_power(&self) -> f64 {
        self.thermal_snr_db
            .map_or(0.0, |s| self.arch.m as f64 / db_to_lin(s))
    }

    pub fn set_constellation(&mut self, c: Constellation) {
        self.constellation = c;
        self.cr.constellation = c;
    }

    /// Copy with every phase-noise source silenced.
    pub fn without_phase_noise(&self) -> Self {
        let mut c = self.clone();
        c.arch.mmw_pll.ref_psd = PhaseNoisePsd::none();
        c.arch.mmw_pll.vco_psd = PhaseNoisePsd::none();
        if let Some(stage) = c.arch.if_pll.as_mut() {
            stage.pll.ref_psd = PhaseNoisePsd::none();
            stage.pll.vco_psd = PhaseNoisePsd::none();
            stage.dist_floor_dbc_hz = f64::NEG_INFINITY;
        }
        c
    }
}
