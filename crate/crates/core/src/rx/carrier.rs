use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::phase_noise::DEFAULT_DAMPING;

/// Ratio of loop bandwidth to natural frequency.
pub const BANDWIDTH_TO_NATURAL: f64 = 0.786;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierRecoveryParams {
    pub bandwidth_hz: f64,
    pub damping: f64,
    pub constellation: Constellation,
}

impl CarrierRecoveryParams {
    pub fn new(bandwidth_hz: f64, constellation: Constellation) -> Self {
        Self {
            bandwidth_hz,
            damping: DEFAULT_DAMPING,
            constellation,
        }
    }

    pub fn validate(&self, symbol_rate_hz: f64) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz < symbol_rate_hz / 20.0) {
            return Err(Error::Config(format!(
                "carrier recovery bandwidth must be in (0, {}) Hz, got {}",
                symbol_rate_hz / 20.0,
                self.bandwidth_hz
            )));
        }
        if !(self.damping > 0.0) {
            return Err(Error::Config(format!(
                "carrier recovery damping must be > 0, got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// `(K_p, K_i)` of the proportional-plus-integral loop filter per symbol.
    pub fn gains(&self, symbol_rate_hz: f64) -> (f64, f64) {
        let wn_t = 2.0 * PI * self.bandwidth_hz / BANDWIDTH_TO_NATURAL / symbol_rate_hz;
        (2.0 * self.damping * wn_t, wn_t * wn_t)
    }
}

/// Decision-directed type-II phase tracking loop.
#[derive(Debug, Clone)]
pub struct CarrierLoop {
    constellation: Constellation,
    kp: f64,
    ki: f64,
    phase: f64,
    freq: f64,
}

impl CarrierLoop {
    pub fn new(params: &CarrierRecoveryParams, symbol_rate_hz: f64) -> Self {
        let (kp, ki) = params.gains(symbol_rate_hz);
        Self {
            constellation: params.constellation,
            kp,
            ki,
            phase: 0.0,
            freq: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.phase = 0.0;
        self.freq = 0.0;
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// De-rotates `y` by the current estimate, then updates the loop from the
    /// angle to the nearest constellation point.
    pub fn step(&mut self, y: Complex64) -> Complex64 {
        let z = y * Complex64::from_polar(1.0, -self.phase);
        let d = self.constellation.nearest(z);
        let err = (z * d.conj()).arg();
        self.freq += self.ki * err;
        self.phase += self.kp * err + self.freq;
        z
    }
}

/// Runs a fresh loop over `symbols`, returning corrected symbols and the phase
/// estimate applied to each.
pub fn carrier_recovery(
    symbols: &[Complex64],
    params: &CarrierRecoveryParams,
    symbol_rate_hz: f64,
) -> (Vec<Complex64>, Vec<f64>) {
    let mut lp = CarrierLoop::new(params, symbol_rate_hz);
    symbols
        .iter()
        .map(|&y| {
            let p = lp.phase();
            (lp.step(y), p)
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    const FS: f64 = 2e9;

    fn qpsk(n: usize, seed: u64) -> Vec<Complex64> {
        let mut r = rng::stream(seed, &[]);
        (0..n).map(|_| Constellation::Qpsk.map(r.random_range(0..4))).collect()
    }

    fn residual(out: &[Complex64], tx: &[Complex64], from: usize) -> f64 {
        out[from..]
            .iter()
            .zip(&tx[from..])
            .map(|(o, t)| (o * t.conj()).arg().abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn static_phase_removed() {
        let tx = qpsk(200_000, 1);
        let rx: Vec<_> = tx.iter().map(|x| x * Complex64::from_polar(1.0, 0.3)).collect();
        let p = CarrierRecoveryParams::new(10e6, Constellation::Qpsk);
        let (out, _) = carrier_recovery(&rx, &p, FS);
        assert!(residual(&out, &tx, 100_000) < 1e-3);
    }

    #[test]
    fn frequency_offset_tracked() {
        let tx = qpsk(200_000, 2);
        let rx: Vec<_> = tx
            .iter()
            .enumerate()
            .map(|(i, x)| x * Complex64::from_polar(1.0, 1e-5 * i as f64))
            .collect();
        let p = CarrierRecoveryParams::new(10e6, Constellation::Qpsk);
        let (out, _) = carrier_recovery(&rx, &p, FS);
        assert!(residual(&out, &tx, 100_000) < 1e-3);
    }

    fn sinusoid_attenuation_db(f: f64, bw: f64) -> f64 {
        let n = 400_000;
        let tx = qpsk(n, 3);
        let amp = 0.2;
        let rx: Vec<_> = tx
            .iter()
            .enumerate()
            .map(|(i, x)| x * Complex64::from_polar(1.0, amp * (2.0 * PI * f * i as f64 / FS).sin()))
            .collect();
        let (out, _) = carrier_recovery(&rx, &CarrierRecoveryParams::new(bw, Constellation::Qpsk), FS);
        let tail = n / 2;
        let p: f64 = out[tail..]
            .iter()
            .zip(&tx[tail..])
            .map(|(o, t)| (o * t.conj()).arg().powi(2))
            .sum::<f64>()
            / (n - tail) as f64;
        10.0 * (amp * amp / 2.0 / p).log10()
    }

    #[test]
    fn highpass_action() {
        assert!(sinusoid_attenuation_db(100e3, 10e6) > 20.0);
        assert!(sinusoid_attenuation_db(500e6, 10e6).abs() < 1.0);
    }

    #[test]
    fn bandwidth_validation() {
        let p = CarrierRecoveryParams::new(200e6, Constellation::Qam16);
        assert!(p.validate(FS).is_err());
        assert!(CarrierRecoveryParams::new(10e6, Constellation::Qam16).validate(FS).is_ok());
    }
}
