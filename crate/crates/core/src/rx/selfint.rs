//! Static gain, residual gain and residual phase of a unit-gain beamformer
//! whose elements see independent phase errors.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::phase_noise::PhaseTrace;
use crate::rng;

/// `E[e^{jφ}]` for zero-mean Gaussian `φ` of variance `sigma2`.
pub fn coherent_gain_predict(sigma2: f64) -> f64 {
    (-sigma2 / 2.0).exp()
}

/// Small-angle residual phase `θ[t] = (1/M)Σφᵢ[t]` and gain
/// `g[t] = (1/M)Σ(1 − φᵢ[t]²/2)`.
pub fn taylor_residuals(traces: &[PhaseTrace]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Argument("need at least one element trace".into()))?;
    let n = first.len();
    if traces.iter().any(|t| t.len() != n) {
        return Err(Error::Argument("element traces differ in length".into()));
    }
    let m = traces.len() as f64;
    let mut theta = vec![0.0; n];
    let mut gain = vec![0.0; n];
    for t in traces {
        for ((th, g), &p) in theta.iter_mut().zip(gain.iter_mut()).zip(t.phase()) {
            *th += p;
            *g += 1.0 - 0.5 * p * p;
        }
    }
    theta.iter_mut().for_each(|v| *v /= m);
    gain.iter_mut().for_each(|v| *v /= m);
    Ok((theta, gain))
}

/// Gain-noise SINR ceiling `G²/var(g)`, in dB.
pub fn sinr_ceiling_db(static_gain: f64, gain_var: f64) -> f64 {
    10.0 * (static_gain * static_gain / gain_var).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfInterferenceStats {
    /// Real part of the mean array response `E[(1/M)Σe^{jφᵢ}]`.
    pub static_gain: f64,
    pub theta_var: f64,
    /// Variance of the array response magnitude.
    pub gain_var: f64,
    /// Mean response power over magnitude variance, in dB.
    pub sinr_db: f64,
}

/// Monte Carlo statistics of `(1/M)Σe^{jφᵢ}` for i.i.d. `φᵢ ~ N(0, σ²)`.
pub fn monte_carlo(sigma: f64, m: usize, draws: usize, seed: u64) -> SelfInterferenceStats {
    let mut r = rng::stream(seed, &[0x5E]);
    let mut sum = Complex64::new(0.0, 0.0);
    let (mut th1, mut th2, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let mut s = Complex64::new(0.0, 0.0);
        for _ in 0..m {
            let phi: f64 = sigma * r.sample::<f64, _>(StandardNormal);
            s += Complex64::from_polar(1.0, phi);
        }
        s /= m as f64;
        sum += s;
        let th = s.arg();
        let g = s.norm();
        th1 += th;
        th2 += th * th;
        g1 += g;
        g2 += g * g;
    }
    let d = draws as f64;
    let theta_var = th2 / d - (th1 / d).powi(2);
    let gain_mean = g1 / d;
    let gain_var = g2 / d - gain_mean * gain_mean;
    SelfInterferenceStats {
        static_gain: (sum / d).re,
        theta_var,
        gain_var,
        sinr_db: 10.0 * (gain_mean * gain_mean / gain_var).log10(),
    }
}
