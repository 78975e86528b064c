use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::sim::config::SimConfig;
use crate::sim::metrics::SimMetrics;
use crate::sim::uplink::run_uplink;
use crate::units::{db_to_lin, lin_to_db};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub metrics: SimMetrics,
}

/// Index of the highest-SINR point.
pub fn argmax(points: &[SweepPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.metrics.sinr_db.total_cmp(&b.1.metrics.sinr_db))
        .map(|(i, _)| i)
}

pub fn sweep_pll_bandwidth(cfg: &SimConfig, bandwidths_hz: &[f64]) -> Result<Vec<SweepPoint>> {
    bandwidths_hz
        .iter()
        .map(|&bw| {
            let mut c = cfg.clone();
            c.arch.mmw_pll.loop_bandwidth_hz = bw;
            Ok(SweepPoint {
                x: bw,
                metrics: run_uplink(&c)?,
            })
        })
        .collect()
}

pub fn sweep_users(cfg: &SimConfig, ks: &[usize]) -> Result<Vec<SweepPoint>> {
    ks.iter()
        .map(|&k| {
            let c = SimConfig { k, ..cfg.clone() };
            Ok(SweepPoint {
                x: k as f64,
                metrics: run_uplink(&c)?,
            })
        })
        .collect()
}

/// Power-controlled multi-user SINR with unit received signal power:
/// `1 / (N_t + N_p + αγ(K−1)N_p)`, in dB.
pub fn sinr_model_db(k: usize, n_t: f64, n_p: f64, alpha: f64, gamma: f64) -> f64 {
    -lin_to_db(n_t + n_p + alpha * gamma * (k as f64 - 1.0) * n_p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrModelFit {
    pub alpha: f64,
    pub gamma: f64,
    pub n_t: f64,
    pub n_p: f64,
    /// Model minus measurement, dB, per input point.
    pub residual_db: Vec<f64>,
}

impl SinrModelFit {
    pub fn max_abs_residual_db(&self) -> f64 {
        self.residual_db.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

fn phase_noise_floor(points: &[(usize, f64)], n_t: f64) -> Result<f64> {
    let (_, s1) = points
        .iter()
        .find(|(k, _)| *k == 1)
        .ok_or_else(|| Error::DegenerateFit("a single-user point is required".into()))?;
    Ok(1.0 / db_to_lin(*s1) - n_t)
}

/// Least-squares `α` for fixed `γ` from `(K, SINR dB)` points, with `N_p`
/// taken from the `K = 1` point and `N_t` the thermal noise ratio.
pub fn fit_sinr_model(points: &[(usize, f64)], n_t: f64, gamma: f64) -> Result<SinrModelFit> {
    if gamma == 0.0 {
        return Err(Error::DegenerateFit("alpha is undefined when gamma = 0".into()));
    }
    let n_p = phase_noise_floor(points, n_t)?;
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), &(k, s)| {
        let x = gamma * (k as f64 - 1.0) * n_p;
        let y = 1.0 / db_to_lin(s) - n_t - n_p;
        (num + x * y, den + x * x)
    });
    if den == 0.0 {
        return Err(Error::DegenerateFit(
            "need a multi-user point and nonzero phase-noise floor".into(),
        ));
    }
    let alpha = num / den;
    Ok(SinrModelFit {
        alpha,
        gamma,
        n_t,
        n_p,
        residual_db: points
            .iter()
            .map(|&(k, s)| sinr_model_db(k, n_t, n_p, alpha, gamma) - s)
            .collect(),
    })
}

/// Least-squares `γ` for fixed `α`.
pub fn fit_gamma(points: &[(usize, f64)], n_t: f64, alpha: f64) -> Result<f64> {
    let fit = fit_sinr_model(points, n_t, 1.0)?;
    if alpha == 0.0 {
        return Err(Error::DegenerateFit("gamma is undefined when alpha = 0".into()));
    }
    Ok(fit.alpha / alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubarrayPoint {
    pub separation_deg: f64,
    pub n_per_pll: usize,
    pub metrics: SimMetrics,
}

pub fn sweep_subarray(cfg: &SimConfig, ns: &[usize], separations_deg: &[f64]) -> Result<Vec<SubarrayPoint>> {
    let mut out = Vec::new();
    for &sep in separations_deg {
        for &n in ns {
            let mut c = cfg.clone();
            c.user_separation_deg = sep;
            c.arch.n_per_pll = n;
            out.push(SubarrayPoint {
                separation_deg: sep,
                n_per_pll: n,
                metrics: run_uplink(&c)?,
            });
        }
    }
    Ok(out)
}

/// Carrier-recovery bandwidth chosen from the operating SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrPolicy {
    /// `(min_snr_db, bandwidth_hz)` steps; the last step whose threshold the
    /// SNR reaches applies, the first applies below all thresholds.
    pub steps: Vec<(f64, f64)>,
}

impl Default for CrPolicy {
    fn default() -> Self {
        Self {
            steps: vec![(f64::NEG_INFINITY, 100e3), (15.0, 1e6), (25.0, 10e6)],
        }
    }
}

impl CrPolicy {
    pub fn bandwidth_for(&self, snr_db: f64) -> f64 {
        self.steps
            .iter()
            .rfind(|(t, _)| snr_db >= *t)
            .or(self.steps.first())
            .map(|(_, b)| *b)
            .expect("policy has at least one step")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub constellation: Constellation,
    pub snr_db: f64,
    pub cr_bandwidth_hz: f64,
    pub phase_noise: bool,
    pub metrics: SimMetrics,
}

/// BER against nominal post-beamformer SNR for each constellation, with and
/// without phase noise.
pub fn ber_curve(
    cfg: &SimConfig,
    snrs_db: &[f64],
    constellations: &[Constellation],
    policy: &CrPolicy,
) -> Result<Vec<BerPoint>> {
    if policy.steps.is_empty() {
        return Err(Error::Config("carrier recovery policy has no steps".into()));
    }
    let mut out = Vec::new();
    for &con in constellations {
        for phase_noise in [true, false] {
            for &snr in snrs_db {
                let mut c = if phase_noise {
                    cfg.clone()
                } else {
                    cfg.without_phase_noise()
                };
                c.set_constellation(con);
                c.thermal_snr_db = Some(snr);
                c.cr.bandwidth_hz = policy.bandwidth_for(snr);
                out.push(BerPoint {
                    constellation: con,
                    snr_db: snr,
                    cr_bandwidth_hz: c.cr.bandwidth_hz,
                    phase_noise,
                    metrics: run_uplink(&c)?,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(alpha: f64, gamma: f64, n_t: f64, n_p: f64) -> Vec<(usize, f64)> {
        [1, 2, 4, 8, 16]
            .iter()
            .map(|&k| (k, sinr_model_db(k, n_t, n_p, alpha, gamma)))
            .collect()
    }

    #[test]
    fn recovers_alpha_from_model_curve() {
        let pts = synth(2.0, 1.0, 1e-4, 1e-3);
        let f = fit_sinr_model(&pts, 1e-4, 1.0).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-9);
        assert!(f.max_abs_residual_db() < 1e-9);
        assert!((fit_gamma(&synth(2.0, 0.5, 0.0, 1e-3), 0.0, 2.0).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_fits() {
        let pts = synth(2.0, 1.0, 0.0, 1e-3);
        assert!(matches!(fit_sinr_model(&pts, 0.0, 0.0), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_sinr_model(&pts[1..], 0.0, 1.0), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_sinr_model(&pts[..1], 0.0, 1.0), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn thermal_limit() {
        for k in [1, 4, 16] {
            assert!((sinr_model_db(k, 1e-3, 0.0, 2.0, 1.0) - 30.0).abs() < 1e-9);
        }
    }

    #[test]
    fn policy_steps() {
        let p = CrPolicy::default();
        assert_eq!(p.bandwidth_for(5.0), 100e3);
        assert_eq!(p.bandwidth_for(15.0), 1e6);
        assert_eq!(p.bandwidth_for(40.0), 10e6);
    }
}
