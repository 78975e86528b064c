use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::phase_noise::psd::PhaseNoisePsd;
use crate::rng;

/// Sampled, unwrapped phase-noise realization in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    sample_rate_hz: f64,
    phase: Vec<f64>,
}

impl PhaseTrace {
    pub fn new(sample_rate_hz: f64, phase: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::Argument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if phase.is_empty() {
            return Err(Error::Argument("phase trace must not be empty".into()));
        }
        Ok(Self {
            sample_rate_hz,
            phase,
        })
    }

    pub fn zeros(sample_rate_hz: f64, n: usize) -> Result<Self> {
        Self::new(sample_rate_hz, vec![0.0; n])
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn into_phase(self) -> Vec<f64> {
        self.phase
    }

    pub fn mean(&self) -> f64 {
        self.phase.iter().sum::<f64>() / self.phase.len() as f64
    }

    /// Sample variance about the trace mean.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.phase.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / self.phase.len() as f64
    }

    /// Keeps samples `start..start + n`.
    pub fn window(&self, start: usize, n: usize) -> Result<Self> {
        if start + n > self.phase.len() || n == 0 {
            return Err(Error::Argument(format!(
                "window {start}..{} out of range for trace of {}",
                start + n,
                self.phase.len()
            )));
        }
        Self::new(self.sample_rate_hz, self.phase[start..start + n].to_vec())
    }

    /// Sample-wise sum. Traces must share rate and length.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_compatible(self, other)?;
        let phase = self
            .phase
            .iter()
            .zip(&other.phase)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.sample_rate_hz, phase)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            sample_rate_hz: self.sample_rate_hz,
            phase: self.phase.iter().map(|p| k * p).collect(),
        }
    }
}

pub(crate) fn check_compatible(a: &PhaseTrace, b: &PhaseTrace) -> Result<()> {
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(Error::Argument(format!(
            "sample rates differ: {} vs {}",
            a.sample_rate_hz, b.sample_rate_hz
        )));
    }
    if a.phase.len() != b.phase.len() {
        return Err(Error::Argument(format!(
            "trace lengths differ: {} vs {}",
            a.phase.len(),
            b.phase.len()
        )));
    }
    Ok(())
}

fn check_rate_and_len(sample_rate_hz: f64, n: usize) -> Result<()> {
    if !(sample_rate_hz > 0.0) || n == 0 {
        return Err(Error::Argument(format!(
            "need positive sample rate and length, got {sample_rate_hz} Hz, n={n}"
        )));
    }
    Ok(())
}

/// Per-sample increment variance of a random walk whose two-sided phase PSD is
/// `coef / f²` for `f` well below Nyquist: `q = 4π²·coef / fs`.
pub fn wiener_increment_variance(f2_coefficient: f64, sample_rate_hz: f64) -> f64 {
    4.0 * std::f64::consts::PI.powi(2) * f2_coefficient / sample_rate_hz
}

/// Per-sample variance of white phase noise with density `L` over the full
/// Nyquist band: one-sided `2L` times `fs/2`.
pub fn white_sample_variance(floor_linear: f64, sample_rate_hz: f64) -> f64 {
    2.0 * floor_linear * (sample_rate_hz / 2.0)
}

/// Random-walk phase trace realizing the 1/f² segment of `psd`.
pub fn gen_wiener_trace(
    psd: &PhaseNoisePsd,
    sample_rate_hz: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseTrace> {
    check_rate_and_len(sample_rate_hz, n)?;
    if psd.f2_anchor.is_none() {
        return Err(Error::Config(
            "Wiener trace requested from a PSD without a 1/f² segment".into(),
        ));
    }
    let sigma = wiener_increment_variance(psd.f2_coefficient(), sample_rate_hz).sqrt();
    let mut phase = vec![0.0; n];
    if sigma > 0.0 {
        let mut rng = rng::stream(seed, &[0x57]);
        let mut acc = 0.0;
        for p in phase.iter_mut() {
            let w: f64 = rng.sample(StandardNormal);
            acc += sigma * w;
            *p = acc;
        }
    }
    PhaseTrace::new(sample_rate_hz, phase)
}

/// I.i.d. Gaussian phase trace realizing the white floor of `psd`.
pub fn gen_white_trace(
    psd: &PhaseNoisePsd,
    sample_rate_hz: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseTrace> {
    check_rate_and_len(sample_rate_hz, n)?;
    if psd.white_floor_dbc_hz.is_none() {
        return Err(Error::Config(
            "white trace requested from a PSD without a white floor".into(),
        ));
    }
    let sigma = white_sample_variance(psd.white_linear(), sample_rate_hz).sqrt();
    let mut phase = vec![0.0; n];
    if sigma > 0.0 {
        let mut rng = rng::stream(seed, &[0x77]);
        for p in phase.iter_mut() {
            let w: f64 = rng.sample(StandardNormal);
            *p = sigma * w;
        }
    }
    PhaseTrace::new(sample_rate_hz, phase)
}

/// Trace containing every part `psd` defines (white floor and/or 1/f²).
/// A PSD with neither part yields zeros.
pub fn synthesize_trace(
    psd: &PhaseNoisePsd,
    sample_rate_hz: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseTrace> {
    check_rate_and_len(sample_rate_hz, n)?;
    let mut out = PhaseTrace::zeros(sample_rate_hz, n)?;
    if psd.f2_anchor.is_some() {
        out = gen_wiener_trace(psd, sample_rate_hz, n, seed)?;
    }
    if psd.white_floor_dbc_hz.is_some() {
        let white = gen_white_trace(psd, sample_rate_hz, n, seed)?;
        out = out.try_add(&white)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_anchor_gives_zero_trace() {
        let psd = PhaseNoisePsd::wiener(1e6, f64::NEG_INFINITY);
        let t = gen_wiener_trace(&psd, 2e9, 1000, 1).unwrap();
        assert!(t.phase().iter().all(|&p| p == 0.0));
        let t = gen_white_trace(&PhaseNoisePsd::white(f64::NEG_INFINITY), 2e9, 10, 1).unwrap();
        assert!(t.phase().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn same_seed_same_trace() {
        let psd = PhaseNoisePsd::wiener(1e6, -90.0).with_white_floor(-150.0);
        let a = synthesize_trace(&psd, 2e9, 4096, 42).unwrap();
        let b = synthesize_trace(&psd, 2e9, 4096, 42).unwrap();
        let c = synthesize_trace(&psd, 2e9, 4096, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn missing_parts_are_config_errors() {
        let white_only = PhaseNoisePsd::white(-140.0);
        assert!(matches!(
            gen_wiener_trace(&white_only, 2e9, 10, 0),
            Err(Error::Config(_))
        ));
        let f2_only = PhaseNoisePsd::wiener(1e6, -90.0);
        assert!(matches!(
            gen_white_trace(&f2_only, 2e9, 10, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn white_variance_formula() {
        // -140 dBc/Hz at 2 GS/s: 2 * 1e-14 * 1e9
        let v = white_sample_variance(1e-14, 2e9);
        assert!((v - 2e-5).abs() < 1e-18);
        let t = gen_white_trace(&PhaseNoisePsd::white(-140.0), 2e9, 200_000, 5).unwrap();
        let rel = (t.variance() - 2e-5).abs() / 2e-5;
        assert!(rel < 0.02, "relative variance error {rel}");
    }

    #[test]
    fn wiener_increments_have_target_variance() {
        let psd = PhaseNoisePsd::wiener(1e6, -90.0);
        let t = gen_wiener_trace(&psd, 2e9, 200_000, 9).unwrap();
        let inc: Vec<f64> = t.phase().windows(2).map(|w| w[1] - w[0]).collect();
        let v = inc.iter().map(|x| x * x).sum::<f64>() / inc.len() as f64;
        let q = wiener_increment_variance(1e3, 2e9);
        assert!(((v - q) / q).abs() < 0.02);
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(PhaseTrace::new(1.0, vec![]).is_err());
        assert!(PhaseTrace::new(0.0, vec![1.0]).is_err());
        let a = PhaseTrace::new(1.0, vec![1.0, 2.0]).unwrap();
        let b = PhaseTrace::new(2.0, vec![1.0, 2.0]).unwrap();
        assert!(a.try_add(&b).is_err());
    }
}
