//! Type-II second-order PLL phase-noise model.
//!
//! The closed loop from reference phase to output phase is
//! `H(s) = (2ζωₙs + ωₙ²) / (s² + 2ζωₙs + ωₙ²)` scaled by the multiplication
//! ratio; VCO phase sees the complementary high-pass `1 - H(s)`. Discrete-time
//! filters come from the bilinear transform at the trace sample rate.
//!
//! The loop bandwidth is the offset at which `|H| = |1 - H|`, i.e. where the
//! ratio-normalized reference and the VCO contributions cross.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_noise::psd::PhaseNoisePsd;
use crate::phase_noise::trace::{check_compatible, synthesize_trace, PhaseTrace};
use crate::rng;

pub const DEFAULT_DAMPING: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Continuous second-order loop described by natural frequency and damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderLoop {
    /// rad/s
    pub omega_n: f64,
    pub zeta: f64,
}

impl SecondOrderLoop {
    /// Loop whose `|H|` and `|1 - H|` cross at `bandwidth_hz`.
    pub fn from_crossover(bandwidth_hz: f64, zeta: f64) -> Self {
        // ω⁴ = ωₙ⁴ + 4ζ²ωₙ²ω²  ->  (ω/ωₙ)² = 2ζ² + sqrt(4ζ⁴ + 1)
        let z2 = zeta * zeta;
        let ratio = (2.0 * z2 + (4.0 * z2 * z2 + 1.0).sqrt()).sqrt();
        Self {
            omega_n: 2.0 * PI * bandwidth_hz / ratio,
            zeta,
        }
    }

    /// Closed-loop tracking response `H(j2πf)`.
    pub fn closed_loop(&self, f: f64) -> Complex64 {
        let s = Complex64::new(0.0, 2.0 * PI * f);
        let wn = self.omega_n;
        let num = s * (2.0 * self.zeta * wn) + wn * wn;
        num / (s * s + num)
    }

    /// Error response `1 - H(j2πf)`.
    pub fn error_response(&self, f: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) - self.closed_loop(f)
    }

    pub fn lowpass(&self, sample_rate_hz: f64) -> Biquad {
        let wn = self.omega_n;
        Biquad::bilinear(
            [wn * wn, 2.0 * self.zeta * wn, 0.0],
            [wn * wn, 2.0 * self.zeta * wn],
            sample_rate_hz,
        )
    }

    pub fn highpass(&self, sample_rate_hz: f64) -> Biquad {
        let wn = self.omega_n;
        Biquad::bilinear(
            [0.0, 0.0, 1.0],
            [wn * wn, 2.0 * self.zeta * wn],
            sample_rate_hz,
        )
    }

    /// Samples needed for start-up transients to decay (ten envelope time
    /// constants `1/(ζωₙ)`).
    pub fn settling_samples(&self, sample_rate_hz: f64) -> usize {
        (10.0 / (self.zeta * self.omega_n) * sample_rate_hz).ceil() as usize
    }
}

/// Real biquad section in direct form I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Bilinear transform of `(n2 s² + n1 s + n0) / (s² + d1 s + d0)`, with
    /// `num = [n0, n1, n2]` and `den = [d0, d1]`.
    pub fn bilinear(num: [f64; 3], den: [f64; 2], sample_rate_hz: f64) -> Self {
        let k = 2.0 * sample_rate_hz;
        let k2 = k * k;
        let [n0, n1, n2] = num;
        let [d0, d1] = den;
        let a0 = k2 + d1 * k + d0;
        let b = [
            (n2 * k2 + n1 * k + n0) / a0,
            (2.0 * n0 - 2.0 * n2 * k2) / a0,
            (n2 * k2 - n1 * k + n0) / a0,
        ];
        let a = [(2.0 * d0 - 2.0 * k2) / a0, (k2 - d1 * k + d0) / a0];
        Self { b, a }
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&x0| {
                let y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }

    /// Frequency response at `f` for sample rate `fs`.
    pub fn response(&self, f: f64, sample_rate_hz: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / sample_rate_hz);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (1.0 + z1 * self.a[0] + z2 * self.a[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllParams {
    pub f_ref_hz: f64,
    pub f_out_hz: f64,
    pub loop_bandwidth_hz: f64,
    pub damping: f64,
    /// Input-referred, at `f_ref_hz`.
    pub ref_psd: PhaseNoisePsd,
    /// At `f_out_hz`.
    pub vco_psd: PhaseNoisePsd,
}

impl PllParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_ref_hz > 0.0 && self.f_out_hz > 0.0) {
            return Err(Error::Config(format!(
                "PLL frequencies must be positive (f_ref={}, f_out={})",
                self.f_ref_hz, self.f_out_hz
            )));
        }
        if self.f_out_hz < self.f_ref_hz {
            return Err(Error::Config(format!(
                "PLL output {} Hz below reference {} Hz",
                self.f_out_hz, self.f_ref_hz
            )));
        }
        if !(self.loop_bandwidth_hz > 0.0 && self.loop_bandwidth_hz < self.f_ref_hz / 10.0) {
            return Err(Error::Config(format!(
                "loop bandwidth {} Hz must be in (0, f_ref/10 = {} Hz)",
                self.loop_bandwidth_hz,
                self.f_ref_hz / 10.0
            )));
        }
        if !(self.damping > 0.0) {
            return Err(Error::Config(format!(
                "damping must be positive, got {}",
                self.damping
            )));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.f_out_hz / self.f_ref_hz
    }

    pub fn dynamics(&self) -> SecondOrderLoop {
        SecondOrderLoop::from_crossover(self.loop_bandwidth_hz, self.damping)
    }

    pub fn settling_samples(&self, sample_rate_hz: f64) -> usize {
        self.dynamics().settling_samples(sample_rate_hz)
    }

    /// Output phase-noise density `L_out(f)` (linear) from the loop model.
    pub fn output_density(&self, f: f64) -> Result<f64> {
        let (href, hvco) = pll_transfer(self, f)?;
        Ok(href * href * self.ref_psd.density(f)? + hvco * hvco * self.vco_psd.density(f)?)
    }
}

/// Magnitudes of the reference-to-output and VCO-to-output transfers at `f`.
pub fn pll_transfer(params: &PllParams, f: f64) -> Result<(f64, f64)> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {f}")));
    }
    let dyn_ = params.dynamics();
    Ok((
        params.ratio() * dyn_.closed_loop(f).norm(),
        dyn_.error_response(f).norm(),
    ))
}

pub(crate) fn reference_path(params: &PllParams, reference: &PhaseTrace) -> PhaseTrace {
    let lp = params.dynamics().lowpass(reference.sample_rate());
    let ratio = params.ratio();
    let out = lp.filter(reference.phase()).into_iter().map(|p| ratio * p).collect();
    PhaseTrace::new(reference.sample_rate(), out).expect("non-empty input")
}

pub(crate) fn vco_path(params: &PllParams, vco: &PhaseTrace) -> PhaseTrace {
    let hp = params.dynamics().highpass(vco.sample_rate());
    PhaseTrace::new(vco.sample_rate(), hp.filter(vco.phase())).expect("non-empty input")
}

/// Output phase of the PLL: the ratio-scaled low-passed reference plus the
/// high-passed VCO phase. Filters start from rest.
pub fn pll_filter_traces(
    params: &PllParams,
    ref_trace: &PhaseTrace,
    vco_trace: &PhaseTrace,
) -> Result<PhaseTrace> {
    check_compatible(ref_trace, vco_trace)?;
    reference_path(params, ref_trace).try_add(&vco_path(params, vco_trace))
}

/// Intermediate-frequency "jitter cleaner" stage and its distribution buffers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfStage {
    pub pll: PllParams,
    /// White buffer noise added after the IF PLL, at the IF frequency.
    pub dist_floor_dbc_hz: f64,
}

impl IfStage {
    pub fn validate_against(&self, mmw: &PllParams) -> Result<()> {
        self.pll.validate()?;
        let rel = (self.pll.f_out_hz - mmw.f_ref_hz).abs() / mmw.f_ref_hz;
        if rel > 1e-9 {
            return Err(Error::Config(format!(
                "IF PLL output {} Hz does not match mm-wave PLL reference {} Hz",
                self.pll.f_out_hz, mmw.f_ref_hz
            )));
        }
        Ok(())
    }
}

/// Reference phase seen by the mm-wave PLL when an IF PLL sits in between:
/// IF PLL output plus white buffer noise, referred to the IF frequency.
///
/// `n` samples are returned after the IF loop has settled.
pub fn cascade_if_pll(
    stage: &IfStage,
    mmw: &PllParams,
    sample_rate_hz: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseTrace> {
    stage.validate_against(mmw)?;
    let warm = stage.pll.settling_samples(sample_rate_hz);
    let total = n + warm;
    let crystal = synthesize_trace(&stage.pll.ref_psd, sample_rate_hz, total, rng::derive_seed(seed, &[1]))?;
    let if_vco = synthesize_trace(&stage.pll.vco_psd, sample_rate_hz, total, rng::derive_seed(seed, &[2]))?;
    let if_out = pll_filter_traces(&stage.pll, &crystal, &if_vco)?.window(warm, n)?;
    let buffers = synthesize_trace(
        &PhaseNoisePsd::white(stage.dist_floor_dbc_hz),
        sample_rate_hz,
        n,
        rng::derive_seed(seed, &[3]),
    )?;
    if_out.try_add(&buffers)
}
