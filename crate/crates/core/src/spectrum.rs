//! Averaged-periodogram (Welch) density estimation for real phase traces.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};

/// Accumulates Hann-windowed, linearly detrended, 50 %-overlapped segment
/// periodograms over any number of records.
///
/// The estimate is the two-sided density (rad²/Hz for a phase trace), reported
/// on the non-negative frequency bins. For a phase trace this is directly
/// comparable with `L(f)` in linear units.
pub struct Welch {
    nperseg: usize,
    sample_rate_hz: f64,
    window: Vec<f64>,
    window_power: f64,
    acc: Vec<f64>,
    segments: usize,
    planner: FftPlanner<f64>,
}

impl Welch {
    pub fn new(nperseg: usize, sample_rate_hz: f64) -> Result<Self> {
        if nperseg < 8 || !(sample_rate_hz > 0.0) {
            return Err(Error::Argument(format!(
                "need nperseg >= 8 and positive rate, got {nperseg}, {sample_rate_hz}"
            )));
        }
        let window: Vec<f64> = (0..nperseg)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nperseg as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        Ok(Self {
            nperseg,
            sample_rate_hz,
            window,
            window_power,
            acc: vec![0.0; nperseg / 2 + 1],
            segments: 0,
            planner: FftPlanner::new(),
        })
    }

    pub fn add_record(&mut self, x: &[f64]) {
        let step = self.nperseg / 2;
        let fft = self.planner.plan_fft_forward(self.nperseg);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nperseg];
        let mut start = 0;
        while start + self.nperseg <= x.len() {
            let seg = &x[start..start + self.nperseg];
            let (slope, intercept) = linear_fit(seg);
            for (i, b) in buf.iter_mut().enumerate() {
                let d = seg[i] - (intercept + slope * i as f64);
                *b = Complex64::new(d * self.window[i], 0.0);
            }
            fft.process(&mut buf);
            for (a, b) in self.acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
            self.segments += 1;
            start += step;
        }
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// `(frequencies, density)` for bins `0..=nperseg/2`.
    pub fn estimate(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = 1.0 / (self.sample_rate_hz * self.window_power * self.segments.max(1) as f64);
        let df = self.sample_rate_hz / self.nperseg as f64;
        let freqs = (0..self.acc.len()).map(|k| k as f64 * df).collect();
        let dens = self.acc.iter().map(|a| a * scale).collect();
        (freqs, dens)
    }
}

fn linear_fit(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (v - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

/// Mean of `density` over bins whose frequency lies in `[lo, hi]`.
pub fn band_average(freqs: &[f64], density: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (sum, count) = freqs
        .iter()
        .zip(density)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .fold((0.0, 0usize), |(s, c), (_, d)| (s + d, c + 1));
    (count > 0).then(|| sum / count as f64)
}
