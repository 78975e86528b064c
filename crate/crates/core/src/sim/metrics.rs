use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::units::db_to_lin;

/// Reported SINR for an error-free link.
pub const SINR_CAP_DB: f64 = 100.0;

/// Least-squares complex gain `c` of `rx ≈ c·tx` and the residual-to-signal
/// power ratio after removing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFit {
    pub gain: Complex64,
    pub error_ratio: f64,
}

pub fn scalar_fit(rx: &[Complex64], tx: &[Complex64]) -> Result<ScalarFit> {
    if rx.len() != tx.len() {
        return Err(Error::Argument(format!(
            "rx has {} symbols, tx has {}",
            rx.len(),
            tx.len()
        )));
    }
    if rx.is_empty() {
        return Err(Error::Argument("no symbols to measure".into()));
    }
    let px: f64 = tx.iter().map(|x| x.norm_sqr()).sum();
    if px == 0.0 {
        return Err(Error::Argument("reference symbols have zero power".into()));
    }
    let cross: Complex64 = rx.iter().zip(tx).map(|(y, x)| y * x.conj()).sum();
    let gain = cross / px;
    let pe: f64 = rx.iter().zip(tx).map(|(y, x)| (y - gain * x).norm_sqr()).sum();
    let ps = gain.norm_sqr() * px;
    let error_ratio = if ps > 0.0 { pe / ps } else { f64::INFINITY };
    Ok(ScalarFit { gain, error_ratio })
}

/// SINR in dB from an error-to-signal power ratio, capped at
/// [`SINR_CAP_DB`].
pub fn error_ratio_to_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        SINR_CAP_DB
    } else {
        (-10.0 * ratio.log10()).min(SINR_CAP_DB)
    }
}

pub fn measure_sinr(rx: &[Complex64], tx: &[Complex64]) -> Result<f64> {
    scalar_fit(rx, tx).map(|f| error_ratio_to_db(f.error_ratio))
}

pub fn measure_evm(rx: &[Complex64], tx: &[Complex64]) -> Result<f64> {
    scalar_fit(rx, tx).map(|f| f.error_ratio.sqrt())
}

/// Fraction of differing bits between symbol labels of `bits_per_symbol` bits.
pub fn measure_ber(rx_labels: &[u32], tx_labels: &[u32], bits_per_symbol: u32) -> Result<f64> {
    if rx_labels.len() != tx_labels.len() {
        return Err(Error::Argument(format!(
            "rx has {} labels, tx has {}",
            rx_labels.len(),
            tx_labels.len()
        )));
    }
    if rx_labels.is_empty() {
        return Err(Error::Argument("no symbols to measure".into()));
    }
    let errs = bit_errors(rx_labels, tx_labels);
    Ok(errs as f64 / (rx_labels.len() as f64 * bits_per_symbol as f64))
}

pub fn bit_errors(rx_labels: &[u32], tx_labels: &[u32]) -> u64 {
    rx_labels
        .iter()
        .zip(tx_labels)
        .map(|(a, b)| (a ^ b).count_ones() as u64)
        .sum()
}

/// Uncoded Gray-mapped bit error rate on an AWGN channel at symbol SNR
/// `Es/N0` (dB), summed exactly over every per-axis decision region.
pub fn awgn_ber(constellation: Constellation, snr_db: f64) -> f64 {
    let l = constellation.levels() as usize;
    let bits = constellation.bits_per_symbol() / 2;
    // unit-spaced PAM levels at odd integers; per-axis noise σ
    let es = 2.0 * (l * l - 1) as f64 / 3.0;
    let sigma = (es / (2.0 * db_to_lin(snr_db))).sqrt();
    let q = |x: f64| 0.5 * erfc(x / (sigma * std::f64::consts::SQRT_2));
    let level = |i: usize| 2.0 * i as f64 - (l as f64 - 1.0);
    let gray = |i: usize| i ^ (i >> 1);
    let mut errors = 0.0;
    for tx in 0..l {
        for rx in 0..l {
            if rx == tx {
                continue;
            }
            let lo = if rx == 0 { f64::NEG_INFINITY } else { level(rx) - 1.0 };
            let hi = if rx == l - 1 { f64::INFINITY } else { level(rx) + 1.0 };
            let p = q(lo - level(tx)) - q(hi - level(tx));
            errors += p * (gray(tx) ^ gray(rx)).count_ones() as f64;
        }
    }
    errors / (l as f64 * bits as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub sinr_db: f64,
    pub evm: f64,
    pub ber: f64,
    pub static_gain: f64,
    pub gain_var: f64,
    pub resid_phase_var: f64,
    pub effective_snr_db: Option<f64>,
    pub lock_lost: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// Power-averaged over users and trials; equals `−20·log10(evm)`.
    pub sinr_db: f64,
    /// Half-width of the 95 % interval of the per-trial SINR in dB.
    pub sinr_ci_db: f64,
    pub evm: f64,
    pub ber: f64,
    pub static_gain: f64,
    pub gain_var: f64,
    pub resid_phase_var: f64,
    pub effective_snr_db: Option<f64>,
    pub lock_lost: bool,
    pub per_user: Vec<UserMetrics>,
    pub trials: usize,
    pub symbols_per_user: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_ber_closed_forms() {
        for snr_db in [0.0, 6.0, 10.0] {
            let g = db_to_lin(snr_db);
            let q = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
            assert!((awgn_ber(Constellation::Qpsk, snr_db) - q(g.sqrt())).abs() < 1e-15);
            let a = (g / 5.0).sqrt();
            let want = (3.0 * q(a) + 2.0 * q(3.0 * a) - q(5.0 * a)) / 4.0;
            assert!((awgn_ber(Constellation::Qam16, snr_db) - want).abs() < 1e-15);
        }
        assert!(awgn_ber(Constellation::Qam256, 40.0) < 1e-12);
    }

    fn seq(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 0.7 * i as f64))
            .collect()
    }

    #[test]
    fn identical_is_capped() {
        let x = seq(64);
        assert_eq!(measure_sinr(&x, &x).unwrap(), SINR_CAP_DB);
        assert_eq!(measure_ber(&[1, 2, 3], &[1, 2, 3], 2).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_error_of_known_power() {
        let x = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ];
        let p: f64 = 0.01;
        // error orthogonal to x with mean power p
        let e = [1.0, 1.0, -1.0, -1.0].map(|v| Complex64::new(v * p.sqrt(), 0.0));
        let rx: Vec<_> = x.iter().zip(&e).map(|(a, b)| a + b).collect();
        assert!((measure_sinr(&rx, &x).unwrap() + 10.0 * p.log10()).abs() < 1e-9);
    }

    #[test]
    fn invariant_to_global_scalar() {
        let x = seq(100);
        let rx: Vec<_> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + Complex64::new(0.01 * (i as f64).sin(), 0.02 * (i as f64).cos()))
            .collect();
        let a = Complex64::from_polar(3.0, 1.1);
        let tx2: Vec<_> = x.iter().map(|v| v * a).collect();
        let s1 = measure_sinr(&rx, &x).unwrap();
        let s2 = measure_sinr(&rx, &tx2).unwrap();
        assert!((s1 - s2).abs() < 1e-9);
        let evm = measure_evm(&rx, &x).unwrap();
        assert!((s1 + 20.0 * evm.log10()).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        assert!(measure_sinr(&seq(3), &seq(4)).is_err());
        assert!(measure_ber(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn ber_counts_bits() {
        assert_eq!(measure_ber(&[0b11, 0b00], &[0b00, 0b00], 2).unwrap(), 0.5);
    }
}
