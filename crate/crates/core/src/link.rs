//! Link budgets and line-of-sight array channels.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub name: String,
    pub bandwidth_hz: f64,
    pub rx_nf_db: f64,
    pub carrier_hz: f64,
    pub loss_exponent: f64,
    pub distance_m: f64,
    pub target_snr_db: f64,
    pub bs_gain_db: f64,
    pub ue_gain_db: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.distance_m >= 1.0) {
            return Err(Error::Config(format!(
                "distance_m must be >= 1, got {}",
                self.distance_m
            )));
        }
        if !(1.5..=6.0).contains(&self.loss_exponent) {
            return Err(Error::Config(format!(
                "loss_exponent must be in [1.5, 6], got {}",
                self.loss_exponent
            )));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier_hz must be > 0, got {}",
                self.carrier_hz
            )));
        }
        Ok(())
    }

    pub fn noise_power_dbm(&self) -> f64 {
        noise_power(self.bandwidth_hz, self.rx_nf_db)
    }

    pub fn path_loss_db(&self) -> f64 {
        path_loss(self.carrier_hz, self.distance_m, self.loss_exponent)
    }

    /// The three columns of the RF versus mm-wave comparison: a 2.5 GHz
    /// single-antenna link, a 60 GHz single-antenna link and a 60 GHz link
    /// with 128 base-station and 16 handset elements.
    pub fn table_columns() -> Vec<LinkBudget> {
        let base = |name: &str, bw: f64, fc: f64, n: f64, bs: f64, ue: f64| LinkBudget {
            name: name.into(),
            bandwidth_hz: bw,
            rx_nf_db: 5.0,
            carrier_hz: fc,
            loss_exponent: n,
            distance_m: 100.0,
            target_snr_db: 26.0,
            bs_gain_db: bs,
            ue_gain_db: ue,
        };
        vec![
            base("RF", 20e6, 2.5e9, 2.9, 0.0, 0.0),
            base("mmw #1", 2e9, 60e9, 2.2, 0.0, 0.0),
            base(
                "mmw #2",
                2e9,
                60e9,
                2.2,
                10.0 * 128f64.log10(),
                10.0 * 16f64.log10(),
            ),
        ]
    }
}

/// Loss with a free-space term at 1 m and exponent `n` beyond it.
pub fn path_loss(carrier_hz: f64, distance_m: f64, loss_exponent: f64) -> f64 {
    20.0 * (4.0 * PI * carrier_hz / SPEED_OF_LIGHT).log10()
        + 10.0 * loss_exponent * distance_m.log10()
}

/// Input-referred thermal noise in dBm.
pub fn noise_power(bandwidth_hz: f64, nf_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + nf_db
}

pub fn required_tx_power(b: &LinkBudget) -> Result<f64> {
    b.validate()?;
    Ok(b.target_snr_db + b.noise_power_dbm() + b.path_loss_db() - b.bs_gain_db - b.ue_gain_db)
}

/// `M×K` channel of a uniform linear array.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<Complex64>,
    pub spacing_wavelengths: f64,
    pub user_angles_deg: Vec<f64>,
}

impl ChannelMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    /// Ratio of largest to smallest singular value.
    pub fn condition_number(&self) -> f64 {
        condition_number(&self.entries)
    }
}

pub fn condition_number(a: &DMatrix<Complex64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Steering-vector channel: element `m` of column `k` has phase
/// `2π·spacing·m·sin(θ_k)`.
pub fn los_channel(m: usize, user_angles_deg: &[f64], spacing_wavelengths: f64) -> Result<ChannelMatrix> {
    let k = user_angles_deg.len();
    if m == 0 || k == 0 || k > m {
        return Err(Error::Argument(format!("need 1 <= K <= M, got K={k}, M={m}")));
    }
    if let Some(a) = user_angles_deg.iter().find(|a| !(a.abs() < 90.0)) {
        return Err(Error::Argument(format!("user angle {a} outside (-90, 90) degrees")));
    }
    for (i, a) in user_angles_deg.iter().enumerate() {
        if user_angles_deg[..i].contains(a) {
            log::warn!("duplicate user angle {a} deg; zero-forcing will be ill-conditioned");
        }
    }
    let entries = DMatrix::from_fn(m, k, |i, j| {
        let s = user_angles_deg[j].to_radians().sin();
        Complex64::from_polar(1.0, 2.0 * PI * spacing_wavelengths * i as f64 * s)
    });
    Ok(ChannelMatrix {
        entries,
        spacing_wavelengths,
        user_angles_deg: user_angles_deg.to_vec(),
    })
}

/// Angles `(k − (K−1)/2)·separation` for `K` users centred on broadside.
pub fn user_angles(k: usize, separation_deg: f64) -> Vec<f64> {
    let c = (k as f64 - 1.0) / 2.0;
    (0..k).map(|i| (i as f64 - c) * separation_deg).collect()
}

/// Circularly symmetric complex Gaussian sample of total variance `power`.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `Hx + n` with per-element noise power `noise_power`.
pub fn apply_channel<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    x: &DVector<Complex64>,
    noise_power: f64,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if x.len() != h.k() {
        return Err(Error::Argument(format!(
            "expected {} symbols, got {}",
            h.k(),
            x.len()
        )));
    }
    let mut y = &h.entries * x;
    if noise_power > 0.0 {
        y.iter_mut().for_each(|v| *v += complex_noise(rng, noise_power));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_rows() {
        let cols = LinkBudget::table_columns();
        let noise: Vec<f64> = cols.iter().map(|c| c.noise_power_dbm()).collect();
        let loss: Vec<f64> = cols.iter().map(|c| c.path_loss_db()).collect();
        let tx: Vec<f64> = cols.iter().map(|c| required_tx_power(c).unwrap()).collect();
        for (got, want) in noise.iter().zip([-96.0, -76.0, -76.0]) {
            assert!((got - want).abs() < 0.05);
        }
        for (got, want) in loss.iter().zip([98.4, 112.0, 112.0]) {
            assert!((got - want).abs() < 0.05);
        }
        for (got, want) in tx.iter().zip([28.4, 62.0, 28.9]) {
            assert!((got - want).abs() < 0.05);
        }
    }

    #[test]
    fn thermal_floor_and_reference_distance() {
        assert_eq!(noise_power(1.0, 0.0), -174.0);
        let fs = 20.0 * (4.0 * PI * 60e9 / SPEED_OF_LIGHT).log10();
        assert!((path_loss(60e9, 1.0, 3.0) - fs).abs() < 1e-12);
    }

    #[test]
    fn budget_validation() {
        let mut b = LinkBudget::table_columns().remove(0);
        b.distance_m = 0.5;
        assert!(required_tx_power(&b).is_err());
        b.distance_m = 100.0;
        b.loss_exponent = 7.0;
        assert!(required_tx_power(&b).is_err());
    }

    #[test]
    fn broadside_column_is_ones() {
        let h = los_channel(8, &[0.0], 0.5).unwrap();
        assert!(h.entries.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn inner_product_matches_beam_pattern() {
        let m = 16;
        let theta: f64 = 10.0;
        let h = los_channel(m, &[-theta, theta], 0.5).unwrap();
        let ip: Complex64 = (0..m)
            .map(|i| h.entries[(i, 0)].conj() * h.entries[(i, 1)])
            .sum();
        // |sin(Mψ/2) / sin(ψ/2)| with ψ = 2π·d·(sin θ1 − sin θ0)
        let psi = 2.0 * PI * 0.5 * 2.0 * theta.to_radians().sin();
        let pattern = ((m as f64 * psi / 2.0).sin() / (psi / 2.0).sin()).abs();
        assert!((ip.norm() - pattern).abs() < 1e-9);
    }

    #[test]
    fn columns_have_norm_sqrt_m() {
        let h = los_channel(128, &user_angles(16, 10.0), 0.5).unwrap();
        for c in h.entries.column_iter() {
            assert!((c.norm() - 128f64.sqrt()).abs() < 1e-12);
        }
        let cond = h.condition_number();
        assert!(cond.is_finite() && cond >= 1.0);
    }

    #[test]
    fn channel_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = los_channel(1, &[0.0], 0.5).unwrap();
        let x = DVector::from_element(1, Complex64::new(0.3, -0.7));
        assert_eq!(apply_channel(&h, &x, 0.0, &mut rng).unwrap(), x);

        let h = los_channel(4, &[0.0, 20.0], 0.5).unwrap();
        let zero = DVector::from_element(2, Complex64::new(0.0, 0.0));
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += apply_channel(&h, &zero, 0.5, &mut rng).unwrap().norm_squared();
        }
        let per_element = acc / (n as f64 * 4.0);
        assert!((per_element / 0.5 - 1.0).abs() < 0.05);

        let wrong = DVector::from_element(3, Complex64::new(0.0, 0.0));
        assert!(apply_channel(&h, &wrong, 0.0, &mut rng).is_err());
    }
}
