use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::link::{complex_noise, los_channel, user_angles};
use crate::lo_arch::element_traces;
use crate::rng;
use crate::rx::{agc, estimate_channel, Beamformer, CarrierLoop};
use crate::sim::config::SimConfig;
use crate::sim::metrics::{bit_errors, error_ratio_to_db, scalar_fit, SimMetrics, UserMetrics};

const LOCK_WINDOW: usize = 256;

#[derive(Debug, Clone)]
struct UserTrial {
    error_ratio: f64,
    bit_errors: u64,
    bits: u64,
    static_gain: f64,
    gain_var: f64,
    phase_var: f64,
    noise_ratio: Option<f64>,
    lock_lost: bool,
}

/// Beamformer output for every user, laid out `t·K + k`, plus the per-epoch
/// post-beamformer noise power of each user.
struct Beamformed {
    out: Vec<Complex64>,
    noise_power: Vec<Vec<f64>>,
}

fn beamform_trial(
    cfg: &SimConfig,
    seed: u64,
    labels: &[u32],
    force_block: Option<bool>,
) -> Result<Beamformed> {
    let fs = cfg.symbol_rate_hz;
    let n = cfg.n_symbols;
    let (m, k) = (cfg.arch.m, cfg.k);
    let set = element_traces(&cfg.arch, n, fs, rng::derive_seed(seed, &[1]))?;
    let h = los_channel(m, &user_angles(k, cfg.user_separation_deg), cfg.element_spacing_wavelengths)?.entries;
    let c = cfg.constellation;
    let n0 = cfg.element_noise_power();
    let mut noise_rng = rng::stream(seed, &[3]);

    let groups = set.num_groups();
    let group_size = cfg.arch.n_per_pll;
    let block = force_block.unwrap_or(groups * k < 2 * m);
    let h_flat: Vec<Complex64> = (0..m).flat_map(|i| (0..k).map(move |u| (i, u))).map(|(i, u)| h[(i, u)]).collect();

    let epoch = cfg.epoch_symbols();
    let mut out = vec![Complex64::new(0.0, 0.0); n * k];
    let mut noise_power = Vec::new();
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    let mut rot = vec![Complex64::new(0.0, 0.0); groups];
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let mut z = vec![Complex64::new(0.0, 0.0); k];

    for t0 in (0..n).step_by(epoch) {
        let t1 = (t0 + epoch).min(n);
        let est_end = (t0 + cfg.estimation_symbols()).min(t1);
        let group_phase: Vec<f64> = set
            .groups()
            .iter()
            .map(|g| {
                g.phase()[t0..est_end]
                    .iter()
                    .map(|p| Complex64::from_polar(1.0, *p))
                    .sum::<Complex64>()
                    .arg()
            })
            .collect();
        let phases: Vec<f64> = set.group_of().iter().map(|&g| group_phase[g]).collect();
        let h_hat = estimate_channel(&h, &phases)?;
        let w = Beamformer::design(cfg.beamformer, &h_hat)?.w;

        // Rotating element noise leaves its distribution unchanged, so the
        // beamformer output noise is drawn directly with covariance N0·WWᴴ.
        let cov = (&w * w.adjoint()) * Complex64::new(n0, 0.0);
        noise_power.push((0..k).map(|u| cov[(u, u)].re).collect());
        let chol = if n0 > 0.0 {
            Some(cov.cholesky().expect("noise covariance is positive definite").l())
        } else {
            None
        };

        let a: Vec<Complex64> = if block {
            (0..groups)
                .flat_map(|g| {
                    let wg = w.columns(g * group_size, group_size);
                    let hg = h.rows(g * group_size, group_size);
                    let ag: DMatrix<Complex64> = wg * hg;
                    (0..k * k).map(move |idx| ag[(idx / k, idx % k)])
                })
                .collect()
        } else {
            Vec::new()
        };
        let w_flat: Vec<Complex64> = if block {
            Vec::new()
        } else {
            (0..k).flat_map(|u| (0..m).map(move |i| (u, i))).map(|(u, i)| w[(u, i)]).collect()
        };

        for t in t0..t1 {
            for (u, xv) in x.iter_mut().enumerate() {
                *xv = c.map(labels[t * k + u]);
            }
            for (g, r) in rot.iter_mut().enumerate() {
                *r = Complex64::from_polar(1.0, set.group(g).phase()[t]);
            }
            let o = &mut out[t * k..(t + 1) * k];
            if block {
                for (g, r) in rot.iter().enumerate() {
                    let ag = &a[g * k * k..(g + 1) * k * k];
                    for (u, ov) in o.iter_mut().enumerate() {
                        let row = &ag[u * k..(u + 1) * k];
                        let s: Complex64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
                        *ov += r * s;
                    }
                }
            } else {
                for (i, yv) in y.iter_mut().enumerate() {
                    let row = &h_flat[i * k..(i + 1) * k];
                    let s: Complex64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
                    *yv = rot[i / group_size] * s;
                }
                for (u, ov) in o.iter_mut().enumerate() {
                    let row = &w_flat[u * m..(u + 1) * m];
                    *ov = row.iter().zip(&y).map(|(p, q)| p * q).sum();
                }
            }
            if let Some(l) = &chol {
                for zv in z.iter_mut() {
                    *zv = complex_noise(&mut noise_rng, 1.0);
                }
                for (u, ov) in o.iter_mut().enumerate() {
                    *ov += (0..=u).map(|j| l[(u, j)] * z[j]).sum::<Complex64>();
                }
            }
        }
    }
    Ok(Beamformed { out, noise_power })
}

fn process_user(cfg: &SimConfig, bf: &Beamformed, labels: &[u32], u: usize) -> Result<UserTrial> {
    let (n, k) = (cfg.n_symbols, cfg.k);
    let c = cfg.constellation;
    let epoch = cfg.epoch_symbols();
    let transient = cfg.transient_symbols();
    let mut lp = CarrierLoop::new(&cfg.cr, cfg.symbol_rate_hz);

    let mut kept_rx = Vec::new();
    let mut kept_tx = Vec::new();
    let mut kept_rx_labels = Vec::new();
    let mut kept_tx_labels = Vec::new();
    let mut gains = Vec::new();
    let mut noise_ratio = 0.0;

    for (e, t0) in (0..n).step_by(epoch).enumerate() {
        let t1 = (t0 + epoch).min(n);
        let stream: Vec<Complex64> = (t0..t1).map(|t| bf.out[t * k + u]).collect();
        let noise = bf.noise_power[e][u];
        let (scaled, g) = agc::slow_agc(&stream, 1.0, noise);
        gains.push(g);
        noise_ratio += noise / (g * g) * (t1 - t0) as f64;
        lp.reset();
        for (j, s) in scaled.into_iter().enumerate() {
            let zc = lp.step(s);
            if j >= transient {
                let t = t0 + j;
                kept_rx.push(zc);
                kept_tx.push(c.map(labels[t * k + u]));
                kept_rx_labels.push(c.demap(zc));
                kept_tx_labels.push(labels[t * k + u]);
            }
        }
    }
    noise_ratio /= n as f64;

    let fit = scalar_fit(&kept_rx, &kept_tx)?;
    let ratios: Vec<Complex64> = kept_rx.iter().zip(&kept_tx).map(|(y, x)| y / x).collect();
    let (gain_var, phase_var) = variances(&ratios);
    let lock_lost = kept_rx_labels
        .chunks(LOCK_WINDOW)
        .zip(kept_tx_labels.chunks(LOCK_WINDOW))
        .filter(|(a, _)| a.len() == LOCK_WINDOW)
        .any(|(a, b)| a.iter().zip(b).filter(|(p, q)| p != q).count() * 2 > LOCK_WINDOW);

    Ok(UserTrial {
        error_ratio: fit.error_ratio,
        bit_errors: bit_errors(&kept_rx_labels, &kept_tx_labels),
        bits: kept_rx_labels.len() as u64 * c.bits_per_symbol() as u64,
        static_gain: gains.iter().sum::<f64>() / gains.len() as f64,
        gain_var,
        phase_var,
        noise_ratio: (cfg.thermal_snr_db.is_some()).then_some(noise_ratio),
        lock_lost,
    })
}

fn variances(r: &[Complex64]) -> (f64, f64) {
    let n = r.len() as f64;
    let mag: Vec<f64> = r.iter().map(|v| v.norm()).collect();
    let ph: Vec<f64> = r.iter().map(|v| v.arg()).collect();
    let var = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n
    };
    (var(&mag), var(&ph))
}

fn run_trial(cfg: &SimConfig, trial: usize) -> Result<Vec<UserTrial>> {
    let seed = rng::derive_seed(cfg.seed, &[trial as u64]);
    let mut r = rng::stream(seed, &[2]);
    let order = cfg.constellation.order();
    let labels: Vec<u32> = (0..cfg.n_symbols * cfg.k).map(|_| r.random_range(0..order)).collect();
    let bf = beamform_trial(cfg, seed, &labels, None)?;
    (0..cfg.k).map(|u| process_user(cfg, &bf, &labels, u)).collect()
}

/// Simulates `n_trials` independent realizations of the uplink and averages
/// the per-user metrics.
pub fn run_uplink(cfg: &SimConfig) -> Result<SimMetrics> {
    cfg.validate()?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    let trials: Vec<Vec<UserTrial>> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    Ok(aggregate(cfg, &trials))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c.max(1) as f64
}

fn aggregate(cfg: &SimConfig, trials: &[Vec<UserTrial>]) -> SimMetrics {
    let per_user: Vec<UserMetrics> = (0..cfg.k)
        .map(|u| {
            let rows = || trials.iter().map(move |t| &t[u]);
            let er = mean(rows().map(|r| r.error_ratio));
            let bits: u64 = rows().map(|r| r.bits).sum();
            let errs: u64 = rows().map(|r| r.bit_errors).sum();
            UserMetrics {
                sinr_db: error_ratio_to_db(er),
                evm: er.sqrt(),
                ber: errs as f64 / bits as f64,
                static_gain: mean(rows().map(|r| r.static_gain)),
                gain_var: mean(rows().map(|r| r.gain_var)),
                resid_phase_var: mean(rows().map(|r| r.phase_var)),
                effective_snr_db: cfg
                    .thermal_snr_db
                    .map(|_| -10.0 * mean(rows().filter_map(|r| r.noise_ratio)).log10()),
                lock_lost: rows().any(|r| r.lock_lost),
            }
        })
        .collect();

    let all = || trials.iter().flatten();
    let er = mean(all().map(|r| r.error_ratio));
    let per_trial_db: Vec<f64> = trials
        .iter()
        .map(|t| error_ratio_to_db(mean(t.iter().map(|r| r.error_ratio))))
        .collect();
    let sinr_ci_db = if per_trial_db.len() > 1 {
        let mu = mean(per_trial_db.iter().copied());
        let n = per_trial_db.len() as f64;
        let var = per_trial_db.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    let bits: u64 = all().map(|r| r.bits).sum();
    let errs: u64 = all().map(|r| r.bit_errors).sum();
    let symbols_per_user = trials
        .first()
        .and_then(|t| t.first())
        .map_or(0, |r| (r.bits / cfg.constellation.bits_per_symbol() as u64) as usize);

    SimMetrics {
        sinr_db: error_ratio_to_db(er),
        sinr_ci_db,
        evm: er.sqrt(),
        ber: errs as f64 / bits as f64,
        static_gain: mean(all().map(|r| r.static_gain)),
        gain_var: mean(all().map(|r| r.gain_var)),
        resid_phase_var: mean(all().map(|r| r.phase_var)),
        effective_snr_db: cfg
            .thermal_snr_db
            .map(|_| -10.0 * mean(all().filter_map(|r| r.noise_ratio)).log10()),
        lock_lost: all().any(|r| r.lock_lost),
        per_user,
        trials: trials.len(),
        symbols_per_user,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::architecture;
    use crate::Constellation;

    fn small(m: usize, n: usize, k: usize) -> SimConfig {
        let mut c = SimConfig {
            k,
            arch: architecture(m, n, 5e6, true),
            n_symbols: 20_000,
            n_trials: 2,
            ..SimConfig::default()
        };
        c.set_constellation(Constellation::Qam16);
        c
    }

    #[test]
    fn noiseless_link_is_exact() {
        let c = small(16, 4, 3).without_phase_noise();
        let r = run_uplink(&c).unwrap();
        assert!(r.sinr_db > 80.0, "{}", r.sinr_db);
        assert_eq!(r.ber, 0.0);
        assert!(!r.lock_lost);
    }

    #[test]
    fn block_and_direct_paths_agree() {
        let mut c = small(16, 4, 3);
        c.thermal_snr_db = Some(30.0);
        c.n_symbols = 3000;
        let labels: Vec<u32> = (0..c.n_symbols * c.k).map(|i| (i * 7 % 16) as u32).collect();
        let a = beamform_trial(&c, 5, &labels, Some(true)).unwrap();
        let b = beamform_trial(&c, 5, &labels, Some(false)).unwrap();
        let diff = a.out.iter().zip(&b.out).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn deterministic_under_seed() {
        let c = small(8, 2, 2);
        assert_eq!(run_uplink(&c).unwrap(), run_uplink(&c).unwrap());
        let mut d = c.clone();
        d.seed += 1;
        assert_ne!(run_uplink(&c).unwrap().sinr_db, run_uplink(&d).unwrap().sinr_db);
    }

    #[test]
    fn thermal_snr_sets_error_level() {
        let mut c = small(4, 4, 1).without_phase_noise();
        c.thermal_snr_db = Some(20.0);
        c.n_symbols = 50_000;
        let r = run_uplink(&c).unwrap();
        assert!((r.sinr_db - 20.0).abs() < 0.3, "{}", r.sinr_db);
        assert!((r.effective_snr_db.unwrap() - 20.0).abs() < 0.3);
        assert!((r.sinr_db + 20.0 * r.evm.log10()).abs() < 1e-9);
    }
}
