use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use lo_chain::link::{los_channel, path_loss, user_angles};
use lo_chain::phase_noise::{pll_filter_traces, synthesize_trace, PhaseNoisePsd, PhaseTrace, PllParams};
use lo_chain::rx::beamform::{apply_phase_noise_rx, beamform_zf, DEFAULT_COND_LIMIT};
use lo_chain::units::{dbm_to_w, w_to_dbm};

fn pll(bw: f64) -> PllParams {
    PllParams {
        f_ref_hz: 100e6,
        f_out_hz: 75e9,
        loop_bandwidth_hz: bw,
        damping: std::f64::consts::FRAC_1_SQRT_2,
        ref_psd: PhaseNoisePsd::white(-140.0),
        vco_psd: PhaseNoisePsd::wiener(1e6, -90.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pll_filtering_is_linear(bw in 1e5f64..5e6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = pll(bw);
        let n = 4096;
        let a = synthesize_trace(&PhaseNoisePsd::white(-120.0), 2e9, n, s1).unwrap();
        let b = synthesize_trace(&PhaseNoisePsd::wiener(1e6, -80.0), 2e9, n, s2).unwrap();
        let c = synthesize_trace(&PhaseNoisePsd::white(-110.0), 2e9, n, s1 ^ s2).unwrap();
        let d = synthesize_trace(&PhaseNoisePsd::wiener(1e6, -85.0), 2e9, n, s1.wrapping_add(1)).unwrap();
        let sum = |x: &PhaseTrace, y: &PhaseTrace| x.try_add(y).unwrap();
        let whole = pll_filter_traces(&p, &sum(&a, &c), &sum(&b, &d)).unwrap();
        let parts = sum(
            &pll_filter_traces(&p, &a, &b).unwrap(),
            &pll_filter_traces(&p, &c, &d).unwrap(),
        );
        let scale = whole.phase().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in whole.phase().iter().zip(parts.phase()) {
            prop_assert!((x - y).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn traces_reproduce_under_seed(seed in any::<u64>(), level in -100.0f64..-80.0) {
        let psd = PhaseNoisePsd::wiener(1e6, level).with_white_floor(-140.0);
        let a = synthesize_trace(&psd, 2e9, 2048, seed).unwrap();
        let b = synthesize_trace(&psd, 2e9, 2048, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn path_loss_increases_in_each_argument(
        fc in 1e9f64..1e11, d in 1.5f64..1e3, n in 1.5f64..5.9, step in 1.001f64..2.0,
    ) {
        let base = path_loss(fc, d, n);
        prop_assert!(path_loss(fc * step, d, n) > base);
        prop_assert!(path_loss(fc, d * step, n) > base);
        prop_assert!(path_loss(fc, d, n * step) > base);
    }

    #[test]
    fn dbm_round_trip(p in -150.0f64..60.0) {
        let back = w_to_dbm(dbm_to_w(p));
        prop_assert!((back - p).abs() <= 1e-12 * p.abs().max(1.0));
    }

    #[test]
    fn zf_leakage_below_100_db(k in 2usize..8, sep in 3.0f64..12.0) {
        let h = los_channel(64, &user_angles(k, sep), 0.5).unwrap().entries;
        let w = beamform_zf(&h, DEFAULT_COND_LIMIT).unwrap();
        let g = &w * &h;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let rel = g[(i, j)].norm_sqr() / g[(i, i)].norm_sqr();
                    prop_assert!(10.0 * rel.log10() < -100.0);
                }
            }
        }
    }

    /// A phase common to every element rotates each beamformer output and
    /// leaves its magnitude unchanged.
    #[test]
    fn common_phase_only_rotates(psi in -3.1f64..3.1, seed in any::<u64>()) {
        let m = 16;
        let h = los_channel(m, &user_angles(3, 10.0), 0.5).unwrap().entries;
        let w = beamform_zf(&h, DEFAULT_COND_LIMIT).unwrap();
        let x = DVector::from_fn(3, |i, _| Complex64::from_polar(1.0, (seed % 97) as f64 * 0.1 + i as f64));
        let phases: Vec<f64> = (0..m).map(|i| ((seed >> (i % 32)) & 0xff) as f64 / 255.0 - 0.5).collect();
        let shifted: Vec<f64> = phases.iter().map(|p| p + psi).collect();
        let a = apply_phase_noise_rx(&w, &h, &x, &phases, None).unwrap();
        let b = apply_phase_noise_rx(&w, &h, &x, &shifted, None).unwrap();
        let rot = Complex64::from_polar(1.0, psi);
        for (u, v) in a.iter().zip(b.iter()) {
            prop_assert!((u * rot - v).norm() < 1e-12);
        }
    }
}
