//! Per-element LO phase for central, local and generalized carrier generation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_noise::pll::{reference_path, vco_path};
use crate::phase_noise::{cascade_if_pll, synthesize_trace, IfStage, PllParams, PhaseTrace};
use crate::rng;

/// Array of `m` elements fed by `m / n_per_pll` mm-wave PLLs.
///
/// `mmw_pll.vco_psd` describes a single central VCO. With `budget_scaling`
/// each of the `m / n_per_pll` physical VCOs is `10·log10(m / n_per_pll)` dB
/// noisier, keeping total VCO power constant. When `if_pll` is present the
/// mm-wave PLLs are referenced to its output and `mmw_pll.ref_psd` is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoArchitecture {
    pub m: usize,
    pub n_per_pll: usize,
    pub mmw_pll: PllParams,
    pub if_pll: Option<IfStage>,
    pub budget_scaling: bool,
}

impl LoArchitecture {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_per_pll == 0 || self.n_per_pll > self.m {
            return Err(Error::Config(format!(
                "need 1 <= N <= M, got N={}, M={}",
                self.n_per_pll, self.m
            )));
        }
        if !self.m.is_multiple_of(self.n_per_pll) {
            return Err(Error::Config(format!(
                "N={} does not divide M={}",
                self.n_per_pll, self.m
            )));
        }
        self.mmw_pll.validate()?;
        if let Some(stage) = &self.if_pll {
            stage.pll.validate()?;
            stage.validate_against(&self.mmw_pll)?;
        }
        Ok(())
    }

    pub fn num_plls(&self) -> usize {
        self.m / self.n_per_pll
    }

    /// PSD of each physical mm-wave VCO after budget scaling.
    pub fn vco_psd(&self) -> crate::phase_noise::PhaseNoisePsd {
        if self.budget_scaling {
            self.mmw_pll
                .vco_psd
                .shifted(10.0 * (self.num_plls() as f64).log10())
        } else {
            self.mmw_pll.vco_psd
        }
    }

    /// Samples discarded ahead of the returned traces so that every filter
    /// has settled.
    pub fn warmup_samples(&self, sample_rate_hz: f64) -> usize {
        self.mmw_pll.settling_samples(sample_rate_hz)
    }
}

/// Phase of every element, stored once per PLL group.
#[derive(Debug, Clone)]
pub struct ElementTraceSet {
    groups: Vec<PhaseTrace>,
    group_of: Vec<usize>,
    common: PhaseTrace,
}

impl ElementTraceSet {
    pub fn num_elements(&self) -> usize {
        self.group_of.len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn element(&self, i: usize) -> &PhaseTrace {
        &self.groups[self.group_of[i]]
    }

    pub fn group(&self, g: usize) -> &PhaseTrace {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[PhaseTrace] {
        &self.groups
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    /// Reference (or IF cascade) contribution shared by all elements.
    pub fn common(&self) -> &PhaseTrace {
        &self.common
    }

    pub fn len(&self) -> usize {
        self.common.len()
    }

    pub fn is_empty(&self) -> bool {
        self.common.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.common.sample_rate()
    }
}

/// Generates `n_samples` of settled LO phase for every element of `arch`.
pub fn element_traces(
    arch: &LoArchitecture,
    n_samples: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<ElementTraceSet> {
    arch.validate()?;
    if n_samples == 0 {
        return Err(Error::Argument("n_samples must be positive".into()));
    }
    let warm = arch.warmup_samples(sample_rate_hz);
    let total = n_samples + warm;
    let mmw = &arch.mmw_pll;

    let ref_seed = rng::derive_seed(seed, &[0xA0]);
    let reference = match &arch.if_pll {
        Some(stage) => cascade_if_pll(stage, mmw, sample_rate_hz, total, ref_seed)?,
        None => synthesize_trace(&mmw.ref_psd, sample_rate_hz, total, ref_seed)?,
    };
    let common = reference_path(mmw, &reference).window(warm, n_samples)?;

    let vco_psd = arch.vco_psd();
    let groups = (0..arch.num_plls())
        .map(|g| {
            let raw = synthesize_trace(
                &vco_psd,
                sample_rate_hz,
                total,
                rng::derive_seed(seed, &[0xB0, g as u64]),
            )?;
            vco_path(mmw, &raw).window(warm, n_samples)?.try_add(&common)
        })
        .collect::<Result<Vec<_>>>()?;

    let group_of = (0..arch.m).map(|i| i / arch.n_per_pll).collect();
    Ok(ElementTraceSet {
        groups,
        group_of,
        common,
    })
}

/// Splits element phases into the across-element mean and per-element
/// residuals, which sum to zero at every sample.
pub fn split_correlated_uncorrelated(set: &ElementTraceSet) -> Result<(PhaseTrace, Vec<PhaseTrace>)> {
    let m = set.num_elements() as f64;
    let n = set.len();
    let mut mean = vec![0.0; n];
    for &g in set.group_of() {
        for (acc, p) in mean.iter_mut().zip(set.group(g).phase()) {
            *acc += p;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let residuals = (0..set.num_elements())
        .map(|i| {
            let r = set
                .element(i)
                .phase()
                .iter()
                .zip(&mean)
                .map(|(p, c)| p - c)
                .collect();
            PhaseTrace::new(set.sample_rate(), r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((PhaseTrace::new(set.sample_rate(), mean)?, residuals))
}

/// Fraction of VCO noise that is uncorrelated across the array: 1 for LCG,
/// 0 for CCG. Intermediate subarray sizes have no closed form and return
/// `None`; fit them from simulation instead.
pub fn architecture_gamma(arch: &LoArchitecture) -> Option<f64> {
    if arch.n_per_pll == arch.m {
        Some(0.0)
    } else if arch.n_per_pll == 1 {
        Some(1.0)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_noise::{PhaseNoisePsd, DEFAULT_DAMPING};

    fn pll(ref_floor: f64, bw: f64) -> PllParams {
        PllParams {
            f_ref_hz: 100e6,
            f_out_hz: 75e9,
            loop_bandwidth_hz: bw,
            damping: DEFAULT_DAMPING,
            ref_psd: PhaseNoisePsd::white(ref_floor),
            vco_psd: PhaseNoisePsd::wiener(1e6, -90.0),
        }
    }

    fn arch(m: usize, n: usize, ref_floor: f64) -> LoArchitecture {
        LoArchitecture {
            m,
            n_per_pll: n,
            mmw_pll: pll(ref_floor, 1e6),
            if_pll: None,
            budget_scaling: true,
        }
    }

    #[test]
    fn rejects_non_divisor() {
        assert!(matches!(arch(128, 3, -140.0).validate(), Err(Error::Config(_))));
        assert!(matches!(arch(16, 0, -140.0).validate(), Err(Error::Config(_))));
        assert!(matches!(arch(16, 32, -140.0).validate(), Err(Error::Config(_))));
    }

    #[test]
    fn ccg_traces_identical() {
        let set = element_traces(&arch(8, 8, -140.0), 2000, 2e9, 1).unwrap();
        assert_eq!(set.num_groups(), 1);
        for i in 1..8 {
            assert_eq!(set.element(i), set.element(0));
        }
        let (_, res) = split_correlated_uncorrelated(&set).unwrap();
        assert!(res.iter().all(|r| r.phase().iter().all(|v| v.abs() < 1e-15)));
    }

    #[test]
    fn four_groups_of_thirty_two() {
        let a = arch(128, 32, -140.0);
        assert!((a.vco_psd().eval(1e6).unwrap() + 84.0).abs() < 0.03);
        let set = element_traces(&a, 1000, 2e9, 2).unwrap();
        assert_eq!(set.num_groups(), 4);
        for i in 0..128 {
            assert_eq!(set.element(i), set.group(i / 32));
        }
        assert_ne!(set.group(0), set.group(1));
    }

    #[test]
    fn reconstruction_is_exact() {
        let set = element_traces(&arch(4, 1, -140.0), 500, 2e9, 3).unwrap();
        let (c, res) = split_correlated_uncorrelated(&set).unwrap();
        for t in 0..500 {
            let s: f64 = res.iter().map(|r| r.phase()[t]).sum();
            assert!(s.abs() < 1e-12);
            for (i, r) in res.iter().enumerate() {
                let rebuilt = c.phase()[t] + r.phase()[t];
                assert!((rebuilt - set.element(i).phase()[t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_endpoints() {
        assert_eq!(architecture_gamma(&arch(16, 1, -140.0)), Some(1.0));
        assert_eq!(architecture_gamma(&arch(16, 16, -140.0)), Some(0.0));
        assert_eq!(architecture_gamma(&arch(16, 4, -140.0)), None);
    }
}
