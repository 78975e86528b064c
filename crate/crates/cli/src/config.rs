//! TOML run configuration. Every key carries its unit; missing keys take
//! the baseline values (2 GS/s, 100 µs epochs, reference power parameters).

use std::path::{Path, PathBuf};

use lo_chain::link::LinkBudget;
use lo_chain::lo_arch::LoArchitecture;
use lo_chain::phase_noise::{IfStage, PhaseNoisePsd, PllParams, DEFAULT_DAMPING};
use lo_chain::power::{EfficiencyModel, PowerModelParams};
use lo_chain::rx::{BeamformerKind, CarrierRecoveryParams};
use lo_chain::sim::config::{SimConfig, CARRIER_HZ, CRYSTAL_HZ, IF_HZ};
use lo_chain::sim::CrPolicy;
use lo_chain::Constellation;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub power: PowerSection,
    pub link: LinkSection,
    pub sim: SimSection,
    pub sweeps: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            jobs: 0,
            out_dir: PathBuf::from("out"),
            power: PowerSection::default(),
            link: LinkSection::default(),
            sim: SimSection::default(),
            sweeps: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub m: usize,
    /// Panel width; defaults to a 4 mm element pitch.
    pub dx_mm: Option<f64>,
    pub dy_mm: Option<f64>,
    pub loss_db_per_mm: f64,
    pub splitter_loss_db: f64,
    pub splitter_ways: u32,
    pub vco_fom_dbchz: f64,
    pub pn_offset_hz: f64,
    pub pn_target_dbchz: f64,
    pub f_lo_hz: f64,
    pub eta_osc: f64,
    pub eta_driver: f64,
    pub efficiency_model: EfficiencyModel,
    pub pll_overhead_w: f64,
    pub load_w: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        let p = PowerModelParams::default();
        Self {
            m: p.m,
            dx_mm: None,
            dy_mm: None,
            loss_db_per_mm: p.loss_db_per_mm,
            splitter_loss_db: p.splitter_loss_db,
            splitter_ways: p.splitter_ways,
            vco_fom_dbchz: p.vco_fom_dbc_hz,
            pn_offset_hz: p.pn_offset_hz,
            pn_target_dbchz: p.pn_target_dbc_hz,
            f_lo_hz: p.f_lo_hz,
            eta_osc: p.eta_osc,
            eta_driver: p.eta_driver,
            efficiency_model: p.efficiency_model,
            pll_overhead_w: p.pll_overhead_w,
            load_w: p.load_w,
        }
    }
}

impl PowerSection {
    pub fn params(&self) -> Result<PowerModelParams> {
        check("power.m", self.m.is_power_of_two(), "a power of 2 >= 1", self.m)?;
        let base = PowerModelParams::for_array(self.m);
        let p = PowerModelParams {
            m: self.m,
            dx_mm: self.dx_mm.unwrap_or(base.dx_mm),
            dy_mm: self.dy_mm.unwrap_or(base.dy_mm),
            loss_db_per_mm: self.loss_db_per_mm,
            splitter_loss_db: self.splitter_loss_db,
            splitter_ways: self.splitter_ways,
            vco_fom_dbc_hz: self.vco_fom_dbchz,
            pn_offset_hz: self.pn_offset_hz,
            pn_target_dbc_hz: self.pn_target_dbchz,
            f_lo_hz: self.f_lo_hz,
            eta_osc: self.eta_osc,
            eta_driver: self.eta_driver,
            efficiency_model: self.efficiency_model,
            pll_overhead_w: self.pll_overhead_w,
            load_w: self.load_w,
        };
        p.validate().map_err(|e| CliError::from_core("power", e))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub columns: Vec<LinkColumn>,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            columns: LinkBudget::table_columns()
                .into_iter()
                .map(|b| LinkColumn {
                    name: b.name,
                    bandwidth_hz: b.bandwidth_hz,
                    rx_nf_db: b.rx_nf_db,
                    carrier_hz: b.carrier_hz,
                    loss_exponent: b.loss_exponent,
                    distance_m: b.distance_m,
                    target_snr_db: b.target_snr_db,
                    bs_elements: None,
                    ue_elements: None,
                    bs_gain_db: Some(b.bs_gain_db),
                    ue_gain_db: Some(b.ue_gain_db),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkColumn {
    pub name: String,
    pub bandwidth_hz: f64,
    pub rx_nf_db: f64,
    pub carrier_hz: f64,
    pub loss_exponent: f64,
    pub distance_m: f64,
    pub target_snr_db: f64,
    /// Element counts; gains become `10·log10(count)`.
    #[serde(default)]
    pub bs_elements: Option<u32>,
    #[serde(default)]
    pub ue_elements: Option<u32>,
    #[serde(default)]
    pub bs_gain_db: Option<f64>,
    #[serde(default)]
    pub ue_gain_db: Option<f64>,
}

impl LinkSection {
    pub fn budgets(&self) -> Result<Vec<LinkBudget>> {
        check("link.columns", !self.columns.is_empty(), "at least one column", 0)?;
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let gain = |count: Option<u32>, db: Option<f64>, key: &str| match (count, db) {
                    (Some(_), Some(_)) => Err(CliError::Config {
                        key: format!("link.columns[{i}].{key}_elements"),
                        msg: format!("give either {key}_elements or {key}_gain_db, not both"),
                    }),
                    (Some(n), None) => {
                        check(&format!("link.columns[{i}].{key}_elements"), n >= 1, ">= 1", n)?;
                        Ok(10.0 * f64::from(n).log10())
                    }
                    (None, g) => Ok(g.unwrap_or(0.0)),
                };
                let b = LinkBudget {
                    name: c.name.clone(),
                    bandwidth_hz: c.bandwidth_hz,
                    rx_nf_db: c.rx_nf_db,
                    carrier_hz: c.carrier_hz,
                    loss_exponent: c.loss_exponent,
                    distance_m: c.distance_m,
                    target_snr_db: c.target_snr_db,
                    bs_gain_db: gain(c.bs_elements, c.bs_gain_db, "bs")?,
                    ue_gain_db: gain(c.ue_elements, c.ue_gain_db, "ue")?,
                };
                b.validate()
                    .map_err(|e| CliError::from_core(&format!("link.columns[{i}]"), e))?;
                Ok(b)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformerChoice {
    ZeroForcing,
    Conjugate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub symbol_rate_hz: f64,
    pub constellation: Constellation,
    pub k: usize,
    pub user_separation_deg: f64,
    pub element_spacing_wavelengths: f64,
    pub m: usize,
    pub n_per_pll: usize,
    /// Scale each VCO by `10·log10(M/N)` dB so total VCO power is constant.
    pub budget_scaling: bool,
    pub beamformer: BeamformerChoice,
    pub epoch_s: f64,
    pub estimation_window_s: f64,
    pub n_symbols: usize,
    pub n_trials: usize,
    pub thermal_snr_db: Option<f64>,
    pub cr_bandwidth_hz: f64,
    pub cr_damping: f64,
    pub mmw_pll: MmwPllSection,
    pub if_pll: IfPllSection,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            symbol_rate_hz: d.symbol_rate_hz,
            constellation: d.constellation,
            k: d.k,
            user_separation_deg: d.user_separation_deg,
            element_spacing_wavelengths: d.element_spacing_wavelengths,
            m: d.arch.m,
            n_per_pll: d.arch.n_per_pll,
            budget_scaling: d.arch.budget_scaling,
            beamformer: BeamformerChoice::ZeroForcing,
            epoch_s: d.epoch_s,
            estimation_window_s: d.estimation_window_s,
            n_symbols: d.n_symbols,
            n_trials: d.n_trials,
            thermal_snr_db: d.thermal_snr_db,
            cr_bandwidth_hz: d.cr.bandwidth_hz,
            cr_damping: d.cr.damping,
            mmw_pll: MmwPllSection::default(),
            if_pll: IfPllSection::default(),
        }
    }
}

/// Carrier PLL. Its reference is the IF PLL when that is enabled, the
/// crystal otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmwPllSection {
    pub f_out_hz: f64,
    pub loop_bandwidth_hz: f64,
    pub damping: f64,
    /// Crystal reference frequency for the direct (no IF PLL) case.
    pub crystal_hz: f64,
    /// Crystal floor at the crystal frequency.
    pub ref_floor_dbchz: Option<f64>,
    /// Crystal floor referred to the carrier; overrides `ref_floor_dbchz`.
    pub ref_floor_output_dbchz: Option<f64>,
    /// Single central VCO; 1/f² slope through this point.
    pub vco_pn_dbchz_at_1mhz: f64,
    pub vco_floor_dbchz: Option<f64>,
}

impl Default for MmwPllSection {
    fn default() -> Self {
        Self {
            f_out_hz: CARRIER_HZ,
            loop_bandwidth_hz: 5e6,
            damping: DEFAULT_DAMPING,
            crystal_hz: CRYSTAL_HZ,
            ref_floor_dbchz: Some(-140.0),
            ref_floor_output_dbchz: None,
            vco_pn_dbchz_at_1mhz: -90.0,
            vco_floor_dbchz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfPllSection {
    pub enabled: bool,
    pub f_out_hz: f64,
    pub loop_bandwidth_hz: f64,
    pub damping: f64,
    pub crystal_hz: f64,
    pub ref_floor_dbchz: f64,
    pub vco_pn_dbchz_at_1mhz: f64,
    pub dist_floor_dbchz: f64,
}

impl Default for IfPllSection {
    fn default() -> Self {
        Self {
            enabled: true,
            f_out_hz: IF_HZ,
            loop_bandwidth_hz: 300e3,
            damping: DEFAULT_DAMPING,
            crystal_hz: CRYSTAL_HZ,
            ref_floor_dbchz: -140.0,
            vco_pn_dbchz_at_1mhz: -110.0,
            dist_floor_dbchz: -135.0,
        }
    }
}

impl SimSection {
    pub fn sim_config(&self, seed: u64) -> Result<SimConfig> {
        check("sim.m", self.m >= 1, ">= 1", self.m)?;
        check(
            "sim.n_per_pll",
            self.n_per_pll >= 1 && self.n_per_pll <= self.m && self.m.is_multiple_of(self.n_per_pll),
            &format!("a divisor of sim.m = {}", self.m),
            self.n_per_pll,
        )?;
        check("sim.k", self.k >= 1 && self.k <= self.m, &format!("in [1, sim.m = {}]", self.m), self.k)?;
        check("sim.symbol_rate_hz", self.symbol_rate_hz > 0.0, "> 0", self.symbol_rate_hz)?;
        check("sim.epoch_s", self.epoch_s * self.symbol_rate_hz >= 1.0, ">= one symbol period", self.epoch_s)?;
        check(
            "sim.estimation_window_s",
            self.estimation_window_s > 0.0 && self.estimation_window_s <= self.epoch_s,
            "in (0, sim.epoch_s]",
            self.estimation_window_s,
        )?;
        check("sim.n_symbols", self.n_symbols >= 1, ">= 1", self.n_symbols)?;
        check("sim.n_trials", self.n_trials >= 1, ">= 1", self.n_trials)?;
        check(
            "sim.cr_bandwidth_hz",
            self.cr_bandwidth_hz > 0.0 && self.cr_bandwidth_hz < self.symbol_rate_hz / 20.0,
            &format!("in (0, symbol_rate_hz/20 = {})", self.symbol_rate_hz / 20.0),
            self.cr_bandwidth_hz,
        )?;
        check(
            "sim.element_spacing_wavelengths",
            self.element_spacing_wavelengths > 0.0,
            "> 0",
            self.element_spacing_wavelengths,
        )?;
        check(
            "sim.mmw_pll.loop_bandwidth_hz",
            self.mmw_pll.loop_bandwidth_hz > 0.0,
            "> 0",
            self.mmw_pll.loop_bandwidth_hz,
        )?;

        let arch = self.architecture()?;
        let cfg = SimConfig {
            symbol_rate_hz: self.symbol_rate_hz,
            constellation: self.constellation,
            k: self.k,
            user_separation_deg: self.user_separation_deg,
            element_spacing_wavelengths: self.element_spacing_wavelengths,
            arch,
            beamformer: match self.beamformer {
                BeamformerChoice::ZeroForcing => BeamformerKind::ZeroForcing,
                BeamformerChoice::Conjugate => BeamformerKind::Conjugate,
            },
            cr: CarrierRecoveryParams {
                bandwidth_hz: self.cr_bandwidth_hz,
                damping: self.cr_damping,
                constellation: self.constellation,
            },
            epoch_s: self.epoch_s,
            estimation_window_s: self.estimation_window_s,
            n_symbols: self.n_symbols,
            n_trials: self.n_trials,
            seed,
            thermal_snr_db: self.thermal_snr_db,
        };
        cfg.validate().map_err(|e| CliError::from_core("sim", e))?;
        Ok(cfg)
    }

    fn architecture(&self) -> Result<LoArchitecture> {
        let p = &self.mmw_pll;
        let mut vco_psd = PhaseNoisePsd::wiener(1e6, p.vco_pn_dbchz_at_1mhz);
        if let Some(floor) = p.vco_floor_dbchz {
            vco_psd = vco_psd.with_white_floor(floor);
        }
        let (f_ref_hz, ref_psd, if_pll) = if self.if_pll.enabled {
            if p.ref_floor_output_dbchz.is_some() {
                return Err(CliError::Config {
                    key: "sim.mmw_pll.ref_floor_output_dbchz".into(),
                    msg: "only applies with sim.if_pll.enabled = false".into(),
                });
            }
            let s = &self.if_pll;
            let stage = IfStage {
                pll: PllParams {
                    f_ref_hz: s.crystal_hz,
                    f_out_hz: s.f_out_hz,
                    loop_bandwidth_hz: s.loop_bandwidth_hz,
                    damping: s.damping,
                    ref_psd: PhaseNoisePsd::white(s.ref_floor_dbchz),
                    vco_psd: PhaseNoisePsd::wiener(1e6, s.vco_pn_dbchz_at_1mhz),
                },
                dist_floor_dbc_hz: s.dist_floor_dbchz,
            };
            (s.f_out_hz, PhaseNoisePsd::none(), Some(stage))
        } else {
            let floor = match (p.ref_floor_output_dbchz, p.ref_floor_dbchz) {
                (Some(out), _) => Some(out - 20.0 * (p.f_out_hz / p.crystal_hz).log10()),
                (None, f) => f,
            };
            let psd = floor.map_or(PhaseNoisePsd::none(), PhaseNoisePsd::white);
            (p.crystal_hz, psd, None)
        };
        let arch = LoArchitecture {
            m: self.m,
            n_per_pll: self.n_per_pll,
            mmw_pll: PllParams {
                f_ref_hz,
                f_out_hz: p.f_out_hz,
                loop_bandwidth_hz: p.loop_bandwidth_hz,
                damping: p.damping,
                ref_psd,
                vco_psd,
            },
            if_pll,
            budget_scaling: self.budget_scaling,
        };
        arch.validate().map_err(|e| CliError::from_core("sim.mmw_pll", e))?;
        Ok(arch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrStep {
    pub min_snr_db: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub pll_bandwidths_hz: Vec<f64>,
    /// Carrier-referred crystal floors for `pll-bw-sweep`; empty keeps the
    /// `[sim.mmw_pll]` reference.
    pub ref_floors_output_dbchz: Vec<f64>,
    /// Carrier-recovery bandwidths for `pll-bw-sweep`; empty keeps
    /// `sim.cr_bandwidth_hz`.
    pub cr_bandwidths_hz: Vec<f64>,
    pub user_counts: Vec<usize>,
    /// Empty means every power of two dividing `sim.m`.
    pub n_per_pll: Vec<usize>,
    pub separations_deg: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub constellations: Vec<Constellation>,
    pub cr_policy: Vec<CrStep>,
    /// Used to fit γ when the architecture has no closed-form value.
    pub alpha: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            pll_bandwidths_hz: vec![30e3, 100e3, 300e3, 1e6, 3e6, 9e6],
            ref_floors_output_dbchz: Vec::new(),
            cr_bandwidths_hz: Vec::new(),
            user_counts: vec![1, 2, 4, 8, 16],
            n_per_pll: Vec::new(),
            separations_deg: vec![5.0, 10.0],
            snr_db: (0..=10).map(|i| 4.0 * i as f64).collect(),
            constellations: Constellation::ALL.to_vec(),
            // the first step also covers every SNR below its threshold
            cr_policy: CrPolicy::default()
                .steps
                .into_iter()
                .map(|(min_snr_db, bandwidth_hz)| CrStep {
                    min_snr_db: min_snr_db.max(-100.0),
                    bandwidth_hz,
                })
                .collect(),
            alpha: 2.0,
        }
    }
}

impl SweepSection {
    pub fn validate(&self) -> Result<()> {
        for (i, &bw) in self.pll_bandwidths_hz.iter().enumerate() {
            check(&format!("sweeps.pll_bandwidths_hz[{i}]"), bw > 0.0, "> 0", bw)?;
        }
        for (i, &bw) in self.cr_bandwidths_hz.iter().enumerate() {
            check(&format!("sweeps.cr_bandwidths_hz[{i}]"), bw > 0.0, "> 0", bw)?;
        }
        for (i, &k) in self.user_counts.iter().enumerate() {
            check(&format!("sweeps.user_counts[{i}]"), k >= 1, ">= 1", k)?;
        }
        for (i, s) in self.cr_policy.iter().enumerate() {
            check(
                &format!("sweeps.cr_policy[{i}].bandwidth_hz"),
                s.bandwidth_hz > 0.0,
                "> 0",
                s.bandwidth_hz,
            )?;
        }
        check("sweeps.cr_policy", !self.cr_policy.is_empty(), "at least one step", 0)?;
        check("sweeps.alpha", self.alpha > 0.0, "> 0", self.alpha)?;
        Ok(())
    }

    pub fn policy(&self) -> CrPolicy {
        CrPolicy {
            steps: self
                .cr_policy
                .iter()
                .map(|s| (s.min_snr_db, s.bandwidth_hz))
                .collect(),
        }
    }

    pub fn n_values(&self, m: usize) -> Vec<usize> {
        if self.n_per_pll.is_empty() {
            (0..=m.trailing_zeros())
                .map(|b| 1 << b)
                .filter(|n: &usize| m.is_multiple_of(*n))
                .collect()
        } else {
            self.n_per_pll.clone()
        }
    }
}

fn check<T: std::fmt::Display>(key: &str, ok: bool, expected: &str, got: T) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config {
            key: key.into(),
            msg: format!("expected {expected}, got {got}"),
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// Checks every section so that no experiment starts on a bad config.
    pub fn validate(&self) -> Result<()> {
        self.power.params()?;
        self.link.budgets()?;
        self.sim.sim_config(self.seed)?;
        self.sweeps.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_baseline() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        let sim = c.sim.sim_config(c.seed).unwrap();
        assert_eq!(sim, SimConfig::default());
        assert_eq!(sim.symbol_rate_hz, 2e9);
        assert_eq!(sim.epoch_s, 1e-4);
        assert_eq!(c.power.params().unwrap(), PowerModelParams::default());
    }

    #[test]
    fn baseline_power_values() {
        let c = RunConfig::from_toml(
            "[power]\nm = 128\nloss_db_per_mm = 0.2\nsplitter_loss_db = 1.5\nvco_fom_dbchz = 180\n",
        )
        .unwrap();
        let p = c.power.params().unwrap();
        assert_eq!(p.loss_db_per_mm, 0.2);
        assert_eq!((p.dx_mm, p.dy_mm), (64.0, 32.0));
        assert_eq!(p.eta_osc, 0.2);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::from_toml("[sim]\nbandwidth = 3\n").unwrap_err();
        assert!(e.to_string().contains("bandwidth"), "{e}");
        assert!(RunConfig::from_toml("sead = 3\n").is_err());
    }

    #[test]
    fn non_divisor_named() {
        let c = RunConfig::from_toml("[sim]\nn_per_pll = 3\n").unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("sim.n_per_pll") && e.contains("divisor"), "{e}");
    }

    #[test]
    fn output_referred_floor() {
        let c = RunConfig::from_toml(
            "[sim]\nm = 1\nn_per_pll = 1\nk = 1\n[sim.if_pll]\nenabled = false\n[sim.mmw_pll]\nref_floor_output_dbchz = -85\n",
        )
        .unwrap();
        let s = c.sim.sim_config(1).unwrap();
        let out = s.arch.mmw_pll.ref_psd.white_floor_dbc_hz.unwrap() + 20.0 * 750f64.log10();
        assert!((out + 85.0).abs() < 1e-9);
        assert!(s.arch.if_pll.is_none());
    }

    #[test]
    fn link_gains_from_counts() {
        let c = RunConfig::from_toml(
            "[[link.columns]]\nname = \"x\"\nbandwidth_hz = 2e9\nrx_nf_db = 5\ncarrier_hz = 60e9\nloss_exponent = 2.2\ndistance_m = 100\ntarget_snr_db = 26\nbs_elements = 128\nue_elements = 16\n",
        )
        .unwrap();
        let b = &c.link.budgets().unwrap()[0];
        assert!((b.bs_gain_db - 21.072).abs() < 1e-3);
        assert!((b.ue_gain_db - 12.041).abs() < 1e-3);
    }

    #[test]
    fn default_n_values() {
        assert_eq!(SweepSection::default().n_values(16), vec![1, 2, 4, 8, 16]);
    }
}
