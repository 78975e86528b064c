//! LO chain power: H-tree distribution, VCO and PLL overhead versus
//! elements per PLL.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, dbm_to_w, w_to_dbm};

/// How the oscillator and driver efficiencies enter the distribution power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyModel {
    /// VCO output power `η_osc·P_VCO` is re-amplified by drivers of efficiency
    /// `η_driver`: term `+10·log10(η_osc/η_driver)` dB.
    #[default]
    Cascade,
    /// Term `−10·log10(η_osc·η_driver)` dB.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModelParams {
    pub m: usize,
    pub dx_mm: f64,
    pub dy_mm: f64,
    pub loss_db_per_mm: f64,
    pub splitter_loss_db: f64,
    pub splitter_ways: u32,
    pub vco_fom_dbc_hz: f64,
    pub pn_offset_hz: f64,
    pub pn_target_dbc_hz: f64,
    pub f_lo_hz: f64,
    pub eta_osc: f64,
    pub eta_driver: f64,
    pub efficiency_model: EfficiencyModel,
    pub pll_overhead_w: f64,
    pub load_w: f64,
}

impl Default for PowerModelParams {
    fn default() -> Self {
        Self {
            m: 128,
            dx_mm: 64.0,
            dy_mm: 32.0,
            loss_db_per_mm: 0.2,
            splitter_loss_db: 1.5,
            splitter_ways: 4,
            vco_fom_dbc_hz: 180.0,
            pn_offset_hz: 1e6,
            pn_target_dbc_hz: -90.0,
            f_lo_hz: 75e9,
            eta_osc: 0.2,
            eta_driver: 0.2,
            efficiency_model: EfficiencyModel::Cascade,
            pll_overhead_w: 2e-3,
            load_w: 0.0,
        }
    }
}

impl PowerModelParams {
    /// Defaults scaled to an `m`-element panel at the same 4 mm pitch.
    pub fn for_array(m: usize) -> Self {
        let base = Self::default();
        let (cols, rows) = panel_shape(m);
        Self {
            m,
            dx_mm: 4.0 * cols as f64,
            dy_mm: 4.0 * rows as f64,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_power_of_two() {
            return Err(Error::Config(format!("m must be a power of 2, got {}", self.m)));
        }
        for (name, v) in [
            ("dx_mm", self.dx_mm),
            ("dy_mm", self.dy_mm),
            ("loss_db_per_mm", self.loss_db_per_mm),
            ("splitter_loss_db", self.splitter_loss_db),
            ("pll_overhead_w", self.pll_overhead_w),
            ("load_w", self.load_w),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("eta_osc", self.eta_osc), ("eta_driver", self.eta_driver)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if self.splitter_ways < 2 {
            return Err(Error::Config(format!(
                "splitter_ways must be >= 2, got {}",
                self.splitter_ways
            )));
        }
        if !(self.pn_offset_hz > 0.0) || !(self.f_lo_hz > 0.0) {
            return Err(Error::Config(
                "pn_offset_hz and f_lo_hz must be positive".into(),
            ));
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || !n.is_power_of_two() || n > self.m || !self.m.is_multiple_of(n) {
            return Err(Error::Argument(format!(
                "N={n} must be a power of 2 dividing M={}",
                self.m
            )));
        }
        Ok(())
    }

    fn efficiency_db(&self) -> f64 {
        match self.efficiency_model {
            EfficiencyModel::Cascade => 10.0 * (self.eta_osc / self.eta_driver).log10(),
            EfficiencyModel::Product => -10.0 * (self.eta_osc * self.eta_driver).log10(),
        }
    }
}

fn panel_shape(m: usize) -> (usize, usize) {
    let bits = m.trailing_zeros();
    let cols = 1usize << bits.div_ceil(2);
    (cols, m / cols)
}

/// H-tree routing loss downstream of one PLL serving `n` elements.
pub fn routing_loss(n: usize, p: &PowerModelParams) -> Result<f64> {
    p.check_n(n)?;
    let log_m = p.m.trailing_zeros() as i32;
    let levels = n.trailing_zeros() as i32;
    let sum: f64 = (0..levels).map(|s| 2f64.powi(s - log_m)).sum();
    Ok(0.5 * sum * (p.dx_mm + p.dy_mm) * p.loss_db_per_mm)
}

/// Loss of the `P`-way splitter tree feeding `n` elements.
pub fn splitter_loss(n: usize, p: &PowerModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("N must be positive".into()));
    }
    Ok(p.splitter_loss_db * (n as f64).ln() / (p.splitter_ways as f64).ln())
}

/// DC power of a single central VCO meeting the array phase-noise target.
pub fn vco_power(p: &PowerModelParams) -> f64 {
    let dbm = 20.0 * (p.f_lo_hz / p.pn_offset_hz).log10() - p.pn_target_dbc_hz - p.vco_fom_dbc_hz;
    dbm_to_w(dbm)
}

/// Total distribution power of all `M/N` subarray networks.
///
/// Each of the `M/N` budget-scaled VCOs burns `P_VCO·N/M`; its network adds
/// splitter, routing and efficiency terms. With no losses and unit
/// efficiencies the total equals `P_VCO` for every `N`.
pub fn distribution_power(n: usize, p: &PowerModelParams) -> Result<f64> {
    let plls = (p.m / n) as f64;
    let per_pll_dbm = w_to_dbm(vco_power(p)) - 10.0 * plls.log10()
        + splitter_loss(n, p)?
        + routing_loss(n, p)?
        + p.efficiency_db();
    Ok(plls * dbm_to_w(per_pll_dbm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub n: usize,
    pub distr_w: f64,
    pub pll_w: f64,
    pub vco_w: f64,
    pub load_w: f64,
    pub total_w: f64,
}

pub fn total_lo_power(n: usize, p: &PowerModelParams) -> Result<PowerPoint> {
    p.validate()?;
    let distr_w = distribution_power(n, p)?;
    let pll_w = (p.m / n) as f64 * p.pll_overhead_w;
    let vco_w = vco_power(p);
    Ok(PowerPoint {
        n,
        distr_w,
        pll_w,
        vco_w,
        load_w: p.load_w,
        total_w: p.load_w + distr_w + vco_w + pll_w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub points: Vec<PowerPoint>,
    pub argmin: usize,
}

impl PowerSweep {
    pub fn min(&self) -> &PowerPoint {
        &self.points[self.argmin]
    }

    /// Largest over smallest total power, in dB.
    pub fn spread_db(&self) -> f64 {
        let max = self.points.iter().map(|p| p.total_w).fold(0.0, f64::max);
        10.0 * (max / self.min().total_w).log10()
    }
}

/// Evaluates every power-of-two `N` dividing `M`.
pub fn sweep_power(p: &PowerModelParams) -> Result<PowerSweep> {
    p.validate()?;
    let points = (0..=p.m.trailing_zeros())
        .map(|b| total_lo_power(1 << b, p))
        .collect::<Result<Vec<_>>>()?;
    let argmin = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_w.total_cmp(&b.1.total_w))
        .map(|(i, _)| i)
        .expect("at least N = 1");
    Ok(PowerSweep { points, argmin })
}

/// Linear factor of the efficiency term, exposed for reporting.
pub fn efficiency_factor(p: &PowerModelParams) -> f64 {
    db_to_lin(p.efficiency_db())
}
