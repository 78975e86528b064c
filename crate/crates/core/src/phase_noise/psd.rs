use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, lin_to_db};

/// Point defining a 1/f² (Wiener) phase-noise segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F2Anchor {
    pub offset_hz: f64,
    pub dbc_hz: f64,
}

/// Single-sideband phase-noise density made of an optional white floor and an
/// optional 1/f² segment.
///
/// Densities are in dBc/Hz. `f64::NEG_INFINITY` is accepted and means "no noise"
/// for that part. The linear value `L(f)` equals the two-sided power spectral
/// density of the phase in rad²/Hz; the one-sided phase PSD is `2·L(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseNoisePsd {
    pub white_floor_dbc_hz: Option<f64>,
    pub f2_anchor: Option<F2Anchor>,
}

impl PhaseNoisePsd {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn white(floor_dbc_hz: f64) -> Self {
        Self {
            white_floor_dbc_hz: Some(floor_dbc_hz),
            f2_anchor: None,
        }
    }

    pub fn wiener(offset_hz: f64, dbc_hz: f64) -> Self {
        Self {
            white_floor_dbc_hz: None,
            f2_anchor: Some(F2Anchor { offset_hz, dbc_hz }),
        }
    }

    pub fn with_white_floor(mut self, floor_dbc_hz: f64) -> Self {
        self.white_floor_dbc_hz = Some(floor_dbc_hz);
        self
    }

    /// Linear white floor, zero if absent.
    pub fn white_linear(&self) -> f64 {
        self.white_floor_dbc_hz.map_or(0.0, db_to_lin)
    }

    /// `L(f)·f²` of the 1/f² segment (Hz·rad²/Hz), zero if absent.
    pub fn f2_coefficient(&self) -> f64 {
        self.f2_anchor
            .map_or(0.0, |a| db_to_lin(a.dbc_hz) * a.offset_hz * a.offset_hz)
    }

    /// Linear density `L(f)` at offset `f_offset`.
    pub fn density(&self, f_offset: f64) -> Result<f64> {
        if !(f_offset > 0.0) || !f_offset.is_finite() {
            return Err(Error::Domain(format!(
                "offset frequency must be positive and finite, got {f_offset}"
            )));
        }
        Ok(self.white_linear() + self.f2_coefficient() / (f_offset * f_offset))
    }

    /// Density in dBc/Hz at offset `f_offset`.
    pub fn eval(&self, f_offset: f64) -> Result<f64> {
        self.density(f_offset).map(lin_to_db)
    }

    /// Raises every density by `db`.
    pub fn shifted(&self, db: f64) -> Self {
        Self {
            white_floor_dbc_hz: self.white_floor_dbc_hz.map(|w| w + db),
            f2_anchor: self.f2_anchor.map(|a| F2Anchor {
                offset_hz: a.offset_hz,
                dbc_hz: a.dbc_hz + db,
            }),
        }
    }

    /// Refers a density measured at `f_in` to a carrier at `f_out` (ideal
    /// frequency multiplication by `f_out/f_in`).
    pub fn refer_to_output(&self, f_in: f64, f_out: f64) -> Result<Self> {
        if !(f_in > 0.0 && f_out > 0.0) {
            return Err(Error::Domain(format!(
                "frequencies must be positive, got f_in={f_in}, f_out={f_out}"
            )));
        }
        Ok(self.shifted(20.0 * (f_out / f_in).log10()))
    }

    /// True when neither part contributes any noise.
    pub fn is_silent(&self) -> bool {
        self.white_linear() == 0.0 && self.f2_coefficient() == 0.0
    }
}

pub fn psd_eval(psd: &PhaseNoisePsd, f_offset: f64) -> Result<f64> {
    psd.eval(f_offset)
}

pub fn refer_to_output(psd: &PhaseNoisePsd, f_in: f64, f_out: f64) -> Result<PhaseNoisePsd> {
    psd.refer_to_output(f_in, f_out)
}
