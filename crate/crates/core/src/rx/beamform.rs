use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::condition_number;

pub const DEFAULT_COND_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformerKind {
    Conjugate,
    ZeroForcing,
}

/// `K×M` combining matrix designed from a channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub kind: BeamformerKind,
    pub w: DMatrix<Complex64>,
}

impl Beamformer {
    pub fn design(kind: BeamformerKind, h_hat: &DMatrix<Complex64>) -> Result<Self> {
        let w = match kind {
            BeamformerKind::Conjugate => beamform_conj(h_hat),
            BeamformerKind::ZeroForcing => beamform_zf(h_hat, DEFAULT_COND_LIMIT)?,
        };
        Ok(Self { kind, w })
    }
}

/// `Ĥᴴ / M`, unit gain towards each user's own column.
pub fn beamform_conj(h_hat: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    h_hat.adjoint() / Complex64::new(h_hat.nrows() as f64, 0.0)
}

/// `(ĤᴴĤ)⁻¹Ĥᴴ`.
pub fn beamform_zf(h_hat: &DMatrix<Complex64>, cond_limit: f64) -> Result<DMatrix<Complex64>> {
    let cond = condition_number(h_hat);
    if !(cond <= cond_limit) {
        return Err(Error::IllConditioned {
            cond,
            limit: cond_limit,
        });
    }
    let hh = h_hat.adjoint();
    let gram = &hh * h_hat;
    let chol = gram.cholesky().ok_or(Error::IllConditioned {
        cond,
        limit: cond_limit,
    })?;
    Ok(chol.solve(&hh))
}

/// `diag(e^{jφ})·H`: the channel as seen through the element LOs at the
/// estimation instant.
pub fn estimate_channel(h: &DMatrix<Complex64>, phases: &[f64]) -> Result<DMatrix<Complex64>> {
    if phases.len() != h.nrows() {
        return Err(Error::Argument(format!(
            "expected {} element phases, got {}",
            h.nrows(),
            phases.len()
        )));
    }
    let mut out = h.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= Complex64::from_polar(1.0, phases[i]);
    }
    Ok(out)
}

/// `W·diag(e^{jφ})·(Hx + n)` for one symbol period.
pub fn apply_phase_noise_rx(
    w: &DMatrix<Complex64>,
    h: &DMatrix<Complex64>,
    x: &DVector<Complex64>,
    phases: &[f64],
    noise: Option<&DVector<Complex64>>,
) -> Result<DVector<Complex64>> {
    if w.ncols() != h.nrows() || x.len() != h.ncols() || phases.len() != h.nrows() {
        return Err(Error::Argument("beamformer, channel, symbol and phase dimensions disagree".into()));
    }
    let mut y = h * x;
    if let Some(n) = noise {
        if n.len() != y.len() {
            return Err(Error::Argument("noise length differs from element count".into()));
        }
        y += n;
    }
    for (v, p) in y.iter_mut().zip(phases) {
        *v *= Complex64::from_polar(1.0, *p);
    }
    Ok(w * y)
}
