//! Exponentially weighted mean of the driving signals.
//!
//! A static model evaluated on `EWM(G)` and `EWM(WS)` behaves like a
//! first-order lag with time constant `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Coefficients, Prediction, Variant};

/// Smoothing factor `1 - exp(-dt/tau)`.
pub fn alpha_from(tau_s: f64, dt_s: f64) -> Result<f64> {
    if !(tau_s > 0.0) || !(dt_s > 0.0) {
        return Err(Error::invalid(format!(
            "tau ({tau_s} s) and dt ({dt_s} s) must both be positive"
        )));
    }
    Ok(-(-dt_s / tau_s).exp_m1())
}

/// Number of steps covered by the mean, `2/alpha - 1`.
pub fn span(alpha: f64) -> f64 {
    2.0 / alpha - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmParams {
    pub tau_s: f64,
    pub dt_s: f64,
    pub alpha: f64,
    pub span: f64,
}

impl EwmParams {
    pub fn new(tau_s: f64, dt_s: f64) -> Result<Self> {
        let alpha = alpha_from(tau_s, dt_s)?;
        Ok(Self {
            tau_s,
            dt_s,
            alpha,
            span: span(alpha),
        })
    }

    /// Parameters that leave a series unchanged.
    pub fn identity(dt_s: f64) -> Self {
        Self {
            tau_s: 0.0,
            dt_s,
            alpha: 1.0,
            span: 1.0,
        }
    }

    /// Rows at the start of a series flagged as warm-up (about `2·tau`).
    pub fn warmup_rows(&self) -> usize {
        (2.0 * self.tau_s / self.dt_s).ceil() as usize
    }
}

/// Adjusted exponentially weighted mean:
/// `y_t = Σ x_{t-i}(1-α)^i / Σ (1-α)^i` over the valid samples so far.
///
/// Missing inputs give a missing output. Weights keep decaying across a gap,
/// so the state is carried rather than reset.
pub fn ewm_series(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1]")));
    }
    let decay = 1.0 - alpha;
    // Running weight sum and mean; updating the mean by a correction term
    // keeps constant inputs exactly constant.
    let mut den = 0.0;
    let mut mean = 0.0;
    let mut gap = 0usize;
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        den *= decay;
        if v.is_finite() {
            if gap > 0 && den > 0.0 {
                log::debug!("ewm: carried state across a gap of {gap} samples");
            }
            gap = 0;
            den += 1.0;
            mean = if den == 1.0 { v } else { mean + (v - mean) / den };
            out.push(mean);
        } else {
            gap += 1;
            out.push(f64::NAN);
        }
    }
    Ok(out)
}

/// Evaluates `coeffs` on the EWM of irradiance and wind speed.
pub fn dynamicize(coeffs: &Coefficients, g: &[f64], ws: &[f64], params: &EwmParams) -> Result<Prediction> {
    if g.len() != ws.len() {
        return Err(Error::invalid("irradiance and wind series differ in length"));
    }
    let g_ewm = ewm_series(g, params.alpha)?;
    let ws_ewm = ewm_series(ws, params.alpha)?;
    let t_over = g_ewm
        .iter()
        .zip(&ws_ewm)
        .map(|(&g, &w)| coeffs.predict(g, w))
        .collect();
    Ok(Prediction {
        model: coeffs.kind(),
        variant: Variant::Ewm,
        t_over,
    })
}
