//! The five static over-temperature models and their parameter translations.
//!
//! Every model returns `T_o` in K for irradiance `G` (W/m²) and wind speed
//! `WS` (m/s). Add the ambient temperature to obtain the module temperature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::FilterSpec;

/// Wind speed above which WM2 stops adding cooling.
pub const DEFAULT_WS_CAP: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Wm1,
    Wm2,
    Ross,
    Sandia,
    Faiman,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Wm1,
        ModelKind::Wm2,
        ModelKind::Ross,
        ModelKind::Sandia,
        ModelKind::Faiman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Wm1 => "wm1",
            ModelKind::Wm2 => "wm2",
            ModelKind::Ross => "ross",
            ModelKind::Sandia => "sandia",
            ModelKind::Faiman => "faiman",
        }
    }

    pub fn uses_wind(self) -> bool {
        self != ModelKind::Ross
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wm1" => Ok(ModelKind::Wm1),
            "wm2" => Ok(ModelKind::Wm2),
            "ross" => Ok(ModelKind::Ross),
            "sandia" | "king" => Ok(ModelKind::Sandia),
            "faiman" => Ok(ModelKind::Faiman),
            other => Err(Error::invalid(format!("unknown model `{other}`"))),
        }
    }
}

/// Parameters of one model. Units: `k` in K/(W/m²), `b` in s/m,
/// `u0` in W/(m²·K), `u1` in W·s/(m³·K), `d` and `ws_cap` in m/s,
/// `k_w` in K·s/(W·m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Coefficients {
    Ross { k: f64 },
    Sandia { a: f64, b: f64 },
    Faiman { u0: f64, u1: f64 },
    Wm1 { k: f64, d: f64 },
    Wm2 { k: f64, k_w: f64, ws_cap: f64 },
}

impl Coefficients {
    pub fn kind(&self) -> ModelKind {
        match self {
            Coefficients::Ross { .. } => ModelKind::Ross,
            Coefficients::Sandia { .. } => ModelKind::Sandia,
            Coefficients::Faiman { .. } => ModelKind::Faiman,
            Coefficients::Wm1 { .. } => ModelKind::Wm1,
            Coefficients::Wm2 { .. } => ModelKind::Wm2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Coefficients::Ross { k } => k > 0.0,
            Coefficients::Sandia { a, b } => a.is_finite() && b.is_finite(),
            Coefficients::Faiman { u0, u1 } => u0 > 0.0 && u1 >= 0.0,
            Coefficients::Wm1 { k, d } => k > 0.0 && d > 0.0,
            Coefficients::Wm2 { k, k_w, ws_cap } => k > 0.0 && k_w.is_finite() && ws_cap > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid {} coefficients: {self:?}", self.kind())))
        }
    }

    /// Over-temperature for one sample. A missing wind speed yields a
    /// missing result for wind-aware models.
    pub fn predict(&self, g: f64, ws: f64) -> f64 {
        match *self {
            Coefficients::Ross { k } => k * g,
            Coefficients::Sandia { a, b } => g * (a + b * ws).exp(),
            Coefficients::Faiman { u0, u1 } => g / (u0 + u1 * ws),
            Coefficients::Wm1 { k, d } => k * g * (-ws / d).exp(),
            Coefficients::Wm2 { k, k_w, ws_cap } => {
                if ws.is_nan() {
                    f64::NAN
                } else {
                    g * (k - k_w * ws.min(ws_cap))
                }
            }
        }
    }

    /// The irradiance coefficient at zero wind, `k = e^a = 1/U0`.
    pub fn zero_wind_k(&self) -> f64 {
        match *self {
            Coefficients::Ross { k } | Coefficients::Wm1 { k, .. } | Coefficients::Wm2 { k, .. } => k,
            Coefficients::Sandia { a, .. } => a.exp(),
            Coefficients::Faiman { u0, .. } => 1.0 / u0,
        }
    }

    /// Mean of `1/h = G·k_W` over the given irradiances, WM2 only.
    pub fn wm2_mean_inverse_h(&self, g: &[f64]) -> Option<f64> {
        let Coefficients::Wm2 { k_w, .. } = *self else {
            return None;
        };
        let vals: Vec<f64> = g.iter().filter(|v| v.is_finite()).map(|v| v * k_w).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn predict_ross(g: &[f64], k: f64) -> Vec<f64> {
    g.iter().map(|g| k * g).collect()
}

pub fn predict_sandia(g: &[f64], ws: &[f64], a: f64, b: f64) -> Vec<f64> {
    predict_series(&Coefficients::Sandia { a, b }, g, ws).unwrap()
}

/// Errors when `U0 + U1·WS <= 0` on any row.
pub fn predict_faiman(g: &[f64], ws: &[f64], u0: f64, u1: f64) -> Result<Vec<f64>> {
    if ws.iter().any(|w| u0 + u1 * w <= 0.0) {
        return Err(Error::Degenerate("Faiman denominator U0 + U1*WS <= 0".into()));
    }
    predict_series(&Coefficients::Faiman { u0, u1 }, g, ws)
}

pub fn predict_wm1(g: &[f64], ws: &[f64], k: f64, d: f64) -> Vec<f64> {
    predict_series(&Coefficients::Wm1 { k, d }, g, ws).unwrap()
}

pub fn predict_wm2(g: &[f64], ws: &[f64], k: f64, k_w: f64, ws_cap: f64) -> Vec<f64> {
    predict_series(&Coefficients::Wm2 { k, k_w, ws_cap }, g, ws).unwrap()
}

/// Evaluates `coeffs` row by row.
pub fn predict_series(coeffs: &Coefficients, g: &[f64], ws: &[f64]) -> Result<Vec<f64>> {
    if g.len() != ws.len() {
        return Err(Error::invalid("irradiance and wind series differ in length"));
    }
    Ok(g.iter().zip(ws).map(|(&g, &w)| coeffs.predict(g, w)).collect())
}

/// `(a, b) -> (k, d)` with `k = e^a`, `d = -1/b`.
pub fn sandia_to_wm1(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(b < 0.0) {
        return Err(Error::invalid(format!("Sandia b = {b} has no wind cooling; WM1 translation undefined")));
    }
    Ok((a.exp(), -1.0 / b))
}

/// `(k, d) -> (a, b)`.
pub fn wm1_to_sandia(k: f64, d: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && d > 0.0) {
        return Err(Error::invalid("WM1 needs k > 0 and d > 0"));
    }
    Ok((k.ln(), -1.0 / d))
}

/// Fitted coefficients with the conditions they were obtained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub coefficients: Coefficients,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_id: String,
    pub filter: Option<FilterSpec>,
    pub n_samples: usize,
    /// Non-fatal conditions raised while fitting.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Static,
    Ewm,
    Fem,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Static => "static",
            Variant::Ewm => "ewm",
            Variant::Fem => "fem",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Predicted over-temperature aligned with an input series.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub model: ModelKind,
    pub variant: Variant,
    pub t_over: Vec<f64>,
}
