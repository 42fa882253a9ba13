//! Coefficient determination from filtered, resampled measurements.
//!
//! All regressions run on over-temperature data averaged to
//! [`FitConfig::resample_window_s`] so that rows approximate steady state.

mod tau;

pub use tau::{estimate_tau, select_tau, TauBin, TauEstimate, TauExclusion, TauFit, TauMethod, TauSelection};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Coefficients, FittedModel, ModelKind, Provenance, DEFAULT_WS_CAP};
use crate::regression::{linear_fit, RegressionResult};
use crate::timeseries::{filter_rows, FilterSpec, OverTempSeries};

/// Every tunable threshold of the fitting recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub resample_window_s: i64,
    /// Daylight threshold for all fits (W/m²).
    pub g_min: f64,
    /// Upper wind bound of the zero-wind regression (m/s).
    pub low_wind_max: f64,
    /// Wind band approximating `WS -> ∞` for `r_M` (m/s).
    pub high_wind_band: (f64, f64),
    /// Lowest lower bound the high-wind band may be widened to.
    pub high_wind_floor: f64,
    pub ws_cap: f64,
    /// Minimum rows per regression.
    pub min_samples: usize,
    /// Rows with `T_o` at or below this are dropped before log/ratio fits (K).
    pub t_over_min: f64,
    pub faiman_u0_range: (f64, f64),
    pub faiman_u1_range: (f64, f64),
    pub faiman_defaults: (f64, f64),
    pub kw_bin_width: f64,
    pub kw_g_range: (f64, f64),
    pub kw_ws_range: (f64, f64),
    pub tau_method: TauMethod,
    pub tau_ws_bin_width: f64,
    pub tau_ws_max: f64,
    /// Time between the two samples of a step event (s).
    pub tau_horizon_s: i64,
    /// Minimum irradiance change over the horizon for a step event (W/m²).
    pub tau_min_step_g: f64,
    pub tau_min_events: usize,
    /// Allowed increase between consecutive bins during selection (s).
    pub tau_margin_s: f64,
    /// Bins below this wind speed provide the starting maximum (m/s).
    pub tau_start_ws_max: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            resample_window_s: 300,
            g_min: 200.0,
            low_wind_max: 0.5,
            high_wind_band: (6.0, 8.0),
            high_wind_floor: 3.0,
            ws_cap: DEFAULT_WS_CAP,
            min_samples: 30,
            t_over_min: 0.5,
            faiman_u0_range: (5.0, 100.0),
            faiman_u1_range: (0.0, 30.0),
            faiman_defaults: (25.0, 6.84),
            kw_bin_width: 20.0,
            kw_g_range: (200.0, 1000.0),
            kw_ws_range: (0.5, 8.0),
            tau_method: TauMethod::FirstOrder,
            tau_ws_bin_width: 1.0,
            tau_ws_max: 8.0,
            tau_horizon_s: 1200,
            tau_min_step_g: 50.0,
            tau_min_events: 20,
            tau_margin_s: 20.0,
            tau_start_ws_max: 2.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g_min", self.g_min >= 0.0),
            ("low_wind_max", self.low_wind_max > 0.0),
            ("high_wind_band", self.high_wind_band.0 < self.high_wind_band.1),
            ("high_wind_floor", self.high_wind_floor <= self.high_wind_band.0),
            ("ws_cap", self.ws_cap > 0.0),
            ("min_samples", self.min_samples >= 2),
            ("kw_bin_width", self.kw_bin_width > 0.0),
            ("kw_g_range", self.kw_g_range.0 < self.kw_g_range.1),
            ("kw_ws_range", self.kw_ws_range.0 < self.kw_ws_range.1),
            ("tau_ws_bin_width", self.tau_ws_bin_width > 0.0),
            ("tau_ws_max", self.tau_ws_max > 0.0),
            ("tau_horizon_s", self.tau_horizon_s > 0),
            ("tau_min_events", self.tau_min_events >= 3),
            ("tau_margin_s", self.tau_margin_s >= 0.0),
            ("resample_window_s", self.resample_window_s > 0),
        ];
        for (name, ok) in positive {
            if !ok {
                return Err(Error::invalid(format!("fit config: invalid `{name}`")));
            }
        }
        if self.tau_horizon_s % self.resample_window_s != 0 {
            return Err(Error::invalid("fit config: tau horizon must be a multiple of the resample window"));
        }
        Ok(())
    }

    /// Row filter shared by the static model fits.
    pub fn static_filter(&self) -> FilterSpec {
        FilterSpec {
            g_min: self.g_min,
            ws_min: 0.0,
            ws_max: self.ws_cap,
            max_ws_variation: None,
            resample_window_s: self.resample_window_s,
        }
    }
}

fn columns(s: &OverTempSeries, keep: impl Fn(usize) -> bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut g = Vec::new();
    let mut ws = Vec::new();
    let mut t = Vec::new();
    for i in s.valid_indices().filter(|&i| keep(i)) {
        g.push(s.g_poa()[i]);
        ws.push(s.ws()[i]);
        t.push(s.t_over()[i]);
    }
    (g, ws, t)
}

fn need(n: usize, min: usize, context: &str) -> Result<()> {
    if n < min {
        return Err(Error::InsufficientSamples {
            got: n,
            need: min,
            context: context.into(),
        });
    }
    Ok(())
}

/// Slope of `T_o` on `G` for near-zero wind: the maximum R-value, `k`.
pub fn fit_r_eq_max(s: &OverTempSeries, cfg: &FitConfig) -> Result<RegressionResult> {
    let (g, _, t) = columns(s, |i| s.g_poa()[i] > cfg.g_min && s.ws()[i] < cfg.low_wind_max);
    need(g.len(), cfg.min_samples, "zero-wind regression")?;
    linear_fit(&g, &t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighWindFit {
    pub regression: RegressionResult,
    /// Wind band actually used (m/s).
    pub band: (f64, f64),
    pub widened: bool,
}

/// Slope of `T_o` on `G` in the high-wind band: the residual R-value `r_M`.
/// The band is widened downward in 0.5 m/s steps when too few rows exist.
pub fn fit_r_eq_min(s: &OverTempSeries, cfg: &FitConfig) -> Result<HighWindFit> {
    let (mut lo, hi) = cfg.high_wind_band;
    loop {
        let (g, _, t) = columns(s, |i| {
            let w = s.ws()[i];
            s.g_poa()[i] > cfg.g_min && w >= lo && w <= hi
        });
        if g.len() >= cfg.min_samples {
            let widened = lo < cfg.high_wind_band.0;
            if widened {
                log::warn!("high-wind band widened to {lo}-{hi} m/s ({} rows)", g.len());
            }
            return Ok(HighWindFit {
                regression: linear_fit(&g, &t)?,
                band: (lo, hi),
                widened,
            });
        }
        if lo - 0.5 < cfg.high_wind_floor - 1e-9 {
            return Err(Error::InsufficientSamples {
                got: g.len(),
                need: cfg.min_samples,
                context: format!("high-wind regression down to {lo} m/s"),
            });
        }
        lo -= 0.5;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwBin {
    /// Mean irradiance of the bin's rows (W/m²).
    pub g_mean: f64,
    pub g_lo: f64,
    /// Slope of `T_o` on `WS` within the bin.
    pub slope: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwFit {
    pub k_w: f64,
    pub bins: Vec<KwBin>,
    /// Lower edges of bins with too few rows or no wind variance.
    pub skipped: Vec<f64>,
    pub outer: RegressionResult,
}

/// WM2 convection coefficient: per-irradiance-bin slopes of `T_o` on `WS`,
/// then the slope of those against irradiance, sign-flipped.
pub fn fit_wm2_kw(s: &OverTempSeries, cfg: &FitConfig) -> Result<KwFit> {
    let (g_lo, g_hi) = cfg.kw_g_range;
    let (w_lo, w_hi) = cfg.kw_ws_range;
    let n_bins = ((g_hi - g_lo) / cfg.kw_bin_width).round() as usize;
    let mut rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = vec![Default::default(); n_bins];
    for i in s.valid_indices() {
        let (g, w) = (s.g_poa()[i], s.ws()[i]);
        if g < g_lo || g >= g_hi || w < w_lo || w > w_hi {
            continue;
        }
        let b = (((g - g_lo) / cfg.kw_bin_width) as usize).min(n_bins - 1);
        rows[b].0.push(g);
        rows[b].1.push(w);
        rows[b].2.push(s.t_over()[i]);
    }
    let mut bins = Vec::new();
    let mut skipped = Vec::new();
    for (b, (g, w, t)) in rows.into_iter().enumerate() {
        let lo = g_lo + b as f64 * cfg.kw_bin_width;
        if g.len() < cfg.min_samples {
            skipped.push(lo);
            continue;
        }
        match linear_fit(&w, &t) {
            Ok(r) => bins.push(KwBin {
                g_mean: g.iter().sum::<f64>() / g.len() as f64,
                g_lo: lo,
                slope: r.slope,
                n_samples: g.len(),
            }),
            Err(_) => skipped.push(lo),
        }
    }
    if bins.len() < 3 {
        return Err(Error::InsufficientSamples {
            got: bins.len(),
            need: 3,
            context: "usable irradiance bins for k_W".into(),
        });
    }
    let x: Vec<f64> = bins.iter().map(|b| b.g_mean).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.slope).collect();
    let outer = linear_fit(&x, &y)?;
    Ok(KwFit {
        k_w: -outer.slope,
        bins,
        skipped,
        outer,
    })
}

/// Fits one model on resampled over-temperature data.
pub fn fit_static(kind: ModelKind, s: &OverTempSeries, cfg: &FitConfig, dataset_id: &str) -> Result<FittedModel> {
    let spec = cfg.static_filter();
    let f = filter_rows(s, &spec);
    let mut flags = Vec::new();
    let (coefficients, n) = match kind {
        ModelKind::Ross => {
            let (g, _, t) = columns(&f, |_| true);
            need(g.len(), cfg.min_samples, "Ross regression")?;
            let r = linear_fit(&g, &t)?;
            (Coefficients::Ross { k: r.slope }, r.n_samples)
        }
        ModelKind::Sandia => {
            let (g, ws, t) = columns(&f, |i| f.t_over()[i] > cfg.t_over_min);
            need(g.len(), cfg.min_samples, "Sandia linearisation")
                .map_err(|e| degenerate_if_empty(e, "no rows with positive over-temperature"))?;
            let y: Vec<f64> = t.iter().zip(&g).map(|(t, g)| (t / g).ln()).collect();
            let r = linear_fit(&ws, &y).map_err(no_wind)?;
            (Coefficients::Sandia { a: r.intercept, b: r.slope }, r.n_samples)
        }
        ModelKind::Faiman => {
            let (g, ws, t) = columns(&f, |i| f.t_over()[i] > cfg.t_over_min);
            need(g.len(), cfg.min_samples, "Faiman linearisation")
                .map_err(|e| degenerate_if_empty(e, "no rows with positive over-temperature"))?;
            let y: Vec<f64> = g.iter().zip(&t).map(|(g, t)| g / t).collect();
            let r = linear_fit(&ws, &y).map_err(no_wind)?;
            let (mut u0, mut u1) = (r.intercept, r.slope);
            let in_range = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
            if !in_range(u0, cfg.faiman_u0_range) {
                flags.push(format!("U0 = {u0} outside plausible range, replaced by {}", cfg.faiman_defaults.0));
                u0 = cfg.faiman_defaults.0;
            }
            if !in_range(u1, cfg.faiman_u1_range) {
                flags.push(format!("U1 = {u1} outside plausible range, replaced by {}", cfg.faiman_defaults.1));
                u1 = cfg.faiman_defaults.1;
            }
            (Coefficients::Faiman { u0, u1 }, r.n_samples)
        }
        ModelKind::Wm1 => {
            let k = fit_r_eq_max(s, cfg)?.slope;
            if !(k > 0.0) {
                return Err(Error::Degenerate(format!("zero-wind slope k = {k} is not positive")));
            }
            let (g, ws, t) = columns(&f, |i| f.t_over()[i] > cfg.t_over_min);
            need(g.len(), cfg.min_samples, "WM1 wind regression")?;
            let y: Vec<f64> = t.iter().zip(&g).map(|(t, g)| (t / (k * g)).ln()).collect();
            let r = linear_fit(&ws, &y).map_err(no_wind)?;
            if !(r.slope < 0.0) {
                return Err(Error::Degenerate(format!(
                    "WM1 wind slope {} is not negative; d undefined",
                    r.slope
                )));
            }
            (Coefficients::Wm1 { k, d: -1.0 / r.slope }, r.n_samples)
        }
        ModelKind::Wm2 => {
            let k = fit_r_eq_max(s, cfg)?.slope;
            let kw = fit_wm2_kw(s, cfg)?;
            if !kw.skipped.is_empty() {
                flags.push(format!("{} irradiance bins skipped for k_W", kw.skipped.len()));
            }
            if k - kw.k_w * cfg.ws_cap < 0.0 {
                return Err(Error::Degenerate(format!(
                    "WM2 fit would go negative above {} m/s: k = {k}, k_W = {}",
                    cfg.ws_cap, kw.k_w
                )));
            }
            let n = kw.bins.iter().map(|b| b.n_samples).sum();
            (
                Coefficients::Wm2 {
                    k,
                    k_w: kw.k_w,
                    ws_cap: cfg.ws_cap,
                },
                n,
            )
        }
    };
    coefficients.validate()?;
    Ok(FittedModel {
        coefficients,
        provenance: Provenance {
            dataset_id: dataset_id.to_string(),
            filter: Some(spec),
            n_samples: n,
            flags,
        },
    })
}

fn no_wind(e: Error) -> Error {
    match e {
        Error::Degenerate(_) => Error::Degenerate("no wind variance; wind coefficient unidentifiable".into()),
        other => other,
    }
}

fn degenerate_if_empty(e: Error, msg: &str) -> Error {
    match e {
        Error::InsufficientSamples { got: 0, .. } => Error::Degenerate(msg.into()),
        other => other,
    }
}

/// Capacitances implied by the time constants and R-values, in J/(K·m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalC {
    /// `tau0 / r_eq_max`
    pub c_eq_min: f64,
    /// `tau0 / r_M`
    pub c_eq_max: f64,
    /// `tau_selected / r_M`
    pub c_m: f64,
    /// `c_eq_max - c_M`
    pub c_film: f64,
}

pub fn empirical_c(tau0: f64, tau_selected: f64, r_eq_max: f64, r_m: f64) -> Result<EmpiricalC> {
    if !(tau0 > 0.0 && tau_selected > 0.0) {
        return Err(Error::invalid("time constants must be positive"));
    }
    if !(r_eq_max > 0.0 && r_m > 0.0) {
        return Err(Error::invalid("R-values must be positive"));
    }
    let c_eq_max = tau0 / r_m;
    let c_m = tau_selected / r_m;
    Ok(EmpiricalC {
        c_eq_min: tau0 / r_eq_max,
        c_eq_max,
        c_m,
        c_film: c_eq_max - c_m,
    })
}

/// C-value at wind speed `ws` from the exponential time-constant fit,
/// `tau0·exp(-ws/f) / r_M`.
pub fn c_eq_at(tau0: f64, f: f64, r_m: f64, ws: f64) -> f64 {
    tau0 * (-ws / f).exp() / r_m
}

/// One row of empirical RC quantities for a dataset. R in K/(W/m²),
/// C in J/(K·m²), times in s, `f` in s/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRc {
    pub r_eq_max: f64,
    pub r_m: f64,
    pub r_film: f64,
    pub c_eq_min: f64,
    pub c_eq_max: f64,
    pub c_m: f64,
    pub c_film: f64,
    pub tau0: f64,
    pub tau_selected: f64,
    pub f: f64,
    pub dt_s: i64,
}

impl EmpiricalRc {
    pub fn new(r_eq_max: f64, r_m: f64, tau: &TauEstimate, dt_s: i64) -> Result<Self> {
        let fit = tau
            .fit
            .ok_or_else(|| Error::Degenerate("no exponential time-constant fit".into()))?;
        let c = empirical_c(fit.tau0, tau.selection.tau_s, r_eq_max, r_m)?;
        Ok(Self {
            r_eq_max,
            r_m,
            r_film: r_eq_max - r_m,
            c_eq_min: c.c_eq_min,
            c_eq_max: c.c_eq_max,
            c_m: c.c_m,
            c_film: c.c_film,
            tau0: fit.tau0,
            tau_selected: tau.selection.tau_s,
            f: fit.f,
            dt_s,
        })
    }
}
