//! Thermal time constant per wind-speed bin, its exponential wind
//! dependence, and the single value used for the EWM transform.

use serde::{Deserialize, Serialize};

use super::FitConfig;
use crate::error::{Error, Result};
use crate::regression::{linear_fit, multi_fit};
use crate::timeseries::{sample_std, OverTempSeries};

/// How a bin's time constant is derived from its step events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMethod {
    /// Integrated first-order balance over each event:
    /// `ΔT_o/H = b0 + b1·mean(G) + b2·mean(T_o)` with `tau = -1/b2`.
    #[default]
    FirstOrder,
    /// Slope of `ΔT_o` on `ΔG` over the horizon, divided by `k` and
    /// multiplied by the horizon.
    StepRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauBin {
    pub ws_lo: f64,
    pub ws_center: f64,
    pub tau_s: f64,
    pub n_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauExclusion {
    pub ws_center: f64,
    pub n_events: usize,
    pub reason: String,
}

/// `ln tau = g - WS/f`, so `tau0 = e^g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauFit {
    pub tau0: f64,
    /// s/m; infinite when tau does not fall with wind speed.
    pub f: f64,
    pub g: f64,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSelection {
    pub tau_s: f64,
    /// Index into the retained bins.
    pub index: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    pub method: TauMethod,
    /// Retained bins, ordered by wind speed.
    pub bins: Vec<TauBin>,
    pub excluded: Vec<TauExclusion>,
    pub fit: Option<TauFit>,
    pub selection: TauSelection,
    /// Wind-speed standard deviation used for the variation filter (m/s).
    pub sigma_ws: f64,
    /// Zero-wind R-value the step-ratio method divides by.
    pub k: f64,
}

struct Event {
    g_mean: f64,
    t_mean: f64,
    dt_over: f64,
    dg: f64,
    ws_mean: f64,
}

/// Trapezoid mean of `v[j..=j+h]`.
fn window_mean(v: &[f64], j: usize, h: usize) -> f64 {
    let inner: f64 = v[j + 1..j + h].iter().sum();
    (inner + 0.5 * (v[j] + v[j + h])) / h as f64
}

fn find_events(s: &OverTempSeries, sigma_ws: f64, h: usize, cfg: &FitConfig) -> Vec<Event> {
    let (g, t, ws) = (s.g_poa(), s.t_over(), s.ws());
    let mut out = Vec::new();
    if s.len() <= h {
        return out;
    }
    for j in 0..s.len() - h {
        let ok = (j..=j + h).all(|i| s.is_valid(i) && g[i] > cfg.g_min)
            && (j..j + h).all(|i| (ws[i + 1] - ws[i]).abs() < sigma_ws);
        if !ok || (g[j + h] - g[j]).abs() < cfg.tau_min_step_g {
            continue;
        }
        out.push(Event {
            g_mean: window_mean(g, j, h),
            t_mean: window_mean(t, j, h),
            dt_over: t[j + h] - t[j],
            dg: g[j + h] - g[j],
            ws_mean: window_mean(ws, j, h),
        });
    }
    out
}

fn bin_tau(events: &[&Event], method: TauMethod, k: f64, horizon_s: f64) -> Result<f64> {
    match method {
        TauMethod::FirstOrder => {
            let gm: Vec<f64> = events.iter().map(|e| e.g_mean).collect();
            let tm: Vec<f64> = events.iter().map(|e| e.t_mean).collect();
            let y: Vec<f64> = events.iter().map(|e| e.dt_over / horizon_s).collect();
            let b = multi_fit(&[&gm, &tm], &y)?;
            if !(b[2] < 0.0) {
                return Err(Error::Degenerate(format!("relaxation coefficient {} is not negative", b[2])));
            }
            Ok(-1.0 / b[2])
        }
        TauMethod::StepRatio => {
            let dg: Vec<f64> = events.iter().map(|e| e.dg / horizon_s).collect();
            let dt: Vec<f64> = events.iter().map(|e| e.dt_over / horizon_s).collect();
            let slope = linear_fit(&dg, &dt)?.slope;
            let tau = slope / k * horizon_s;
            if !(tau > 0.0) {
                return Err(Error::Degenerate(format!("step ratio gives tau = {tau} s")));
            }
            Ok(tau)
        }
    }
}

/// Per-bin time constants from step events in `s`, which must already be
/// resampled to [`FitConfig::resample_window_s`].
///
/// `sigma_ws` defaults to the wind-speed standard deviation of the daytime
/// rows of `s`.
pub fn estimate_tau(s: &OverTempSeries, k: f64, sigma_ws: Option<f64>, cfg: &FitConfig) -> Result<TauEstimate> {
    cfg.validate()?;
    if !(k > 0.0) {
        return Err(Error::invalid(format!("zero-wind R-value k = {k} must be positive")));
    }
    if s.step_s() != cfg.resample_window_s {
        return Err(Error::invalid(format!(
            "time-constant estimation expects {} s data, got {} s",
            cfg.resample_window_s,
            s.step_s()
        )));
    }
    let sigma_ws = match sigma_ws {
        Some(v) => v,
        None => {
            let day: Vec<f64> = s.valid_indices().filter(|&i| s.g_poa()[i] > cfg.g_min).map(|i| s.ws()[i]).collect();
            sample_std(&day).ok_or(Error::InsufficientSamples {
                got: day.len(),
                need: 2,
                context: "daytime wind-speed spread".into(),
            })?
        }
    };
    let h = (cfg.tau_horizon_s / cfg.resample_window_s) as usize;
    let events = find_events(s, sigma_ws, h, cfg);
    let n_bins = (cfg.tau_ws_max / cfg.tau_ws_bin_width).round() as usize;

    let mut bins = Vec::new();
    let mut excluded = Vec::new();
    for b in 0..n_bins {
        let lo = b as f64 * cfg.tau_ws_bin_width;
        let hi = lo + cfg.tau_ws_bin_width;
        let center = lo + 0.5 * cfg.tau_ws_bin_width;
        let in_bin: Vec<&Event> = events.iter().filter(|e| e.ws_mean >= lo && e.ws_mean < hi).collect();
        let n = in_bin.len();
        if n < cfg.tau_min_events {
            excluded.push(TauExclusion {
                ws_center: center,
                n_events: n,
                reason: format!("{n} step events, need {}", cfg.tau_min_events),
            });
            continue;
        }
        match bin_tau(&in_bin, cfg.tau_method, k, cfg.tau_horizon_s as f64) {
            Ok(tau_s) => bins.push(TauBin {
                ws_lo: lo,
                ws_center: center,
                tau_s,
                n_events: n,
            }),
            Err(e) => excluded.push(TauExclusion {
                ws_center: center,
                n_events: n,
                reason: e.to_string(),
            }),
        }
    }
    if bins.is_empty() {
        return Err(Error::InsufficientSamples {
            got: events.len(),
            need: cfg.tau_min_events,
            context: "step events in any wind-speed bin".into(),
        });
    }
    let fit = fit_tau_wind(&bins);
    let selection = select_tau(&bins, cfg.tau_margin_s, cfg.tau_start_ws_max)?;
    Ok(TauEstimate {
        method: cfg.tau_method,
        bins,
        excluded,
        fit,
        selection,
        sigma_ws,
        k,
    })
}

/// Log-linear least squares over the retained bins; `None` with fewer than two.
fn fit_tau_wind(bins: &[TauBin]) -> Option<TauFit> {
    if bins.len() < 2 {
        return None;
    }
    let x: Vec<f64> = bins.iter().map(|b| b.ws_center).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.tau_s.ln()).collect();
    let r = linear_fit(&x, &y).ok()?;
    let f = if r.slope < 0.0 {
        -1.0 / r.slope
    } else {
        log::warn!("time constant does not fall with wind speed (slope {})", r.slope);
        f64::INFINITY
    };
    Some(TauFit {
        tau0: r.intercept.exp(),
        f,
        g: r.intercept,
        n_bins: bins.len(),
    })
}

/// Starts at the largest tau among bins centred below `start_ws_max` and
/// walks to higher wind speeds while no bin exceeds its predecessor by more
/// than `margin_s`. Returns the last bin reached.
pub fn select_tau(bins: &[TauBin], margin_s: f64, start_ws_max: f64) -> Result<TauSelection> {
    if bins.is_empty() {
        return Err(Error::invalid("no time-constant bins to select from"));
    }
    let mut order: Vec<usize> = (0..bins.len()).collect();
    order.sort_by(|&a, &b| bins[a].ws_center.total_cmp(&bins[b].ws_center));
    let low: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| bins[i].ws_center < start_ws_max)
        .collect();
    let start_pos = if low.is_empty() {
        0
    } else {
        // position (in wind order) of the largest low-wind tau
        (0..low.len()).max_by(|&a, &b| bins[low[a]].tau_s.total_cmp(&bins[low[b]].tau_s)).unwrap()
    };
    let mut pos = start_pos;
    while pos + 1 < order.len() && bins[order[pos + 1]].tau_s <= bins[order[pos]].tau_s + margin_s {
        pos += 1;
    }
    let warning = if pos == start_pos && pos + 1 < order.len() {
        let msg = format!(
            "time constant rises right after the {} m/s bin; using its value",
            bins[order[pos]].ws_center
        );
        log::warn!("{msg}");
        Some(msg)
    } else if order.len() == 1 {
        Some("only one wind-speed bin available".to_string())
    } else {
        None
    };
    Ok(TauSelection {
        tau_s: bins[order[pos]].tau_s,
        index: order[pos],
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn bins(taus: &[f64]) -> Vec<TauBin> {
        taus.iter()
            .enumerate()
            .map(|(i, &t)| TauBin {
                ws_lo: i as f64,
                ws_center: i as f64 + 0.5,
                tau_s: t,
                n_events: 100,
            })
            .collect()
    }

    #[test]
    fn selection_walk_through() {
        let s = select_tau(&bins(&[570.0, 520.0, 470.0, 430.0, 445.0, 300.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 300.0);
        assert!(s.warning.is_none());
    }

    #[test]
    fn selection_stops_at_large_rise() {
        let s = select_tau(&bins(&[570.0, 520.0, 470.0, 430.0, 455.0, 300.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 430.0);
        // exactly at the margin still continues
        let s = select_tau(&bins(&[500.0, 480.0, 500.0, 450.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 450.0);
    }

    #[test]
    fn selection_strictly_decreasing() {
        let s = select_tau(&bins(&[600.0, 500.0, 400.0, 350.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 350.0);
        assert_eq!(s.index, 3);
    }

    #[test]
    fn selection_starts_at_low_wind_maximum() {
        // the second bin is the larger of the two below 2 m/s
        let s = select_tau(&bins(&[500.0, 560.0, 540.0, 700.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 540.0);
    }

    #[test]
    fn selection_immediate_failure_warns() {
        let s = select_tau(&bins(&[400.0, 300.0, 500.0]), 20.0, 2.0).unwrap();
        assert_eq!(s.tau_s, 300.0);
        let s = select_tau(&bins(&[400.0, 300.0, 500.0]), 20.0, 1.0).unwrap();
        assert_eq!(s.tau_s, 300.0);
        assert!(s.warning.is_none());
        let s = select_tau(&bins(&[300.0, 350.0, 340.0]), 20.0, 1.0).unwrap();
        assert_eq!(s.tau_s, 300.0);
        assert!(s.warning.is_some());
        assert!(select_tau(&[], 20.0, 2.0).is_err());
    }

    #[test]
    fn log_linear_fit_recovers_exponential() {
        let b: Vec<TauBin> = (0..8)
            .map(|i| {
                let ws = i as f64 + 0.5;
                TauBin {
                    ws_lo: i as f64,
                    ws_center: ws,
                    tau_s: 572.0 * (-ws / 15.53).exp(),
                    n_events: 50,
                }
            })
            .collect();
        let f = fit_tau_wind(&b).unwrap();
        assert_abs_diff_eq!(f.tau0, 572.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.f, 15.53, epsilon = 1e-9);
        let flat = fit_tau_wind(&bins(&[300.0, 310.0, 320.0])).unwrap();
        assert!(flat.f.is_infinite());
        assert!(fit_tau_wind(&bins(&[300.0])).is_none());
    }

    /// 5-min series of a first-order lag driven by a square-ish irradiance
    /// signal, integrated at 10 s so the lag is independent of the estimator.
    fn lagged(tau: f64, k: f64, ws_level: f64, days: usize, noise: f64, seed: u64) -> OverTempSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_noise = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let fine = 10.0;
        let per_window = 30;
        let n = days * 288;
        let (mut g_out, mut t_out, mut ws_out) = (Vec::new(), Vec::new(), Vec::new());
        let mut g_level: f64 = 600.0;
        let mut t = k * g_level;
        let decay = (-fine / tau).exp();
        for _ in 0..n {
            let (mut gs, mut ts) = (0.0, 0.0);
            for _ in 0..per_window {
                if rng.random_bool(0.01) {
                    g_level = rng.random_range(250.0..1000.0);
                }
                t = k * g_level + (t - k * g_level) * decay;
                gs += g_level;
                ts += t;
            }
            g_out.push(gs / per_window as f64);
            let eps = if noise > 0.0 { n_noise.sample(&mut rng) } else { 0.0 };
            t_out.push(ts / per_window as f64 + eps);
            ws_out.push(ws_level + rng.random_range(-0.1..0.1));
        }
        let start = NaiveDate::from_ymd_opt(2016, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        OverTempSeries::new(start, 300, t_out, g_out, ws_out).unwrap()
    }

    #[test]
    fn first_order_recovers_constant_tau() {
        let s = lagged(360.0, 0.03, 3.5, 60, 0.2, 5);
        let est = estimate_tau(&s, 0.03, None, &FitConfig::default()).unwrap();
        assert_eq!(est.bins.len(), 1, "{:?}", est.excluded);
        let b = est.bins[0];
        assert_eq!(b.ws_center, 3.5);
        assert!((b.tau_s - 360.0).abs() < 40.0, "tau {}", b.tau_s);
        assert_eq!(est.selection.tau_s, b.tau_s);
        assert!(est.fit.is_none());
    }

    #[test]
    fn steady_data_has_no_events() {
        let n = 2000;
        let start = NaiveDate::from_ymd_opt(2016, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = OverTempSeries::new(start, 300, vec![24.0; n], vec![800.0; n], vec![2.0; n]).unwrap();
        let e = estimate_tau(&s, 0.03, Some(0.5), &FitConfig::default()).unwrap_err();
        assert!(matches!(e, Error::InsufficientSamples { got: 0, .. }), "{e}");
    }

    #[test]
    fn rejects_wrong_resolution() {
        let start = NaiveDate::from_ymd_opt(2016, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = OverTempSeries::new(start, 60, vec![24.0; 10], vec![800.0; 10], vec![2.0; 10]).unwrap();
        assert!(estimate_tau(&s, 0.03, None, &FitConfig::default()).is_err());
        let s = lagged(360.0, 0.03, 3.5, 2, 0.0, 1);
        assert!(estimate_tau(&s, 0.0, None, &FitConfig::default()).is_err());
    }
}
