//! Error metrics, energy-yield impact of temperature errors, delayed-sensor
//! baselines and the backsheet-to-cell correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewm::{ewm_series, EwmParams};

/// Default irradiance above which rows count as daytime for KPIs (W/m²).
pub const DAYTIME_G_MIN: f64 = 20.0;

/// Irradiance at standard test conditions, used for per-kWp normalisation.
pub const G_STC: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kpis {
    pub rmse: f64,
    pub mae: f64,
    pub mbe: f64,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub dataset_id: String,
    pub model: String,
    pub variant: String,
    #[serde(flatten)]
    pub kpis: Kpis,
}

/// `G > g_min` per row; missing irradiance is never daytime.
pub fn daytime_mask(g: &[f64], g_min: f64) -> Vec<bool> {
    g.iter().map(|&g| g > g_min).collect()
}

/// RMSE, MAE and MBE of `pred - meas` over rows where both are finite and
/// `mask` (when given) is set.
pub fn kpis(pred: &[f64], meas: &[f64], mask: Option<&[bool]>) -> Result<Kpis> {
    if pred.len() != meas.len() || mask.is_some_and(|m| m.len() != pred.len()) {
        return Err(Error::invalid("prediction, measurement and mask lengths differ"));
    }
    let (mut n, mut se, mut ae, mut be) = (0usize, 0.0, 0.0, 0.0);
    for i in 0..pred.len() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let e = pred[i] - meas[i];
        if !e.is_finite() {
            continue;
        }
        n += 1;
        se += e * e;
        ae += e.abs();
        be += e;
    }
    if n == 0 {
        return Err(Error::InsufficientSamples {
            got: 0,
            need: 1,
            context: "rows where prediction and measurement overlap".into(),
        });
    }
    let nf = n as f64;
    Ok(Kpis {
        rmse: (se / nf).sqrt(),
        mae: ae / nf,
        mbe: be / nf,
        n_rows: n,
    })
}

/// Energy impact of over-temperature errors, in kWh/kWp unless noted.
///
/// `over` comes from rows where the model is too cold (it overestimates
/// yield for a negative `gamma`) and is positive; `under` is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyErrorReport {
    pub total: f64,
    pub over: f64,
    pub under: f64,
    pub naive: f64,
    /// MAE over daytime rows (K).
    pub mae: f64,
    /// `MAE·|gamma|`, percentage points of performance ratio.
    pub pr_approx: f64,
    /// `total / H_y`, percentage points; needs `h_y`.
    pub pr_exact: Option<f64>,
    /// `H_y·MAE·|gamma|`, kWh/kWp; needs `h_y`.
    pub total_approx: Option<f64>,
    /// Temperature coefficient of power (%/K).
    pub gamma: f64,
    /// Irradiation used for the relative figures (kWh/m²).
    pub h_y: Option<f64>,
}

/// Sums `(G/G_STC)·(dt/3600 h)·e·gamma/100` with `e = pred - meas`, split by
/// the sign of `e`.
///
/// `h_y` is used as given; when `None` and the rows span a full year it is
/// integrated from `g` over the rows with a finite error.
pub fn energy_error(pred: &[f64], meas: &[f64], g: &[f64], gamma: f64, dt_s: f64, h_y: Option<f64>) -> Result<EnergyErrorReport> {
    if pred.len() != meas.len() || g.len() != pred.len() {
        return Err(Error::invalid("prediction, measurement and irradiance lengths differ"));
    }
    if !(dt_s > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    if gamma == 0.0 {
        log::warn!("temperature coefficient is zero; energy error is zero by definition");
    }
    let hours = dt_s / 3600.0;
    let (mut over, mut under, mut irr) = (0.0, 0.0, 0.0);
    let (mut n_day, mut abs_day) = (0usize, 0.0);
    for i in 0..pred.len() {
        let e = pred[i] - meas[i];
        if !(e.is_finite() && g[i].is_finite()) {
            continue;
        }
        let term = g[i] / G_STC * hours * e * gamma / 100.0;
        if e < 0.0 {
            over += term;
        } else {
            under += term;
        }
        irr += g[i] * hours / 1000.0;
        if g[i] > DAYTIME_G_MIN {
            n_day += 1;
            abs_day += e.abs();
        }
    }
    if n_day == 0 {
        return Err(Error::InsufficientSamples {
            got: 0,
            need: 1,
            context: "daytime rows for the energy error".into(),
        });
    }
    // with gamma < 0 the signs come out as described; flip for gamma > 0
    if gamma > 0.0 {
        std::mem::swap(&mut over, &mut under);
    }
    let span_days = pred.len() as f64 * dt_s / 86_400.0;
    let h_y = h_y.or((span_days >= 365.0).then_some(irr));
    let mae = abs_day / n_day as f64;
    let total = over - under;
    Ok(EnergyErrorReport {
        total,
        over,
        under,
        naive: over + under,
        mae,
        pr_approx: mae * gamma.abs(),
        pr_exact: h_y.filter(|h| *h > 0.0).map(|h| total / h * 100.0),
        total_approx: h_y.map(|h| h * mae * gamma.abs() / 100.0),
        gamma,
        h_y,
    })
}

/// KPIs of a perfect sensor read `delay` seconds late, for each delay.
pub fn delayed_sensor_baseline(meas: &[f64], g: &[f64], delays_s: &[i64], step_s: i64, g_min: f64) -> Result<Vec<Kpis>> {
    if meas.len() != g.len() {
        return Err(Error::invalid("measurement and irradiance lengths differ"));
    }
    if step_s <= 0 {
        return Err(Error::invalid("time step must be positive"));
    }
    let span = meas.len() as i64 * step_s;
    let mask = daytime_mask(g, g_min);
    delays_s
        .iter()
        .map(|&d| {
            if d < 0 || d % step_s != 0 {
                return Err(Error::invalid(format!("delay {d} s is not a non-negative multiple of {step_s} s")));
            }
            if d >= span {
                return Err(Error::invalid(format!("delay {d} s is not shorter than the series ({span} s)")));
            }
            let lag = (d / step_s) as usize;
            let mut delayed = vec![f64::NAN; meas.len()];
            delayed[lag..].copy_from_slice(&meas[..meas.len() - lag]);
            kpis(&delayed, meas, Some(&mask))
        })
        .collect()
}

/// Cell temperature estimated from a backsheet sensor: `T_bs + EWM(G)·k_bsc`.
pub fn backsheet_to_cell(t_bs: &[f64], g: &[f64], k_bsc: f64, params: &EwmParams) -> Result<Vec<f64>> {
    if t_bs.len() != g.len() {
        return Err(Error::invalid("backsheet temperature and irradiance lengths differ"));
    }
    if !(k_bsc >= 0.0) {
        return Err(Error::invalid(format!("backsheet-to-cell coefficient {k_bsc} must be >= 0")));
    }
    let g_ewm = ewm_series(g, params.alpha)?;
    Ok(t_bs.iter().zip(&g_ewm).map(|(t, g)| t + g * k_bsc).collect())
}
