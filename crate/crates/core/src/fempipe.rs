//! Filter, EWM and mean-bias correction run end to end on a train/test split.
//!
//! Coefficients and the time constant come from the training half only. The
//! test half is predicted three ways: the static model, the static model on
//! EWM inputs, and the EWM prediction shifted by the training bias.
//!
//! Bias convention: `mbe = mean(model - measured)`; the FEM prediction is
//! `ewm - mbe_train`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewm::{dynamicize, EwmParams};
use crate::fitting::{estimate_tau, fit_r_eq_max, fit_r_eq_min, fit_static, EmpiricalRc, FitConfig, HighWindFit, TauEstimate};
use crate::metrics::{daytime_mask, kpis, Kpis, DAYTIME_G_MIN};
use crate::models::{predict_series, FittedModel, ModelKind};
use crate::regression::RegressionResult;
use crate::timeseries::{over_temperature, OverTempSeries, SplitSeries};

/// Rows the training bias is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MbeRows {
    /// `G > daytime_g_min`, the same rows the KPIs use.
    #[default]
    Daytime,
    /// `G <= daytime_g_min`: the night-time average offset.
    Night,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FemConfig {
    pub fit: FitConfig,
    pub daytime_g_min: f64,
    /// Replaces the estimated time constant (s).
    pub tau_s: Option<f64>,
    pub mbe_rows: MbeRows,
}

impl Default for FemConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            daytime_g_min: DAYTIME_G_MIN,
            tau_s: None,
            mbe_rows: MbeRows::Daytime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    Estimated,
    Override,
    /// Data too coarse to resolve the time constant; the EWM is the identity.
    Unresolved,
}

/// Quantities fitted once per training set and shared by every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainFit {
    pub dataset_id: String,
    pub step_s: i64,
    pub r_eq_max: RegressionResult,
    pub r_m: Option<HighWindFit>,
    pub tau: Option<TauEstimate>,
    pub tau_source: TauSource,
    pub ewm: EwmParams,
    pub rc: Option<EmpiricalRc>,
    pub warnings: Vec<String>,
}

/// Prediction of one variant on the rows of a series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariantSeries {
    pub static_: Vec<f64>,
    pub ewm: Vec<f64>,
    pub fem: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemRun {
    pub model: ModelKind,
    pub fitted: FittedModel,
    pub ewm: EwmParams,
    /// `mean(ewm - measured)` on the training rows selected by [`MbeRows`] (K).
    pub mbe_train: f64,
    pub train: VariantSeries,
    pub test: VariantSeries,
    /// Leading rows of each half flagged as EWM warm-up.
    pub warmup_rows: usize,
}

/// Prepared split: over-temperatures and the shared training fit.
#[derive(Debug, Clone)]
pub struct FemPipeline {
    pub cfg: FemConfig,
    pub train_fit: TrainFit,
    pub train: OverTempSeries,
    pub test: OverTempSeries,
    fit_rows: OverTempSeries,
}

impl FemPipeline {
    pub fn new(split: &SplitSeries, cfg: &FemConfig) -> Result<Self> {
        cfg.fit.validate()?;
        let dataset_id = split.train.site_id().to_string();
        let step_s = split.train.step_s();
        let train = over_temperature(&split.train);
        let test = over_temperature(&split.test);
        let mut warnings = Vec::new();

        let resolved = step_s <= cfg.fit.resample_window_s;
        let fit_rows = if resolved {
            train.resample_mean(cfg.fit.resample_window_s).map_err(|e| e.at("resample"))?
        } else {
            warnings.push(format!(
                "{step_s} s data is coarser than the {} s averaging window; fitting on native rows",
                cfg.fit.resample_window_s
            ));
            train.clone()
        };
        let r_eq_max = fit_r_eq_max(&fit_rows, &cfg.fit).map_err(|e| e.at("zero-wind fit"))?;
        let r_m = match fit_r_eq_min(&fit_rows, &cfg.fit) {
            Ok(r) => Some(r),
            Err(e) => {
                warnings.push(format!("high-wind fit: {e}"));
                None
            }
        };

        let tau = if resolved {
            let sigma_ws = split.train.ws_std(cfg.fit.g_min);
            match estimate_tau(&fit_rows, r_eq_max.slope, sigma_ws, &cfg.fit) {
                Ok(t) => {
                    if let Some(w) = &t.selection.warning {
                        warnings.push(w.clone());
                    }
                    Some(t)
                }
                Err(e) if cfg.tau_s.is_some() || r_eq_max.slope <= 0.0 => {
                    warnings.push(format!("time constant: {e}"));
                    None
                }
                Err(e) => return Err(e.at("time constant")),
            }
        } else {
            None
        };
        let dt = step_s as f64;
        let (ewm, tau_source) = match (cfg.tau_s, &tau) {
            (Some(t), _) => (EwmParams::new(t, dt).map_err(|e| e.at("time constant"))?, TauSource::Override),
            (None, Some(t)) => (EwmParams::new(t.selection.tau_s, dt)?, TauSource::Estimated),
            (None, None) => {
                warnings.push("no time constant; EWM left as the identity".into());
                (EwmParams::identity(dt), TauSource::Unresolved)
            }
        };
        let rc = match (&r_m, &tau) {
            (Some(r_m), Some(t)) => EmpiricalRc::new(r_eq_max.slope, r_m.regression.slope, t, step_s).ok(),
            _ => None,
        };
        for w in &warnings {
            log::warn!("{dataset_id}: {w}");
        }
        Ok(Self {
            cfg: cfg.clone(),
            train_fit: TrainFit {
                dataset_id,
                step_s,
                r_eq_max,
                r_m,
                tau,
                tau_source,
                ewm,
                rc,
                warnings,
            },
            train,
            test,
            fit_rows,
        })
    }

    pub fn run(&self, kind: ModelKind) -> Result<FemRun> {
        let fitted = fit_static(kind, &self.fit_rows, &self.cfg.fit, &self.train_fit.dataset_id)
            .map_err(|e| e.at("coefficient fit"))?;
        let c = &fitted.coefficients;
        let params = self.train_fit.ewm;
        let predict = |s: &OverTempSeries| -> Result<VariantSeries> {
            Ok(VariantSeries {
                static_: predict_series(c, s.g_poa(), s.ws())?,
                ewm: dynamicize(c, s.g_poa(), s.ws(), &params)?.t_over,
                fem: Vec::new(),
            })
        };
        let mut train = predict(&self.train).map_err(|e| e.at("prediction"))?;
        let mut test = predict(&self.test).map_err(|e| e.at("prediction"))?;

        let g_min = self.cfg.daytime_g_min;
        let mask: Vec<bool> = match self.cfg.mbe_rows {
            MbeRows::Daytime => daytime_mask(self.train.g_poa(), g_min),
            MbeRows::Night => self.train.g_poa().iter().map(|&g| g <= g_min).collect(),
        };
        let mbe_train = kpis(&train.ewm, self.train.t_over(), Some(&mask))
            .map_err(|e| e.at("training bias"))?
            .mbe;
        let shift = |v: &[f64]| v.iter().map(|x| x - mbe_train).collect::<Vec<f64>>();
        train.fem = shift(&train.ewm);
        test.fem = shift(&test.ewm);
        Ok(FemRun {
            model: kind,
            fitted,
            ewm: params,
            mbe_train,
            train,
            test,
            warmup_rows: params.warmup_rows(),
        })
    }
}

/// Fits on the training half and predicts the test half for one model.
pub fn run_fem(kind: ModelKind, split: &SplitSeries, cfg: &FemConfig) -> Result<FemRun> {
    FemPipeline::new(split, cfg)?.run(kind)
}

/// KPIs of the three variants, plus FEM-minus-static deltas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantKpis {
    pub static_: Kpis,
    pub ewm: Kpis,
    pub fem: Kpis,
    pub delta_rmse: f64,
    pub delta_rmse_pct: f64,
    pub delta_mae: f64,
    pub delta_mae_pct: f64,
}

/// Scores `pred` against the measured over-temperature on daytime rows.
pub fn evaluate_variants(pred: &VariantSeries, meas: &OverTempSeries, g_min: f64) -> Result<VariantKpis> {
    if meas.valid_len() == 0 {
        return Err(Error::EmptySeries.at("evaluation"));
    }
    let mask = daytime_mask(meas.g_poa(), g_min);
    let score = |p: &[f64]| kpis(p, meas.t_over(), Some(&mask)).map_err(|e| e.at("evaluation"));
    let static_ = score(&pred.static_)?;
    let ewm = score(&pred.ewm)?;
    let fem = score(&pred.fem)?;
    let pct = |d: f64, base: f64| if base > 0.0 { 100.0 * d / base } else { 0.0 };
    Ok(VariantKpis {
        static_,
        ewm,
        fem,
        delta_rmse: fem.rmse - static_.rmse,
        delta_rmse_pct: pct(fem.rmse - static_.rmse, static_.rmse),
        delta_mae: fem.mae - static_.mae,
        delta_mae_pct: pct(fem.mae - static_.mae, static_.mae),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{split_weekday_weekend, WeatherSeries};
    use chrono::NaiveDate;

    #[test]
    fn evaluate_constant_offset() {
        let start = NaiveDate::from_ymd_opt(2016, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let meas = OverTempSeries::new(start, 60, vec![20.0; 4], vec![800.0; 4], vec![1.0; 4]).unwrap();
        let v = VariantSeries {
            static_: vec![22.0; 4],
            ewm: vec![20.0; 4],
            fem: vec![20.0; 4],
        };
        let k = evaluate_variants(&v, &meas, 20.0).unwrap();
        assert_eq!((k.static_.rmse, k.static_.mae, k.static_.mbe), (2.0, 2.0, 2.0));
        assert_eq!((k.fem.rmse, k.fem.mae, k.fem.mbe), (0.0, 0.0, 0.0));
        assert_eq!(k.delta_rmse, -2.0);
        assert_eq!(k.delta_rmse_pct, -100.0);
    }

    #[test]
    fn coarse_data_uses_identity_ewm() {
        // two weeks of hourly rows: Ross model plus a small wind term
        let start = NaiveDate::from_ymd_opt(2016, 6, 6).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let n = 24 * 14 * 6;
        let mut g = Vec::new();
        let mut ws = Vec::new();
        for i in 0..n {
            let h = i % 24;
            g.push(if (6..18).contains(&h) { 210.0 + ((i * 37) % 780) as f64 } else { 0.0 });
            ws.push(if i % 5 == 0 { 0.2 } else { (i % 9) as f64 });
        }
        let ta = vec![15.0; n];
        let tm: Vec<f64> = g.iter().zip(&ws).map(|(g, w)| 15.0 + 0.03 * g * (-w / 10.0f64).exp()).collect();
        let s = WeatherSeries::new("hourly", start, 3600, g, ta, tm, ws).unwrap();
        let split = split_weekday_weekend(&s).unwrap();
        let p = FemPipeline::new(&split, &FemConfig::default()).unwrap();
        assert_eq!(p.train_fit.tau_source, TauSource::Unresolved);
        let run = p.run(ModelKind::Wm1).unwrap();
        let same = run
            .test
            .static_
            .iter()
            .zip(&run.test.ewm)
            .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()));
        assert!(same);
    }
}
