//! `fit`: coefficients, time constant and empirical RC values of a dataset.

use std::path::Path;

use anyhow::{bail, Context, Result};
use femtherm::fempipe::{FemPipeline, FemRun, TauSource, TrainFit};
use femtherm::models::{Coefficients, FittedModel, ModelKind};
use femtherm::timeseries::{load_csv, split_weekday_weekend};
use serde::Serialize;

use crate::config::{self, ConfigError, Overrides, RunConfig};
use crate::report::{config_hash, OutDir, Outcome};

/// A loaded, split dataset with its shared training fit.
pub(crate) struct Prepared {
    pub cfg: RunConfig,
    pub pipeline: FemPipeline,
    pub dropped_rows: usize,
}

pub(crate) fn prepare(config_path: &Path, overrides: &Overrides) -> Result<Prepared> {
    let (mut cfg, base) = config::load::<RunConfig>(config_path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let path = cfg.data_path(&base);
    if !path.exists() {
        return Err(ConfigError(format!("data file {} does not exist", path.display())).into());
    }
    let loaded = load_csv(&path, &cfg.data.columns, cfg.data.step_s, &cfg.dataset_id)
        .with_context(|| format!("loading {}", path.display()))?;
    let split = split_weekday_weekend(&loaded.series)?;
    let pipeline = FemPipeline::new(&split, &cfg.fem)?;
    Ok(Prepared {
        cfg,
        pipeline,
        dropped_rows: loaded.dropped,
    })
}

/// Runs every configured model, keeping going past per-model failures.
pub(crate) fn run_models(p: &FemPipeline, models: &[ModelKind], warnings: &mut Vec<String>) -> Result<Vec<FemRun>> {
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = models.iter().map(|&m| s.spawn(move || (m, p.run(m)))).collect();
        handles.into_iter().map(|h| h.join().expect("model worker panicked")).collect()
    });
    let mut runs = Vec::new();
    let mut last_err = None;
    for (m, r) in results {
        match r {
            Ok(run) => {
                warnings.extend(run.fitted.provenance.flags.iter().map(|f| format!("{m}: {f}")));
                runs.push(run);
            }
            Err(e) => {
                warnings.push(format!("{m}: {e}"));
                last_err = Some(e);
            }
        }
    }
    if runs.is_empty() {
        match last_err {
            Some(e) => return Err(e.into()),
            None => bail!("no models to run"),
        }
    }
    Ok(runs)
}

#[derive(Debug, Serialize)]
struct CoefficientRow<'a> {
    dataset_id: &'a str,
    model: ModelKind,
    coefficient: &'static str,
    value: f64,
    n_samples: usize,
}

fn named(c: &Coefficients) -> Vec<(&'static str, f64)> {
    match *c {
        Coefficients::Ross { k } => vec![("k", k)],
        Coefficients::Sandia { a, b } => vec![("a", a), ("b", b)],
        Coefficients::Faiman { u0, u1 } => vec![("u0", u0), ("u1", u1)],
        Coefficients::Wm1 { k, d } => vec![("k", k), ("d", d)],
        Coefficients::Wm2 { k, k_w, ws_cap } => vec![("k", k), ("k_w", k_w), ("ws_cap", ws_cap)],
    }
}

/// One row in the layout of the per-dataset RC summary: R-values in
/// mK/(W/m²), C-values in kJ/(K·m²).
#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    dataset_id: &'a str,
    r_eq_max: f64,
    r_m: Option<f64>,
    r_film: Option<f64>,
    c_eq_max: Option<f64>,
    c_m: Option<f64>,
    c_film: Option<f64>,
    tau0_s: Option<f64>,
    tau_s: Option<f64>,
    dt_s: i64,
    f: Option<f64>,
    tau_source: String,
}

fn summary_row<'a>(id: &'a str, t: &TrainFit) -> SummaryRow<'a> {
    let rc = t.rc.as_ref();
    let tau_s = (t.tau_source != TauSource::Unresolved).then_some(t.ewm.tau_s);
    SummaryRow {
        dataset_id: id,
        r_eq_max: t.r_eq_max.slope * 1e3,
        r_m: t.r_m.as_ref().map(|r| r.regression.slope * 1e3),
        r_film: rc.map(|r| r.r_film * 1e3),
        c_eq_max: rc.map(|r| r.c_eq_max / 1e3),
        c_m: rc.map(|r| r.c_m / 1e3),
        c_film: rc.map(|r| r.c_film / 1e3),
        tau0_s: t.tau.as_ref().and_then(|e| e.fit).map(|f| f.tau0),
        tau_s,
        dt_s: t.step_s,
        f: t.tau.as_ref().and_then(|e| e.fit).map(|f| f.f),
        tau_source: format!("{:?}", t.tau_source).to_lowercase(),
    }
}

#[derive(Debug, Serialize)]
struct TauBinRow<'a> {
    ws_center: f64,
    n_events: usize,
    tau_s: Option<f64>,
    selected: bool,
    excluded: Option<&'a str>,
}

pub struct FitOutput {
    pub train_fit: TrainFit,
    pub models: Vec<FittedModel>,
    pub outcome: Outcome,
}

#[derive(Serialize)]
struct FitDetails<'a> {
    dataset_id: &'a str,
    dropped_rows: usize,
    train_fit: &'a TrainFit,
    models: &'a [FittedModel],
}

pub fn cmd_fit(config_path: &Path, out: &Path, overrides: &Overrides) -> Result<FitOutput> {
    let p = prepare(config_path, overrides)?;
    let id = p.cfg.dataset_id.as_str();
    let t = &p.pipeline.train_fit;
    let mut warnings = t.warnings.clone();
    let runs = run_models(&p.pipeline, &p.cfg.models, &mut warnings)?;
    let models: Vec<FittedModel> = runs.into_iter().map(|r| r.fitted).collect();

    let mut dir = OutDir::create(out)?;
    let mut rows = Vec::new();
    for m in &models {
        for (name, value) in named(&m.coefficients) {
            rows.push(CoefficientRow {
                dataset_id: id,
                model: m.coefficients.kind(),
                coefficient: name,
                value,
                n_samples: m.provenance.n_samples,
            });
        }
    }
    dir.write_rows("coefficients.csv", &rows)?;
    dir.write_rows("rc_summary.csv", &[summary_row(id, t)])?;
    if let Some(est) = &t.tau {
        let mut bins: Vec<TauBinRow> = est
            .bins
            .iter()
            .enumerate()
            .map(|(i, b)| TauBinRow {
                ws_center: b.ws_center,
                n_events: b.n_events,
                tau_s: Some(b.tau_s),
                selected: i == est.selection.index,
                excluded: None,
            })
            .chain(est.excluded.iter().map(|x| TauBinRow {
                ws_center: x.ws_center,
                n_events: x.n_events,
                tau_s: None,
                selected: false,
                excluded: Some(&x.reason),
            }))
            .collect();
        bins.sort_by(|a, b| a.ws_center.total_cmp(&b.ws_center));
        dir.write_rows("tau_bins.csv", &bins)?;
    }

    let mut text = format!("{id}: r_eq_max {:.2} mK/(W/m²)", t.r_eq_max.slope * 1e3);
    if t.tau_source != TauSource::Unresolved {
        text.push_str(&format!(", tau {:.0} s", t.ewm.tau_s));
    }
    for m in &models {
        let coeffs: Vec<String> = named(&m.coefficients).iter().map(|(n, v)| format!("{n}={v:.5}")).collect();
        text.push_str(&format!("\n  {}: {}", m.coefficients.kind(), coeffs.join(" ")));
    }
    let details = FitDetails {
        dataset_id: id,
        dropped_rows: p.dropped_rows,
        train_fit: t,
        models: &models,
    };
    let outcome = dir.finish("fit", config_hash(&p.cfg)?, text, &warnings, details)?;
    Ok(FitOutput {
        train_fit: t.clone(),
        models,
        outcome,
    })
}
