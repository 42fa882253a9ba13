//! `run`: full static / EWM / FEM evaluation of every configured model.

use std::path::Path;

use anyhow::Result;
use femtherm::fempipe::{evaluate_variants, FemRun, VariantKpis};
use femtherm::metrics::{delayed_sensor_baseline, energy_error, EnergyErrorReport, KpiReport, Kpis};
use femtherm::models::{ModelKind, Variant};
use serde::Serialize;

use crate::config::Overrides;
use crate::fit::{prepare, run_models};
use crate::report::{config_hash, OutDir, Outcome};

/// Scores of one model on the test half.
#[derive(Debug, Clone, Serialize)]
pub struct ModelResult {
    pub model: ModelKind,
    pub kpis: VariantKpis,
    pub energy: Vec<(Variant, EnergyErrorReport)>,
    pub mbe_train: f64,
}

// The csv writer cannot flatten nested structs, so rows are spelled out.
#[derive(Debug, Serialize)]
struct KpiRow<'a> {
    dataset_id: &'a str,
    model: &'a str,
    variant: &'a str,
    rmse: f64,
    mae: f64,
    mbe: f64,
    n_rows: usize,
}

#[derive(Debug, Serialize)]
struct EnergyRow {
    model: ModelKind,
    variant: Variant,
    total: f64,
    over: f64,
    under: f64,
    naive: f64,
    mae: f64,
    pr_approx: f64,
    pr_exact: Option<f64>,
    total_approx: Option<f64>,
    gamma: f64,
    h_y: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BaselineRow {
    delay_s: i64,
    rmse: f64,
    mae: f64,
    mbe: f64,
    n_rows: usize,
}

#[derive(Debug, Serialize)]
struct PlotRow {
    timestamp: String,
    g_poa: f64,
    ws: f64,
    t_over: f64,
    r#static: f64,
    ewm: f64,
    fem: f64,
}

pub struct RunOutput {
    pub results: Vec<ModelResult>,
    pub reports: Vec<KpiReport>,
    pub outcome: Outcome,
}

#[derive(Serialize)]
struct RunDetails<'a> {
    dataset_id: &'a str,
    dropped_rows: usize,
    tau_s: f64,
    results: &'a [ModelResult],
    coefficients: Vec<&'a femtherm::models::Coefficients>,
}

fn variants(run: &FemRun) -> [(Variant, &[f64]); 3] {
    [
        (Variant::Static, &run.test.static_),
        (Variant::Ewm, &run.test.ewm),
        (Variant::Fem, &run.test.fem),
    ]
}

/// Wide table: one row per metric, `<model>_std`, `<model>_fem` and
/// `<model>_delta` columns.
fn wide_table(results: &[ModelResult]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["metric".to_string()];
    for r in results {
        for suffix in ["std", "fem", "delta"] {
            header.push(format!("{}_{suffix}", r.model));
        }
    }
    let metrics: [(&str, fn(&Kpis) -> f64); 3] = [("rmse", |k| k.rmse), ("mae", |k| k.mae), ("mbe", |k| k.mbe)];
    let rows = metrics
        .iter()
        .map(|(name, get)| {
            let mut row = vec![name.to_string()];
            for r in results {
                let (s, f) = (get(&r.kpis.static_), get(&r.kpis.fem));
                row.extend([s, f, f - s].map(|v| v.to_string()));
            }
            row
        })
        .collect();
    (header, rows)
}

pub fn cmd_run(config_path: &Path, out: &Path, overrides: &Overrides) -> Result<RunOutput> {
    let p = prepare(config_path, overrides)?;
    let cfg = &p.cfg;
    let id = cfg.dataset_id.as_str();
    let pipe = &p.pipeline;
    let mut warnings = pipe.train_fit.warnings.clone();
    let runs = run_models(pipe, &cfg.models, &mut warnings)?;
    let g_min = cfg.fem.daytime_g_min;
    let test = &pipe.test;
    let dt = test.step_s() as f64;

    let mut results = Vec::new();
    let mut reports = Vec::new();
    for run in &runs {
        let kpis = evaluate_variants(&run.test, test, g_min)?;
        for (variant, k) in [(Variant::Static, kpis.static_), (Variant::Ewm, kpis.ewm), (Variant::Fem, kpis.fem)] {
            reports.push(KpiReport {
                dataset_id: id.to_string(),
                model: run.model.to_string(),
                variant: variant.to_string(),
                kpis: k,
            });
        }
        let mut energy = Vec::new();
        for (variant, pred) in variants(run) {
            energy.push((variant, energy_error(pred, test.t_over(), test.g_poa(), cfg.gamma, dt, cfg.h_y)?));
        }
        results.push(ModelResult {
            model: run.model,
            kpis,
            energy,
            mbe_train: run.mbe_train,
        });
    }

    let mut dir = OutDir::create(out)?;
    let kpi_rows: Vec<KpiRow> = reports
        .iter()
        .map(|r| KpiRow {
            dataset_id: &r.dataset_id,
            model: &r.model,
            variant: &r.variant,
            rmse: r.kpis.rmse,
            mae: r.kpis.mae,
            mbe: r.kpis.mbe,
            n_rows: r.kpis.n_rows,
        })
        .collect();
    dir.write_rows("kpis.csv", &kpi_rows)?;
    let (header, rows) = wide_table(&results);
    let path = dir.file("kpis_wide.csv");
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    let energy_rows: Vec<EnergyRow> = results
        .iter()
        .flat_map(|r| {
            r.energy.iter().map(|(v, e)| EnergyRow {
                model: r.model,
                variant: *v,
                total: e.total,
                over: e.over,
                under: e.under,
                naive: e.naive,
                mae: e.mae,
                pr_approx: e.pr_approx,
                pr_exact: e.pr_exact,
                total_approx: e.total_approx,
                gamma: e.gamma,
                h_y: e.h_y,
            })
        })
        .collect();
    dir.write_rows("energy.csv", &energy_rows)?;
    if !cfg.baseline_delays_s.is_empty() {
        let k = delayed_sensor_baseline(test.t_over(), test.g_poa(), &cfg.baseline_delays_s, test.step_s(), g_min)?;
        let rows: Vec<BaselineRow> = cfg
            .baseline_delays_s
            .iter()
            .zip(k)
            .map(|(&delay_s, k)| BaselineRow {
                delay_s,
                rmse: k.rmse,
                mae: k.mae,
                mbe: k.mbe,
                n_rows: k.n_rows,
            })
            .collect();
        dir.write_rows("baseline.csv", &rows)?;
    }
    if cfg.emit_plot_data {
        for run in &runs {
            let rows: Vec<PlotRow> = test
                .valid_indices()
                .map(|i| PlotRow {
                    timestamp: test.grid().timestamp(i).format("%Y-%m-%d %H:%M:%S").to_string(),
                    g_poa: test.g_poa()[i],
                    ws: test.ws()[i],
                    t_over: test.t_over()[i],
                    r#static: run.test.static_[i],
                    ewm: run.test.ewm[i],
                    fem: run.test.fem[i],
                })
                .collect();
            dir.write_rows(&format!("plot_{}.csv", run.model), &rows)?;
        }
    }

    let mut text = format!("{id}: tau {:.0} s, test rows {}", pipe.train_fit.ewm.tau_s, test.valid_len());
    for r in &results {
        let k = &r.kpis;
        text.push_str(&format!(
            "\n  {:<6} RMSE static {:.3} ewm {:.3} fem {:.3} K ({:+.1} %), FEM MBE {:+.3} K",
            r.model.to_string(),
            k.static_.rmse,
            k.ewm.rmse,
            k.fem.rmse,
            k.delta_rmse_pct,
            k.fem.mbe
        ));
    }
    let details = RunDetails {
        dataset_id: id,
        dropped_rows: p.dropped_rows,
        tau_s: pipe.train_fit.ewm.tau_s,
        results: &results,
        coefficients: runs.iter().map(|r| &r.fitted.coefficients).collect(),
    };
    let outcome = dir.finish("run", config_hash(cfg)?, text, &warnings, details)?;
    Ok(RunOutput {
        results,
        reports,
        outcome,
    })
}
