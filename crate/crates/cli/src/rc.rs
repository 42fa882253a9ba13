//! `rc`: theoretical R, C and time constants of a layer stack.

use std::path::Path;

use anyhow::Result;
use femtherm::rcnet::{stack_summary, LayerSide, PathTotal, RcSummary};
use serde::Serialize;

use crate::config::{self, StackConfig};
use crate::report::{config_hash, OutDir, Outcome};

#[derive(Debug, Serialize)]
struct LayerOut<'a> {
    name: &'a str,
    side: LayerSide,
    air_film: bool,
    mass_kg: f64,
    r_eq_mk: f64,
    c_eq_kj: f64,
    tau0_s: f64,
}

#[derive(Debug, Serialize)]
struct TotalOut {
    path: &'static str,
    mass_kg: Option<f64>,
    r_eq_mk: f64,
    c_eq_kj: f64,
    tau0_s: f64,
}

fn total(path: &'static str, t: PathTotal, mass: Option<f64>) -> TotalOut {
    TotalOut {
        path,
        mass_kg: mass,
        r_eq_mk: t.r_eq * 1e3,
        c_eq_kj: t.c_eq / 1e3,
        tau0_s: t.tau0,
    }
}

pub struct RcOutput {
    pub summary: RcSummary,
    pub outcome: Outcome,
}

pub fn cmd_rc(config_path: &Path, out: &Path) -> Result<RcOutput> {
    let (cfg, _) = config::load::<StackConfig>(config_path)?;
    let stack = cfg.stack()?;
    let summary = stack_summary(&stack, cfg.include_air)?;

    let mut dir = OutDir::create(out)?;
    let layers: Vec<LayerOut> = summary
        .layers
        .iter()
        .map(|l| LayerOut {
            name: &l.name,
            side: l.side,
            air_film: l.is_air_film,
            mass_kg: l.rc.mass,
            r_eq_mk: l.rc.r_eq * 1e3,
            c_eq_kj: l.rc.c_eq / 1e3,
            tau0_s: l.rc.tau0,
        })
        .collect();
    dir.write_rows("rc_layers.csv", &layers)?;
    let s = &summary;
    let totals = [
        total("front", s.front, None),
        total("back", s.back, None),
        total("front_air", s.front_air, None),
        total("back_air", s.back_air, None),
        total("total", s.total, Some(s.mass)),
        total("total_air", s.total_air, Some(s.mass)),
    ];
    dir.write_rows("rc_totals.csv", &totals)?;

    let overall = summary.overall();
    let text = format!(
        "{} layers, mass {:.2} kg: r_eq {:.2} mK/(W/m²), c_eq {:.1} kJ/(K·m²), tau0 {:.1} s ({} air films)",
        cfg.layers.len(),
        summary.mass,
        overall.r_eq * 1e3,
        overall.c_eq / 1e3,
        overall.tau0,
        if cfg.include_air { "with" } else { "without" },
    );
    let outcome = dir.finish("rc", config_hash(&cfg)?, text, &[], &summary)?;
    Ok(RcOutput { summary, outcome })
}
