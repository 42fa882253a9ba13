//! `synth`: synthetic datasets with known coefficients.

use std::path::{Path, PathBuf};

use anyhow::Result;
use femtherm::synth::{generate, SynthSpec};
use femtherm::timeseries::{write_csv, WeatherSeries};
use serde::Serialize;

use crate::config::{self, ConfigError, Overrides};
use crate::report::{config_hash, OutDir, Outcome};

pub struct SynthOutput {
    pub series: WeatherSeries,
    pub data_path: PathBuf,
    pub spec: SynthSpec,
    pub outcome: Outcome,
}

#[derive(Serialize)]
struct SynthDetails<'a> {
    /// Generator settings, including the true coefficients and time constant.
    truth: &'a SynthSpec,
    rows: usize,
    data_file: String,
}

pub fn cmd_synth(config_path: &Path, out: &Path, overrides: &Overrides) -> Result<SynthOutput> {
    let (mut spec, _) = config::load::<SynthSpec>(config_path)?;
    if let Some(seed) = overrides.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| ConfigError(e.to_string()))?;
    let series = generate(&spec)?;

    let mut dir = OutDir::create(out)?;
    let name = format!("{}.csv", spec.site_id);
    let data_path = dir.file(&name);
    write_csv(&series, &data_path)?;
    let text = format!(
        "{}: {} rows at {} s from {:?} (tau {} s, noise {} K, bias {} K, seed {})",
        spec.site_id,
        series.len(),
        spec.step_s,
        spec.model,
        spec.tau_s,
        spec.noise_sigma,
        spec.bias,
        spec.seed
    );
    let details = SynthDetails {
        truth: &spec,
        rows: series.len(),
        data_file: name,
    };
    let outcome = dir.finish("synth", config_hash(&spec)?, text, &[], details)?;
    Ok(SynthOutput {
        series,
        data_path,
        spec,
        outcome,
    })
}
