//! TOML configuration files for the four commands.

use std::fs;
use std::path::{Path, PathBuf};

use femtherm::fempipe::FemConfig;
use femtherm::models::ModelKind;
use femtherm::rcnet::{LayerSide, LayerSpec, LayerStack};
use femtherm::timeseries::ColumnMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A configuration problem: unreadable or malformed file, bad values.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Parses a TOML file and returns it with the directory relative paths
/// resolve against.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, PathBuf), ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let cfg = toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    pub thickness_mm: f64,
    pub conductivity: f64,
    pub density: f64,
    pub specific_heat: f64,
    pub area: f64,
    #[serde(default)]
    pub side: LayerSide,
}

impl LayerEntry {
    fn spec(&self) -> LayerSpec {
        LayerSpec {
            name: self.name.clone(),
            thickness: self.thickness_mm / 1000.0,
            conductivity: self.conductivity,
            density: self.density,
            specific_heat: self.specific_heat,
            area: self.area,
            side: self.side,
        }
    }
}

/// Layer stack for `rc`. Layers are listed outermost-front to
/// outermost-back; `side` assigns each to a heat path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    #[serde(default = "yes")]
    pub include_air: bool,
    pub front_air_film: LayerEntry,
    pub back_air_film: LayerEntry,
    pub layers: Vec<LayerEntry>,
}

fn yes() -> bool {
    true
}

impl StackConfig {
    pub fn stack(&self) -> Result<LayerStack, ConfigError> {
        if self.layers.is_empty() {
            return Err(ConfigError("stack config lists no layers".into()));
        }
        Ok(LayerStack::from_layers(
            self.layers.iter().map(LayerEntry::spec).collect(),
            self.front_air_film.spec(),
            self.back_air_film.spec(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Delimited input file; relative paths are taken from the config file.
    pub path: PathBuf,
    /// Expected sampling interval (s).
    pub step_s: i64,
    #[serde(default)]
    pub columns: ColumnMap,
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_gamma() -> f64 {
    -0.35
}

/// Shared by `fit` and `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_id: String,
    pub data: DataConfig,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Temperature coefficient of power (%/K).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Yearly irradiation (kWh/m²) for the relative energy figures.
    #[serde(default)]
    pub h_y: Option<f64>,
    /// Sensor delays (s) scored as a baseline by `run`.
    #[serde(default)]
    pub baseline_delays_s: Vec<i64>,
    #[serde(default)]
    pub emit_plot_data: bool,
    #[serde(default)]
    pub fem: FemConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.models.is_empty() {
            return Err(ConfigError("model list is empty".into()));
        }
        if !self.gamma.is_finite() {
            return Err(ConfigError("gamma must be finite".into()));
        }
        self.fem.fit.validate().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn data_path(&self, base: &Path) -> PathBuf {
        if self.data.path.is_absolute() {
            self.data.path.clone()
        } else {
            base.join(&self.data.path)
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub models: Option<Vec<ModelKind>>,
    pub tau_s: Option<f64>,
    pub seed: Option<u64>,
    pub emit_plot_data: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = &self.models {
            cfg.models = m.clone();
        }
        if let Some(t) = self.tau_s {
            cfg.fem.tau_s = Some(t);
        }
        cfg.emit_plot_data |= self.emit_plot_data;
    }
}
