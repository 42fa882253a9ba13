//! Measured weather/temperature series on a uniform time grid.
//!
//! Every series lives on a grid `start + i * step`. Missing samples are stored
//! as `NaN` so that gaps never turn into irregular steps; a row is *valid*
//! when all of its required channels are finite.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time axis shared by all channels of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    start: NaiveDateTime,
    step_s: i64,
    len: usize,
}

impl TimeGrid {
    pub fn new(start: NaiveDateTime, step_s: i64, len: usize) -> Result<Self> {
        if step_s <= 0 {
            return Err(Error::invalid(format!("time step must be positive, got {step_s}")));
        }
        Ok(Self { start, step_s, len })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Sampling interval in seconds.
    pub fn step_s(&self) -> i64 {
        self.step_s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + chrono::Duration::seconds(self.step_s * i as i64)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        (0..self.len).map(move |i| self.timestamp(i))
    }

    /// Seconds since the Unix epoch of the naive (file-local) timestamp.
    fn epoch(&self, i: usize) -> i64 {
        self.start.and_utc().timestamp() + self.step_s * i as i64
    }

    /// Total covered duration in seconds, first to last sample.
    pub fn span_s(&self) -> i64 {
        if self.len == 0 {
            0
        } else {
            self.step_s * (self.len as i64 - 1)
        }
    }

    fn sliced(&self, from: usize, to: usize) -> Self {
        Self {
            start: self.timestamp(from),
            step_s: self.step_s,
            len: to - from,
        }
    }
}

fn check_window(step_s: i64, window_s: i64) -> Result<usize> {
    if window_s <= 0 || window_s % step_s != 0 {
        return Err(Error::invalid(format!(
            "resample window {window_s} s is not a positive multiple of the {step_s} s step"
        )));
    }
    Ok((window_s / step_s) as usize)
}

/// Window-aligned mean of one channel. Returns the new grid and the means.
fn resample_channels(grid: &TimeGrid, window_s: i64, channels: &[&[f64]]) -> Result<(TimeGrid, Vec<Vec<f64>>)> {
    check_window(grid.step_s, window_s)?;
    if grid.is_empty() {
        let g = TimeGrid::new(grid.start, window_s, 0)?;
        return Ok((g, channels.iter().map(|_| Vec::new()).collect()));
    }
    let first = grid.epoch(0);
    let base = first.div_euclid(window_s) * window_s;
    let last = grid.epoch(grid.len - 1);
    let out_len = ((last - base) / window_s + 1) as usize;
    let start = DateTime::from_timestamp(base, 0)
        .ok_or_else(|| Error::Timestamp(base.to_string()))?
        .naive_utc();
    let out_grid = TimeGrid::new(start, window_s, out_len)?;

    let mut out = Vec::with_capacity(channels.len());
    for ch in channels {
        let mut sum = vec![0.0; out_len];
        let mut n = vec![0usize; out_len];
        for (i, &v) in ch.iter().enumerate() {
            if v.is_finite() {
                let j = ((grid.epoch(i) - base) / window_s) as usize;
                sum[j] += v;
                n[j] += 1;
            }
        }
        out.push(
            sum.into_iter()
                .zip(n)
                .map(|(s, n)| if n == 0 { f64::NAN } else { s / n as f64 })
                .collect(),
        );
    }
    Ok((out_grid, out))
}

/// Plane-of-array irradiance, ambient and module temperature and wind speed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    site_id: String,
    grid: TimeGrid,
    g_poa: Vec<f64>,
    t_ambient: Vec<f64>,
    t_module: Vec<f64>,
    ws: Vec<f64>,
    wind_direction: Option<Vec<f64>>,
    rel_humidity: Option<Vec<f64>>,
}

impl WeatherSeries {
    /// Builds a series from equal-length channels. `NaN` marks a missing value.
    pub fn new(
        site_id: impl Into<String>,
        start: NaiveDateTime,
        step_s: i64,
        g_poa: Vec<f64>,
        t_ambient: Vec<f64>,
        t_module: Vec<f64>,
        ws: Vec<f64>,
    ) -> Result<Self> {
        let n = g_poa.len();
        if t_ambient.len() != n || t_module.len() != n || ws.len() != n {
            return Err(Error::invalid("channel lengths differ"));
        }
        if g_poa.iter().any(|&g| g < 0.0) {
            return Err(Error::invalid("negative irradiance"));
        }
        if ws.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("negative wind speed"));
        }
        Ok(Self {
            site_id: site_id.into(),
            grid: TimeGrid::new(start, step_s, n)?,
            g_poa,
            t_ambient,
            t_module,
            ws,
            wind_direction: None,
            rel_humidity: None,
        })
    }

    pub fn with_wind_direction(mut self, wd: Vec<f64>) -> Result<Self> {
        if wd.len() != self.len() {
            return Err(Error::invalid("wind direction length differs"));
        }
        self.wind_direction = Some(wd);
        Ok(self)
    }

    pub fn with_rel_humidity(mut self, rh: Vec<f64>) -> Result<Self> {
        if rh.len() != self.len() {
            return Err(Error::invalid("relative humidity length differs"));
        }
        self.rel_humidity = Some(rh);
        Ok(self)
    }

    pub fn site_id(&self) -> &str {
        &self.site_id
    }
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn step_s(&self) -> i64 {
        self.grid.step_s
    }
    pub fn len(&self) -> usize {
        self.grid.len
    }
    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }
    pub fn g_poa(&self) -> &[f64] {
        &self.g_poa
    }
    pub fn t_ambient(&self) -> &[f64] {
        &self.t_ambient
    }
    pub fn t_module(&self) -> &[f64] {
        &self.t_module
    }
    pub fn ws(&self) -> &[f64] {
        &self.ws
    }
    pub fn wind_direction(&self) -> Option<&[f64]> {
        self.wind_direction.as_deref()
    }
    pub fn rel_humidity(&self) -> Option<&[f64]> {
        self.rel_humidity.as_deref()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.g_poa[i].is_finite()
            && self.t_ambient[i].is_finite()
            && self.t_module[i].is_finite()
            && self.ws[i].is_finite()
    }

    /// Number of rows with all required channels present.
    pub fn valid_len(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Per-channel mean over clock-aligned windows of `window_s` seconds.
    pub fn resample_mean(&self, window_s: i64) -> Result<Self> {
        let mut chans: Vec<&[f64]> = vec![&self.g_poa, &self.t_ambient, &self.t_module, &self.ws];
        if let Some(wd) = &self.wind_direction {
            chans.push(wd);
        }
        if let Some(rh) = &self.rel_humidity {
            chans.push(rh);
        }
        let (grid, mut out) = resample_channels(&self.grid, window_s, &chans)?;
        let rh = self.rel_humidity.as_ref().map(|_| out.pop().unwrap());
        let wd = self.wind_direction.as_ref().map(|_| out.pop().unwrap());
        let ws = out.pop().unwrap();
        let t_module = out.pop().unwrap();
        let t_ambient = out.pop().unwrap();
        let g_poa = out.pop().unwrap();
        Ok(Self {
            site_id: self.site_id.clone(),
            grid,
            g_poa,
            t_ambient,
            t_module,
            ws,
            wind_direction: wd,
            rel_humidity: rh,
        })
    }

    /// Copy with every row where `keep` is false set to missing, trimmed of
    /// leading and trailing missing rows.
    fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mask = |v: &Vec<f64>| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(i, &x)| if keep(i) { x } else { f64::NAN })
                .collect()
        };
        let out = Self {
            site_id: self.site_id.clone(),
            grid: self.grid,
            g_poa: mask(&self.g_poa),
            t_ambient: mask(&self.t_ambient),
            t_module: mask(&self.t_module),
            ws: mask(&self.ws),
            wind_direction: self.wind_direction.as_ref().map(mask),
            rel_humidity: self.rel_humidity.as_ref().map(mask),
        };
        out.trimmed()
    }

    /// Drops leading and trailing rows that are not valid.
    pub fn trimmed(&self) -> Self {
        let first = (0..self.len()).find(|&i| self.is_valid(i));
        let Some(first) = first else {
            return self.slice(0, 0);
        };
        let last = (0..self.len()).rev().find(|&i| self.is_valid(i)).unwrap();
        self.slice(first, last + 1)
    }

    fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            site_id: self.site_id.clone(),
            grid: self.grid.sliced(from, to),
            g_poa: self.g_poa[from..to].to_vec(),
            t_ambient: self.t_ambient[from..to].to_vec(),
            t_module: self.t_module[from..to].to_vec(),
            ws: self.ws[from..to].to_vec(),
            wind_direction: self.wind_direction.as_ref().map(|v| v[from..to].to_vec()),
            rel_humidity: self.rel_humidity.as_ref().map(|v| v[from..to].to_vec()),
        }
    }

    /// Sample standard deviation of wind speed over valid rows with `G > g_min`.
    pub fn ws_std(&self, g_min: f64) -> Option<f64> {
        let vals: Vec<f64> = (0..self.len())
            .filter(|&i| self.is_valid(i) && self.g_poa[i] > g_min)
            .map(|i| self.ws[i])
            .collect();
        sample_std(&vals)
    }

    /// Total irradiation over valid rows in kWh/m².
    pub fn irradiation_kwh_m2(&self) -> f64 {
        let hours = self.step_s() as f64 / 3600.0;
        self.g_poa.iter().filter(|g| g.is_finite()).sum::<f64>() * hours / 1000.0
    }
}

pub(crate) fn sample_std(vals: &[f64]) -> Option<f64> {
    if vals.len() < 2 {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(var.sqrt())
}

/// Module over-temperature `T_m - T_a` alongside the driving signals.
#[derive(Debug, Clone, PartialEq)]
pub struct OverTempSeries {
    grid: TimeGrid,
    t_over: Vec<f64>,
    g_poa: Vec<f64>,
    ws: Vec<f64>,
}

impl OverTempSeries {
    pub fn new(start: NaiveDateTime, step_s: i64, t_over: Vec<f64>, g_poa: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if g_poa.len() != t_over.len() || ws.len() != t_over.len() {
            return Err(Error::invalid("channel lengths differ"));
        }
        Ok(Self {
            grid: TimeGrid::new(start, step_s, t_over.len())?,
            t_over,
            g_poa,
            ws,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn step_s(&self) -> i64 {
        self.grid.step_s
    }
    pub fn len(&self) -> usize {
        self.grid.len
    }
    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }
    pub fn t_over(&self) -> &[f64] {
        &self.t_over
    }
    pub fn g_poa(&self) -> &[f64] {
        &self.g_poa
    }
    pub fn ws(&self) -> &[f64] {
        &self.ws
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.t_over[i].is_finite() && self.g_poa[i].is_finite() && self.ws[i].is_finite()
    }

    pub fn valid_len(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Indices of valid rows, in time order.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_valid(i))
    }

    pub fn resample_mean(&self, window_s: i64) -> Result<Self> {
        let (grid, mut out) = resample_channels(&self.grid, window_s, &[&self.t_over, &self.g_poa, &self.ws])?;
        let ws = out.pop().unwrap();
        let g_poa = out.pop().unwrap();
        let t_over = out.pop().unwrap();
        Ok(Self { grid, t_over, g_poa, ws })
    }

    /// Keeps the grid but marks every row where `keep` is false as missing.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mask = |v: &Vec<f64>| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(i, &x)| if keep(i) { x } else { f64::NAN })
                .collect()
        };
        Self {
            grid: self.grid,
            t_over: mask(&self.t_over),
            g_poa: mask(&self.g_poa),
            ws: mask(&self.ws),
        }
    }
}

/// `T_o = T_m - T_a` row by row; missing parents give a missing result.
pub fn over_temperature(s: &WeatherSeries) -> OverTempSeries {
    let t_over = s
        .t_module
        .iter()
        .zip(&s.t_ambient)
        .map(|(tm, ta)| tm - ta)
        .collect();
    OverTempSeries {
        grid: s.grid,
        t_over,
        g_poa: s.g_poa.clone(),
        ws: s.ws.clone(),
    }
}

/// Row-selection thresholds used before regressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Rows need `G > g_min` (W/m²).
    pub g_min: f64,
    pub ws_min: f64,
    pub ws_max: f64,
    /// Maximum wind-speed change against the preceding sample (m/s).
    #[serde(default)]
    pub max_ws_variation: Option<f64>,
    /// Averaging window applied before filtering (s).
    pub resample_window_s: i64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            g_min: 200.0,
            ws_min: 0.0,
            ws_max: 8.0,
            max_ws_variation: None,
            resample_window_s: 300,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_min >= 0.0) {
            return Err(Error::invalid("g_min must be >= 0"));
        }
        if !(self.ws_min < self.ws_max) {
            return Err(Error::invalid("ws_min must be < ws_max"));
        }
        if self.resample_window_s <= 0 {
            return Err(Error::invalid("resample window must be positive"));
        }
        if let Some(v) = self.max_ws_variation {
            if !(v > 0.0) {
                return Err(Error::invalid("max_ws_variation must be > 0"));
            }
        }
        Ok(())
    }

    pub fn validate_for_step(&self, step_s: i64) -> Result<()> {
        self.validate()?;
        check_window(step_s, self.resample_window_s).map(|_| ())
    }
}

/// Keeps rows with `G > g_min`, `ws_min <= WS <= ws_max` and, when configured,
/// a wind change against the preceding sample below `max_ws_variation`.
///
/// Rejected rows become missing; the time grid is unchanged.
pub fn filter_rows(s: &OverTempSeries, spec: &FilterSpec) -> OverTempSeries {
    let keep = |i: usize| -> bool {
        if !s.is_valid(i) {
            return false;
        }
        let ws = s.ws[i];
        if !(s.g_poa[i] > spec.g_min && ws >= spec.ws_min && ws <= spec.ws_max) {
            return false;
        }
        match spec.max_ws_variation {
            None => true,
            Some(max_dv) => i > 0 && s.ws[i - 1].is_finite() && (ws - s.ws[i - 1]).abs() < max_dv,
        }
    };
    s.masked(keep)
}

/// Weekday rows for fitting, weekend rows for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSeries {
    pub train: WeatherSeries,
    pub test: WeatherSeries,
}

impl SplitSeries {
    /// Recombines both halves on the source grid.
    pub fn merge(&self) -> Result<WeatherSeries> {
        let (a, b) = (&self.train, &self.test);
        if a.step_s() != b.step_s() {
            return Err(Error::invalid("halves use different steps"));
        }
        let step = a.step_s();
        let start = a.grid.start.min(b.grid.start);
        let end = a.grid.timestamp(a.len().saturating_sub(1)).max(b.grid.timestamp(b.len().saturating_sub(1)));
        let len = ((end - start).num_seconds() / step + 1) as usize;
        let mut out = WeatherSeries {
            site_id: a.site_id.clone(),
            grid: TimeGrid::new(start, step, len)?,
            g_poa: vec![f64::NAN; len],
            t_ambient: vec![f64::NAN; len],
            t_module: vec![f64::NAN; len],
            ws: vec![f64::NAN; len],
            wind_direction: None,
            rel_humidity: None,
        };
        for half in [a, b] {
            let off = ((half.grid.start - start).num_seconds() / step) as usize;
            for i in (0..half.len()).filter(|&i| half.is_valid(i)) {
                out.g_poa[off + i] = half.g_poa[i];
                out.t_ambient[off + i] = half.t_ambient[i];
                out.t_module[off + i] = half.t_module[i];
                out.ws[off + i] = half.ws[i];
            }
        }
        Ok(out)
    }
}

pub fn is_weekend(ts: &NaiveDateTime) -> bool {
    matches!(ts.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Splits by calendar day of week of the (file-local) timestamp.
pub fn split_weekday_weekend(s: &WeatherSeries) -> Result<SplitSeries> {
    let weekend: Vec<bool> = s.grid.timestamps().map(|t| is_weekend(&t)).collect();
    let train = s.masked(|i| !weekend[i]);
    let test = s.masked(|i| weekend[i]);
    if train.valid_len() == 0 {
        return Err(Error::EmptySplit("train"));
    }
    if test.valid_len() == 0 {
        return Err(Error::EmptySplit("test"));
    }
    Ok(SplitSeries { train, test })
}

/// Quantile of valid wind speeds, linear interpolation between order statistics.
pub fn ws_quantile(s: &WeatherSeries, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile {q} outside [0, 1]")));
    }
    let mut v: Vec<f64> = s.ws.iter().copied().filter(|w| w.is_finite()).collect();
    if v.is_empty() {
        return Err(Error::EmptySeries);
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Maps logical channels onto the header names of an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp: String,
    pub g_poa: String,
    pub t_ambient: String,
    pub t_module: String,
    pub ws: String,
    #[serde(default)]
    pub wind_direction: Option<String>,
    #[serde(default)]
    pub rel_humidity: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            g_poa: "g_poa".into(),
            t_ambient: "t_ambient".into(),
            t_module: "t_module".into(),
            ws: "ws".into(),
            wind_direction: None,
            rel_humidity: None,
        }
    }
}

/// Result of [`load_csv`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub series: WeatherSeries,
    /// Rows removed for unparseable or out-of-range values.
    pub dropped: usize,
}

const G_RANGE: (f64, f64) = (0.0, 2000.0);
const T_RANGE: (f64, f64) = (-60.0, 100.0);
const WS_RANGE: (f64, f64) = (0.0, 75.0);

/// Parses ISO-8601 (with or without offset) or epoch seconds. Offsets are
/// discarded; the wall-clock time in the file is kept as-is.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return DateTime::from_timestamp(secs, 0)
            .map(|d| d.naive_utc())
            .ok_or_else(|| Error::Timestamp(s.into()));
    }
    if let Ok(secs) = s.parse::<f64>() {
        if secs.is_finite() {
            return DateTime::from_timestamp(secs.round() as i64, 0)
                .map(|d| d.naive_utc())
                .ok_or_else(|| Error::Timestamp(s.into()));
        }
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.naive_local());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%:z", "%Y-%m-%d %H:%M:%S%.f%:z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Ok(dt.naive_local());
        }
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt);
        }
    }
    Err(Error::Timestamp(s.into()))
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v.is_finite() && v >= lo && v <= hi
}

/// Reads a comma- or tab-delimited file with a header row.
///
/// Rows with unparseable or out-of-range values are dropped and counted;
/// they appear as missing rows on the resulting grid.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnMap, step_expected_s: i64, site_id: &str) -> Result<Loaded> {
    if step_expected_s <= 0 {
        return Err(Error::invalid("expected step must be positive"));
    }
    let path = path.as_ref();
    let mut first_line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first_line)?;
    let delimiter = if first_line.contains('\t') { b'\t' } else { b',' };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let headers: HashMap<String, usize> = rdr
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let opt_col = |name: &Option<String>| -> Result<Option<usize>> { name.as_deref().map(col).transpose() };
    let i_ts = col(&schema.timestamp)?;
    let i_g = col(&schema.g_poa)?;
    let i_ta = col(&schema.t_ambient)?;
    let i_tm = col(&schema.t_module)?;
    let i_ws = col(&schema.ws)?;
    let i_wd = opt_col(&schema.wind_direction)?;
    let i_rh = opt_col(&schema.rel_humidity)?;

    struct Row {
        t: i64,
        vals: Option<[f64; 6]>,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut dropped = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN);
        let Some(t) = rec.get(i_ts).and_then(|s| parse_timestamp(s).ok()) else {
            dropped += 1;
            continue;
        };
        let (g, ta, tm, ws) = (field(i_g), field(i_ta), field(i_tm), field(i_ws));
        let wd = i_wd.map(field).unwrap_or(f64::NAN);
        let rh = i_rh.map(field).unwrap_or(f64::NAN);
        let ok = in_range(g, G_RANGE)
            && in_range(ta, T_RANGE)
            && in_range(tm, T_RANGE)
            && in_range(ws, WS_RANGE)
            && (i_wd.is_none() || in_range(wd, (0.0, 360.0)))
            && (i_rh.is_none() || in_range(rh, (0.0, 100.0)));
        if !ok {
            dropped += 1;
        }
        rows.push(Row {
            t: t.and_utc().timestamp(),
            vals: ok.then_some([g, ta, tm, ws, wd, rh]),
        });
    }

    let mut min_step = i64::MAX;
    for w in rows.windows(2) {
        let d = w[1].t - w[0].t;
        if d <= 0 {
            return Err(Error::invalid(format!("timestamps not strictly increasing at epoch {}", w[1].t)));
        }
        if d % step_expected_s != 0 {
            return Err(Error::StepMismatch {
                detected: d,
                expected: step_expected_s,
            });
        }
        min_step = min_step.min(d);
    }
    if min_step != i64::MAX && min_step != step_expected_s {
        return Err(Error::StepMismatch {
            detected: min_step,
            expected: step_expected_s,
        });
    }

    let valid: Vec<&Row> = rows.iter().filter(|r| r.vals.is_some()).collect();
    let (Some(first), Some(last)) = (valid.first(), valid.last()) else {
        return Err(Error::NoRows { dropped });
    };
    let len = ((last.t - first.t) / step_expected_s + 1) as usize;
    let mut ch = vec![vec![f64::NAN; len]; 6];
    for r in &valid {
        let j = ((r.t - first.t) / step_expected_s) as usize;
        for (c, v) in ch.iter_mut().zip(r.vals.unwrap()) {
            c[j] = v;
        }
    }
    let start = DateTime::from_timestamp(first.t, 0)
        .ok_or_else(|| Error::Timestamp(first.t.to_string()))?
        .naive_utc();
    let rh = ch.pop().unwrap();
    let wd = ch.pop().unwrap();
    let ws = ch.pop().unwrap();
    let tm = ch.pop().unwrap();
    let ta = ch.pop().unwrap();
    let g = ch.pop().unwrap();
    let mut series = WeatherSeries::new(site_id, start, step_expected_s, g, ta, tm, ws)?;
    if i_wd.is_some() {
        series = series.with_wind_direction(wd)?;
    }
    if i_rh.is_some() {
        series = series.with_rel_humidity(rh)?;
    }
    Ok(Loaded { series, dropped })
}

/// Writes the valid rows of `s` in the default [`ColumnMap`] layout, readable
/// by [`load_csv`]. Values use the shortest representation that round-trips.
pub fn write_csv(s: &WeatherSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let cols = ColumnMap::default();
    w.write_record([&cols.timestamp, &cols.g_poa, &cols.t_ambient, &cols.t_module, &cols.ws])?;
    for i in (0..s.len()).filter(|&i| s.is_valid(i)) {
        w.write_record([
            s.grid.timestamp(i).format("%Y-%m-%d %H:%M:%S").to_string(),
            s.g_poa[i].to_string(),
            s.t_ambient[i].to_string(),
            s.t_module[i].to_string(),
            s.ws[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use std::io::Write;

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2016, 6, 6).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn series(g: Vec<f64>, step: i64) -> WeatherSeries {
        let n = g.len();
        WeatherSeries::new("t", t0(), step, g, vec![20.0; n], vec![40.0; n], vec![1.0; n]).unwrap()
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "timestamp,g_poa,t_ambient,t_module,ws\n";

    #[test]
    fn load_four_rows() {
        let f = write(&format!(
            "{HEADER}2016-06-06T12:00:00,800,20,45,1\n2016-06-06T12:01:00,810,20,45,1\n2016-06-06T12:02:00,820,20,45,1\n2016-06-06T12:03:00,830,20,45,1\n"
        ));
        let l = load_csv(f.path(), &ColumnMap::default(), 60, "s").unwrap();
        assert_eq!(l.series.len(), 4);
        assert_eq!(l.series.step_s(), 60);
        assert_eq!(l.dropped, 0);
    }

    #[test]
    fn load_drops_negative_wind() {
        let f = write(&format!(
            "{HEADER}0,800,20,45,1\n60,810,20,45,1\n120,820,20,45,1\n180,830,20,45,-1\n"
        ));
        let l = load_csv(f.path(), &ColumnMap::default(), 60, "s").unwrap();
        assert_eq!(l.series.len(), 3);
        assert_eq!(l.dropped, 1);

        let f = write(&format!(
            "{HEADER}0,800,20,45,1\n60,810,20,45,-1\n120,820,20,45,1\n180,830,20,45,1\n"
        ));
        let l = load_csv(f.path(), &ColumnMap::default(), 60, "s").unwrap();
        assert_eq!(l.series.valid_len(), 3);
        assert_eq!(l.dropped, 1);
        assert!(l.series.g_poa()[1].is_nan());
    }

    #[test]
    fn load_tab_delimited_ten_second() {
        let f = write("timestamp\tg_poa\tt_ambient\tt_module\tws\n0\t500\t10\t20\t2\n10\t500\t10\t20\t2\n30\t500\t10\t20\t2\n");
        let l = load_csv(f.path(), &ColumnMap::default(), 10, "nist").unwrap();
        assert_eq!(l.series.step_s(), 10);
        assert_eq!(l.series.len(), 4);
        assert_eq!(l.series.valid_len(), 3);
    }

    #[test]
    fn load_errors() {
        let f = write("timestamp,g_poa,t_ambient,ws\n0,1,2,3\n");
        assert!(matches!(
            load_csv(f.path(), &ColumnMap::default(), 60, "s"),
            Err(Error::MissingColumn(c)) if c == "t_module"
        ));
        let f = write(&format!("{HEADER}0,-5,20,45,1\n"));
        assert!(matches!(load_csv(f.path(), &ColumnMap::default(), 60, "s"), Err(Error::NoRows { dropped: 1 })));
        let f = write(&format!("{HEADER}0,5,20,45,1\n30,5,20,45,1\n"));
        assert!(matches!(
            load_csv(f.path(), &ColumnMap::default(), 60, "s"),
            Err(Error::StepMismatch { detected: 30, expected: 60 })
        ));
        let f = write(&format!("{HEADER}0,5,20,45,1\n120,5,20,45,1\n"));
        assert!(matches!(load_csv(f.path(), &ColumnMap::default(), 60, "s"), Err(Error::StepMismatch { .. })));
    }

    #[test]
    fn timestamps_keep_wall_clock() {
        let a = parse_timestamp("2016-06-06T12:00:00+02:00").unwrap();
        assert_eq!(a, t0() + chrono::Duration::hours(12));
        assert_eq!(parse_timestamp("2016-06-06 12:00:00").unwrap(), a);
        assert!(parse_timestamp("noon").is_err());
    }

    #[test]
    fn resample_constant_and_lengths() {
        let s = series(vec![500.0; 1000], 1);
        let r = s.resample_mean(300).unwrap();
        assert_eq!(r.len(), 1000usize.div_ceil(300));
        assert!(r.g_poa().iter().all(|&g| g == 500.0));
        assert_eq!(r.step_s(), 300);
    }

    #[test]
    fn resample_two_sample_mean() {
        let s = series(vec![0.0, 1000.0], 60);
        let r = s.resample_mean(120).unwrap();
        assert_eq!(r.g_poa(), &[500.0]);
    }

    #[test]
    fn resample_rejects_bad_window() {
        let s = series(vec![0.0; 10], 60);
        assert!(s.resample_mean(90).is_err());
        assert!(s.resample_mean(0).is_err());
    }

    #[test]
    fn resample_empty_window_is_missing() {
        let s = series(vec![1.0, 1.0, f64::NAN, f64::NAN, 3.0, 5.0], 60);
        let r = s.resample_mean(120).unwrap();
        assert_eq!(r.g_poa()[0], 1.0);
        assert!(r.g_poa()[1].is_nan());
        assert_eq!(r.g_poa()[2], 4.0);
    }

    #[test]
    fn over_temperature_cases() {
        let s = WeatherSeries::new("t", t0(), 60, vec![0.0; 3], vec![20.0, 30.0, 10.0], vec![45.0, 30.0, 8.0], vec![0.0; 3]).unwrap();
        assert_eq!(over_temperature(&s).t_over(), &[25.0, 0.0, -2.0]);
    }

    #[test]
    fn split_one_week() {
        // 2016-06-06 is a Monday.
        let s = series(vec![100.0; 7 * 24], 3600);
        let sp = split_weekday_weekend(&s).unwrap();
        assert_eq!(sp.train.valid_len(), 5 * 24);
        assert_eq!(sp.test.valid_len(), 2 * 24);
    }

    #[test]
    fn split_all_saturday_fails() {
        let sat = NaiveDate::from_ymd_opt(2016, 6, 11).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = WeatherSeries::new("t", sat, 3600, vec![1.0; 24], vec![1.0; 24], vec![1.0; 24], vec![1.0; 24]).unwrap();
        assert!(matches!(split_weekday_weekend(&s), Err(Error::EmptySplit("train"))));
    }

    #[test]
    fn split_full_year_ratio() {
        // 2017 has 260 weekdays and 105 weekend days.
        let start = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let mut weekdays = 0;
        let mut d = start.date();
        for _ in 0..365 {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                weekdays += 1;
            }
            d = d.succ_opt().unwrap();
        }
        let n = 365 * 24;
        let s = WeatherSeries::new("t", start, 3600, vec![1.0; n], vec![1.0; n], vec![1.0; n], vec![1.0; n]).unwrap();
        let sp = split_weekday_weekend(&s).unwrap();
        assert_eq!(sp.train.valid_len(), weekdays * 24);
        assert_eq!(sp.test.valid_len(), (365 - weekdays) * 24);
        let ratio = sp.train.valid_len() as f64 / sp.test.valid_len() as f64;
        assert!((ratio - 2.5).abs() < 0.05);
    }

    #[test]
    fn filter_cases() {
        let ot = OverTempSeries::new(
            t0(),
            300,
            vec![10.0, 12.0, 15.0, 0.0, 20.0],
            vec![500.0, 600.0, 700.0, 0.0, 800.0],
            vec![0.2, 3.0, 0.4, 0.1, 0.45],
        )
        .unwrap();
        let calm = FilterSpec {
            g_min: 0.0,
            ws_max: 0.5,
            ..Default::default()
        };
        let f = filter_rows(&ot, &calm);
        assert_eq!(f.valid_indices().collect::<Vec<_>>(), vec![0, 2, 4]);
        let day = FilterSpec {
            g_min: 200.0,
            ..Default::default()
        };
        assert!(filter_rows(&ot, &day).valid_indices().all(|i| ot.g_poa()[i] > 200.0));
        let empty = OverTempSeries::new(t0(), 300, vec![], vec![], vec![]).unwrap();
        assert_eq!(filter_rows(&empty, &day).valid_len(), 0);
    }

    #[test]
    fn filter_wind_variation() {
        let ot = OverTempSeries::new(t0(), 300, vec![1.0; 4], vec![500.0; 4], vec![1.0, 1.1, 3.0, 3.05]).unwrap();
        let spec = FilterSpec {
            max_ws_variation: Some(0.5),
            ..Default::default()
        };
        assert_eq!(filter_rows(&ot, &spec).valid_indices().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn filter_spec_validation() {
        assert!(FilterSpec::default().validate_for_step(60).is_ok());
        assert!(FilterSpec::default().validate_for_step(7).is_err());
        let bad = FilterSpec {
            ws_min: 5.0,
            ws_max: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quantiles() {
        let s = WeatherSeries::new("t", t0(), 60, vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(ws_quantile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(ws_quantile(&s, 0.5).unwrap(), 2.0);
        assert_eq!(ws_quantile(&s, 0.75).unwrap(), 2.5);
        assert!(ws_quantile(&s, 1.5).is_err());
        let e = WeatherSeries::new("t", t0(), 60, vec![], vec![], vec![], vec![]).unwrap();
        assert!(matches!(ws_quantile(&e, 0.5), Err(Error::EmptySeries)));
    }
}
