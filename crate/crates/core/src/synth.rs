//! Synthetic weather and module-temperature series with known coefficients.
//!
//! Irradiance follows a clear-sky envelope for a south-facing tilted plane,
//! interrupted by clouds; wind speed is Rayleigh-distributed with slow
//! correlation. The module over-temperature is a static model evaluated on
//! first-order-lagged irradiance and wind speed, plus bias and noise.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Coefficients;
use crate::timeseries::WeatherSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherSpec {
    pub latitude_deg: f64,
    pub tilt_deg: f64,
    /// Probabilities of clear and overcast days; the rest have broken clouds.
    pub p_clear_day: f64,
    pub p_overcast_day: f64,
    /// Mean duration of clear and cloudy spells on broken-cloud days (s).
    pub clear_spell_s: f64,
    pub cloud_spell_s: f64,
    /// Range of the transmittance drawn for each cloud (fraction).
    pub cloud_transmittance: (f64, f64),
    pub overcast_transmittance: f64,
    /// Relative irradiance noise per sample.
    pub g_noise: f64,
    /// Rayleigh scale of the wind speed (m/s).
    pub wind_scale: f64,
    pub wind_correlation_s: f64,
    /// Time constant of the low-pass applied to the wind components before
    /// gusts are added (s); zero leaves them unsmoothed.
    pub wind_smoothing_s: f64,
    /// Per-sample gust noise added to the wind speed (m/s).
    pub gust_sigma: f64,
    pub ta_mean: f64,
    pub ta_seasonal_amplitude: f64,
    pub ta_diurnal_amplitude: f64,
}

impl Default for WeatherSpec {
    fn default() -> Self {
        Self {
            latitude_deg: 50.9,
            tilt_deg: 35.0,
            p_clear_day: 0.45,
            p_overcast_day: 0.25,
            clear_spell_s: 7200.0,
            cloud_spell_s: 3600.0,
            cloud_transmittance: (0.2, 0.5),
            overcast_transmittance: 0.25,
            g_noise: 0.01,
            wind_scale: 2.3,
            wind_correlation_s: 7200.0,
            wind_smoothing_s: 1800.0,
            gust_sigma: 0.2,
            ta_mean: 11.0,
            ta_seasonal_amplitude: 8.0,
            ta_diurnal_amplitude: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub site_id: String,
    pub start: NaiveDate,
    pub days: u32,
    pub step_s: i64,
    pub seed: u64,
    /// Generating model.
    pub model: Coefficients,
    /// Time constant of the input lag (s); zero or less disables the lag.
    pub tau_s: f64,
    /// Standard deviation of the Gaussian noise on module temperature (K).
    pub noise_sigma: f64,
    /// Constant offset added to module temperature (K).
    pub bias: f64,
    pub weather: WeatherSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            site_id: "synthetic".into(),
            start: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            days: 365,
            step_s: 60,
            seed: 1,
            model: Coefficients::Wm1 { k: 0.0348, d: 16.8 },
            tau_s: 360.0,
            noise_sigma: 0.5,
            bias: 0.0,
            weather: WeatherSpec::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let w = &self.weather;
        let checks = [
            ("days", self.days > 0),
            ("step_s", self.step_s > 0 && 86_400 % self.step_s == 0),
            ("noise_sigma", self.noise_sigma >= 0.0),
            ("latitude_deg", w.latitude_deg.abs() < 90.0),
            ("probabilities", w.p_clear_day >= 0.0 && w.p_overcast_day >= 0.0 && w.p_clear_day + w.p_overcast_day <= 1.0),
            ("spells", w.clear_spell_s > 0.0 && w.cloud_spell_s > 0.0),
            (
                "cloud_transmittance",
                0.0 <= w.cloud_transmittance.0 && w.cloud_transmittance.0 <= w.cloud_transmittance.1 && w.cloud_transmittance.1 <= 1.0,
            ),
            ("g_noise", w.g_noise >= 0.0),
            ("wind_scale", w.wind_scale >= 0.0),
            ("wind_correlation_s", w.wind_correlation_s > 0.0),
            ("wind_smoothing_s", w.wind_smoothing_s >= 0.0),
            ("gust_sigma", w.gust_sigma >= 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::invalid(format!("synthetic spec: invalid `{name}`")));
            }
        }
        Ok(())
    }
}

/// Plane-of-array clear-sky irradiance (W/m²) at `hour` solar time on `doy`.
fn clear_sky(w: &WeatherSpec, doy: u32, hour: f64) -> f64 {
    let lat = w.latitude_deg.to_radians();
    let tilt = w.tilt_deg.to_radians();
    let decl = (23.45f64).to_radians() * (2.0 * PI * (284.0 + doy as f64) / 365.0).sin();
    let ha = (15.0 * (hour - 12.0)).to_radians();
    let sin_elev = lat.sin() * decl.sin() + lat.cos() * decl.cos() * ha.cos();
    if sin_elev <= 0.01 {
        return 0.0;
    }
    let cos_inc = (lat - tilt).sin() * decl.sin() + (lat - tilt).cos() * decl.cos() * ha.cos();
    let air_mass = 1.0 / sin_elev;
    let dni = 1361.0 * 0.7f64.powf(air_mass.powf(0.678));
    dni * (cos_inc.max(0.0) + 0.1 * sin_elev)
}

#[derive(Clone, Copy)]
enum Sky {
    Clear,
    Broken,
    Overcast,
}

/// First-order lag `s_t = s_{t-1} + a·(x_t - s_{t-1})`, started at `x_0`.
fn lag(x: &[f64], tau_s: f64, dt_s: f64) -> Vec<f64> {
    if tau_s <= 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let a = 1.0 - (-dt_s / tau_s).exp();
    let mut s = x[0];
    x.iter()
        .map(|&v| {
            s += a * (v - s);
            s
        })
        .collect()
}

/// Generates the series described by `spec`. Identical specs give identical
/// series.
pub fn generate(spec: &SynthSpec) -> Result<WeatherSeries> {
    spec.validate()?;
    let w = &spec.weather;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let dt = spec.step_s as f64;
    let per_day = (86_400 / spec.step_s) as usize;
    let n = per_day * spec.days as usize;
    let start = spec.start.and_hms_opt(0, 0, 0).unwrap();

    let mut g = Vec::with_capacity(n);
    let mut ta = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let phi = (-dt / w.wind_correlation_s).exp();
    let innov = (1.0 - phi * phi).sqrt();
    let (mut x1, mut x2): (f64, f64) = (unit.sample(&mut rng), unit.sample(&mut rng));
    // Low-pass the Gaussian components and rescale them back to unit variance
    // so the speed stays Rayleigh-distributed.
    let smooth = if w.wind_smoothing_s > 0.0 { 1.0 - (-dt / w.wind_smoothing_s).exp() } else { 1.0 };
    let keep = 1.0 - smooth;
    let smooth_var = smooth / (2.0 - smooth) * (1.0 + keep * phi) / (1.0 - keep * phi);
    let rescale = 1.0 / smooth_var.sqrt();
    let (mut y1, mut y2) = (x1 * smooth_var.sqrt(), x2 * smooth_var.sqrt());
    let mut sky = Sky::Clear;
    let mut cloudy = false;
    let mut trans = 1.0;
    let p_to_cloud = 1.0 - (-dt / w.clear_spell_s).exp();
    let p_to_clear = 1.0 - (-dt / w.cloud_spell_s).exp();
    for i in 0..n {
        let t = start + Duration::seconds(i as i64 * spec.step_s);
        if i % per_day == 0 {
            let u: f64 = rng.random();
            sky = if u < w.p_clear_day {
                Sky::Clear
            } else if u < w.p_clear_day + w.p_overcast_day {
                Sky::Overcast
            } else {
                Sky::Broken
            };
            cloudy = false;
        }
        let doy = t.ordinal();
        let hour = t.num_seconds_from_midnight() as f64 / 3600.0;
        let tr = match sky {
            Sky::Clear => 1.0,
            Sky::Overcast => w.overcast_transmittance,
            Sky::Broken => {
                let switch: f64 = rng.random();
                if cloudy && switch < p_to_clear {
                    cloudy = false;
                } else if !cloudy && switch < p_to_cloud {
                    cloudy = true;
                    trans = rng.random_range(w.cloud_transmittance.0..=w.cloud_transmittance.1);
                }
                if cloudy {
                    trans
                } else {
                    1.0
                }
            }
        };
        let noise = 1.0 + w.g_noise * unit.sample(&mut rng);
        g.push((clear_sky(w, doy, hour) * tr * noise).max(0.0));

        x1 = phi * x1 + innov * unit.sample(&mut rng);
        x2 = phi * x2 + innov * unit.sample(&mut rng);
        let gust = w.gust_sigma * unit.sample(&mut rng);
        y1 += smooth * (x1 - y1);
        y2 += smooth * (x2 - y2);
        let speed = w.wind_scale * rescale * (y1 * y1 + y2 * y2).sqrt();
        ws.push((speed + gust).max(0.0));

        let season = -(2.0 * PI * (doy as f64 - 20.0) / 365.0).cos();
        let day = (2.0 * PI * (hour - 9.0) / 24.0).sin();
        ta.push(w.ta_mean + w.ta_seasonal_amplitude * season + w.ta_diurnal_amplitude * day);
    }

    let g_lag = lag(&g, spec.tau_s, dt);
    let ws_lag = lag(&ws, spec.tau_s, dt);
    let temp_noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut tm = Vec::with_capacity(n);
    for i in 0..n {
        let eps = if spec.noise_sigma > 0.0 { temp_noise.sample(&mut rng) } else { 0.0 };
        tm.push(ta[i] + spec.model.predict(g_lag[i], ws_lag[i]) + spec.bias + eps);
    }
    WeatherSeries::new(spec.site_id.clone(), start, spec.step_s, g, ta, tm, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(seed: u64) -> SynthSpec {
        SynthSpec {
            days: 3,
            seed,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&short(4)).unwrap();
        let b = generate(&short(4)).unwrap();
        assert_eq!(a, b);
        let c = generate(&short(5)).unwrap();
        assert_ne!(a.t_module(), c.t_module());
    }

    #[test]
    fn shapes_and_ranges() {
        let s = generate(&short(1)).unwrap();
        assert_eq!(s.len(), 3 * 1440);
        assert!(s.g_poa().iter().all(|&g| (0.0..1300.0).contains(&g)));
        assert!(s.ws().iter().all(|&w| w >= 0.0));
        // night rows carry no over-temperature beyond noise
        let g0 = s.g_poa()[0];
        assert_eq!(g0, 0.0);
    }

    #[test]
    fn lag_matches_closed_form_step() {
        let dt = 60.0;
        let tau = 360.0;
        let mut x = vec![0.0; 5];
        x.extend(vec![1000.0; 30]);
        let y = lag(&x, tau, dt);
        let a = 1.0 - (-dt / tau).exp();
        for n in 1..=30 {
            let expected = 1000.0 * (1.0 - (1.0 - a).powi(n as i32));
            assert!((y[4 + n] - expected).abs() < 1e-9);
        }
        assert_eq!(lag(&x, 0.0, dt), x);
    }

    #[test]
    fn clear_sky_seasons() {
        let w = WeatherSpec::default();
        let summer = clear_sky(&w, 172, 12.0);
        let winter = clear_sky(&w, 355, 12.0);
        assert!(summer > 900.0 && summer < 1100.0, "{summer}");
        assert!(winter > 350.0 && winter < 600.0, "{winter}");
        assert_eq!(clear_sky(&w, 172, 0.0), 0.0);
    }

    #[test]
    fn invalid_specs() {
        let mut s = short(1);
        s.step_s = 7;
        assert!(generate(&s).is_err());
        let mut s = short(1);
        s.weather.p_clear_day = 0.9;
        s.weather.p_overcast_day = 0.2;
        assert!(generate(&s).is_err());
        let mut s = short(1);
        s.model = Coefficients::Wm1 { k: -1.0, d: 2.0 };
        assert!(generate(&s).is_err());
    }
}
