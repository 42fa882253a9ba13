//! Thermal models for photovoltaic modules.
//!
//! Static steady-state models relate module over-temperature to irradiance
//! and wind speed. Fitting them on filtered data, evaluating them on an
//! exponentially weighted mean of the inputs and removing the training bias
//! gives the dynamic FEM variant.

pub mod error;
pub mod ewm;
pub mod fempipe;
pub mod fitting;
pub mod metrics;
pub mod models;
pub mod rcnet;
pub mod regression;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
