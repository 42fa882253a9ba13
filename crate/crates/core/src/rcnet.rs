//! Theoretical R-, C-values and time constants of a module layer stack.
//!
//! All quantities are per unit area of the layer itself: `r = L/λ` in
//! K/(W/m²) and `c = ρ·c_p·L` in J/(K·m²). The layer area only enters the
//! mass column.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerSide {
    #[default]
    Front,
    Back,
    /// Sits in both heat paths; its resistance is counted on both sides and
    /// its capacitance split evenly.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    /// Thickness in m.
    pub thickness: f64,
    /// Thermal conductivity, W/(m·K).
    pub conductivity: f64,
    /// Density, kg/m³.
    pub density: f64,
    /// Specific heat capacity, J/(kg·K).
    pub specific_heat: f64,
    /// Area used for the mass, m².
    pub area: f64,
    #[serde(default)]
    pub side: LayerSide,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness >= 0.0) {
            return Err(Error::invalid(format!("layer `{}`: thickness must be >= 0", self.name)));
        }
        for (what, v) in [
            ("conductivity", self.conductivity),
            ("density", self.density),
            ("specific heat", self.specific_heat),
            ("area", self.area),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("layer `{}`: {what} must be > 0", self.name)));
            }
        }
        Ok(())
    }
}

/// R/C properties of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerRc {
    /// K/(W/m²)
    pub r_eq: f64,
    /// J/(K·m²)
    pub c_eq: f64,
    /// s
    pub tau0: f64,
    /// kg
    pub mass: f64,
}

pub fn layer_rc(layer: &LayerSpec) -> Result<LayerRc> {
    layer.validate()?;
    let r_eq = layer.thickness / layer.conductivity;
    let c_eq = layer.density * layer.specific_heat * layer.thickness;
    Ok(LayerRc {
        r_eq,
        c_eq,
        tau0: r_eq * c_eq,
        mass: layer.density * layer.area * layer.thickness,
    })
}

/// Two resistances in parallel.
pub fn parallel(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        a * b / (a + b)
    }
}

/// Module cross-section: two heat paths from the cells to ambient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    /// Outermost first.
    pub front_layers: Vec<LayerSpec>,
    pub back_layers: Vec<LayerSpec>,
    pub front_air_film: LayerSpec,
    pub back_air_film: LayerSpec,
}

impl LayerStack {
    /// Distributes side-tagged layers into the two paths, keeping order.
    pub fn from_layers(layers: Vec<LayerSpec>, front_air_film: LayerSpec, back_air_film: LayerSpec) -> Self {
        let mut front = Vec::new();
        let mut back = Vec::new();
        for l in layers {
            match l.side {
                LayerSide::Front => front.push(l),
                LayerSide::Back => back.push(l),
                LayerSide::Shared => {
                    front.push(l.clone());
                    back.push(l);
                }
            }
        }
        Self {
            front_layers: front,
            back_layers: back,
            front_air_film,
            back_air_film,
        }
    }

    /// Copy with the thickness of every layer matching `pred` set to zero.
    pub fn with_zeroed(&self, pred: impl Fn(&LayerSpec) -> bool) -> Self {
        let zero = |v: &[LayerSpec]| -> Vec<LayerSpec> {
            v.iter()
                .map(|l| {
                    let mut l = l.clone();
                    if pred(&l) {
                        l.thickness = 0.0;
                    }
                    l
                })
                .collect()
        };
        Self {
            front_layers: zero(&self.front_layers),
            back_layers: zero(&self.back_layers),
            front_air_film: self.front_air_film.clone(),
            back_air_film: self.back_air_film.clone(),
        }
    }

    /// Copy with every layer thickness (air films included) scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |l: &LayerSpec| LayerSpec {
            thickness: l.thickness * factor,
            ..l.clone()
        };
        Self {
            front_layers: self.front_layers.iter().map(scale).collect(),
            back_layers: self.back_layers.iter().map(scale).collect(),
            front_air_film: scale(&self.front_air_film),
            back_air_film: scale(&self.back_air_film),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub name: String,
    pub side: LayerSide,
    pub is_air_film: bool,
    #[serde(flatten)]
    pub rc: LayerRc,
}

/// Series total of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTotal {
    pub r_eq: f64,
    pub c_eq: f64,
    pub tau0: f64,
}

impl PathTotal {
    fn new(r_eq: f64, c_eq: f64) -> Self {
        Self { r_eq, c_eq, tau0: r_eq * c_eq }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcSummary {
    pub layers: Vec<LayerRow>,
    pub front: PathTotal,
    pub back: PathTotal,
    pub front_air: PathTotal,
    pub back_air: PathTotal,
    /// Front and back in parallel, without air films.
    pub total: PathTotal,
    /// Front and back in parallel, air films in series on each side.
    pub total_air: PathTotal,
    /// Mass of all solid layers (kg).
    pub mass: f64,
    pub include_air: bool,
}

impl RcSummary {
    /// Overall values for the requested air-film setting.
    pub fn overall(&self) -> PathTotal {
        if self.include_air {
            self.total_air
        } else {
            self.total
        }
    }
}

pub fn stack_summary(stack: &LayerStack, include_air: bool) -> Result<RcSummary> {
    if stack.front_layers.is_empty() {
        return Err(Error::invalid("layer stack has no front layers"));
    }
    if stack.back_layers.is_empty() {
        return Err(Error::invalid("layer stack has no back layers"));
    }
    let mut rows = Vec::new();
    let mut push = |l: &LayerSpec, side: LayerSide, air: bool| -> Result<LayerRc> {
        let rc = layer_rc(l)?;
        rows.push(LayerRow {
            name: l.name.clone(),
            side,
            is_air_film: air,
            rc,
        });
        Ok(rc)
    };

    let air_f = push(&stack.front_air_film, LayerSide::Front, true)?;
    let (mut r_f, mut c_f, mut m) = (0.0, 0.0, 0.0);
    for l in &stack.front_layers {
        let rc = push(l, LayerSide::Front, false)?;
        let share = if l.side == LayerSide::Shared { 0.5 } else { 1.0 };
        r_f += rc.r_eq;
        c_f += share * rc.c_eq;
        m += share * rc.mass;
    }
    let (mut r_b, mut c_b) = (0.0, 0.0);
    for l in &stack.back_layers {
        let rc = push(l, LayerSide::Back, false)?;
        let share = if l.side == LayerSide::Shared { 0.5 } else { 1.0 };
        r_b += rc.r_eq;
        c_b += share * rc.c_eq;
        m += share * rc.mass;
    }
    let air_b = push(&stack.back_air_film, LayerSide::Back, true)?;

    let front = PathTotal::new(r_f, c_f);
    let back = PathTotal::new(r_b, c_b);
    let front_air = PathTotal::new(r_f + air_f.r_eq, c_f + air_f.c_eq);
    let back_air = PathTotal::new(r_b + air_b.r_eq, c_b + air_b.c_eq);
    let total = PathTotal::new(parallel(r_f, r_b), c_f + c_b);
    let total_air = PathTotal::new(
        parallel(front_air.r_eq, back_air.r_eq),
        front_air.c_eq + back_air.c_eq,
    );
    Ok(RcSummary {
        layers: rows,
        front,
        back,
        front_air,
        back_air,
        total,
        total_air,
        mass: m + air_f.mass + air_b.mass,
        include_air,
    })
}

/// Air layer whose resistance equals `r_target` (K/(W/m²)).
pub fn air_film_for_target(r_target: f64, conductivity: f64) -> Result<LayerSpec> {
    if !(r_target >= 0.0) || !(conductivity > 0.0) {
        return Err(Error::invalid("air film target and conductivity must be positive"));
    }
    Ok(LayerSpec {
        name: "air film".into(),
        thickness: r_target * conductivity,
        conductivity,
        density: AIR_DENSITY,
        specific_heat: AIR_SPECIFIC_HEAT,
        area: 1.0,
        side: LayerSide::Front,
    })
}

pub const AIR_DENSITY: f64 = 1.23;
pub const AIR_SPECIFIC_HEAT: f64 = 1000.0;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn layer(name: &str, l_mm: f64, lambda: f64, rho: f64, cp: f64, area: f64) -> LayerSpec {
        LayerSpec {
            name: name.into(),
            thickness: l_mm / 1000.0,
            conductivity: lambda,
            density: rho,
            specific_heat: cp,
            area,
            side: LayerSide::Front,
        }
    }

    #[test]
    fn glass_row() {
        let rc = layer_rc(&layer("glass", 3.2, 1.8, 3000.0, 500.0, 1.6)).unwrap();
        assert_abs_diff_eq!(rc.r_eq * 1e3, 1.78, epsilon = 0.005);
        assert_abs_diff_eq!(rc.c_eq / 1e3, 4.8, epsilon = 0.05);
        assert_abs_diff_eq!(rc.tau0, 8.5, epsilon = 0.05);
        assert_abs_diff_eq!(rc.mass, 15.36, epsilon = 1e-9);
    }

    #[test]
    fn air_film_row() {
        let rc = layer_rc(&layer("air", 1.5, 0.023, 1.23, 1000.0, 1.6)).unwrap();
        assert_abs_diff_eq!(rc.r_eq * 1e3, 65.22, epsilon = 0.005);
        assert_abs_diff_eq!(rc.c_eq / 1e3, 0.0, epsilon = 0.05);
        assert_abs_diff_eq!(rc.tau0, 0.1, epsilon = 0.05);
    }

    #[test]
    fn zero_thickness_layer() {
        let rc = layer_rc(&layer("nothing", 0.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!((rc.r_eq, rc.c_eq, rc.tau0, rc.mass), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn invalid_layers() {
        assert!(layer_rc(&layer("x", 1.0, 0.0, 1.0, 1.0, 1.0)).is_err());
        assert!(layer_rc(&layer("x", 1.0, 1.0, -1.0, 1.0, 1.0)).is_err());
        assert!(layer_rc(&layer("x", 1.0, 1.0, 1.0, 0.0, 1.0)).is_err());
        assert!(layer_rc(&layer("x", -1.0, 1.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn symmetric_parallel_halves() {
        let x = 0.004;
        let a = layer("a", 2.0 * x * 1000.0, 1.0, 1.0, 1.0, 1.0);
        let air = layer("air", 0.0, 0.023, 1.23, 1000.0, 1.0);
        let stack = LayerStack {
            front_layers: vec![a.clone()],
            back_layers: vec![a],
            front_air_film: air.clone(),
            back_air_film: air,
        };
        let s = stack_summary(&stack, false).unwrap();
        assert_abs_diff_eq!(s.total.r_eq, x, epsilon = 1e-15);
    }

    #[test]
    fn empty_side_rejected() {
        let air = layer("air", 1.5, 0.023, 1.23, 1000.0, 1.0);
        let stack = LayerStack {
            front_layers: vec![layer("g", 3.2, 1.8, 3000.0, 500.0, 1.6)],
            back_layers: vec![],
            front_air_film: air.clone(),
            back_air_film: air,
        };
        assert!(stack_summary(&stack, true).is_err());
    }

    #[test]
    fn shared_layer_counts_capacitance_once() {
        let mut core = layer("core", 1.0, 1.0, 1000.0, 1000.0, 1.0);
        core.side = LayerSide::Shared;
        let air = layer("air", 0.0, 0.023, 1.23, 1000.0, 1.0);
        let stack = LayerStack::from_layers(vec![core], air.clone(), air);
        let s = stack_summary(&stack, false).unwrap();
        assert_abs_diff_eq!(s.total.c_eq, 1000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.front.r_eq, 0.001, epsilon = 1e-15);
        assert_abs_diff_eq!(s.back.r_eq, 0.001, epsilon = 1e-15);
    }

    #[test]
    fn air_film_inversion() {
        let l = air_film_for_target(0.06522, 0.023).unwrap();
        assert_abs_diff_eq!(l.thickness * 1000.0, 1.5, epsilon = 1e-3);
        let z = air_film_for_target(0.0, 0.023).unwrap();
        assert_eq!(z.thickness, 0.0);
    }

    #[test]
    fn parallel_properties() {
        assert_eq!(parallel(3.0, 6.0), parallel(6.0, 3.0));
        assert!(parallel(3.0, 6.0) <= 3.0);
        assert_eq!(parallel(0.0, 0.0), 0.0);
    }
}
