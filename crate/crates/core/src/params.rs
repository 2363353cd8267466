//! Vehicle parameter set.
//!
//! Defaults describe a Husky A200 class skid-steer platform. The CG height is
//! an assumed value of 0.2 m.
//!
//! Parameter files are TOML key/value documents; any key may be omitted and
//! falls back to its default:
//!
//! ```toml
//! width = 0.54            # m, track width B
//! length = 0.7            # m, wheelbase L
//! weight = 313.6          # N, total weight W
//! cg_height = 0.2         # m, h
//! wheel_radius = 0.165    # m, r
//! torque_constant = 0.044 # N m / A, k_t
//! gear_ratio = 78.71      # gearhead ratio
//! sprung_mass = 8.0       # kg, quarter-vehicle body mass
//! wheel_stiffness = 10000.0 # N / m
//! wheel_damping = 200.0   # N s / m
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub width: f64,
    pub length: f64,
    pub weight: f64,
    pub cg_height: f64,
    pub wheel_radius: f64,
    pub torque_constant: f64,
    pub gear_ratio: f64,
    pub sprung_mass: f64,
    pub wheel_stiffness: f64,
    pub wheel_damping: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            width: 0.54,
            length: 0.7,
            weight: 313.6,
            cg_height: 0.2,
            wheel_radius: 0.165,
            torque_constant: 0.044,
            gear_ratio: 78.71,
            sprung_mass: 8.0,
            wheel_stiffness: 10_000.0,
            wheel_damping: 200.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("width", self.width),
            ("length", self.length),
            ("weight", self.weight),
            ("cg_height", self.cg_height),
            ("wheel_radius", self.wheel_radius),
            ("torque_constant", self.torque_constant),
            ("gear_ratio", self.gear_ratio),
            ("sprung_mass", self.sprung_mass),
            ("wheel_stiffness", self.wheel_stiffness),
            ("wheel_damping", self.wheel_damping),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "vehicle parameter `{name}` must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Motor torque per ampere at the wheel, `tau * k_t`.
    pub fn wheel_torque_per_amp(&self) -> f64 {
        self.gear_ratio * self.torque_constant
    }

    /// Undamped natural frequency of the quarter-vehicle model, rad/s.
    pub fn natural_frequency(&self) -> f64 {
        (self.wheel_stiffness / self.sprung_mass).sqrt()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("vehicle params serialize to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = VehicleParams::default();
        p.validate().unwrap();
        assert_eq!(p.width, 0.54);
        assert_eq!(p.length, 0.7);
        assert_eq!(p.weight, 313.6);
        assert_eq!(p.torque_constant, 0.044);
        assert_eq!(p.gear_ratio, 78.71);
        assert_eq!(p.wheel_radius, 0.165);
        assert_eq!(p.wheel_stiffness, 10_000.0);
        assert_eq!(p.wheel_damping, 200.0);
        assert_eq!(p.sprung_mass, 8.0);
    }

    #[test]
    fn rejects_non_positive_fields() {
        let p = VehicleParams {
            cg_height: 0.0,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidArgument(_))));
        let p = VehicleParams {
            weight: f64::NAN,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let p = VehicleParams::from_toml_str("cg_height = 0.25\nweight = 300.0\n").unwrap();
        assert_eq!(p.cg_height, 0.25);
        assert_eq!(p.weight, 300.0);
        assert_eq!(p.width, 0.54);
        assert!(VehicleParams::from_toml_str("wheelbase = 1.0").is_err());
        assert!(VehicleParams::from_toml_str("width = -1.0").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let p = VehicleParams::default();
        assert_eq!(VehicleParams::from_toml_str(&p.to_toml_string()).unwrap(), p);
    }
}
