//! Per-class generator presets.
//!
//! Presets are TOML documents with one `[[preset]]` table per class. The
//! built-in set lives in `presets/default.toml`, which also documents every
//! key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::terrain::TerrainClass;

const DEFAULT_PRESETS: &str = include_str!("../../presets/default.toml");

/// One RGB Gaussian mixture component, channels in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorComponent {
    pub weight: f64,
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainPreset {
    pub class: TerrainClass,
    pub mean_slip: f64,
    pub slip_std: f64,
    pub accel_std_target: f64,
    pub mean_motion_resistance: f64,
    pub motion_resistance_cv: f64,
    pub wavelength_band: [f64; 2],
    pub components: usize,
    pub amplitude: f64,
    pub roughness: f64,
    pub furrow_amplitude: f64,
    pub furrow_spacing: f64,
    pub color_drift: f64,
    pub color: Vec<ColorComponent>,
}

impl TerrainPreset {
    pub fn default_for(class: TerrainClass) -> Self {
        PresetSet::default()
            .get(class)
            .cloned()
            .expect("built-in presets cover every class")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(invalid(format!("{} preset: {what}", self.class)));
        if !(0.0..1.0).contains(&self.mean_slip) {
            return bad("mean_slip must lie in [0, 1)");
        }
        if !(self.accel_std_target.is_finite() && self.accel_std_target > 0.0) {
            return bad("accel_std_target must be positive");
        }
        if !(self.mean_motion_resistance.is_finite() && self.mean_motion_resistance > 0.0) {
            return bad("mean_motion_resistance must be positive");
        }
        let non_negative = [
            self.slip_std,
            self.motion_resistance_cv,
            self.roughness,
            self.furrow_amplitude,
            self.color_drift,
        ];
        if non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("spreads and roughness must be non-negative");
        }
        if !(self.furrow_spacing > 0.0 && self.amplitude > 0.0) {
            return bad("lengths and amplitude must be positive");
        }
        let [lo, hi] = self.wavelength_band;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("wavelength_band must be an ordered positive pair");
        }
        if self.components == 0 {
            return bad("components must be at least 1");
        }
        if self.color.is_empty()
            || self
                .color
                .iter()
                .any(|c| c.weight.is_nan() || c.weight <= 0.0 || c.std.iter().any(|s| s.is_nan() || *s < 0.0))
        {
            return bad("color mixture needs positive weights and non-negative stds");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSet {
    pub preset: Vec<TerrainPreset>,
}

impl Default for PresetSet {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_PRESETS).expect("built-in presets parse")
    }
}

impl PresetSet {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let set: PresetSet = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in &set.preset {
            p.validate()?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("presets serialize")
    }

    /// Last preset declared for `class`.
    pub fn get(&self, class: TerrainClass) -> Option<&TerrainPreset> {
        self.preset.iter().rev().find(|p| p.class == class)
    }

    pub fn require(&self, class: TerrainClass) -> Result<&TerrainPreset> {
        self.get(class)
            .ok_or_else(|| Error::Config(format!("no preset for class `{class}`")))
    }
}
