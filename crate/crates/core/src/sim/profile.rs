//! Terrain elevation profiles along the travelled path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::params::VehicleParams;
use crate::terrain::TerrainClass;

use super::preset::TerrainPreset;
use super::qv::simulate_qv;

/// Speed at which profile amplitudes are calibrated, m/s.
pub const CALIBRATION_SPEED: f64 = 0.5;
/// Integration step used for calibration, s.
pub const CALIBRATION_STEP: f64 = 1e-3;
/// Initial transient excluded from the calibration statistics, s.
pub const CALIBRATION_SETTLE: f64 = 2.0;
const CALIBRATION_MIN_LENGTH: f64 = 20.0;
const CALIBRATION_TOLERANCE: f64 = 0.01;
const CALIBRATION_MAX_ITER: usize = 8;

/// Piecewise-linear elevation `z_d(s)` over path distance `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProfile {
    pub distances: Vec<f64>,
    pub elevations: Vec<f64>,
    pub class: Option<TerrainClass>,
    /// Dominant irregularity wavelength, m.
    pub wavelength: f64,
    /// Amplitude of the dominant component, m.
    pub amplitude: f64,
}

impl TerrainProfile {
    pub fn new(distances: Vec<f64>, elevations: Vec<f64>) -> Result<Self> {
        if distances.len() != elevations.len() {
            return Err(Error::Shape {
                expected: distances.len(),
                actual: elevations.len(),
            });
        }
        if distances.len() < 2 {
            return Err(invalid("profile needs at least two samples"));
        }
        if distances.iter().chain(&elevations).any(|v| !v.is_finite()) {
            return Err(invalid("profile samples must be finite"));
        }
        if distances.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("profile distances must be strictly increasing"));
        }
        Ok(Self {
            distances,
            elevations,
            class: None,
            wavelength: 0.0,
            amplitude: 0.0,
        })
    }

    fn uniform(length: f64, spacing: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = (length / spacing).ceil().max(1.0) as usize;
        let distances: Vec<f64> = (0..=n).map(|i| i as f64 * spacing).collect();
        let elevations = distances.iter().map(|&s| f(s)).collect();
        Self {
            distances,
            elevations,
            class: None,
            wavelength: 0.0,
            amplitude: 0.0,
        }
    }

    pub fn flat(length: f64, spacing: f64) -> Self {
        Self::uniform(length, spacing, |_| 0.0)
    }

    /// `amplitude * sin(2 pi s / wavelength)` sampled every `spacing` metres.
    pub fn sinusoid(amplitude: f64, wavelength: f64, length: f64, spacing: f64) -> Self {
        let k = std::f64::consts::TAU / wavelength;
        let mut p = Self::uniform(length, spacing, |s| amplitude * (k * s).sin());
        p.wavelength = wavelength;
        p.amplitude = amplitude;
        p
    }

    pub fn start(&self) -> f64 {
        self.distances[0]
    }

    pub fn end(&self) -> f64 {
        self.distances[self.distances.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.end() - self.start()
    }

    /// Elevation and slope `dz/ds` at `s`, constant beyond the ends.
    pub fn sample(&self, s: f64) -> (f64, f64) {
        let d = &self.distances;
        let z = &self.elevations;
        if s <= d[0] {
            return (z[0], 0.0);
        }
        if s >= d[d.len() - 1] {
            return (z[z.len() - 1], 0.0);
        }
        let i = d.partition_point(|&x| x <= s) - 1;
        let slope = (z[i + 1] - z[i]) / (d[i + 1] - d[i]);
        (z[i] + slope * (s - d[i]), slope)
    }

    /// Index of the linear segment containing `s`, clamped to the ends.
    pub fn segment_index(&self, s: f64) -> usize {
        let d = &self.distances;
        d.partition_point(|&x| x <= s).clamp(1, d.len() - 1) - 1
    }

    /// Elevation and slope of segment `i` extended linearly to `s`.
    pub fn eval_segment(&self, i: usize, s: f64) -> (f64, f64) {
        let d = &self.distances;
        let z = &self.elevations;
        let slope = (z[i + 1] - z[i]) / (d[i + 1] - d[i]);
        (z[i] + slope * (s - d[i]), slope)
    }

    pub fn elevation(&self, s: f64) -> f64 {
        self.sample(s).0
    }

    /// Appends `other` after this profile, shifting it so the elevation is
    /// continuous at the junction.
    pub fn append(&mut self, other: &TerrainProfile) {
        let ds = self.end() - other.start();
        let dz = self.elevations[self.elevations.len() - 1] - other.elevations[0];
        for (s, z) in other.distances.iter().zip(&other.elevations).skip(1) {
            self.distances.push(s + ds);
            self.elevations.push(z + dz);
        }
        if other.amplitude > self.amplitude {
            self.amplitude = other.amplitude;
            self.wavelength = other.wavelength;
        }
        if self.class != other.class {
            self.class = None;
        }
    }
}

/// Sum-of-sinusoids profile for one preset: component wavelengths are
/// log-spaced over the preset band, amplitudes scale with wavelength and
/// phases are drawn from `seed`. The overall scale is calibrated so the
/// quarter-vehicle body acceleration at [`CALIBRATION_SPEED`] has the
/// preset's standard deviation.
pub fn synth_terrain_profile(
    preset: &TerrainPreset,
    length: f64,
    seed: u64,
    params: &VehicleParams,
) -> Result<TerrainProfile> {
    preset.validate()?;
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid(format!("profile length must be positive, got {length}")));
    }
    let [lo, hi] = preset.wavelength_band;
    let n = preset.components;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            let lambda = lo * (hi / lo).powf(frac);
            (lambda, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let spacing = lo / 200.0;
    let build = |scale: f64, len: f64| {
        TerrainProfile::uniform(len, spacing, |s| {
            components
                .iter()
                .map(|&(lambda, phase)| scale * (lambda / hi) * (std::f64::consts::TAU * s / lambda + phase).sin())
                .sum()
        })
    };

    let cal_length = length.max(CALIBRATION_MIN_LENGTH);
    let duration = cal_length / CALIBRATION_SPEED;
    let mut scale = preset.amplitude;
    let mut converged = false;
    for _ in 0..CALIBRATION_MAX_ITER {
        let probe = build(scale, cal_length);
        let trace = simulate_qv(&probe, CALIBRATION_SPEED, params, CALIBRATION_STEP, duration)?;
        let skip = (CALIBRATION_SETTLE / CALIBRATION_STEP) as usize;
        let std = population_std(trace.samples[skip..].iter().map(|s| s.z_ddot));
        if !(std.is_finite() && std > 0.0) {
            break;
        }
        let ratio = preset.accel_std_target / std;
        if (ratio - 1.0).abs() <= CALIBRATION_TOLERANCE {
            converged = true;
            break;
        }
        scale *= ratio;
    }
    if !converged {
        return Err(Error::Calibration(format!(
            "{} preset did not reach accel std {} m/s^2",
            preset.class, preset.accel_std_target
        )));
    }

    let mut profile = build(scale, length);
    profile.class = Some(preset.class);
    profile.wavelength = hi;
    profile.amplitude = scale;
    Ok(profile)
}

pub(crate) fn population_std(values: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n == 0.0 {
        f64::NAN
    } else {
        (m2 / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::preset::TerrainPreset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interpolation_and_slope() {
        let p = TerrainProfile::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.sample(0.5), (1.0, 2.0));
        assert_eq!(p.sample(2.0), (1.0, -1.0));
        assert_eq!(p.sample(-1.0), (0.0, 0.0));
        assert_eq!(p.sample(5.0), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(TerrainProfile::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(TerrainProfile::new(vec![0.0], vec![0.0]).is_err());
        assert!(TerrainProfile::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn append_is_continuous() {
        let mut a = TerrainProfile::sinusoid(0.1, 1.0, 2.0, 0.01);
        let b = TerrainProfile::sinusoid(0.1, 1.0, 2.0, 0.01);
        let before = a.end();
        a.append(&b);
        assert_abs_diff_eq!(a.end(), before + 2.0, epsilon = 1e-9);
        let (z0, _) = a.sample(before - 1e-9);
        let (z1, _) = a.sample(before + 1e-9);
        assert_abs_diff_eq!(z0, z1, epsilon = 1e-6);
        assert!(a.distances.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn same_seed_same_profile() {
        let preset = TerrainPreset::default_for(TerrainClass::Gravel);
        let p = VehicleParams::default();
        let a = synth_terrain_profile(&preset, 25.0, 3, &p).unwrap();
        let b = synth_terrain_profile(&preset, 25.0, 3, &p).unwrap();
        let c = synth_terrain_profile(&preset, 25.0, 4, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.elevations, c.elevations);
        assert_eq!(a.class, Some(TerrainClass::Gravel));
    }

    #[test]
    fn calibrated_profiles_hit_accel_targets() {
        let p = VehicleParams::default();
        for (class, target) in [(TerrainClass::Ploughed, 0.084), (TerrainClass::DirtRoad, 0.026)] {
            let preset = TerrainPreset::default_for(class);
            let profile = synth_terrain_profile(&preset, 30.0, 11, &p).unwrap();
            let trace = simulate_qv(&profile, 0.5, &p, 1e-3, 59.0).unwrap();
            let std = population_std(trace.samples[2000..].iter().map(|s| s.z_ddot));
            assert!((std / target - 1.0).abs() < 0.1, "{class}: {std}");
        }
    }

    #[test]
    fn population_std_small_cases() {
        assert_abs_diff_eq!(population_std([0.0, 2.0].into_iter()), 1.0, epsilon = 1e-15);
        assert!(population_std(std::iter::empty()).is_nan());
    }
}
