//! Synthetic labeled sensor runs.
//!
//! The vehicle drives a straight route at constant speed over one or more
//! terrain segments. Vertical body motion comes from the quarter-vehicle
//! model, wheel speeds and motor currents from the segment's slip and motion
//! resistance, and stereo frames from per-class surface and color models.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::contact::{wheel_loads_with, LoadModel, STANDARD_GRAVITY};
use crate::error::{invalid, Result};
use crate::frame::{rotation_matrix_rpy, Attitude};
use crate::mapping::{build_map, MappingConfig, TerrainPatch};
use crate::params::VehicleParams;
use crate::series::{
    CloudFrame, ColoredPoint, CurrentSample, EncoderSample, ImuSample, PoseSample, SensorSeries,
};
use crate::terrain::TerrainClass;

use super::preset::{PresetSet, TerrainPreset};
use super::profile::{synth_terrain_profile, TerrainProfile};
use super::qv::simulate_qv;

/// Sensor noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Accelerometer, m/s^2.
    pub accel: f64,
    /// Roll and pitch, rad.
    pub attitude: f64,
    /// Yaw, rad.
    pub heading: f64,
    /// Relative wheel speed noise.
    pub omega: f64,
    /// Side current, A.
    pub current: f64,
    /// Pose position, m.
    pub position: f64,
    /// Stereo point position, m.
    pub stereo: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            accel: 0.004,
            attitude: 0.002,
            heading: 0.001,
            omega: 0.003,
            current: 0.005,
            position: 0.002,
            stereo: 0.004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Travel speed, m/s.
    pub speed: f64,
    /// Quarter-vehicle integration step, s.
    pub dt: f64,
    pub imu_rate: f64,
    pub encoder_rate: f64,
    pub current_rate: f64,
    pub frame_rate: f64,
    pub noise: NoiseConfig,
    /// World position of the route start.
    pub origin: [f64; 3],
    /// Route direction, rad.
    pub heading: f64,
    /// Sinusoidal pitch along the route: amplitude (rad) and wavelength (m).
    pub pitch_amplitude: f64,
    pub pitch_wavelength: f64,
    pub roll_amplitude: f64,
    pub roll_wavelength: f64,
    /// Knot spacing of the spatial slip, resistance and color fields, m.
    pub correlation_length: f64,
    pub points_per_frame: usize,
    /// Ground area seen by the camera, in vehicle x and |y|, m.
    pub view_near: f64,
    pub view_far: f64,
    pub view_half_width: f64,
    /// Chance that a frame contains a vegetation column.
    pub obstacle_probability: f64,
    /// Brightness factor range applied to all colors.
    pub illumination: [f64; 2],
    pub mapping: MappingConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            speed: 0.5,
            dt: 1e-3,
            imu_rate: 100.0,
            encoder_rate: 50.0,
            current_rate: 50.0,
            frame_rate: 8.5,
            noise: NoiseConfig::default(),
            origin: [0.0; 3],
            heading: 0.0,
            pitch_amplitude: 0.0,
            pitch_wavelength: 8.0,
            roll_amplitude: 0.0,
            roll_wavelength: 6.0,
            correlation_length: 0.7,
            points_per_frame: 220,
            view_near: 0.9,
            view_far: 1.62,
            view_half_width: 0.4,
            obstacle_probability: 0.15,
            illumination: [0.6, 1.0],
            mapping: MappingConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.speed,
            self.dt,
            self.imu_rate,
            self.encoder_rate,
            self.current_rate,
            self.frame_rate,
            self.pitch_wavelength,
            self.roll_wavelength,
            self.correlation_length,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("speed, step, rates and wavelengths must be positive"));
        }
        if !(self.view_far > self.view_near && self.view_half_width > 0.0) {
            return Err(invalid("camera view must have positive extent"));
        }
        let [lo, hi] = self.illumination;
        if !(lo > 0.0 && hi >= lo) {
            return Err(invalid("illumination range must be positive and ordered"));
        }
        if !(0.0..=1.0).contains(&self.obstacle_probability) {
            return Err(invalid("obstacle probability must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteSegment {
    pub class: TerrainClass,
    /// Segment length, m.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub segments: Vec<RouteSegment>,
}

impl Route {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Class under path distance `s`; the last segment extends to infinity.
    pub fn class_at(&self, s: f64) -> TerrainClass {
        let mut end = 0.0;
        for seg in &self.segments {
            end += seg.length;
            if s < end {
                return seg.class;
            }
        }
        self.segments.last().map(|s| s.class).expect("route has segments")
    }

    /// Distances at which the class changes.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut end = 0.0;
        for pair in self.segments.windows(2) {
            end += pair[0].length;
            if pair[0].class != pair[1].class {
                out.push(end);
            }
        }
        out
    }
}

/// What the generator knows about a run: enough to label any patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTruth {
    pub route: Route,
    pub origin: [f64; 3],
    pub heading: f64,
    pub speed: f64,
}

impl RunTruth {
    /// Path distance of a world point projected on the route.
    pub fn distance_along(&self, p: [f64; 3]) -> f64 {
        let (s, c) = self.heading.sin_cos();
        c * (p[0] - self.origin[0]) + s * (p[1] - self.origin[1])
    }

    pub fn class_at_point(&self, p: [f64; 3]) -> TerrainClass {
        self.route.class_at(self.distance_along(p))
    }

    /// Class under the vehicle at time `t`.
    pub fn class_at_time(&self, t: f64) -> TerrainClass {
        self.route.class_at(self.speed * t)
    }

    /// Times at which the vehicle crosses a class boundary.
    pub fn transition_times(&self) -> Vec<f64> {
        self.route.boundaries().into_iter().map(|s| s / self.speed).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRun {
    pub series: SensorSeries,
    pub truth: RunTruth,
    pub profile: TerrainProfile,
    /// Traversed patches with ground-truth labels, in traversal order.
    pub patches: Vec<TerrainPatch>,
    pub warnings: Vec<String>,
}

/// Single-class run with the built-in presets and default sensor model.
pub fn synth_run(
    class: TerrainClass,
    duration: f64,
    speed: f64,
    seed: u64,
    params: &VehicleParams,
) -> Result<SynthRun> {
    let config = SynthConfig {
        speed,
        ..SynthConfig::default()
    };
    let route = [RouteSegment { class, length: 0.0 }];
    synth_route_run(&route, duration, seed, params, &PresetSet::default(), &config)
}

/// Piecewise-linear standard normal field along the route.
struct Field {
    spacing: f64,
    knots: Vec<f64>,
}

impl Field {
    fn new(length: f64, spacing: f64, rng: &mut ChaCha8Rng) -> Self {
        let n = (length / spacing).ceil() as usize + 2;
        Self {
            spacing,
            knots: (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    fn at(&self, s: f64) -> f64 {
        let u = (s / self.spacing).max(0.0);
        let i = (u.floor() as usize).min(self.knots.len() - 2);
        let f = (u - i as f64).min(1.0);
        self.knots[i] * (1.0 - f) + self.knots[i + 1] * f
    }
}

fn gauss(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    std * z
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Number of samples at `rate` in `[0, duration)`.
fn sample_count(duration: f64, rate: f64) -> usize {
    (duration * rate - 1e-9).ceil().max(0.0) as usize
}

/// Everything that varies along the route, shared by all sensor models.
struct World<'a> {
    route: &'a Route,
    presets: Vec<&'a TerrainPreset>,
    profile: TerrainProfile,
    grade: TerrainProfile,
    slip: Field,
    resistance: Field,
    drift: [Field; 3],
    config: &'a SynthConfig,
}

impl World<'_> {
    fn preset(&self, s: f64) -> &TerrainPreset {
        let class = self.route.class_at(s);
        self.presets
            .iter()
            .find(|p| p.class == class)
            .expect("preset resolved for every route class")
    }

    fn attitude(&self, s: f64) -> Attitude {
        let c = self.config;
        let tau = std::f64::consts::TAU;
        Attitude::new(
            c.roll_amplitude * (tau * s / c.roll_wavelength).sin(),
            c.pitch_amplitude * (tau * s / c.pitch_wavelength).sin(),
            c.heading,
        )
    }

    fn slip_at(&self, s: f64) -> f64 {
        let p = self.preset(s);
        (p.mean_slip + p.slip_std * self.slip.at(s)).clamp(-0.02, 0.5)
    }

    fn resistance_at(&self, s: f64) -> f64 {
        let p = self.preset(s);
        p.mean_motion_resistance * (1.0 + p.motion_resistance_cv * self.resistance.at(s)).max(0.05)
    }

    /// Ground height at path distance `s` and lateral offset `l`, without
    /// per-point roughness.
    fn surface(&self, s: f64, l: f64) -> f64 {
        let p = self.preset(s);
        let furrow = p.furrow_amplitude * (std::f64::consts::TAU * l / p.furrow_spacing).sin();
        let roll = self.attitude(s).roll;
        self.profile.elevation(s) + self.grade.elevation(s) + furrow + l * roll.tan()
    }

    fn world_point(&self, s: f64, l: f64, z: f64) -> Vector3<f64> {
        let (sn, cs) = self.config.heading.sin_cos();
        let o = self.config.origin;
        Vector3::new(o[0] + cs * s - sn * l, o[1] + sn * s + cs * l, o[2] + z)
    }
}

/// Elevation that follows the pitch field: `dz/ds = -tan(pitch)`.
fn grade_profile(config: &SynthConfig, length: f64) -> Result<TerrainProfile> {
    let spacing = 0.01;
    let n = (length / spacing).ceil() as usize + 1;
    let tau = std::f64::consts::TAU;
    let slope = |s: f64| -(config.pitch_amplitude * (tau * s / config.pitch_wavelength).sin()).tan();
    let mut distances = Vec::with_capacity(n + 1);
    let mut elevations = Vec::with_capacity(n + 1);
    let mut z = 0.0;
    for i in 0..=n {
        let s = i as f64 * spacing;
        if i > 0 {
            z += 0.5 * spacing * (slope(s - spacing) + slope(s));
        }
        distances.push(s);
        elevations.push(z);
    }
    TerrainProfile::new(distances, elevations)
}

/// Generates a run over `segments` (the last one is extended to cover the
/// distance driven plus the camera look-ahead) and labels its patches.
pub fn synth_route_run(
    segments: &[RouteSegment],
    duration: f64,
    seed: u64,
    params: &VehicleParams,
    presets: &PresetSet,
    config: &SynthConfig,
) -> Result<SynthRun> {
    params.validate()?;
    config.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    if segments.is_empty() || segments.iter().any(|s| !(s.length.is_finite() && s.length >= 0.0)) {
        return Err(invalid("route needs at least one segment with finite length"));
    }
    let speed = config.speed;
    let needed = speed * duration + config.view_far + 1.0;
    let mut route = Route {
        segments: segments.to_vec(),
    };
    let shortfall = needed - route.length();
    if shortfall > 0.0 {
        route.segments.last_mut().expect("nonempty").length += shortfall;
    }
    let route_presets = route
        .segments
        .iter()
        .map(|s| presets.require(s.class))
        .collect::<Result<Vec<_>>>()?;

    let mut profile: Option<TerrainProfile> = None;
    for (i, (seg, preset)) in route.segments.iter().zip(&route_presets).enumerate() {
        if seg.length <= 0.0 {
            continue;
        }
        let part = synth_terrain_profile(preset, seg.length, stream(seed, 100 + i as u64).random(), params)?;
        match profile.as_mut() {
            Some(p) => p.append(&part),
            None => profile = Some(part),
        }
    }
    let profile = profile.expect("route has positive length");
    let length = profile.end();

    let mut field_rng = stream(seed, 1);
    let spacing = config.correlation_length;
    let world = World {
        route: &route,
        presets: route_presets,
        grade: grade_profile(config, length)?,
        slip: Field::new(length, spacing, &mut field_rng),
        resistance: Field::new(length, spacing, &mut field_rng),
        drift: [
            Field::new(length, spacing, &mut field_rng),
            Field::new(length, spacing, &mut field_rng),
            Field::new(length, spacing, &mut field_rng),
        ],
        profile,
        config,
    };

    let trace = simulate_qv(&world.profile, speed, params, config.dt, duration)?;
    let body = |t: f64| {
        let i = ((t / config.dt).round() as usize).min(trace.samples.len() - 1);
        trace.samples[i]
    };
    let noise = &config.noise;
    let g = STANDARD_GRAVITY;
    let noisy_attitude = |a: Attitude, rng: &mut ChaCha8Rng| {
        Attitude::new(
            a.roll + gauss(rng, noise.attitude),
            a.pitch + gauss(rng, noise.attitude),
            a.yaw + gauss(rng, noise.heading),
        )
    };

    let mut series = SensorSeries::default();

    let mut rng = stream(seed, 2);
    for k in 0..sample_count(duration, config.imu_rate) {
        let t = k as f64 / config.imu_rate;
        let att = world.attitude(speed * t);
        let (sp, cp) = att.pitch.sin_cos();
        let (sr, cr) = att.roll.sin_cos();
        let accel = [
            g * sp + gauss(&mut rng, noise.accel),
            -g * cp * sr + gauss(&mut rng, noise.accel),
            body(t).z_ddot - g * cp * cr + gauss(&mut rng, noise.accel),
        ];
        series.imu.push(ImuSample {
            t,
            accel,
            attitude: noisy_attitude(att, &mut rng),
        });
    }

    let mut rng = stream(seed, 3);
    for k in 0..sample_count(duration, config.encoder_rate) {
        let t = k as f64 / config.encoder_rate;
        let w = speed / (params.wheel_radius * (1.0 - world.slip_at(speed * t)));
        let omega = [(); 4].map(|_| w * (1.0 + gauss(&mut rng, noise.omega)));
        series.encoders.push(EncoderSample { t, omega });
    }

    let mut rng = stream(seed, 4);
    let amps_per_newton = params.wheel_radius / (params.gear_ratio * params.torque_constant);
    for k in 0..sample_count(duration, config.current_rate) {
        let t = k as f64 / config.current_rate;
        let s = speed * t;
        let loads = wheel_loads_with(params, &world.attitude(s), LoadModel::Balanced)?;
        let fr = world.resistance_at(s);
        series.currents.push(CurrentSample {
            t,
            left: fr * loads.left() * amps_per_newton + gauss(&mut rng, noise.current),
            right: fr * loads.right() * amps_per_newton + gauss(&mut rng, noise.current),
        });
    }

    let mut pose_rng = stream(seed, 5);
    let mut cloud_rng = stream(seed, 6);
    let phase = cloud_rng.random_range(0.0..std::f64::consts::TAU);
    let [dim, bright] = config.illumination;
    for k in 0..sample_count(duration, config.frame_rate) {
        let t = k as f64 / config.frame_rate;
        let s = speed * t;
        let att = world.attitude(s);
        let position = world.world_point(s, 0.0, body(t).z + world.grade.elevation(s));
        series.poses.push(PoseSample {
            t,
            position: [
                position.x + gauss(&mut pose_rng, noise.position),
                position.y + gauss(&mut pose_rng, noise.position),
                position.z + gauss(&mut pose_rng, noise.position),
            ],
            attitude: noisy_attitude(att, &mut pose_rng),
        });
        let rot = rotation_matrix_rpy(&att)?;
        let brightness = dim
            + (bright - dim) * (0.5 + 0.5 * (std::f64::consts::TAU * t / 30.0 + phase).sin())
            + gauss(&mut cloud_rng, 0.01);
        let points = synth_frame(&world, s, &position, &rot, brightness, &mut cloud_rng);
        series.frames.push(CloudFrame { t, points });
    }

    let truth = RunTruth {
        route: route.clone(),
        origin: config.origin,
        heading: config.heading,
        speed,
    };
    let build = build_map(&series, params, &config.mapping)?;
    let mut patches = build.map.patches;
    for p in &mut patches {
        p.label = Some(truth.class_at_point(p.centroid));
    }
    Ok(SynthRun {
        series,
        truth,
        profile: world.profile,
        patches,
        warnings: build.warnings,
    })
}

/// One stereo frame in the vehicle frame of a vehicle at path distance `s`.
fn synth_frame(
    world: &World<'_>,
    s: f64,
    position: &Vector3<f64>,
    rot: &Matrix3<f64>,
    brightness: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<ColoredPoint> {
    let c = world.config;
    let to_camera = |p: Vector3<f64>, rng: &mut ChaCha8Rng| {
        let v = rot.transpose() * (p - position);
        [
            v.x + gauss(rng, c.noise.stereo),
            v.y + gauss(rng, c.noise.stereo),
            v.z + gauss(rng, c.noise.stereo),
        ]
    };
    let shade = |rgb: [f64; 3]| rgb.map(|v| (v * brightness).clamp(0.0, 255.0));

    let mut points = Vec::with_capacity(c.points_per_frame + 32);
    for _ in 0..c.points_per_frame {
        let sp = s + rng.random_range(c.view_near..c.view_far);
        let l = rng.random_range(-c.view_half_width..c.view_half_width);
        let preset = world.preset(sp);
        let z = world.surface(sp, l) + gauss(rng, preset.roughness);
        let rgb = sample_color(preset, &world.drift, sp, rng);
        let p = to_camera(world.world_point(sp, l, z), rng);
        points.push(ColoredPoint::new(p, shade(rgb)));
    }
    if rng.random_bool(c.obstacle_probability) {
        let sp = s + rng.random_range(c.view_near..c.view_far);
        let l = rng.random_range(-c.view_half_width..c.view_half_width);
        let base = world.surface(sp, l);
        for _ in 0..30 {
            let z = base + rng.random_range(0.35..1.6);
            let jitter = (gauss(rng, 0.03), gauss(rng, 0.03));
            let p = to_camera(world.world_point(sp + jitter.0, l + jitter.1, z), rng);
            let rgb = [60.0 + gauss(rng, 8.0), 110.0 + gauss(rng, 10.0), 50.0 + gauss(rng, 8.0)];
            points.push(ColoredPoint::new(p, shade(rgb.map(|v| v.clamp(0.0, 255.0)))));
        }
    }
    points
}

fn sample_color(preset: &TerrainPreset, drift: &[Field; 3], s: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let total: f64 = preset.color.iter().map(|c| c.weight).sum();
    let mut u = rng.random_range(0.0..total);
    let mut component = &preset.color[preset.color.len() - 1];
    for c in &preset.color {
        if u < c.weight {
            component = c;
            break;
        }
        u -= c.weight;
    }
    let mut rgb = [0.0; 3];
    for k in 0..3 {
        let v = component.mean[k] + preset.color_drift * drift[k].at(s) + gauss(rng, component.std[k]);
        rgb[k] = v.clamp(0.0, 255.0);
    }
    rgb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{contact_feature_vector, ContactConfig};
    use crate::series::TimeWindow;

    #[test]
    fn route_lookup() {
        let route = Route {
            segments: vec![
                RouteSegment { class: TerrainClass::DirtRoad, length: 10.0 },
                RouteSegment { class: TerrainClass::Gravel, length: 5.0 },
            ],
        };
        assert_eq!(route.class_at(0.0), TerrainClass::DirtRoad);
        assert_eq!(route.class_at(9.99), TerrainClass::DirtRoad);
        assert_eq!(route.class_at(10.0), TerrainClass::Gravel);
        assert_eq!(route.class_at(100.0), TerrainClass::Gravel);
        assert_eq!(route.boundaries(), vec![10.0]);
    }

    #[test]
    fn field_interpolates_knots() {
        let mut rng = stream(1, 0);
        let f = Field::new(3.0, 1.0, &mut rng);
        assert_eq!(f.at(0.0), f.knots[0]);
        assert_eq!(f.at(2.0), f.knots[2]);
        assert!((f.at(1.5) - 0.5 * (f.knots[1] + f.knots[2])).abs() < 1e-15);
    }

    #[test]
    fn stream_counts_and_rates() {
        let p = VehicleParams::default();
        let run = synth_run(TerrainClass::DirtRoad, 10.0, 0.5, 5, &p).unwrap();
        assert_eq!(run.series.frames.len(), 85);
        assert_eq!(run.series.poses.len(), 85);
        assert_eq!(run.series.imu.len(), 1000);
        assert_eq!(run.series.encoders.len(), 500);
        assert_eq!(run.series.currents.len(), 500);
        run.series.validate().unwrap();
        assert!(!run.patches.is_empty());
        assert!(run.patches.iter().all(|p| p.label == Some(TerrainClass::DirtRoad)));
    }

    #[test]
    fn same_seed_same_run() {
        let p = VehicleParams::default();
        let a = synth_run(TerrainClass::Gravel, 5.0, 0.5, 9, &p).unwrap();
        let b = synth_run(TerrainClass::Gravel, 5.0, 0.5, 9, &p).unwrap();
        let c = synth_run(TerrainClass::Gravel, 5.0, 0.5, 10, &p).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.patches, b.patches);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn contact_features_recover_generator() {
        let p = VehicleParams::default();
        let mut presets = PresetSet::default();
        for preset in &mut presets.preset {
            preset.slip_std = 0.0;
            preset.motion_resistance_cv = 0.0;
        }
        let config = SynthConfig::default();
        let route = [RouteSegment { class: TerrainClass::Ploughed, length: 0.0 }];
        let run = synth_route_run(&route, 30.0, 2, &p, &presets, &config).unwrap();
        let window = TimeWindow::new(2.0, 29.0).unwrap();
        let f = contact_feature_vector(&run.series, &window, &p, &ContactConfig::default()).unwrap();
        assert!((f.motion_resistance / 0.15 - 1.0).abs() < 0.01, "{}", f.motion_resistance);
        assert!((f.slip - 0.0057).abs() < 0.0005, "{}", f.slip);
        assert!((f.accel_std / 0.084 - 1.0).abs() < 0.1, "{}", f.accel_std);
    }
}
