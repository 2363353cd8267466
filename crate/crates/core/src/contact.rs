//! Proprioceptive ("contact") features: quasi-static wheel loads, motion
//! resistance from motor current, longitudinal slip, and vertical
//! acceleration statistics.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{rotation_matrix_rpy, wrap_angle, Attitude};
use crate::params::VehicleParams;
use crate::series::{
    check_coverage, in_window, nearest, nearest_index, ImuSample, PoseSample, SensorSeries,
    TimeWindow, DEFAULT_MAX_GAP,
};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Lower end of the reported slip range; smaller values are clamped and flagged.
pub const SLIP_FLOOR: f64 = -0.05;

/// Which closed form to use for the rear-right wheel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadModel {
    /// Rear-right wheel carries `+ (W/2) cos(pitch) sin(roll) h/B`, which keeps
    /// vertical force and moment balance.
    #[default]
    Balanced,
    /// Rear-right wheel identical to rear-left. Violates equilibrium whenever
    /// roll is non-zero; kept for comparison only.
    Unbalanced,
}

/// Vertical wheel forces, N, ordered front-left, rear-left, front-right,
/// rear-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelLoads {
    pub loads: [f64; 4],
    /// Set when any wheel would need a negative (pulling) force.
    pub tip_over: bool,
}

impl WheelLoads {
    pub fn total(&self) -> f64 {
        self.loads.iter().sum()
    }
    pub fn left(&self) -> f64 {
        self.loads[0] + self.loads[1]
    }
    pub fn right(&self) -> f64 {
        self.loads[2] + self.loads[3]
    }
    pub fn front(&self) -> f64 {
        self.loads[0] + self.loads[2]
    }
    pub fn rear(&self) -> f64 {
        self.loads[1] + self.loads[3]
    }
}

pub fn wheel_loads(params: &VehicleParams, attitude: &Attitude) -> Result<WheelLoads> {
    wheel_loads_with(params, attitude, LoadModel::Balanced)
}

pub fn wheel_loads_with(
    params: &VehicleParams,
    attitude: &Attitude,
    model: LoadModel,
) -> Result<WheelLoads> {
    if !attitude.is_quasi_static() {
        return Err(invalid(format!(
            "roll and pitch must lie in (-pi/2, pi/2), got {attitude:?}"
        )));
    }
    let w = params.weight;
    let h = params.cg_height;
    let (sf, cf) = attitude.roll.sin_cos();
    let (st, ct) = attitude.pitch.sin_cos();

    let base = w / 4.0 * cf * ct;
    let pitch_term = w / 2.0 * st * h / params.length;
    let roll_term = w / 2.0 * ct * sf * h / params.width;

    let rear_right = match model {
        LoadModel::Balanced => base - pitch_term + roll_term,
        LoadModel::Unbalanced => base - pitch_term - roll_term,
    };
    let loads = [
        base + pitch_term - roll_term,
        base - pitch_term - roll_term,
        base + pitch_term + roll_term,
        rear_right,
    ];
    Ok(WheelLoads {
        loads,
        tip_over: loads.iter().any(|&f| f < 0.0),
    })
}

/// Motion resistance coefficient `tau k_t I / (r F_z)`.
pub fn motion_resistance(current: f64, load: f64, params: &VehicleParams) -> Result<f64> {
    if !(load.is_finite() && load > 0.0) {
        return Err(Error::InvalidLoad(load));
    }
    if !current.is_finite() {
        return Err(invalid(format!("non-finite current {current}")));
    }
    Ok(params.wheel_torque_per_amp() / params.wheel_radius * current / load)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipEstimate {
    pub value: f64,
    /// Raw slip was negative (clamped to [`SLIP_FLOOR`] if below it).
    pub flagged: bool,
}

/// Travel reduction `1 - V / (omega r)`.
pub fn slip(speed: f64, wheel_omega: f64, wheel_radius: f64) -> Result<SlipEstimate> {
    if !(wheel_omega.is_finite() && wheel_omega > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "wheel angular velocity must be positive, got {wheel_omega}"
        )));
    }
    if !(wheel_radius.is_finite() && wheel_radius > 0.0) {
        return Err(invalid(format!("wheel radius must be positive, got {wheel_radius}")));
    }
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "vehicle speed must be non-negative, got {speed}"
        )));
    }
    let raw = 1.0 - speed / (wheel_omega * wheel_radius);
    Ok(SlipEstimate {
        value: raw.max(SLIP_FLOOR),
        flagged: raw < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelStats {
    pub rms: f64,
    pub std: f64,
}

/// RMS and population standard deviation of the gravity-compensated body
/// vertical acceleration `a_z + g cos(pitch) cos(roll)`.
pub fn vertical_accel_stats(samples: &[ImuSample], gravity: f64) -> Result<AccelStats> {
    if samples.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let (mut n, mut mean, mut m2, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let a = s.accel[2] + gravity * s.attitude.pitch.cos() * s.attitude.roll.cos();
        n += 1.0;
        let d = a - mean;
        mean += d / n;
        m2 += d * (a - mean);
        sq += a * a;
    }
    Ok(AccelStats {
        rms: (sq / n).sqrt(),
        std: (m2 / n).max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactFeatures {
    pub motion_resistance: f64,
    pub slip: f64,
    pub accel_rms: f64,
    pub accel_std: f64,
}

impl ContactFeatures {
    pub const LEN: usize = 4;
    pub const NAMES: [&'static str; 4] = ["motion_resistance", "slip", "accel_rms", "accel_std"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.motion_resistance, self.slip, self.accel_rms, self.accel_std]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [motion_resistance, slip, accel_rms, accel_std] => Some(Self {
                motion_resistance,
                slip,
                accel_rms,
                accel_std,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactConfig {
    /// Nearest-timestamp resampling tolerance, s.
    pub max_gap: f64,
    pub gravity: f64,
    /// Samples turning faster than this are excluded from slip, rad/s.
    pub max_yaw_rate: f64,
    pub load_model: LoadModel,
    /// Use attitude-dependent wheel loads; when false the level-ground
    /// static load `W/2` per side is used.
    pub compensate_load: bool,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            max_gap: DEFAULT_MAX_GAP,
            gravity: STANDARD_GRAVITY,
            max_yaw_rate: 0.05,
            load_model: LoadModel::Balanced,
            compensate_load: true,
        }
    }
}

/// Forward speed and yaw rate at pose `i` by central difference over its
/// neighbours. The displacement is projected on the vehicle x axis at pose
/// `i`, so lateral and vertical pose jitter does not inflate the speed.
pub fn pose_velocity(poses: &[PoseSample], i: usize) -> Option<(f64, f64)> {
    if i == 0 || i + 1 >= poses.len() {
        return None;
    }
    let (a, b) = (&poses[i - 1], &poses[i + 1]);
    let dt = b.t - a.t;
    let d = Vector3::from(b.position) - Vector3::from(a.position);
    let forward = rotation_matrix_rpy(&poses[i].attitude).ok()?.column(0).dot(&d);
    let yaw_rate = wrap_angle(b.attitude.yaw - a.attitude.yaw) / dt;
    Some((forward / dt, yaw_rate))
}

/// Per-sample motion resistance, averaged over the two sides.
pub fn motion_resistance_sample(
    left: f64,
    right: f64,
    attitude: &Attitude,
    params: &VehicleParams,
    config: &ContactConfig,
) -> Result<f64> {
    let (load_l, load_r) = if config.compensate_load {
        let loads = wheel_loads_with(params, attitude, config.load_model)?;
        (loads.left(), loads.right())
    } else {
        (params.weight / 2.0, params.weight / 2.0)
    };
    let fl = motion_resistance(left, load_l, params)?;
    let fr = motion_resistance(right, load_r, params)?;
    Ok(0.5 * (fl + fr))
}

/// The four contact features over one traversal window.
pub fn contact_feature_vector(
    series: &SensorSeries,
    window: &TimeWindow,
    params: &VehicleParams,
    config: &ContactConfig,
) -> Result<ContactFeatures> {
    check_coverage(&series.imu, window, config.max_gap, "imu")?;
    check_coverage(&series.encoders, window, config.max_gap, "enc")?;
    check_coverage(&series.currents, window, config.max_gap, "cur")?;
    check_coverage(&series.poses, window, config.max_gap, "pose")?;

    let currents = in_window(&series.currents, window);
    let mut fr_sum = 0.0;
    for c in currents {
        let imu = nearest(&series.imu, c.t, config.max_gap)
            .ok_or(Error::MissingData { stream: "imu", time: c.t })?;
        fr_sum += motion_resistance_sample(c.left, c.right, &imu.attitude, params, config)?;
    }
    let motion_resistance = fr_sum / currents.len() as f64;

    let (mut slip_sum, mut slip_n) = (0.0, 0usize);
    for e in in_window(&series.encoders, window) {
        let j = nearest_index(&series.poses, e.t, config.max_gap)
            .ok_or(Error::MissingData { stream: "pose", time: e.t })?;
        let Some((speed, yaw_rate)) = pose_velocity(&series.poses, j) else {
            continue;
        };
        // Turning and reversing are not straight-line travel.
        if yaw_rate.abs() > config.max_yaw_rate || speed < 0.0 {
            continue;
        }
        slip_sum += slip(speed, e.mean_omega(), params.wheel_radius)?.value;
        slip_n += 1;
    }
    if slip_n == 0 {
        return Err(Error::NoStraightMotion);
    }

    let accel = vertical_accel_stats(in_window(&series.imu, window), config.gravity)?;
    Ok(ContactFeatures {
        motion_resistance,
        slip: slip_sum / slip_n as f64,
        accel_rms: accel.rms,
        accel_std: accel.std,
    })
}
