//! One-degree-of-freedom quarter-vehicle model.
//!
//! `m_b z_b'' = k_w (z_d - z_b) + c_w (z_d' - z_b')`, driven by the terrain
//! elevation `z_d` seen at constant travel speed.

use nalgebra::{Matrix3, Vector3};

use crate::error::{invalid, Error, Result};
use crate::params::VehicleParams;

use super::profile::TerrainProfile;

/// Temporal excitation frequency `2 pi V / lambda`, rad/s.
pub fn excitation_frequency(speed: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(invalid(format!("speed must be non-negative, got {speed}")));
    }
    Ok(std::f64::consts::TAU * speed / wavelength)
}

/// Acceleration transfer magnitude `|z_b''| / |z_d|`, 1/s^2.
pub fn transfer_magnitude(omega: f64, params: &VehicleParams) -> f64 {
    let k = params.wheel_stiffness;
    let c = params.wheel_damping;
    let m = params.sprung_mass;
    let w2 = omega * omega;
    if w2 == 0.0 {
        return 0.0;
    }
    let num = k * k + c * c * w2;
    let den = (k - m * w2).powi(2) + c * c * w2;
    w2 * (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvSample {
    pub t: f64,
    pub z: f64,
    pub z_dot: f64,
    pub z_ddot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QvTrace {
    pub dt: f64,
    pub samples: Vec<QvSample>,
}

impl QvTrace {
    pub fn accelerations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.z_ddot).collect()
    }
}

/// Largest stable step: one twentieth of the natural period.
pub fn max_step(params: &VehicleParams) -> f64 {
    let f_n = params.natural_frequency() / std::f64::consts::TAU;
    1.0 / (20.0 * f_n)
}

/// Integrates the body response with fixed-step RK4 for `duration` seconds,
/// starting at rest on the profile's first elevation sample.
pub fn simulate_qv(
    profile: &TerrainProfile,
    speed: f64,
    params: &VehicleParams,
    dt: f64,
    duration: f64,
) -> Result<QvTrace> {
    params.validate()?;
    if !(speed.is_finite() && speed > 0.0) {
        return Err(invalid(format!("speed must be positive, got {speed}")));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid(format!("duration must be non-negative, got {duration}")));
    }
    let max = max_step(params);
    if !(dt.is_finite() && dt > 0.0 && dt <= max) {
        return Err(Error::Stability { dt, max });
    }
    let start = profile.start();
    let required = speed * duration;
    if start + required > profile.end() + 1e-9 {
        return Err(Error::OutOfProfile {
            required,
            available: profile.end() - start,
        });
    }

    let (k, c, m) = (params.wheel_stiffness, params.wheel_damping, params.sprung_mass);
    let end = profile.end();
    // Input on one linear segment; flat beyond the last sample.
    let input = |seg: usize, t: f64| {
        let s = start + speed * t;
        if s >= end {
            return (profile.elevations[profile.elevations.len() - 1], 0.0);
        }
        let (z, slope) = profile.eval_segment(seg, s);
        (z, slope * speed)
    };
    let accel = |seg: usize, t: f64, z: f64, v: f64| {
        let (zd, zd_dot) = input(seg, t);
        (k * (zd - z) + c * (zd_dot - v)) / m
    };
    // Classic RK4 over [t0, t1], which must lie within one segment.
    let rk4 = |seg: usize, t0: f64, t1: f64, z: f64, v: f64| {
        let h = t1 - t0;
        let k1 = (v, accel(seg, t0, z, v));
        let k2 = (v + 0.5 * h * k1.1, accel(seg, t0 + 0.5 * h, z + 0.5 * h * k1.0, v + 0.5 * h * k1.1));
        let k3 = (v + 0.5 * h * k2.1, accel(seg, t0 + 0.5 * h, z + 0.5 * h * k2.0, v + 0.5 * h * k2.1));
        let k4 = (v + h * k3.1, accel(seg, t1, z + h * k3.0, v + h * k3.1));
        (
            z + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };

    let steps = (duration / dt).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut z, mut v) = (input(profile.segment_index(start), 0.0).0, 0.0);
    for i in 0..=steps {
        let t = i as f64 * dt;
        let seg = profile.segment_index(start + speed * t);
        samples.push(QvSample {
            t,
            z,
            z_dot: v,
            z_ddot: accel(seg, t, z, v),
        });
        if i == steps {
            break;
        }
        // The input slope jumps at profile knots; integrate piecewise between
        // them so every RK4 stage sees a smooth right-hand side.
        let t_next = (i + 1) as f64 * dt;
        let mut t0 = t;
        let mut seg = seg;
        let knot_time = |seg: usize| {
            let knot = profile.distances.get(seg + 1).copied().unwrap_or(f64::INFINITY);
            (knot - start) / speed
        };
        loop {
            while seg + 2 < profile.distances.len() && knot_time(seg) <= t0 + 1e-12 {
                seg += 1;
            }
            let t_knot = knot_time(seg);
            let t1 = if t_knot > t0 && t_knot < t_next && seg + 2 < profile.distances.len() {
                t_knot
            } else {
                t_next
            };
            (z, v) = rk4(seg, t0, t1, z, v);
            if t1 >= t_next {
                break;
            }
            t0 = t1;
            seg += 1;
        }
    }
    Ok(QvTrace { dt, samples })
}

/// Amplitude of the `omega` component of a uniformly sampled signal,
/// by least squares on `[cos, sin, 1]`.
pub fn harmonic_amplitude(values: &[f64], dt: f64, omega: f64) -> f64 {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (i, &y) in values.iter().enumerate() {
        let t = i as f64 * dt;
        let row = Vector3::new((omega * t).cos(), (omega * t).sin(), 1.0);
        ata += row * row.transpose();
        atb += row * y;
    }
    match ata.lu().solve(&atb) {
        Some(x) => x.x.hypot(x.y),
        None => 0.0,
    }
}
