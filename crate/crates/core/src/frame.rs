//! Attitude and reference-frame math.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Roll-pitch-yaw attitude in radians.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Attitude {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn level() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }

    /// Roll and pitch inside the open interval where the quasi-static load
    /// model is meaningful.
    pub fn is_quasi_static(&self) -> bool {
        let lim = std::f64::consts::FRAC_PI_2;
        self.is_finite() && self.roll.abs() < lim && self.pitch.abs() < lim
    }
}

/// Rotation from the vehicle frame to the world frame, `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rotation_matrix_rpy(attitude: &Attitude) -> Result<Matrix3<f64>> {
    if !attitude.is_finite() {
        return Err(invalid(format!("non-finite attitude {attitude:?}")));
    }
    let (sf, cf) = attitude.roll.sin_cos();
    let (st, ct) = attitude.pitch.sin_cos();
    let (sp, cp) = attitude.yaw.sin_cos();
    #[rustfmt::skip]
    let r = Matrix3::new(
        cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
        sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
        -st,     ct * sf,                ct * cf,
    );
    Ok(r)
}

/// Vehicle weight `[0, 0, -W]` (world frame) expressed in the vehicle frame.
///
/// Yaw does not enter the result.
pub fn weight_in_vrf(weight: f64, attitude: &Attitude) -> Result<Vector3<f64>> {
    if !(weight.is_finite() && weight > 0.0) {
        return Err(invalid(format!("weight must be positive, got {weight}")));
    }
    if !attitude.is_finite() {
        return Err(invalid(format!("non-finite attitude {attitude:?}")));
    }
    let (sf, cf) = attitude.roll.sin_cos();
    let (st, ct) = attitude.pitch.sin_cos();
    Ok(Vector3::new(weight * st, -weight * ct * sf, -weight * ct * cf))
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rx(a: f64) -> Matrix3<f64> {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos())
    }
    fn ry(a: f64) -> Matrix3<f64> {
        Matrix3::new(a.cos(), 0.0, a.sin(), 0.0, 1.0, 0.0, -a.sin(), 0.0, a.cos())
    }
    fn rz(a: f64) -> Matrix3<f64> {
        Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn zero_attitude_is_identity() {
        let r = rotation_matrix_rpy(&Attitude::level()).unwrap();
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn pure_yaw_maps_x_to_y() {
        let r = rotation_matrix_rpy(&Attitude::new(0.0, 0.0, FRAC_PI_2)).unwrap();
        let v = r * Vector3::x();
        assert_abs_diff_eq!(v, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn matches_elementary_composition() {
        let a = Attitude::new(0.1, 0.2, 0.3);
        let r = rotation_matrix_rpy(&a).unwrap();
        let oracle = rz(0.3) * ry(0.2) * rx(0.1);
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(rotation_matrix_rpy(&Attitude::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(weight_in_vrf(313.6, &Attitude::new(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn level_weight() {
        let f = weight_in_vrf(313.6, &Attitude::level()).unwrap();
        assert_eq!(f, Vector3::new(0.0, 0.0, -313.6));
    }

    #[test]
    fn pitched_weight() {
        let theta = 10f64.to_radians();
        let f = weight_in_vrf(313.6, &Attitude::new(0.0, theta, 0.0)).unwrap();
        // oracle: R^-1 [0, 0, -W]
        let r = rotation_matrix_rpy(&Attitude::new(0.0, theta, 0.0)).unwrap();
        let oracle = r.transpose() * Vector3::new(0.0, 0.0, -313.6);
        assert_abs_diff_eq!(f, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(f.x, 54.46, epsilon = 0.01);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, -308.84, epsilon = 0.01);
    }

    #[test]
    fn rejects_non_positive_weight() {
        assert!(weight_in_vrf(0.0, &Attitude::level()).is_err());
        assert!(weight_in_vrf(-1.0, &Attitude::level()).is_err());
    }

    #[test]
    fn wrap() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-0.5), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(2.0 * PI + 0.1), 0.1, epsilon = 1e-12);
    }

    fn attitude() -> impl Strategy<Value = Attitude> {
        (-PI..PI, -1.5..1.5f64, -PI..PI).prop_map(|(r, p, y)| Attitude::new(r, p, y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotation_is_proper_orthonormal(a in attitude()) {
            let r = rotation_matrix_rpy(&a).unwrap();
            let e = r.transpose() * r - Matrix3::identity();
            prop_assert!(e.abs().max() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weight_projection_matches_matrix_path(a in attitude(), w in 1.0..1000.0f64) {
            let closed = weight_in_vrf(w, &a).unwrap();
            let r = rotation_matrix_rpy(&a).unwrap();
            let via_matrix = r.try_inverse().unwrap() * Vector3::new(0.0, 0.0, -w);
            prop_assert!((closed - via_matrix).abs().max() < 1e-12 * w.max(1.0));
            prop_assert!((closed.norm() - w).abs() < 1e-12 * w);
        }
    }
}
