//! Geometric patch features from a least-squares plane fit.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold on the middle singular value below which a point set
/// is treated as collinear.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    /// Unit normal with non-negative z component.
    pub normal: Vector3<f64>,
    pub centroid: Vector3<f64>,
    /// Singular values of the centered covariance matrix, descending.
    pub singular_values: [f64; 3],
}

impl PlaneFit {
    pub fn residual(&self) -> f64 {
        self.singular_values[2]
    }
}

/// Population covariance (divisor N) of the centered points.
fn covariance(points: &[Vector3<f64>]) -> (Vector3<f64>, Matrix3<f64>) {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let cov = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - centroid;
        acc + d * d.transpose()
    }) / n;
    (centroid, cov)
}

pub fn fit_plane(points: &[Vector3<f64>]) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::DegeneratePatch(points.len()));
    }
    let (centroid, cov) = covariance(points);
    let svd = cov.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.map(|i| svd.singular_values[i].max(0.0));

    if singular_values[0] <= 0.0 || singular_values[1] <= RANK_TOLERANCE * singular_values[0] {
        return Err(Error::RankDeficient);
    }

    let mut normal: Vector3<f64> = v_t.row(order[2]).transpose().normalize();
    if normal.z < 0.0 {
        normal = -normal;
    }
    Ok(PlaneFit {
        normal,
        centroid,
        singular_values,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometricFeatures {
    /// Angle between the fitted normal and the vertical, radians.
    pub slope: f64,
    /// Minimum singular value of the point covariance, m^2.
    pub goodness_of_fit: f64,
    /// Population variance of the z coordinates, m^2.
    pub z_variance: f64,
    /// `z_max - z_min`, m.
    pub height_range: f64,
}

impl GeometricFeatures {
    pub const LEN: usize = 4;
    pub const NAMES: [&'static str; 4] = ["slope", "fit_residual", "z_variance", "height_range"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.slope, self.goodness_of_fit, self.z_variance, self.height_range]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match *v {
            [slope, goodness_of_fit, z_variance, height_range] => Some(Self {
                slope,
                goodness_of_fit,
                z_variance,
                height_range,
            }),
            _ => None,
        }
    }
}

/// Single-pass z statistics: (population variance, range).
fn z_stats(points: &[Vector3<f64>]) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        n += 1.0;
        let d = p.z - mean;
        mean += d / n;
        m2 += d * (p.z - mean);
        lo = lo.min(p.z);
        hi = hi.max(p.z);
    }
    ((m2 / n).max(0.0), hi - lo)
}

/// Slope, fit residual, z variance and height range of a patch given in a
/// gravity-aligned frame.
pub fn geometric_feature_vector(points: &[Vector3<f64>]) -> Result<GeometricFeatures> {
    let fit = fit_plane(points)?;
    let (z_variance, height_range) = z_stats(points);
    Ok(GeometricFeatures {
        slope: fit.normal.z.clamp(-1.0, 1.0).acos(),
        goodness_of_fit: fit.residual(),
        z_variance,
        height_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(f: impl Fn(f64, f64) -> f64, n: usize, side: f64) -> Vec<Vector3<f64>> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let x = side * i as f64 / (n - 1) as f64;
                let y = side * j as f64 / (n - 1) as f64;
                pts.push(Vector3::new(x, y, f(x, y)));
            }
        }
        pts
    }

    /// Minimum of n^T C n over unit normals on a spherical grid, followed by
    /// local grid refinement.
    fn grid_residual(points: &[Vector3<f64>]) -> f64 {
        let (_, cov) = covariance(points);
        let eval = |az: f64, el: f64| {
            let n = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            (n.transpose() * cov * n)[0]
        };
        let (mut best, mut baz, mut bel) = (f64::INFINITY, 0.0, 0.0);
        let steps = 360;
        for i in 0..steps {
            for j in 0..=steps / 2 {
                let az = std::f64::consts::TAU * i as f64 / steps as f64;
                let el = std::f64::consts::PI * j as f64 / (steps / 2) as f64 - std::f64::consts::FRAC_PI_2;
                let v = eval(az, el);
                if v < best {
                    (best, baz, bel) = (v, az, el);
                }
            }
        }
        let mut h = std::f64::consts::TAU / steps as f64;
        for _ in 0..60 {
            for daz in [-h, 0.0, h] {
                for del in [-h, 0.0, h] {
                    let v = eval(baz + daz, bel + del);
                    if v < best {
                        (best, baz, bel) = (v, baz + daz, bel + del);
                    }
                }
            }
            h *= 0.7;
        }
        best
    }

    #[test]
    fn horizontal_plane() {
        let pts = grid(|_, _| 0.5, 8, 0.7);
        let fit = fit_plane(&pts).unwrap();
        assert_abs_diff_eq!(fit.normal, Vector3::z(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.residual(), 0.0, epsilon = 1e-15);
        let f = geometric_feature_vector(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(f.goodness_of_fit, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.z_variance, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.height_range, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inclined_plane() {
        let pts = grid(|x, _| 0.1 * x, 8, 0.7);
        let fit = fit_plane(&pts).unwrap();
        let analytic = Vector3::new(-0.1, 0.0, 1.0).normalize();
        assert_abs_diff_eq!(fit.normal, analytic, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.residual(), 0.0, epsilon = 1e-12);

        let f = geometric_feature_vector(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, 0.1f64.atan(), epsilon = 1e-6);
        assert_abs_diff_eq!(f.slope, 0.0997, epsilon = 1e-4);
        assert_abs_diff_eq!(f.goodness_of_fit, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.height_range, 0.07, epsilon = 1e-9);
    }

    #[test]
    fn non_coplanar_points_have_positive_residual() {
        let pts = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 0.1),
        ];
        let fit = fit_plane(&pts).unwrap();
        let oracle = grid_residual(&pts);
        assert!(fit.residual() > 0.0);
        assert_abs_diff_eq!(fit.residual(), oracle, epsilon = 1e-9);
        assert!(fit.singular_values[0] >= fit.singular_values[1]);
        assert!(fit.singular_values[1] >= fit.singular_values[2]);
    }

    #[test]
    fn degenerate_inputs() {
        let two = [Vector3::zeros(), Vector3::x()];
        assert!(matches!(fit_plane(&two), Err(Error::DegeneratePatch(2))));
        let line: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_plane(&line), Err(Error::RankDeficient)));
        let same = [Vector3::new(1.0, 1.0, 1.0); 4];
        assert!(matches!(fit_plane(&same), Err(Error::RankDeficient)));
        assert!(matches!(geometric_feature_vector(&two), Err(Error::DegeneratePatch(2))));
    }

    #[test]
    fn downward_normal_is_flipped() {
        // Points ordered so the raw SVD direction is arbitrary; result must point up.
        let pts = grid(|x, y| -0.3 * x + 0.2 * y, 5, 1.0);
        let fit = fit_plane(&pts).unwrap();
        assert!(fit.normal.z > 0.0);
    }

    fn cloud() -> impl Strategy<Value = Vec<Vector3<f64>>> {
        prop::collection::vec((0.0..0.7f64, 0.0..0.7f64, -0.05..0.05f64), 10..200)
            .prop_map(|v| v.into_iter().map(|(x, y, z)| Vector3::new(x + 0.1 * z, y, z + 0.05 * x)).collect())
    }

    proptest! {
        #[test]
        fn translation_invariance(pts in cloud(), dx in -50.0..50.0f64, dy in -50.0..50.0f64, dz in -5.0..5.0f64) {
            let a = geometric_feature_vector(&pts).unwrap().to_array();
            let shifted: Vec<_> = pts.iter().map(|p| p + Vector3::new(dx, dy, dz)).collect();
            let b = geometric_feature_vector(&shifted).unwrap().to_array();
            for k in 0..4 {
                prop_assert!((a[k] - b[k]).abs() < 1e-10, "k={} {} {}", k, a[k], b[k]);
            }
        }

        #[test]
        fn z_rotation_invariance(pts in cloud(), yaw in -3.1..3.1f64) {
            let a = geometric_feature_vector(&pts).unwrap().to_array();
            let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
            let turned: Vec<_> = pts.iter().map(|p| rot * p).collect();
            let b = geometric_feature_vector(&turned).unwrap().to_array();
            for k in 0..4 {
                prop_assert!((a[k] - b[k]).abs() < 1e-10, "k={} {} {}", k, a[k], b[k]);
            }
        }

        #[test]
        fn z_statistics_match_two_pass(pts in cloud()) {
            let f = geometric_feature_vector(&pts).unwrap();
            let n = pts.len() as f64;
            let mean = pts.iter().map(|p| p.z).sum::<f64>() / n;
            let var = pts.iter().map(|p| (p.z - mean).powi(2)).sum::<f64>() / n;
            let hi = pts.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
            let lo = pts.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
            prop_assert!((f.z_variance - var).abs() < 1e-12);
            prop_assert!((f.height_range - (hi - lo)).abs() < 1e-12);
        }

        #[test]
        fn planar_iff_zero_residual(a in -0.5..0.5f64, b in -0.5..0.5f64, c in -1.0..1.0f64, bump in 0.001..0.05f64) {
            let mut pts = grid(|x, y| a * x + b * y + c, 6, 0.7);
            prop_assert!(fit_plane(&pts).unwrap().residual() < 1e-10);
            pts[14].z += bump;
            prop_assert!(fit_plane(&pts).unwrap().residual() > 1e-10);
        }
    }
}
