//! Color features: c1c2c3 transform and per-channel statistical moments.
//!
//! Each channel is the arctangent of one RGB component over the larger of
//! the other two, which cancels any common scaling of the three components.
//! The twelve features are the mean, variance, and the raw third and fourth
//! central moments of each channel, in that order, for c1, c2 and c3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ColoredPoint;

/// `atan(num / den)` with `x/0 -> pi/2` for `x > 0` and `0/0 -> 0`.
fn ratio_angle(num: f64, den: f64) -> f64 {
    // atan2 agrees with atan(num/den) for den > 0 and implements both
    // zero-denominator conventions.
    num.atan2(den)
}

/// Maps RGB (0-255) to the c1c2c3 channels, each in `[0, pi/2]`.
pub fn rgb_to_c1c2c3(r: f64, g: f64, b: f64) -> [f64; 3] {
    [
        ratio_angle(r, g.max(b)),
        ratio_angle(g, r.max(b)),
        ratio_angle(b, r.max(g)),
    ]
}

/// Population moments of one channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelMoments {
    pub mean: f64,
    pub variance: f64,
    /// Third central moment (not standardized).
    pub skewness: f64,
    /// Fourth central moment (not standardized).
    pub kurtosis: f64,
}

impl ChannelMoments {
    pub fn to_array(&self) -> [f64; 4] {
        [self.mean, self.variance, self.skewness, self.kurtosis]
    }
}

/// Streaming accumulator for the first four central moments.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn finish(&self) -> Option<ChannelMoments> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        Some(ChannelMoments {
            mean: self.mean,
            variance: (self.m2 / n).max(0.0),
            skewness: self.m3 / n,
            kurtosis: (self.m4 / n).max(0.0),
        })
    }
}

/// Mean, variance, third and fourth central moments with divisor N.
pub fn channel_moments(values: &[f64]) -> Result<ChannelMoments> {
    let mut acc = MomentAccumulator::new();
    values.iter().for_each(|&v| acc.push(v));
    acc.finish().ok_or(Error::EmptyPatch)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ColorFeatures {
    pub channels: [ChannelMoments; 3],
}

impl ColorFeatures {
    pub const LEN: usize = 12;
    pub const NAMES: [&'static str; 12] = [
        "c1_mean", "c1_var", "c1_skew", "c1_kurt", "c2_mean", "c2_var", "c2_skew", "c2_kurt",
        "c3_mean", "c3_var", "c3_skew", "c3_kurt",
    ];

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (chunk, ch) in out.chunks_exact_mut(4).zip(&self.channels) {
            chunk.copy_from_slice(&ch.to_array());
        }
        out
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        if v.len() != Self::LEN {
            return None;
        }
        let ch = |k: usize| ChannelMoments {
            mean: v[4 * k],
            variance: v[4 * k + 1],
            skewness: v[4 * k + 2],
            kurtosis: v[4 * k + 3],
        };
        Some(Self {
            channels: [ch(0), ch(1), ch(2)],
        })
    }
}

/// Color features of a patch. Points without color are skipped.
pub fn color_feature_vector(points: &[ColoredPoint]) -> Result<ColorFeatures> {
    if points.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let mut acc = [MomentAccumulator::new(); 3];
    for rgb in points.iter().filter_map(|p| p.color) {
        let c = rgb_to_c1c2c3(rgb[0], rgb[1], rgb[2]);
        for (a, v) in acc.iter_mut().zip(c) {
            a.push(v);
        }
    }
    let [a, b, c] = acc.map(|a| a.finish());
    match (a, b, c) {
        (Some(a), Some(b), Some(c)) => Ok(ColorFeatures { channels: [a, b, c] }),
        _ => Err(Error::MissingModality("color")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    /// Two-pass reference moments.
    fn two_pass(values: &[f64]) -> [f64; 4] {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut m = [mean, 0.0, 0.0, 0.0];
        for &v in values {
            let d = v - mean;
            m[1] += d * d;
            m[2] += d * d * d;
            m[3] += d * d * d * d;
        }
        m[1..].iter_mut().for_each(|v| *v /= n);
        m
    }

    #[test]
    fn gray_point() {
        let c = rgb_to_c1c2c3(128.0, 128.0, 128.0);
        for v in c {
            assert_abs_diff_eq!(v, FRAC_PI_4, epsilon = 1e-15);
        }
    }

    #[test]
    fn pure_red_and_black() {
        assert_eq!(rgb_to_c1c2c3(255.0, 0.0, 0.0), [FRAC_PI_2, 0.0, 0.0]);
        assert_eq!(rgb_to_c1c2c3(0.0, 0.0, 0.0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn mixed_color() {
        let c = rgb_to_c1c2c3(200.0, 100.0, 50.0);
        let oracle = [2f64.atan(), 0.5f64.atan(), 0.25f64.atan()];
        for k in 0..3 {
            assert_abs_diff_eq!(c[k], oracle[k], epsilon = 1e-15);
        }
        assert_abs_diff_eq!(c[0], 1.1071, epsilon = 1e-4);
        assert_abs_diff_eq!(c[1], 0.4636, epsilon = 1e-4);
        assert_abs_diff_eq!(c[2], 0.2450, epsilon = 1e-4);
    }

    #[test]
    fn constant_list_has_no_spread() {
        let m = channel_moments(&[0.3; 100]).unwrap();
        assert_abs_diff_eq!(m.mean, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.variance, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.skewness, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.kurtosis, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn three_values() {
        let m = channel_moments(&[0.2, 0.4, 0.6]).unwrap();
        // deviations -0.2, 0, 0.2
        assert_abs_diff_eq!(m.mean, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(m.variance, 0.08 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.skewness, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.kurtosis, 0.0032 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.variance, 0.0266667, epsilon = 1e-6);
        assert_abs_diff_eq!(m.kurtosis, 0.0010667, epsilon = 1e-6);
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(matches!(channel_moments(&[]), Err(Error::EmptyPatch)));
    }

    #[test]
    fn single_gray_point_patch() {
        let f = color_feature_vector(&[ColoredPoint::new([0.0; 3], [128.0; 3])]).unwrap();
        for ch in f.channels {
            assert_abs_diff_eq!(ch.mean, FRAC_PI_4, epsilon = 1e-15);
            assert_eq!((ch.variance, ch.skewness, ch.kurtosis), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn red_green_patch() {
        let pts = [
            ColoredPoint::new([0.0; 3], [255.0, 0.0, 0.0]),
            ColoredPoint::new([0.0; 3], [0.0, 255.0, 0.0]),
        ];
        let f = color_feature_vector(&pts).unwrap();
        let oracle = two_pass(&[FRAC_PI_2, 0.0]);
        assert_abs_diff_eq!(f.channels[0].mean, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(f.channels[0].variance, PI * PI / 16.0, epsilon = 1e-15);
        for (got, want) in f.channels[0].to_array().iter().zip(oracle) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn missing_color_is_an_error() {
        let pts = [ColoredPoint {
            position: [0.0; 3],
            color: None,
        }];
        assert!(matches!(
            color_feature_vector(&pts),
            Err(Error::MissingModality("color"))
        ));
        assert!(matches!(color_feature_vector(&[]), Err(Error::EmptyPatch)));
    }

    #[test]
    fn array_round_trip() {
        let f = color_feature_vector(&[
            ColoredPoint::new([0.0; 3], [10.0, 20.0, 30.0]),
            ColoredPoint::new([0.0; 3], [200.0, 20.0, 90.0]),
        ])
        .unwrap();
        assert_eq!(ColorFeatures::from_slice(&f.to_array()), Some(f));
        assert_eq!(ColorFeatures::from_slice(&[0.0; 3]), None);
    }

    fn rgb() -> impl Strategy<Value = [f64; 3]> {
        [0.0..=255.0f64, 0.0..=255.0f64, 0.0..=255.0f64]
    }

    proptest! {
        #[test]
        fn channels_bounded(c in rgb()) {
            for v in rgb_to_c1c2c3(c[0], c[1], c[2]) {
                prop_assert!((0.0..=FRAC_PI_2).contains(&v));
            }
        }

        #[test]
        fn streaming_matches_two_pass(values in prop::collection::vec(0.0..FRAC_PI_2, 1..10_000)) {
            let m = channel_moments(&values).unwrap().to_array();
            let o = two_pass(&values);
            for k in 0..4 {
                prop_assert!((m[k] - o[k]).abs() < 1e-12, "k={} {} vs {}", k, m[k], o[k]);
            }
        }

        #[test]
        fn symmetric_data_has_zero_third_moment(half in prop::collection::vec(0.0..1.0f64, 1..200), center in 0.0..1.5f64) {
            let values: Vec<f64> = half.iter().flat_map(|&d| [center + d, center - d]).collect();
            let m = channel_moments(&values).unwrap();
            prop_assert!(m.skewness.abs() < 1e-12);
        }

        #[test]
        fn order_and_illumination_invariant(colors in prop::collection::vec(rgb(), 1..100), s in 0.01..=1.0f64, seed in any::<u64>()) {
            let pts: Vec<ColoredPoint> = colors.iter().map(|&c| ColoredPoint::new([0.0; 3], c)).collect();
            let base = color_feature_vector(&pts).unwrap().to_array();

            let mut shuffled = pts.clone();
            // deterministic Fisher-Yates from the seed
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let perm = color_feature_vector(&shuffled).unwrap().to_array();

            let dimmed: Vec<ColoredPoint> = colors
                .iter()
                .map(|c| ColoredPoint::new([0.0; 3], [c[0] * s, c[1] * s, c[2] * s]))
                .collect();
            let dim = color_feature_vector(&dimmed).unwrap().to_array();
            for k in 0..12 {
                prop_assert!((base[k] - perm[k]).abs() < 1e-12);
                prop_assert!((base[k] - dim[k]).abs() < 1e-9);
            }
        }
    }
}
