//! Sensor sample types and time-series helpers.
//!
//! Streams are asynchronous. Consumers resample by nearest timestamp with a
//! bounded gap (see [`DEFAULT_MAX_GAP`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Attitude;

/// Default nearest-neighbour resampling tolerance, seconds.
pub const DEFAULT_MAX_GAP: f64 = 0.2;

pub trait Timestamped {
    fn time(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColoredPoint {
    pub position: [f64; 3],
    /// RGB in `[0, 255]`, `None` for geometry-only returns.
    pub color: Option<[f64; 3]>,
}

impl ColoredPoint {
    pub fn new(position: [f64; 3], color: [f64; 3]) -> Self {
        Self {
            position,
            color: Some(color),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    /// Body-frame acceleration including gravity, m/s^2.
    pub accel: [f64; 3],
    pub attitude: Attitude,
}

/// Wheel angular velocities, rad/s, ordered front-left, rear-left,
/// front-right, rear-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderSample {
    pub t: f64,
    pub omega: [f64; 4],
}

impl EncoderSample {
    pub fn mean_omega(&self) -> f64 {
        self.omega.iter().sum::<f64>() / 4.0
    }
}

/// Per-side motor currents, amperes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSample {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub position: [f64; 3],
    pub attitude: Attitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudFrame {
    pub t: f64,
    /// Points in the camera frame.
    pub points: Vec<ColoredPoint>,
}

macro_rules! timestamped {
    ($($ty:ty),*) => {
        $(impl Timestamped for $ty {
            fn time(&self) -> f64 {
                self.t
            }
        })*
    };
}
timestamped!(ImuSample, EncoderSample, CurrentSample, PoseSample, CloudFrame);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end >= start) {
            return Err(Error::InvalidArgument(format!(
                "invalid time window [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorSeries {
    pub imu: Vec<ImuSample>,
    pub encoders: Vec<EncoderSample>,
    pub currents: Vec<CurrentSample>,
    pub poses: Vec<PoseSample>,
    pub frames: Vec<CloudFrame>,
}

impl SensorSeries {
    pub fn is_empty(&self) -> bool {
        self.imu.is_empty()
            && self.encoders.is_empty()
            && self.currents.is_empty()
            && self.poses.is_empty()
            && self.frames.is_empty()
    }

    pub fn record_count(&self) -> usize {
        self.imu.len() + self.encoders.len() + self.currents.len() + self.poses.len() + self.frames.len()
    }

    /// Checks that every stream is strictly increasing in time.
    pub fn validate(&self) -> Result<()> {
        check_ordered(&self.imu, "imu")?;
        check_ordered(&self.encoders, "enc")?;
        check_ordered(&self.currents, "cur")?;
        check_ordered(&self.poses, "pose")?;
        check_ordered(&self.frames, "cloud")?;
        Ok(())
    }

    /// Time interval shared by all non-empty streams.
    pub fn overlap(&self) -> Option<TimeWindow> {
        let mut start = f64::NEG_INFINITY;
        let mut end = f64::INFINITY;
        let mut any = false;
        let mut visit = |first: Option<f64>, last: Option<f64>| {
            if let (Some(a), Some(b)) = (first, last) {
                any = true;
                start = start.max(a);
                end = end.min(b);
            }
        };
        visit(self.imu.first().map(|s| s.t), self.imu.last().map(|s| s.t));
        visit(self.encoders.first().map(|s| s.t), self.encoders.last().map(|s| s.t));
        visit(self.currents.first().map(|s| s.t), self.currents.last().map(|s| s.t));
        visit(self.poses.first().map(|s| s.t), self.poses.last().map(|s| s.t));
        visit(self.frames.first().map(|s| s.t), self.frames.last().map(|s| s.t));
        (any && end >= start).then_some(TimeWindow { start, end })
    }
}

fn check_ordered<T: Timestamped>(samples: &[T], stream: &'static str) -> Result<()> {
    for (i, pair) in samples.windows(2).enumerate() {
        if pair[1].time().partial_cmp(&pair[0].time()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidArgument(format!(
                "stream `{stream}` not strictly increasing at sample {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Sub-slice of samples whose timestamps fall inside `window` (inclusive).
pub fn in_window<'a, T: Timestamped>(samples: &'a [T], window: &TimeWindow) -> &'a [T] {
    let lo = samples.partition_point(|s| s.time() < window.start);
    let hi = samples.partition_point(|s| s.time() <= window.end);
    &samples[lo..hi.max(lo)]
}

/// Index of the sample nearest to `t`, if within `max_gap`.
pub fn nearest_index<T: Timestamped>(samples: &[T], t: f64, max_gap: f64) -> Option<usize> {
    if samples.is_empty() {
        return None;
    }
    let i = samples.partition_point(|s| s.time() < t);
    let candidates = [i.checked_sub(1), (i < samples.len()).then_some(i)];
    candidates
        .into_iter()
        .flatten()
        .min_by(|&a, &b| {
            let da = (samples[a].time() - t).abs();
            let db = (samples[b].time() - t).abs();
            da.total_cmp(&db)
        })
        .filter(|&j| (samples[j].time() - t).abs() <= max_gap)
}

pub fn nearest<T: Timestamped>(samples: &[T], t: f64, max_gap: f64) -> Option<&T> {
    nearest_index(samples, t, max_gap).map(|i| &samples[i])
}

/// Fails with [`Error::MissingData`] if the stream leaves a hole longer than
/// `max_gap` anywhere in `window`, including at its edges.
pub fn check_coverage<T: Timestamped>(
    samples: &[T],
    window: &TimeWindow,
    max_gap: f64,
    stream: &'static str,
) -> Result<()> {
    let inside = in_window(samples, window);
    let mut prev = window.start;
    for s in inside {
        if s.time() - prev > max_gap {
            return Err(Error::MissingData { stream, time: prev });
        }
        prev = s.time();
    }
    if window.end - prev > max_gap {
        return Err(Error::MissingData { stream, time: prev });
    }
    Ok(())
}
