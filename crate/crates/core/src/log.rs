//! JSON-lines sensor log reader and writer.
//!
//! One record per line, `{"t": <s>, "kind": ..., ...}`:
//!
//! | kind    | fields                                                   |
//! |---------|----------------------------------------------------------|
//! | `imu`   | `ax, ay, az` (m/s^2, body frame, gravity included), `roll, pitch, yaw` |
//! | `enc`   | `w1..w4` (rad/s; front-left, rear-left, front-right, rear-right) |
//! | `cur`   | `il, ir` (A, left and right motor)                       |
//! | `pose`  | `x, y, z` (m, world frame), `roll, pitch, yaw`           |
//! | `cloud` | `file`: point-cloud CSV path, relative to the log directory |
//!
//! Angles are radians unless the record carries `"angle_unit": "deg"`.
//! Cloud CSV files hold `x,y,z,r,g,b` per line (camera frame, meters; RGB in
//! 0-255); lines with only `x,y,z` are accepted as colorless points.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Attitude;
use crate::fsio::write_atomic;
use crate::series::{
    CloudFrame, ColoredPoint, CurrentSample, EncoderSample, ImuSample, PoseSample, SensorSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleUnit {
    #[serde(rename = "rad", alias = "radians")]
    Radians,
    #[serde(rename = "deg", alias = "degrees")]
    Degrees,
}

impl AngleUnit {
    fn to_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_radians(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Imu {
        t: f64,
        ax: f64,
        ay: f64,
        az: f64,
        roll: f64,
        pitch: f64,
        yaw: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle_unit: Option<AngleUnit>,
    },
    Enc {
        t: f64,
        w1: f64,
        w2: f64,
        w3: f64,
        w4: f64,
    },
    Cur {
        t: f64,
        il: f64,
        ir: f64,
    },
    Pose {
        t: f64,
        x: f64,
        y: f64,
        z: f64,
        roll: f64,
        pitch: f64,
        yaw: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle_unit: Option<AngleUnit>,
    },
    Cloud {
        t: f64,
        file: String,
    },
}

impl Record {
    fn time(&self) -> f64 {
        match self {
            Record::Imu { t, .. }
            | Record::Enc { t, .. }
            | Record::Cur { t, .. }
            | Record::Pose { t, .. }
            | Record::Cloud { t, .. } => *t,
        }
    }
}

fn attitude(roll: f64, pitch: f64, yaw: f64, unit: Option<AngleUnit>) -> Attitude {
    let unit = unit.unwrap_or(AngleUnit::Radians);
    Attitude::new(unit.to_radians(roll), unit.to_radians(pitch), unit.to_radians(yaw))
}

/// Parses a JSON-lines sensor log. Cloud file references are resolved
/// against `cloud_base`.
pub fn ingest_log<R: BufRead>(source: R, cloud_base: &Path) -> Result<SensorSeries> {
    let mut series = SensorSeries::default();
    // last timestamp per stream: imu, enc, cur, pose, cloud
    let mut last = [f64::NEG_INFINITY; 5];

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let t = record.time();
        if !t.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite timestamp {t}"),
            });
        }
        let (slot, stream) = match &record {
            Record::Imu { .. } => (0, "imu"),
            Record::Enc { .. } => (1, "enc"),
            Record::Cur { .. } => (2, "cur"),
            Record::Pose { .. } => (3, "pose"),
            Record::Cloud { .. } => (4, "cloud"),
        };
        if t <= last[slot] {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "timestamp {t} does not increase in stream `{stream}` (previous {})",
                    last[slot]
                ),
            });
        }
        last[slot] = t;

        match record {
            Record::Imu { t, ax, ay, az, roll, pitch, yaw, angle_unit } => {
                series.imu.push(ImuSample {
                    t,
                    accel: [ax, ay, az],
                    attitude: attitude(roll, pitch, yaw, angle_unit),
                })
            }
            Record::Enc { t, w1, w2, w3, w4 } => series.encoders.push(EncoderSample {
                t,
                omega: [w1, w2, w3, w4],
            }),
            Record::Cur { t, il, ir } => series.currents.push(CurrentSample {
                t,
                left: il,
                right: ir,
            }),
            Record::Pose { t, x, y, z, roll, pitch, yaw, angle_unit } => {
                series.poses.push(PoseSample {
                    t,
                    position: [x, y, z],
                    attitude: attitude(roll, pitch, yaw, angle_unit),
                })
            }
            Record::Cloud { t, file } => {
                let path = cloud_base.join(&file);
                let points = read_cloud_csv(&path).map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("cloud file `{}`: {e}", path.display()),
                })?;
                series.frames.push(CloudFrame { t, points });
            }
        }
    }

    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(series)
}

/// Writes `series` as a JSON-lines log. Cloud frames are written as CSV files
/// into `cloud_base/cloud_dir`, referenced relative to `cloud_base`.
pub fn export_log<W: Write>(
    series: &SensorSeries,
    mut out: W,
    cloud_base: &Path,
    cloud_dir: &str,
) -> Result<()> {
    if !series.frames.is_empty() {
        std::fs::create_dir_all(cloud_base.join(cloud_dir))?;
    }

    // Merge streams by time; ties keep the fixed stream order.
    let mut order: Vec<(f64, u8, usize)> = Vec::with_capacity(series.record_count());
    order.extend(series.imu.iter().enumerate().map(|(i, s)| (s.t, 0, i)));
    order.extend(series.encoders.iter().enumerate().map(|(i, s)| (s.t, 1, i)));
    order.extend(series.currents.iter().enumerate().map(|(i, s)| (s.t, 2, i)));
    order.extend(series.poses.iter().enumerate().map(|(i, s)| (s.t, 3, i)));
    order.extend(series.frames.iter().enumerate().map(|(i, s)| (s.t, 4, i)));
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    for (_, kind, i) in order {
        let record = match kind {
            0 => {
                let s = &series.imu[i];
                Record::Imu {
                    t: s.t,
                    ax: s.accel[0],
                    ay: s.accel[1],
                    az: s.accel[2],
                    roll: s.attitude.roll,
                    pitch: s.attitude.pitch,
                    yaw: s.attitude.yaw,
                    angle_unit: None,
                }
            }
            1 => {
                let s = &series.encoders[i];
                Record::Enc {
                    t: s.t,
                    w1: s.omega[0],
                    w2: s.omega[1],
                    w3: s.omega[2],
                    w4: s.omega[3],
                }
            }
            2 => {
                let s = &series.currents[i];
                Record::Cur {
                    t: s.t,
                    il: s.left,
                    ir: s.right,
                }
            }
            3 => {
                let s = &series.poses[i];
                Record::Pose {
                    t: s.t,
                    x: s.position[0],
                    y: s.position[1],
                    z: s.position[2],
                    roll: s.attitude.roll,
                    pitch: s.attitude.pitch,
                    yaw: s.attitude.yaw,
                    angle_unit: None,
                }
            }
            _ => {
                let frame = &series.frames[i];
                let file = format!("{cloud_dir}/cloud_{i:06}.csv");
                write_cloud_csv(&cloud_base.join(&file), &frame.points)?;
                Record::Cloud { t: frame.t, file }
            }
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Directory name used for the cloud sidecar files of a log at `path`.
pub fn cloud_dir_for(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "log".to_owned());
    format!("{stem}_clouds")
}

pub fn read_log_file(path: &Path) -> Result<SensorSeries> {
    let base = parent_dir(path);
    ingest_log(BufReader::new(File::open(path)?), &base)
}

pub fn write_log_file(series: &SensorSeries, path: &Path) -> Result<()> {
    let base = parent_dir(path);
    let mut out = Vec::new();
    export_log(series, &mut out, &base, &cloud_dir_for(path))?;
    write_atomic(path, &out)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn read_cloud_csv(path: &Path) -> Result<Vec<ColoredPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<f64> {
            record[k].parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("field {k} `{}`: {e}", &record[k]),
            })
        };
        let position = [parse(0)?, parse(1)?, parse(2)?];
        let color = match record.len() {
            3 => None,
            6 => {
                let rgb = [parse(3)?, parse(4)?, parse(5)?];
                if rgb.iter().any(|c| !(0.0..=255.0).contains(c)) {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("RGB {rgb:?} outside 0-255"),
                    });
                }
                Some(rgb)
            }
            n => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 or 6 fields, got {n}"),
                })
            }
        };
        points.push(ColoredPoint { position, color });
    }
    Ok(points)
}

pub fn write_cloud_csv(path: &Path, points: &[ColoredPoint]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    for p in points {
        let mut fields: Vec<String> = p.position.iter().map(|v| v.to_string()).collect();
        if let Some(rgb) = p.color {
            fields.extend(rgb.iter().map(|v| v.to_string()));
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}
