//! Terrain patches and multimodal maps.
//!
//! Stereo frames are cut down to the ground corridor ahead of the vehicle,
//! stitched four at a time into patches, and each patch is matched with the
//! proprioceptive stream once the pose trajectory drives over it.

mod io;

pub use io::{export_map, import_map, MAP_FORMAT_VERSION};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::color::color_feature_vector;
use crate::contact::{contact_feature_vector, ContactConfig, ContactFeatures};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::frame::rotation_matrix_rpy;
use crate::geometry::geometric_feature_vector;
use crate::params::VehicleParams;
use crate::series::{nearest_index, CloudFrame, ColoredPoint, PoseSample, SensorSeries, TimeWindow};
use crate::terrain::TerrainClass;
use crate::color::ColorFeatures;
use crate::geometry::GeometricFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    /// Distance from the vehicle origin to the near edge of the ground
    /// corridor, m.
    pub look_ahead: f64,
    /// Corridor depth along the vehicle x axis for one frame, m.
    pub corridor_depth: f64,
    /// Corridor width, m. Defaults to the track width.
    pub corridor_width: f64,
    /// Points higher than this above the local ground estimate are
    /// obstacles, m.
    pub clearance: f64,
    pub frames_per_patch: usize,
    /// Largest frame to pose time offset accepted when stitching, s.
    pub max_pose_gap: f64,
    /// Patches with fewer ground points are dropped.
    pub min_points: usize,
    /// Travel distance after which an untraversed patch is dropped, m.
    pub horizon: f64,
    pub contact: ContactConfig,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            look_ahead: 1.0,
            corridor_depth: 0.52,
            corridor_width: 0.54,
            clearance: 0.25,
            frames_per_patch: 4,
            max_pose_gap: 0.2,
            min_points: 10,
            horizon: 30.0,
            contact: ContactConfig::default(),
        }
    }
}

/// Features attached to a patch. Color and geometry are available once the
/// patch is observed, contact once it has been traversed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PatchFeatures {
    pub color: Option<ColorFeatures>,
    pub geometry: Option<GeometricFeatures>,
    pub contact: Option<ContactFeatures>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainPatch {
    pub id: usize,
    /// Ground points in the world frame.
    pub points: Vec<ColoredPoint>,
    /// Indices of the poses matched to the first and last stitched frame.
    pub pose_range: (usize, usize),
    /// Time of the last stitched frame, s.
    pub observed_at: f64,
    /// Vehicle yaw at observation; orients the traversal footprint.
    pub heading: f64,
    pub centroid: [f64; 3],
    pub traversal: Option<TimeWindow>,
    pub features: PatchFeatures,
    /// Ground-truth class when known.
    pub label: Option<TerrainClass>,
    pub predicted: Option<TerrainClass>,
}

impl TerrainPatch {
    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| Vector3::from(p.position)).collect()
    }

    /// The full 20-value descriptor once every family is available.
    pub fn feature_vector(&self) -> Option<FeatureVector> {
        let f = &self.features;
        Some(FeatureVector {
            color: f.color?,
            geometry: f.geometry?,
            contact: f.contact?,
        })
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p.position[k]);
                hi[k] = hi[k].max(p.position[k]);
            }
        }
        (lo, hi)
    }

    /// Signed distance-like margin of `xy` outside the footprint rectangle
    /// (negative inside), in the patch's heading-aligned axes.
    fn footprint_margin(&self, xy: [f64; 2], params: &VehicleParams) -> f64 {
        let dx = xy[0] - self.centroid[0];
        let dy = xy[1] - self.centroid[1];
        let (s, c) = self.heading.sin_cos();
        let along = c * dx + s * dy;
        let lateral = -s * dx + c * dy;
        (along.abs() - params.length / 2.0).max(lateral.abs() - params.width / 2.0)
    }
}

/// Ground points of one frame in the world frame.
///
/// Points are taken from the corridor `[look_ahead, look_ahead + depth]` ahead
/// of the vehicle and `corridor_width` wide, then anything higher than
/// `clearance` above the corridor's lower-quartile height is discarded. The
/// camera frame is assumed to share the vehicle axes and origin. An empty
/// result means no ground was seen.
pub fn segment_ground(frame: &CloudFrame, pose: &PoseSample, config: &MappingConfig) -> Result<Vec<ColoredPoint>> {
    if frame.points.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let rot = rotation_matrix_rpy(&pose.attitude)?;
    let far = config.look_ahead + config.corridor_depth;
    let half = config.corridor_width / 2.0;
    let corridor: Vec<&ColoredPoint> = frame
        .points
        .iter()
        .filter(|p| {
            let [x, y, _] = p.position;
            x >= config.look_ahead && x <= far && y.abs() <= half
        })
        .collect();
    if corridor.is_empty() {
        return Ok(Vec::new());
    }
    let mut heights: Vec<f64> = corridor.iter().map(|p| p.position[2]).collect();
    heights.sort_by(f64::total_cmp);
    let ground = heights[(heights.len() - 1) / 4];
    let origin = Vector3::from(pose.position);
    Ok(corridor
        .into_iter()
        .filter(|p| p.position[2] <= ground + config.clearance)
        .map(|p| {
            let world = rot * Vector3::from(p.position) + origin;
            ColoredPoint {
                position: world.into(),
                color: p.color,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stitched {
    pub patches: Vec<TerrainPatch>,
    pub warnings: Vec<String>,
}

/// Groups consecutive frames into patches of `frames_per_patch` frames.
/// Groups with a frame lacking a pose, or with too little ground, are
/// dropped with a warning. Trailing frames that do not fill a group are
/// ignored.
pub fn stitch_patches(series: &SensorSeries, config: &MappingConfig) -> Result<Stitched> {
    if config.frames_per_patch == 0 {
        return Err(Error::InvalidArgument("frames_per_patch must be positive".into()));
    }
    let mut out = Stitched::default();
    let n = config.frames_per_patch;
    'groups: for (id, group) in series.frames.chunks_exact(n).enumerate() {
        let mut points = Vec::new();
        let mut poses = Vec::with_capacity(n);
        for frame in group {
            let Some(j) = nearest_index(&series.poses, frame.t, config.max_pose_gap) else {
                out.warnings.push(format!(
                    "patch {id} dropped: no pose within {} s of frame at t={}",
                    config.max_pose_gap, frame.t
                ));
                continue 'groups;
            };
            poses.push(j);
            match segment_ground(frame, &series.poses[j], config) {
                Ok(ground) => points.extend(ground),
                Err(Error::EmptyPatch) => {}
                Err(e) => return Err(e),
            }
        }
        if points.len() < config.min_points.max(3) {
            out.warnings.push(format!(
                "patch {id} dropped: empty ground ({} points) at t={}",
                points.len(),
                group[n - 1].t
            ));
            continue;
        }
        let centroid = points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(p.position))
            / points.len() as f64;
        let last = series.poses[poses[n - 1]];
        out.patches.push(TerrainPatch {
            id,
            points,
            pose_range: (poses[0], poses[n - 1]),
            observed_at: group[n - 1].t,
            heading: last.attitude.yaw,
            centroid: centroid.into(),
            traversal: None,
            features: PatchFeatures::default(),
            label: None,
            predicted: None,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchStatus {
    /// Traversed; all feature families are set.
    Completed,
    /// Not yet driven over, or still under the vehicle at the end of the
    /// series.
    Pending,
    /// The vehicle drove past the horizon without entering the footprint.
    Expired,
}

/// Time window during which the pose trajectory is inside the patch
/// footprint, with boundary crossings interpolated between poses.
pub fn find_traversal(
    patch: &TerrainPatch,
    poses: &[PoseSample],
    params: &VehicleParams,
    horizon: f64,
) -> std::result::Result<TimeWindow, PatchStatus> {
    let start = patch.pose_range.1;
    let margin = |p: &PoseSample| patch.footprint_margin([p.position[0], p.position[1]], params);
    let crossing = |a: &PoseSample, b: &PoseSample| {
        let (ma, mb) = (margin(a), margin(b));
        if (ma - mb).abs() < f64::EPSILON {
            return b.t;
        }
        let u = (ma / (ma - mb)).clamp(0.0, 1.0);
        a.t + u * (b.t - a.t)
    };

    let mut travelled = 0.0;
    let mut entry = None;
    for j in start..poses.len() {
        if j > start {
            let d = Vector3::from(poses[j].position) - Vector3::from(poses[j - 1].position);
            travelled += d.norm();
        }
        if margin(&poses[j]) <= 0.0 {
            let t = if j > start { crossing(&poses[j - 1], &poses[j]) } else { poses[j].t };
            entry = Some((j, t));
            break;
        }
        if travelled > horizon {
            return Err(PatchStatus::Expired);
        }
    }
    let Some((first, t_enter)) = entry else {
        return Err(PatchStatus::Pending);
    };
    for k in first + 1..poses.len() {
        if margin(&poses[k]) > 0.0 {
            let t_exit = crossing(&poses[k - 1], &poses[k]);
            return TimeWindow::new(t_enter, t_exit).map_err(|_| PatchStatus::Pending);
        }
    }
    Err(PatchStatus::Pending)
}

/// Computes the exteroceptive features of `patch` and, if the trajectory has
/// driven over it, its traversal window and contact features.
pub fn associate_features(
    patch: &mut TerrainPatch,
    series: &SensorSeries,
    params: &VehicleParams,
    config: &MappingConfig,
) -> Result<PatchStatus> {
    if patch.points.is_empty() {
        return Err(Error::EmptyPatch);
    }
    patch.features.color = Some(color_feature_vector(&patch.points)?);
    patch.features.geometry = Some(geometric_feature_vector(&patch.positions())?);
    match find_traversal(patch, &series.poses, params, config.horizon) {
        Ok(window) => {
            patch.features.contact = Some(contact_feature_vector(series, &window, params, &config.contact)?);
            patch.traversal = Some(window);
            Ok(PatchStatus::Completed)
        }
        Err(status) => {
            patch.traversal = None;
            patch.features.contact = None;
            Ok(status)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalMap {
    pub params: VehicleParams,
    /// Completed patches ordered by traversal start.
    pub patches: Vec<TerrainPatch>,
    /// Vehicle positions, in pose order.
    pub path: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapBuild {
    pub map: MultimodalMap,
    pub pending: Vec<TerrainPatch>,
    pub warnings: Vec<String>,
}

/// Stitches, associates and orders every patch of a series.
pub fn build_map(series: &SensorSeries, params: &VehicleParams, config: &MappingConfig) -> Result<MapBuild> {
    params.validate()?;
    series.validate()?;
    let Stitched { patches, mut warnings } = stitch_patches(series, config)?;
    let mut completed = Vec::new();
    let mut pending = Vec::new();
    for mut patch in patches {
        match associate_features(&mut patch, series, params, config) {
            Ok(PatchStatus::Completed) => completed.push(patch),
            Ok(PatchStatus::Pending) => pending.push(patch),
            Ok(PatchStatus::Expired) => {
                warnings.push(format!("patch {} dropped: not traversed within {} m", patch.id, config.horizon))
            }
            Err(e) => warnings.push(format!("patch {} dropped: {e}", patch.id)),
        }
    }
    completed.sort_by(|a: &TerrainPatch, b: &TerrainPatch| {
        let ta = a.traversal.map_or(f64::INFINITY, |w| w.start);
        let tb = b.traversal.map_or(f64::INFINITY, |w| w.start);
        ta.total_cmp(&tb).then(a.id.cmp(&b.id))
    });
    Ok(MapBuild {
        map: MultimodalMap {
            params: *params,
            patches: completed,
            path: series.poses.iter().map(|p| p.position).collect(),
        },
        pending,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Attitude;
    use approx::assert_abs_diff_eq;

    fn pose(t: f64, x: f64, y: f64, yaw: f64) -> PoseSample {
        PoseSample {
            t,
            position: [x, y, 0.0],
            attitude: Attitude::new(0.0, 0.0, yaw),
        }
    }

    fn flat_frame(t: f64) -> CloudFrame {
        let mut points = Vec::new();
        for i in 0..20 {
            for j in 0..12 {
                let x = 0.9 + 0.04 * i as f64;
                let y = -0.33 + 0.06 * j as f64;
                points.push(ColoredPoint::new([x, y, 0.0], [120.0, 100.0, 80.0]));
            }
        }
        CloudFrame { t, points }
    }

    fn in_corridor(p: &[f64; 3], cfg: &MappingConfig) -> bool {
        p[0] >= cfg.look_ahead && p[0] <= cfg.look_ahead + cfg.corridor_depth && p[1].abs() <= cfg.corridor_width / 2.0
    }

    #[test]
    fn flat_ground_keeps_corridor() {
        let cfg = MappingConfig::default();
        let frame = flat_frame(0.0);
        let expected = frame.points.iter().filter(|p| in_corridor(&p.position, &cfg)).count();
        let ground = segment_ground(&frame, &pose(0.0, 0.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(ground.len(), expected);
        assert!(expected > 0 && expected < frame.points.len());
    }

    #[test]
    fn obstacle_column_removed() {
        let cfg = MappingConfig::default();
        let mut frame = flat_frame(0.0);
        let base = frame.points.iter().filter(|p| in_corridor(&p.position, &cfg)).count();
        for k in 0..40 {
            frame.points.push(ColoredPoint::new([1.2, 0.0, 0.05 * k as f64 + 0.3], [40.0, 120.0, 40.0]));
        }
        let ground = segment_ground(&frame, &pose(0.0, 0.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(ground.len(), base);
        assert!(ground.iter().all(|p| p.position[2] < 0.25));
    }

    #[test]
    fn yawed_pose_rotates_points() {
        let cfg = MappingConfig::default();
        let frame = flat_frame(0.0);
        let a = segment_ground(&frame, &pose(0.0, 0.0, 0.0, 0.0), &cfg).unwrap();
        let b = segment_ground(&frame, &pose(0.0, 2.0, -1.0, std::f64::consts::FRAC_PI_2), &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            // (x, y) -> (-y, x) then translate.
            assert_abs_diff_eq!(q.position[0], -p.position[1] + 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q.position[1], p.position[0] - 1.0, epsilon = 1e-12);
            assert_eq!(p.color, q.color);
        }
    }

    #[test]
    fn empty_frame_and_empty_ground() {
        let cfg = MappingConfig::default();
        let empty = CloudFrame { t: 0.0, points: vec![] };
        assert!(matches!(segment_ground(&empty, &pose(0.0, 0.0, 0.0, 0.0), &cfg), Err(Error::EmptyPatch)));
        let behind = CloudFrame {
            t: 0.0,
            points: vec![ColoredPoint::new([-1.0, 0.0, 0.0], [1.0, 1.0, 1.0])],
        };
        assert!(segment_ground(&behind, &pose(0.0, 0.0, 0.0, 0.0), &cfg).unwrap().is_empty());
    }

    fn straight_series(frames: usize, speed: f64, rate: f64) -> SensorSeries {
        let mut s = SensorSeries::default();
        for k in 0..frames {
            let t = k as f64 / rate;
            s.poses.push(pose(t, speed * t, 0.0, 0.0));
            s.frames.push(flat_frame(t));
        }
        s
    }

    #[test]
    fn eight_frames_two_patches() {
        let series = straight_series(8, 0.5, 8.5);
        let out = stitch_patches(&series, &MappingConfig::default()).unwrap();
        assert_eq!(out.patches.len(), 2);
        assert!(out.warnings.is_empty());
        assert_eq!(out.patches[0].pose_range, (0, 3));
        assert_eq!(out.patches[1].pose_range, (4, 7));
        let series = straight_series(11, 0.5, 8.5);
        assert_eq!(stitch_patches(&series, &MappingConfig::default()).unwrap().patches.len(), 2);
    }

    #[test]
    fn pose_gap_drops_patch() {
        let mut series = straight_series(8, 0.5, 8.5);
        series.poses.remove(4);
        series.poses.remove(4);
        series.poses.remove(4);
        series.poses.remove(4);
        let out = stitch_patches(&series, &MappingConfig::default()).unwrap();
        assert_eq!(out.patches.len(), 1);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("patch 1"));
    }

    fn patch_at(x: f64, y: f64) -> TerrainPatch {
        TerrainPatch {
            id: 0,
            points: vec![],
            pose_range: (0, 0),
            observed_at: 0.0,
            heading: 0.0,
            centroid: [x, y, 0.0],
            traversal: None,
            features: PatchFeatures::default(),
            label: None,
            predicted: None,
        }
    }

    #[test]
    fn traversal_window_is_length_over_speed() {
        let params = VehicleParams::default();
        let poses: Vec<_> = (0..100).map(|k| pose(k as f64 * 0.1, 0.05 * k as f64, 0.0, 0.0)).collect();
        let w = find_traversal(&patch_at(2.0, 0.0), &poses, &params, 30.0).unwrap();
        assert_abs_diff_eq!(w.start, (2.0 - 0.35) / 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(w.duration(), 0.7 / 0.5, epsilon = 1e-9);
    }

    #[test]
    fn off_path_patch_stays_pending() {
        let params = VehicleParams::default();
        let poses: Vec<_> = (0..100).map(|k| pose(k as f64 * 0.1, 0.05 * k as f64, 0.0, 0.0)).collect();
        assert_eq!(find_traversal(&patch_at(2.0, 0.5), &poses, &params, 30.0), Err(PatchStatus::Pending));
        assert_eq!(find_traversal(&patch_at(2.0, 0.5), &poses, &params, 1.0), Err(PatchStatus::Expired));
        // Still under the vehicle when the log ends.
        assert_eq!(find_traversal(&patch_at(4.9, 0.0), &poses, &params, 30.0), Err(PatchStatus::Pending));
    }
}
