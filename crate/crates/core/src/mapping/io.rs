//! Map files.
//!
//! A map is a JSON document
//!
//! ```json
//! {
//!   "version": 1,
//!   "params": { "width": 0.54, ... },
//!   "feature_names": ["c1_mean", ...],
//!   "path": [[x, y, z], ...],
//!   "patches": [
//!     {
//!       "id": 3,
//!       "centroid": [x, y, z],
//!       "bbox_min": [x, y, z],
//!       "bbox_max": [x, y, z],
//!       "heading": 0.0,
//!       "observed_at": 0.35,
//!       "pose_range": [0, 3],
//!       "cloud": "run_clouds/patch_000003.csv",
//!       "features": [20 values in `feature_names` order],
//!       "label": "gravel",
//!       "predicted": "gravel",
//!       "traversal": { "start": 2.1, "end": 3.5 }
//!     }
//!   ]
//! }
//! ```
//!
//! `cloud` is relative to the map file's directory and names a CSV sidecar
//! with `x,y,z,r,g,b` rows in world coordinates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::fsio::write_atomic;
use crate::log::{cloud_dir_for, read_cloud_csv, write_cloud_csv};
use crate::params::VehicleParams;
use crate::series::TimeWindow;
use crate::terrain::TerrainClass;

use super::{MultimodalMap, PatchFeatures, TerrainPatch};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct MapFile {
    version: u32,
    params: VehicleParams,
    feature_names: Vec<String>,
    path: Vec<[f64; 3]>,
    patches: Vec<PatchRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PatchRecord {
    id: usize,
    centroid: [f64; 3],
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    heading: f64,
    observed_at: f64,
    pose_range: [usize; 2],
    cloud: String,
    features: Option<Vec<f64>>,
    label: Option<TerrainClass>,
    predicted: Option<TerrainClass>,
    traversal: Option<TimeWindow>,
}

/// Writes `map` to `path` and its patch clouds to a sibling
/// `<stem>_clouds` directory.
pub fn export_map(map: &MultimodalMap, path: &Path) -> Result<()> {
    if map.patches.is_empty() {
        return Err(Error::InvalidArgument("cannot export an empty map".into()));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let cloud_dir = cloud_dir_for(path);
    std::fs::create_dir_all(base.join(&cloud_dir))?;
    let mut records = Vec::with_capacity(map.patches.len());
    for patch in &map.patches {
        let cloud = format!("{cloud_dir}/patch_{:06}.csv", patch.id);
        write_cloud_csv(&base.join(&cloud), &patch.points)?;
        let (bbox_min, bbox_max) = patch.bounding_box();
        records.push(PatchRecord {
            id: patch.id,
            centroid: patch.centroid,
            bbox_min,
            bbox_max,
            heading: patch.heading,
            observed_at: patch.observed_at,
            pose_range: [patch.pose_range.0, patch.pose_range.1],
            cloud,
            features: patch.feature_vector().map(|f| f.to_array().to_vec()),
            label: patch.label,
            predicted: patch.predicted,
            traversal: patch.traversal,
        });
    }
    let file = MapFile {
        version: MAP_FORMAT_VERSION,
        params: map.params,
        feature_names: FeatureVector::names().into_iter().map(String::from).collect(),
        path: map.path.clone(),
        patches: records,
    };
    let mut text = serde_json::to_vec_pretty(&file)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn import_map(path: &Path) -> Result<MultimodalMap> {
    let file: MapFile = serde_json::from_slice(&std::fs::read(path)?)?;
    if file.version != MAP_FORMAT_VERSION {
        return Err(Error::Version(file.version));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let mut patches = Vec::with_capacity(file.patches.len());
    for r in file.patches {
        let features = match r.features {
            Some(v) => {
                let f = FeatureVector::from_slice(&v)?;
                PatchFeatures {
                    color: Some(f.color),
                    geometry: Some(f.geometry),
                    contact: Some(f.contact),
                }
            }
            None => PatchFeatures::default(),
        };
        patches.push(TerrainPatch {
            id: r.id,
            points: read_cloud_csv(&base.join(&r.cloud))?,
            pose_range: (r.pose_range[0], r.pose_range[1]),
            observed_at: r.observed_at,
            heading: r.heading,
            centroid: r.centroid,
            traversal: r.traversal,
            features,
            label: r.label,
            predicted: r.predicted,
        });
    }
    Ok(MultimodalMap {
        params: file.params,
        patches,
        path: file.path,
    })
}
