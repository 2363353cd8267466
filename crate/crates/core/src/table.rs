//! Per-patch feature tables as CSV.
//!
//! Header: `id,t_start,t_end,x,y,label,<20 feature names>`. `label` is empty
//! for unlabeled patches.

use std::path::Path;

use crate::classifier::LabeledSample;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_LEN};
use crate::fsio::write_atomic;
use crate::mapping::MultimodalMap;
use crate::terrain::TerrainClass;

const LEADING: [&str; 6] = ["id", "t_start", "t_end", "x", "y", "label"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: usize,
    /// Traversal window, s.
    pub t_start: f64,
    pub t_end: f64,
    /// Patch centroid, world frame.
    pub x: f64,
    pub y: f64,
    pub label: Option<TerrainClass>,
    pub features: FeatureVector,
}

/// One record per completed patch, in map order.
pub fn records_from_map(map: &MultimodalMap) -> Vec<FeatureRecord> {
    map.patches
        .iter()
        .filter_map(|p| {
            let window = p.traversal?;
            Some(FeatureRecord {
                id: p.id,
                t_start: window.start,
                t_end: window.end,
                x: p.centroid[0],
                y: p.centroid[1],
                label: p.label,
                features: p.feature_vector()?,
            })
        })
        .collect()
}

pub fn write_feature_table(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = LEADING.iter().copied().chain(FeatureVector::names()).collect();
    writer.write_record(&header)?;
    for r in records {
        let mut fields = vec![
            r.id.to_string(),
            r.t_start.to_string(),
            r.t_end.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.label.map(|c| c.slug().to_string()).unwrap_or_default(),
        ];
        fields.extend(r.features.to_array().iter().map(f64::to_string));
        writer.write_record(&fields)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn read_feature_table(path: &Path) -> Result<Vec<FeatureRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let expected = LEADING.len() + FEATURE_LEN;
    let header = reader.headers()?.clone();
    if header.len() != expected || header.iter().zip(LEADING).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected a feature table header starting `{}`", LEADING.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| Error::Parse { line, message };
        if row.len() != expected {
            return Err(bad(format!("expected {expected} fields, got {}", row.len())));
        }
        let num = |k: usize| -> Result<f64> {
            row[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("column `{}`: {e}", &header[k])))
        };
        let id = row[0].trim().parse::<usize>().map_err(|e| bad(format!("column `id`: {e}")))?;
        let label = match row[5].trim() {
            "" => None,
            s => Some(s.parse::<TerrainClass>().map_err(|e| bad(e.to_string()))?),
        };
        let values = (LEADING.len()..expected).map(num).collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("feature values must be finite".into()));
        }
        out.push(FeatureRecord {
            id,
            t_start: num(1)?,
            t_end: num(2)?,
            x: num(3)?,
            y: num(4)?,
            label,
            features: FeatureVector::from_slice(&values)?,
        });
    }
    Ok(out)
}

/// Labeled samples; every record must carry a label.
pub fn labeled_samples(records: &[FeatureRecord]) -> Result<Vec<LabeledSample>> {
    records
        .iter()
        .map(|r| {
            Ok(LabeledSample {
                features: r.features,
                class: r
                    .label
                    .ok_or_else(|| Error::InvalidArgument(format!("patch {} has no label", r.id)))?,
            })
        })
        .collect()
}
