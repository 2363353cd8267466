//! Synthetic train/test benchmark: labeled patches from simulated runs,
//! cross-validated training and evaluation per feature mask.

use serde::{Deserialize, Serialize};

use crate::classifier::{evaluate, kfold_cv, train_ecoc, EcocModel, EvaluationReport, LabeledDataset, LabeledSample};
use crate::error::{invalid, Result};
use crate::features::FeatureMask;
use crate::params::VehicleParams;
use crate::sim::{synth_route_run, PresetSet, RouteSegment, SynthConfig};
use crate::terrain::TerrainClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub train_per_class: usize,
    /// Test patches per class, in enumeration order.
    pub test_per_class: [usize; 4],
    pub kfold: usize,
    pub c: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            train_per_class: 59,
            test_per_class: [108, 125, 48, 21],
            kfold: 5,
            c: crate::classifier::DEFAULT_C,
            seed: 1,
        }
    }
}

/// Seed of the run that supplies `class` patches for `role` (0 train, 1 test).
pub fn run_seed(seed: u64, role: u64, class: TerrainClass) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (role << 8 | class.index() as u64)
}

/// The first `count` traversed patches of a single-class run.
pub fn collect_samples(
    class: TerrainClass,
    count: usize,
    seed: u64,
    params: &VehicleParams,
    presets: &PresetSet,
    config: &SynthConfig,
) -> Result<Vec<LabeledSample>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let m = &config.mapping;
    let stride = m.frames_per_patch as f64 / config.frame_rate;
    let lead = (m.look_ahead + m.corridor_depth + 2.0 * params.length) / config.speed;
    let mut duration = count as f64 * stride * 1.2 + lead + 2.0;
    for _ in 0..4 {
        let run = synth_route_run(&[RouteSegment { class, length: 0.0 }], duration, seed, params, presets, config)?;
        let samples: Vec<LabeledSample> = run
            .patches
            .iter()
            .filter_map(|p| Some(LabeledSample {
                features: p.feature_vector()?,
                class: p.label?,
            }))
            .take(count)
            .collect();
        if samples.len() == count {
            return Ok(samples);
        }
        duration *= 1.5;
    }
    Err(invalid(format!("could not collect {count} {class} patches")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkData {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

/// Training and test patches from independent runs per class.
pub fn benchmark_data(
    cfg: &BenchmarkConfig,
    params: &VehicleParams,
    presets: &PresetSet,
    config: &SynthConfig,
) -> Result<BenchmarkData> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in TerrainClass::ALL {
        train.extend(collect_samples(
            class,
            cfg.train_per_class,
            run_seed(cfg.seed, 0, class),
            params,
            presets,
            config,
        )?);
        test.extend(collect_samples(
            class,
            cfg.test_per_class[class.index()],
            run_seed(cfg.seed, 1, class),
            params,
            presets,
            config,
        )?);
    }
    Ok(BenchmarkData { train, test })
}

#[derive(Debug, Clone)]
pub struct MaskResult {
    pub mask: FeatureMask,
    pub cv_error: f64,
    pub model: EcocModel,
    pub report: EvaluationReport,
}

/// Cross-validates on the training set, fits a final model on all of it and
/// evaluates that model on the test set.
pub fn evaluate_mask(data: &BenchmarkData, mask: FeatureMask, cfg: &BenchmarkConfig) -> Result<MaskResult> {
    let train = LabeledDataset::from_samples(&data.train, mask)?;
    let test = LabeledDataset::from_samples(&data.test, mask)?;
    let cv = kfold_cv(&train, cfg.kfold, cfg.c, cfg.seed)?;
    let model = train_ecoc(&train, cfg.c, cfg.seed)?;
    let report = evaluate(&model, &test)?;
    Ok(MaskResult {
        mask,
        cv_error: cv.mean_error,
        model,
        report,
    })
}
