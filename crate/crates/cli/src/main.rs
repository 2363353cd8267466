//! `terrain`: simulate logs, extract patch features, train, evaluate and
//! classify.
//!
//! Settings resolve as command-line flag, then `--config` TOML file, then
//! built-in default. Config keys:
//!
//! ```toml
//! seed = 1
//! c = 1.0
//! kfold = 5
//! mask = "color+contact"
//! duration = 60.0
//! params = "vehicle.toml"   # vehicle parameters
//! presets = "presets.toml"  # simulator terrain presets
//! [synth]                   # simulator settings: speed, noise, rates, ...
//! [mapping]                 # patch segmentation and association
//! ```

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use terrain_core::classifier::{evaluate, kfold_cv, train_ecoc, EcocModel, LabeledDataset, DEFAULT_C};
use terrain_core::fsio::write_atomic;
use terrain_core::log::{read_log_file, write_log_file};
use terrain_core::mapping::{build_map, export_map, MappingConfig};
use terrain_core::sim::{synth_route_run, PresetSet, RouteSegment, RunTruth, SynthConfig};
use terrain_core::table::{labeled_samples, read_feature_table, records_from_map, write_feature_table, FeatureRecord};
use terrain_core::{FeatureMask, TerrainClass, VehicleParams};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_KFOLD: usize = 5;
const DEFAULT_DURATION: f64 = 60.0;

#[derive(Parser)]
#[command(name = "terrain", version, about = "Multimodal terrain classification pipeline")]
struct Cli {
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Vehicle parameter TOML file.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a sensor log over one or more terrain segments.
    Simulate(SimulateArgs),
    /// Build patches from a log and write their feature table.
    Extract(ExtractArgs),
    /// Train a classifier with k-fold cross-validation.
    Train(TrainArgs),
    /// Evaluate a model on labeled feature tables.
    Evaluate(EvaluateArgs),
    /// Classify the patches of a log and export the map.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Terrain class, optionally `class:length_m`; repeat for a mixed route.
    /// The last segment is extended to cover the run.
    #[arg(long = "class", required = true)]
    segments: Vec<String>,
    /// Run duration, s.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Travel speed, m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Simulator preset TOML file.
    #[arg(long)]
    presets: Option<PathBuf>,
    /// Output log; ground truth is written next to it as `<stem>.truth.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    log: PathBuf,
    /// Label every patch with this class instead of the log's truth file.
    #[arg(long)]
    label: Option<TerrainClass>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled feature tables; repeat to combine several.
    #[arg(long, required = true)]
    features: Vec<PathBuf>,
    /// color, geom, contact, color+contact or all.
    #[arg(long)]
    mask: Option<FeatureMask>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    kfold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, required = true)]
    features: Vec<PathBuf>,
    /// Report path; `.json` gets the JSON report, anything else the table.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    map: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    c: Option<f64>,
    kfold: Option<usize>,
    mask: Option<FeatureMask>,
    duration: Option<f64>,
    params: Option<PathBuf>,
    presets: Option<PathBuf>,
    synth: Option<SynthConfig>,
    mapping: Option<MappingConfig>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn mapping(&self) -> MappingConfig {
        self.mapping.unwrap_or_default()
    }
}

/// What `simulate` knows about the run, stored beside the log.
#[derive(Serialize, Deserialize)]
struct TruthFile {
    seed: u64,
    duration: f64,
    truth: RunTruth,
}

fn truth_path(log: &Path) -> PathBuf {
    let stem = log.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    log.with_file_name(format!("{stem}.truth.json"))
}

fn parse_segment(text: &str) -> Result<RouteSegment> {
    let (class, length) = match text.split_once(':') {
        Some((c, l)) => (c, l.trim().parse::<f64>().with_context(|| format!("segment length in `{text}`"))?),
        None => (text, 0.0),
    };
    Ok(RouteSegment {
        class: class.parse()?,
        length,
    })
}

fn simulate(args: SimulateArgs, cfg: &FileConfig, params: &VehicleParams) -> Result<()> {
    let segments = args.segments.iter().map(|s| parse_segment(s)).collect::<Result<Vec<_>>>()?;
    let presets = match args.presets.as_ref().or(cfg.presets.as_ref()) {
        Some(path) => PresetSet::load(path).with_context(|| format!("loading presets {}", path.display()))?,
        None => PresetSet::default(),
    };
    let mut synth = cfg.synth.unwrap_or_default();
    if let Some(mapping) = cfg.mapping {
        synth.mapping = mapping;
    }
    if let Some(speed) = args.speed {
        synth.speed = speed;
    }
    let duration = args.duration.or(cfg.duration).unwrap_or(DEFAULT_DURATION);
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let run = synth_route_run(&segments, duration, seed, params, &presets, &synth)?;
    write_log_file(&run.series, &args.out)?;
    let truth = TruthFile {
        seed,
        duration,
        truth: run.truth,
    };
    let mut text = serde_json::to_vec_pretty(&truth)?;
    text.push(b'\n');
    write_atomic(&truth_path(&args.out), &text)?;
    println!(
        "wrote {} ({} records, {} frames)",
        args.out.display(),
        run.series.record_count(),
        run.series.frames.len()
    );
    Ok(())
}

fn load_truth(log: &Path) -> Result<Option<RunTruth>> {
    let path = truth_path(log);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let file: TruthFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Some(file.truth))
}

fn extract(args: ExtractArgs, cfg: &FileConfig, params: &VehicleParams) -> Result<()> {
    let series = read_log_file(&args.log).with_context(|| format!("reading {}", args.log.display()))?;
    let built = build_map(&series, params, &cfg.mapping())?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let mut map = built.map;
    let truth = if args.label.is_none() { load_truth(&args.log)? } else { None };
    for patch in &mut map.patches {
        patch.label = args.label.or_else(|| truth.as_ref().map(|t| t.class_at_point(patch.centroid)));
    }
    let records = records_from_map(&map);
    if records.is_empty() {
        bail!("no traversed patches in {}", args.log.display());
    }
    write_feature_table(&args.out, &records)?;
    println!(
        "wrote {} ({} patches, {} pending)",
        args.out.display(),
        records.len(),
        built.pending.len()
    );
    Ok(())
}

fn read_tables(paths: &[PathBuf]) -> Result<Vec<FeatureRecord>> {
    let mut out = Vec::new();
    for path in paths {
        out.extend(read_feature_table(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(out)
}

fn train(args: TrainArgs, cfg: &FileConfig) -> Result<()> {
    let mask = args.mask.or(cfg.mask).unwrap_or(FeatureMask::ALL);
    let c = args.c.or(cfg.c).unwrap_or(DEFAULT_C);
    let k = args.kfold.or(cfg.kfold).unwrap_or(DEFAULT_KFOLD);
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let samples = labeled_samples(&read_tables(&args.features)?)?;
    let data = LabeledDataset::from_samples(&samples, mask)?;
    let cv = kfold_cv(&data, k, c, seed)?;
    let model = train_ecoc(&data, c, seed)?;
    model.save(&args.out)?;
    println!(
        "{k}-fold cross-validation error {:.1}% over {} samples ({mask})",
        100.0 * cv.mean_error,
        data.len()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let model = EcocModel::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let samples = labeled_samples(&read_tables(&args.features)?)?;
    let data = LabeledDataset::from_samples(&samples, model.mask)?;
    let report = evaluate(&model, &data)?;
    let text = report.to_text();
    let is_json = args.report.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let body = if is_json { report.to_json()? + "\n" } else { text.clone() };
    write_atomic(&args.report, body.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn classify(args: ClassifyArgs, cfg: &FileConfig, params: &VehicleParams) -> Result<()> {
    let model = EcocModel::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let series = read_log_file(&args.log).with_context(|| format!("reading {}", args.log.display()))?;
    let built = build_map(&series, params, &cfg.mapping())?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let mut map = built.map;
    if map.patches.is_empty() {
        bail!("no traversed patches in {}", args.log.display());
    }
    let truth = load_truth(&args.log)?;
    let mut counts = [0usize; 4];
    for patch in &mut map.patches {
        let features = patch.feature_vector().expect("completed patches carry every family");
        let class = model.predict_features(&features)?;
        counts[class.index()] += 1;
        patch.predicted = Some(class);
        patch.label = truth.as_ref().map(|t| t.class_at_point(patch.centroid));
    }
    export_map(&map, &args.map)?;
    let summary: Vec<String> = TerrainClass::ALL
        .iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0)
        .map(|(c, n)| format!("{c} {n}"))
        .collect();
    println!("wrote {} ({})", args.map.display(), summary.join(", "));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let params = match cli.params.as_ref().or(cfg.params.as_ref()) {
        Some(path) => VehicleParams::load(path).with_context(|| format!("loading params {}", path.display()))?,
        None => VehicleParams::default(),
    };
    match cli.command {
        Command::Simulate(a) => simulate(a, &cfg, &params),
        Command::Extract(a) => extract(a, &cfg, &params),
        Command::Train(a) => train(a, &cfg),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Classify(a) => classify(a, &cfg, &params),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version exit 0, usage errors 2.
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
