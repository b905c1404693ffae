//! Subcommand implementations. Every stage reads and writes plain files.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use trawl_core::cleaning::{clean, Track};
use trawl_core::classify::{self, predictor_importance, aggregate_importance, Model};
use trawl_core::estimation::KinematicTrack;
use trawl_core::evaluate::{kfold_eval, metrics, ConfusionMatrix, EvalConfig, Metrics, SplitKind};
use trawl_core::features::{extract_dataset, FeatureConfig};
use trawl_core::ingest::{self, ColumnMapping};
use trawl_core::pipeline::{
    self, complete_matrix, default_matrix, filter_tracks, generate_synthetic, load_reports, run_matrix, sha256_hex, write_matrix,
    ExperimentInput, ExperimentSetting, Filtering, PipelineConfig, SyntheticScenario,
};
use trawl_core::rebalance::{balance, BalanceConfig};
use trawl_core::segmentation::{segment_all, Segment, SegmentationMode};
use trawl_core::store::{read_jsonl, write_jsonl};
use trawl_core::LabeledDataset;

use crate::{Cli, Command};

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CliConfig {
    pub pipeline: PipelineConfig,
    pub scenario: SyntheticScenario,
    /// Column layout of the raw file given to `ingest`.
    pub mapping: ColumnMapping,
}

impl CliConfig {
    fn load(path: Option<&Path>, seed: Option<u64>) -> Result<CliConfig> {
        let mut cfg: CliConfig = match path {
            Some(p) => serde_json::from_reader(BufReader::new(open(p)?)).with_context(|| format!("reading config {}", p.display()))?,
            None => CliConfig::default(),
        };
        if let Some(seed) = seed {
            cfg.scenario.seed = seed;
            cfg.pipeline.balance.seed = seed;
            cfg.pipeline.classifier.svm.seed = seed;
            cfg.pipeline.eval.seed = seed;
        }
        cfg.mapping.validate()?;
        cfg.pipeline.validate()?;
        Ok(cfg)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| trawl_core::Error::file(path, e).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| trawl_core::Error::file(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| trawl_core::Error::file(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<trawl_core::AisRecord>> {
    let parsed = ingest::parse_csv(BufReader::new(open(path)?), &ColumnMapping::default())?;
    if !parsed.rejects.is_empty() {
        log::warn!("{}: {} rows rejected", path.display(), parsed.rejects.len());
    }
    Ok(parsed.records)
}

fn read_features(path: &Path) -> Result<LabeledDataset> {
    Ok(LabeledDataset::read_csv(BufReader::new(open(path)?))?)
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    input_digest: String,
    data_rows: u64,
    records: usize,
    rejected: std::collections::BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
struct ModelEvaluation {
    model: String,
    input_digest: String,
    confusion: ConfusionMatrix,
    metrics: Metrics,
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = CliConfig::load(cli.config.as_deref(), cli.seed)?;
    let workers = match cli.workers {
        Some(0) => return Err(UsageError("--workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // ignore the error if a pool is already set up (only happens under tests)
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    let out = &cli.out;
    fs::create_dir_all(out).map_err(|e| trawl_core::Error::file(out, e))?;
    let p = &cfg.pipeline;

    match &cli.command {
        Command::Ingest { input } => {
            let bytes = fs::read(input).map_err(|e| trawl_core::Error::file(input, e))?;
            let parsed = ingest::parse_csv(&bytes[..], &cfg.mapping)?;
            ingest::write_csv(&parsed.records, &ColumnMapping::default(), create(&out.join("records.csv"))?)?;
            ingest::write_reject_log(&parsed.rejects, create(&out.join("rejects.csv"))?)?;
            let summary = IngestSummary {
                input_digest: sha256_hex(&bytes),
                data_rows: parsed.data_rows,
                records: parsed.records.len(),
                rejected: parsed.reject_counts(),
            };
            write_json(&out.join("ingest.json"), &summary)?;
        }
        Command::Clean { input, minimum } => {
            let mut cc = p.cleaning.clone();
            cc.full = !minimum;
            let cleaned = clean(&read_records(input)?, &cc)?;
            write_jsonl(&cleaned.tracks, create(&out.join("tracks.jsonl"))?)?;
            write_json(&out.join("cleaning.json"), &cleaned.report)?;
        }
        Command::Filter { input, raw } => {
            let tracks: Vec<Track> = read_jsonl(open(input)?)?;
            let filtering = if *raw { Filtering::None } else { Filtering::Imm };
            let (filtered, failures) = filter_tracks(&tracks, filtering, &p.imm);
            let excluded: Vec<(u32, String)> = failures.iter().map(|(m, e)| (*m, e.to_string())).collect();
            for (mmsi, reason) in &excluded {
                log::warn!("track {mmsi} excluded: {reason}");
            }
            write_jsonl(&filtered, create(&out.join("filtered.jsonl"))?)?;
            write_json(&out.join("filter_failures.json"), &excluded)?;
            if filtered.is_empty() {
                if let Some((_, e)) = failures.into_iter().next() {
                    return Err(e.into());
                }
            }
        }
        Command::Segment { input, full_track } => {
            let tracks: Vec<KinematicTrack> = read_jsonl(open(input)?)?;
            let mode = if *full_track { SegmentationMode::FullTrack } else { SegmentationMode::Fixed { length: p.segment_length } };
            write_jsonl(&segment_all(&tracks, mode), create(&out.join("segments.jsonl"))?)?;
        }
        Command::Features { input, mode } => {
            let segments: Vec<Segment> = read_jsonl(open(input)?)?;
            let ds = extract_dataset(&segments, &FeatureConfig { mode: *mode, ..p.features.clone() });
            ds.write_csv(create(&out.join("features.csv"))?, false)?;
        }
        Command::Balance { input, method } => {
            let ds = read_features(input)?;
            let balanced = balance(&ds, &BalanceConfig { method: *method, ..p.balance.clone() })?;
            balanced.write_csv(create(&out.join("balanced.csv"))?, true)?;
        }
        Command::Train { input, classifier } => {
            let ds = read_features(input)?;
            let model = classify::train(*classifier, &ds, &p.classifier)?;
            write_json(&out.join("model.json"), &model)?;
            if let Model::Tree(tree) = &model {
                let imp = predictor_importance(tree);
                let grouped = aggregate_importance(&imp.feature_names, &imp.normalized).ok();
                write_json(&out.join("importance.json"), &(imp, grouped))?;
            }
        }
        Command::Eval { input, model, kfold, balance: method, classifier } => {
            let bytes = fs::read(input).map_err(|e| trawl_core::Error::file(input, e))?;
            let ds = LabeledDataset::read_csv(&bytes[..])?;
            if *kfold {
                let ec = EvalConfig { split: SplitKind::Kfold, ..p.eval.clone() };
                let report = kfold_eval(&ds, &ec, |train, test| {
                    Ok(pipeline::fit(train, *method, *classifier, ec.seed, p)?.0.predict_many(&test.rows))
                })?;
                write_json(&out.join("kfold.json"), &report)?;
            } else {
                let path = model.as_ref().ok_or_else(|| UsageError("--model is required without --kfold".into()))?;
                let model: Model = serde_json::from_reader(BufReader::new(open(path)?))
                    .with_context(|| format!("reading model {}", path.display()))?;
                let ds = ds.project(model.feature_names())?;
                let cm = ConfusionMatrix::from_predictions(&ds.labels, &model.predict_many(&ds.rows));
                let evaluation = ModelEvaluation {
                    model: model.kind().as_str().to_string(),
                    input_digest: sha256_hex(&bytes),
                    metrics: metrics(&cm, &p.eval.metrics)?,
                    confusion: cm,
                };
                write_json(&out.join("evaluation.json"), &evaluation)?;
            }
        }
        Command::Synth { fishing, transit, defects } => {
            let mut scenario = cfg.scenario.clone();
            if let Some(n) = fishing {
                scenario.fishing_tracks = *n;
            }
            if let Some(n) = transit {
                scenario.transit_tracks = *n;
            }
            if *defects {
                scenario.defects = pipeline::DefectConfig::typical();
            }
            let data = generate_synthetic(&scenario);
            ingest::write_csv(&data.records, &ColumnMapping::default(), create(&out.join("records.csv"))?)?;
            write_json(&out.join("truth.json"), &data.truth)?;
        }
        Command::Matrix { input, settings, complete_only, kfold_pareto } => {
            let seed = cli.seed.unwrap_or(p.eval.seed);
            let mut list = match settings {
                Some(path) => read_settings(path)?,
                None if *complete_only => complete_matrix(seed),
                None => default_matrix(seed),
            };
            if let Some(seed) = cli.seed {
                list.iter_mut().for_each(|s| s.seed = seed);
            }
            let bytes = fs::read(input).map_err(|e| trawl_core::Error::file(input, e))?;
            let data = ExperimentInput::from_csv_bytes(&bytes, &ColumnMapping::default())?;
            let result = run_matrix(&list, &data, p, workers, *kfold_pareto)?;
            write_matrix(out, &result)?;
            let summary = result.summary();
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if summary.failed.len() == list.len() && !list.is_empty() {
                let first = result.entries.iter().find_map(|e| e.error.clone());
                if let Some(e) = first {
                    return Err(e.into());
                }
            }
        }
        Command::Report { dir } => {
            let result = load_reports(dir)?;
            write_matrix(if out == Path::new(".") { dir } else { out }, &result)?;
            println!("{}", serde_json::to_string_pretty(&result.summary())?);
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SettingsFile {
    List(Vec<ExperimentSetting>),
    Wrapped { settings: Vec<ExperimentSetting> },
}

fn read_settings(path: &PathBuf) -> Result<Vec<ExperimentSetting>> {
    let file: SettingsFile =
        serde_json::from_reader(BufReader::new(open(path)?)).with_context(|| format!("reading settings {}", path.display()))?;
    Ok(match file {
        SettingsFile::List(v) | SettingsFile::Wrapped { settings: v } => v,
    })
}
