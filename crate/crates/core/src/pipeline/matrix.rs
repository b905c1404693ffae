//! The experiment matrix and its plot-ready outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_prepared, prepare, EvaluationReport, ExperimentError, ExperimentInput, ExperimentSetting, PipelineConfig, Preset, Prepared, Stages};
use crate::classify::ClassifierKind;
use crate::error::{Error, Result};
use crate::evaluate::{pareto_front, SplitKind};
use crate::features::FeatureMode;
use crate::rebalance::BalanceMethod;

const BALANCES: [BalanceMethod; 3] = [BalanceMethod::None, BalanceMethod::RandomUndersample, BalanceMethod::Smote];
const CLASSIFIERS: [ClassifierKind; 2] = [ClassifierKind::Tree, ClassifierKind::Svm];

fn grid(preset: Preset, mode: FeatureMode, seed: u64) -> impl Iterator<Item = ExperimentSetting> {
    BALANCES
        .into_iter()
        .flat_map(move |b| CLASSIFIERS.into_iter().map(move |c| ExperimentSetting::new(preset, b, c, mode, seed)))
}

/// The complete process with every balancing/classifier pair, on all and on reduced features.
pub fn complete_matrix(seed: u64) -> Vec<ExperimentSetting> {
    grid(Preset::Complete, FeatureMode::Full44, seed).chain(grid(Preset::Complete, FeatureMode::Reduced13, seed)).collect()
}

/// 12 complete-process experiments plus 6 for each stage left out.
pub fn default_matrix(seed: u64) -> Vec<ExperimentSetting> {
    let mut v = complete_matrix(seed);
    for p in [Preset::NoCleaning, Preset::NoFiltering, Preset::NoSegmentation] {
        v.extend(grid(p, FeatureMode::Full44, seed));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub id: String,
    pub setting: ExperimentSetting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvaluationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ExperimentError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub experiments: usize,
    pub mean_accuracy: f64,
    pub mean_f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub experiments: usize,
    pub failed: Vec<String>,
    pub by_preset: BTreeMap<String, GroupMeans>,
    pub pareto: Vec<String>,
    pub best_accuracy: Option<String>,
    pub best_f_measure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixResult {
    pub entries: Vec<MatrixEntry>,
    /// Indices into `entries` of the (accuracy, F-measure) Pareto front.
    pub pareto: Vec<usize>,
    /// Cross-validation reruns of the Pareto members, when requested.
    pub kfold: Vec<EvaluationReport>,
}

impl MatrixResult {
    pub fn from_entries(entries: Vec<MatrixEntry>) -> MatrixResult {
        // ordered by id so duplicate points resolve the same way however entries were gathered
        let mut ok: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].report.is_some()).collect();
        ok.sort_by(|&a, &b| entries[a].id.cmp(&entries[b].id));
        let points: Vec<(f64, f64)> = ok.iter().map(|&i| entries[i].report.as_ref().map(|r| r.headline()).unwrap_or_default()).collect();
        let mut pareto: Vec<usize> = pareto_front(&points).into_iter().map(|j| ok[j]).collect();
        pareto.sort_unstable();
        MatrixResult { entries, pareto, kfold: Vec::new() }
    }

    pub fn reports(&self) -> impl Iterator<Item = &EvaluationReport> {
        self.entries.iter().filter_map(|e| e.report.as_ref())
    }

    pub fn summary(&self) -> MatrixSummary {
        let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for r in self.reports() {
            let key = r.setting.preset().map_or("custom", Preset::as_str).to_string();
            groups.entry(key).or_default().push(r.headline());
        }
        let by_preset = groups
            .into_iter()
            .map(|(k, v)| {
                let n = v.len() as f64;
                let means = GroupMeans {
                    experiments: v.len(),
                    mean_accuracy: v.iter().map(|p| p.0).sum::<f64>() / n,
                    mean_f_measure: v.iter().map(|p| p.1).sum::<f64>() / n,
                };
                (k, means)
            })
            .collect();
        let best = |f: fn(&EvaluationReport) -> f64| {
            self.reports().fold(None::<&EvaluationReport>, |b, r| match b {
                Some(b) if f(b) > f(r) || (f(b) == f(r) && b.id <= r.id) => Some(b),
                _ => Some(r),
            })
            .map(|r| r.id.clone())
        };
        MatrixSummary {
            experiments: self.entries.len(),
            failed: self.entries.iter().filter(|e| e.error.is_some()).map(|e| e.id.clone()).collect(),
            by_preset,
            pareto: {
                let mut ids: Vec<String> = self.pareto.iter().map(|&i| self.entries[i].id.clone()).collect();
                ids.sort();
                ids
            },
            best_accuracy: best(|r| r.headline().0),
            best_f_measure: best(|r| r.headline().1),
        }
    }
}

/// Runs every setting on up to `workers` threads. Preprocessing is shared by
/// settings with equal stages; a failing experiment is recorded and the rest go on.
pub fn run_matrix(
    settings: &[ExperimentSetting],
    input: &ExperimentInput,
    cfg: &PipelineConfig,
    workers: usize,
    kfold_pareto: bool,
) -> Result<MatrixResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut keys: Vec<Stages> = settings.iter().map(ExperimentSetting::stages).collect();
        keys.sort();
        keys.dedup();
        let prepared: BTreeMap<Stages, Result<Prepared, ExperimentError>> =
            keys.par_iter().map(|k| (*k, prepare(&input.records, *k, cfg))).collect();
        let run = |s: &ExperimentSetting| match &prepared[&s.stages()] {
            Ok(p) => evaluate_prepared(s, p, &input.digest, cfg),
            Err(e) => Err(e.clone()),
        };
        let entries: Vec<MatrixEntry> = settings
            .par_iter()
            .map(|s| {
                let outcome = run(s);
                if let Err(e) = &outcome {
                    log::warn!("experiment {} failed: {e}", s.id());
                }
                let (report, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e)),
                };
                MatrixEntry { id: s.id(), setting: s.clone(), report, error }
            })
            .collect();
        let mut result = MatrixResult::from_entries(entries);
        if kfold_pareto {
            let members: Vec<ExperimentSetting> = result
                .pareto
                .iter()
                .map(|&i| ExperimentSetting { eval: SplitKind::Kfold, ..result.entries[i].setting.clone() })
                .collect();
            result.kfold = members
                .par_iter()
                .filter_map(|s| match run(s) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        log::warn!("cross-validation of {} failed: {e}", s.id());
                        None
                    }
                })
                .collect();
        }
        Ok(result)
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn setting_columns(s: &ExperimentSetting) -> Vec<String> {
    vec![
        s.preset().map_or("custom", Preset::as_str).to_string(),
        s.balance.as_str().to_string(),
        s.classifier.as_str().to_string(),
        s.feature_mode.as_str().to_string(),
    ]
}

/// Writes per-experiment reports and the scatter, Pareto, bar, importance and
/// cross-validation tables plus a summary into `dir`.
pub fn write_matrix(dir: &Path, result: &MatrixResult) -> Result<()> {
    let reports_dir = dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(|e| Error::file(&reports_dir, e))?;
    for e in &result.entries {
        let bytes = match &e.report {
            Some(r) => r.to_json()?,
            None => serde_json::to_vec_pretty(e)?,
        };
        write_file(&reports_dir.join(format!("{}.json", e.id)), &bytes)?;
    }

    let on_front: Vec<bool> = (0..result.entries.len()).map(|i| result.pareto.contains(&i)).collect();
    let mut scatter = Vec::new();
    let mut bars = Vec::new();
    let mut importance = Vec::new();
    for (i, e) in result.entries.iter().enumerate() {
        let Some(r) = &e.report else { continue };
        let (acc, f1) = r.headline();
        let mut row = vec![e.id.clone()];
        row.extend(setting_columns(&e.setting));
        row.extend([acc.to_string(), f1.to_string(), on_front[i].to_string()]);
        scatter.push(row);
        let mut bar = setting_columns(&e.setting);
        let m = &r.metrics;
        bar.extend([m.accuracy, m.precision, m.recall, m.f_measure].map(|v| v.to_string()));
        bars.push(bar);
        if let Some(imp) = &r.importance {
            let g = &imp.grouped;
            let groups = [("statistic", &g.by_statistic), ("kinematic", &g.by_kinematic), ("extra", &g.extras)];
            for (name, value) in imp.per_feature.feature_names.iter().zip(&imp.per_feature.normalized) {
                importance.push(vec![e.id.clone(), "feature".into(), name.clone(), value.to_string()]);
            }
            for (kind, list) in groups {
                for (name, value) in list.iter() {
                    importance.push(vec![e.id.clone(), kind.into(), name.clone(), value.to_string()]);
                }
            }
        }
    }
    let head = ["id", "preset", "balance", "classifier", "feature_mode", "accuracy", "f_measure", "pareto"];
    let front: Vec<Vec<String>> = scatter.iter().filter(|r| r[7] == "true").map(|r| r[..7].to_vec()).collect();
    write_file(&dir.join("scatter.csv"), &csv_bytes(&head, scatter)?)?;
    write_file(&dir.join("pareto.csv"), &csv_bytes(&head[..7], front)?)?;
    write_file(
        &dir.join("bars.csv"),
        &csv_bytes(&["preset", "balance", "classifier", "feature_mode", "accuracy", "precision", "recall", "f_measure"], bars)?,
    )?;
    write_file(&dir.join("importance.csv"), &csv_bytes(&["id", "kind", "name", "value"], importance)?)?;

    if !result.kfold.is_empty() {
        let mut rows = Vec::new();
        for r in &result.kfold {
            let Some(k) = &r.kfold else { continue };
            for f in &k.folds {
                rows.push(vec![r.id.clone(), f.fold.to_string(), f.metrics.accuracy.to_string(), f.metrics.f_measure.to_string()]);
            }
            rows.push(vec![r.id.clone(), "mean".into(), k.mean_accuracy.to_string(), k.mean_f_measure.to_string()]);
        }
        write_file(&dir.join("kfold.csv"), &csv_bytes(&["id", "fold", "accuracy", "f_measure"], rows)?)?;
        let kfold_dir = reports_dir.join("kfold");
        fs::create_dir_all(&kfold_dir).map_err(|e| Error::file(&kfold_dir, e))?;
        for r in &result.kfold {
            write_file(&kfold_dir.join(format!("{}.json", r.id)), &r.to_json()?)?;
        }
    }

    let mut summary = serde_json::to_vec_pretty(&result.summary())?;
    summary.push(b'\n');
    write_file(&dir.join("summary.json"), &summary)

}

fn json_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Reads back the `reports/` directory written by [`write_matrix`].
pub fn load_reports(dir: &Path) -> Result<MatrixResult> {
    let reports_dir = dir.join("reports");
    if !reports_dir.is_dir() {
        return Err(Error::Data(format!("{} has no reports directory", dir.display())));
    }
    let mut entries = Vec::new();
    for path in json_files(&reports_dir)? {
        let bytes = fs::read(&path).map_err(|e| Error::file(&path, e))?;
        let entry = match serde_json::from_slice::<EvaluationReport>(&bytes) {
            Ok(r) => MatrixEntry { id: r.id.clone(), setting: r.setting.clone(), report: Some(r), error: None },
            Err(_) => serde_json::from_slice::<MatrixEntry>(&bytes)?,
        };
        entries.push(entry);
    }
    let mut kfold = Vec::new();
    for path in json_files(&reports_dir.join("kfold"))? {
        let bytes = fs::read(&path).map_err(|e| Error::file(&path, e))?;
        kfold.push(serde_json::from_slice::<EvaluationReport>(&bytes)?);
    }
    let mut result = MatrixResult::from_entries(entries);
    result.kfold = kfold;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_sizes() {
        assert_eq!(default_matrix(0).len(), 30);
        assert_eq!(complete_matrix(0).len(), 12);
        let ids: std::collections::BTreeSet<String> = default_matrix(0).iter().map(|s| s.id()).collect();
        assert_eq!(ids.len(), 30);
        let count = |p| default_matrix(0).iter().filter(|s| s.preset() == Some(p)).count();
        assert_eq!([Preset::Complete, Preset::NoCleaning, Preset::NoFiltering, Preset::NoSegmentation].map(count), [12, 6, 6, 6]);
    }

    #[test]
    fn written_reports_load_back() {
        let scenario = super::super::SyntheticScenario { fishing_tracks: 12, transit_tracks: 30, seed: 3, ..Default::default() };
        let input = ExperimentInput::from_records(super::super::generate_synthetic(&scenario).records).unwrap();
        let settings: Vec<ExperimentSetting> = complete_matrix(1).into_iter().take(4).collect();
        let result = run_matrix(&settings, &input, &PipelineConfig::default(), 2, true).unwrap();
        assert!(!result.kfold.is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_matrix(dir.path(), &result).unwrap();
        let back = load_reports(dir.path()).unwrap();
        let mut ids: Vec<&str> = result.entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(back.entries.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ids);
        assert_eq!(back.kfold.len(), result.kfold.len());
        assert_eq!(back.summary().pareto.len(), result.summary().pareto.len());
    }
}
