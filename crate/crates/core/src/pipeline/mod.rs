//! End-to-end experiments: clean, filter, segment, extract, split, balance, train, evaluate.

pub mod matrix;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use matrix::{complete_matrix, default_matrix, load_reports, run_matrix, write_matrix, MatrixEntry, MatrixResult, MatrixSummary};
pub use synth::{generate_synthetic, Behavior, DefectConfig, GroundTruth, SyntheticData, SyntheticScenario, TruthTrack};

use crate::classify::{self, aggregate_importance, predictor_importance, ClassifierConfig, ClassifierKind, GroupedImportance, Importance, Model};
use crate::cleaning::{clean, CleaningConfig, Track};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::estimation::{raw_kinematics, smooth_all, ImmConfig, KinematicTrack};
use crate::evaluate::{assert_original, kfold_eval, metrics, stratified_holdout, ConfusionMatrix, EvalConfig, KFoldReport, Metrics, SplitKind};
use crate::features::{extract_dataset, FeatureConfig, FeatureMode};
use crate::ingest::{self, AisRecord, ColumnMapping, Label};
use crate::rebalance::{balance, BalanceConfig, BalanceMethod};
use crate::segmentation::{segment_all, SegmentationMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleaningLevel {
    Full,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filtering {
    Imm,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    #[serde(rename = "fixed_50")]
    Fixed50,
    FullTrack,
}

/// The four named process variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Complete,
    NoCleaning,
    NoFiltering,
    NoSegmentation,
}

/// Which preprocessing stages run; datasets are shared between experiments with equal stages.
pub type Stages = (CleaningLevel, Filtering, Segmentation);

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Complete, Preset::NoCleaning, Preset::NoFiltering, Preset::NoSegmentation];

    pub fn stages(self) -> Stages {
        match self {
            Preset::Complete => (CleaningLevel::Full, Filtering::Imm, Segmentation::Fixed50),
            Preset::NoCleaning => (CleaningLevel::Minimum, Filtering::Imm, Segmentation::Fixed50),
            Preset::NoFiltering => (CleaningLevel::Full, Filtering::None, Segmentation::Fixed50),
            Preset::NoSegmentation => (CleaningLevel::Full, Filtering::Imm, Segmentation::FullTrack),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Complete => "complete",
            Preset::NoCleaning => "no_cleaning",
            Preset::NoFiltering => "no_filtering",
            Preset::NoSegmentation => "no_segmentation",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExperimentSetting {
    pub cleaning: CleaningLevel,
    pub filtering: Filtering,
    pub segmentation: Segmentation,
    pub balance: BalanceMethod,
    pub classifier: ClassifierKind,
    pub feature_mode: FeatureMode,
    #[serde(default = "default_split")]
    pub eval: SplitKind,
    #[serde(default)]
    pub seed: u64,
}

fn default_split() -> SplitKind {
    SplitKind::Holdout
}

impl ExperimentSetting {
    pub fn new(preset: Preset, balance: BalanceMethod, classifier: ClassifierKind, feature_mode: FeatureMode, seed: u64) -> Self {
        let (cleaning, filtering, segmentation) = preset.stages();
        ExperimentSetting { cleaning, filtering, segmentation, balance, classifier, feature_mode, eval: SplitKind::Holdout, seed }
    }

    pub fn stages(&self) -> Stages {
        (self.cleaning, self.filtering, self.segmentation)
    }

    pub fn preset(&self) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.stages() == self.stages())
    }

    /// Stable name, e.g. `complete-smote-tree-full_44-holdout`.
    pub fn id(&self) -> String {
        let stages = match self.preset() {
            Some(p) => p.as_str().to_string(),
            None => format!("{}_{}_{}", enum_name(&self.cleaning), enum_name(&self.filtering), enum_name(&self.segmentation)),
        };
        let eval = match self.eval {
            SplitKind::Holdout => "holdout",
            SplitKind::Kfold => "kfold",
        };
        format!("{stages}-{}-{}-{}-{eval}", self.balance.as_str(), self.classifier.as_str(), self.feature_mode.as_str())
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub cleaning: CleaningConfig,
    pub imm: ImmConfig,
    pub segment_length: usize,
    pub features: FeatureConfig,
    pub balance: BalanceConfig,
    pub classifier: ClassifierConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cleaning: CleaningConfig::default(),
            imm: ImmConfig::default(),
            segment_length: crate::segmentation::DEFAULT_SEGMENT_LENGTH,
            features: FeatureConfig::default(),
            balance: BalanceConfig::default(),
            classifier: ClassifierConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.cleaning.validate()?;
        self.imm.validate()?;
        self.balance.validate()?;
        self.classifier.svm.validate()?;
        self.eval.validate()?;
        if self.segment_length < 2 {
            return Err(Error::InvalidConfig("segment_length must be at least 2".into()));
        }
        Ok(())
    }

    pub fn cleaning_for(&self, level: CleaningLevel) -> CleaningConfig {
        CleaningConfig { full: level == CleaningLevel::Full, ..self.cleaning.clone() }
    }

    pub fn segmentation_for(&self, s: Segmentation) -> SegmentationMode {
        match s {
            Segmentation::Fixed50 => SegmentationMode::Fixed { length: self.segment_length },
            Segmentation::FullTrack => SegmentationMode::FullTrack,
        }
    }
}

/// Contacts to run on, with the digest that identifies them in reports.
#[derive(Debug, Clone)]
pub struct ExperimentInput {
    pub records: Vec<AisRecord>,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentInput {
    /// Digest of the records in the default CSV layout.
    pub fn from_records(records: Vec<AisRecord>) -> Result<Self> {
        let mut buf = Vec::new();
        ingest::write_csv(&records, &ColumnMapping::default(), &mut buf)?;
        Ok(ExperimentInput { digest: sha256_hex(&buf), records })
    }

    /// Digest of the raw file bytes; rejected rows are logged and skipped.
    pub fn from_csv_bytes(bytes: &[u8], mapping: &ColumnMapping) -> Result<Self> {
        let parsed = ingest::parse_csv(bytes, mapping)?;
        if !parsed.rejects.is_empty() {
            log::warn!("{} of {} rows rejected", parsed.rejects.len(), parsed.data_rows);
        }
        Ok(ExperimentInput { records: parsed.records, digest: sha256_hex(bytes) })
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentError {
    pub stage: String,
    pub message: String,
    pub numerical: bool,
}

impl ExperimentError {
    fn at(stage: &str) -> impl FnOnce(Error) -> ExperimentError + '_ {
        move |e| ExperimentError { stage: stage.to_string(), numerical: e.is_numerical(), message: e.to_string() }
    }
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.message)
    }
}

impl std::error::Error for ExperimentError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepSummary {
    pub input_records: usize,
    pub tracks: usize,
    pub dropped: BTreeMap<String, usize>,
    pub noise_points_removed: usize,
    pub filter_failures: usize,
    pub segments: usize,
    pub fishing: usize,
    pub non_fishing: usize,
}

/// Output of the preprocessing stages: every feature, original rows only.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: LabeledDataset,
    pub summary: PrepSummary,
}

pub fn filter_tracks(tracks: &[Track], filtering: Filtering, imm: &ImmConfig) -> (Vec<KinematicTrack>, Vec<(u32, Error)>) {
    match filtering {
        Filtering::Imm => smooth_all(tracks, imm),
        Filtering::None => {
            let mut ok = Vec::new();
            let mut failed = Vec::new();
            for t in tracks {
                match raw_kinematics(t) {
                    Ok(k) => ok.push(k),
                    Err(e) => failed.push((t.mmsi, e)),
                }
            }
            (ok, failed)
        }
    }
}

pub fn prepare(records: &[AisRecord], stages: Stages, cfg: &PipelineConfig) -> Result<Prepared, ExperimentError> {
    let (cleaning, filtering, segmentation) = stages;
    let cleaned = clean(records, &cfg.cleaning_for(cleaning)).map_err(ExperimentError::at("cleaning"))?;
    let (kinematic, failures) = filter_tracks(&cleaned.tracks, filtering, &cfg.imm);
    for (mmsi, e) in &failures {
        log::warn!("track {mmsi} excluded: {e}");
    }
    let segments = segment_all(&kinematic, cfg.segmentation_for(segmentation));
    let features = FeatureConfig { mode: FeatureMode::Full44, ..cfg.features.clone() };
    let dataset = extract_dataset(&segments, &features);
    if dataset.is_empty() {
        return Err(ExperimentError::at("features")(Error::EmptyDataset));
    }
    let summary = PrepSummary {
        input_records: records.len(),
        tracks: cleaned.tracks.len(),
        dropped: cleaned.report.drop_counts().into_iter().map(|(k, v)| (enum_name(&k), v)).collect(),
        noise_points_removed: cleaned.report.noise_points_removed,
        filter_failures: failures.len(),
        segments: segments.len(),
        fishing: dataset.count(Label::Fishing),
        non_fishing: dataset.count(Label::NonFishing),
    };
    Ok(Prepared { dataset, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub per_feature: Importance,
    pub grouped: GroupedImportance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_size: usize,
    pub balanced_train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub id: String,
    pub setting: ExperimentSetting,
    pub config: PipelineConfig,
    pub seed: u64,
    pub input_digest: String,
    pub data: PrepSummary,
    pub split: SplitSummary,
    /// Holdout counts, or counts pooled over all folds.
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kfold: Option<KFoldReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub caveats: Vec<String>,
}

impl EvaluationReport {
    /// (accuracy, F-measure) used for ranking: fold means under k-fold, holdout values otherwise.
    pub fn headline(&self) -> (f64, f64) {
        match &self.kfold {
            Some(k) => (k.mean_accuracy, k.mean_f_measure),
            None => (self.metrics.accuracy, self.metrics.f_measure),
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// Balances the training portion and fits the classifier. Test data never passes here.
/// Returns the model and the balanced training size.
pub fn fit(
    train: &LabeledDataset,
    method: BalanceMethod,
    classifier: ClassifierKind,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<(Model, usize)> {
    let bal = BalanceConfig { method, seed: seed.wrapping_add(1), ..cfg.balance.clone() };
    let balanced = balance(train, &bal)?;
    let mut cc = cfg.classifier.clone();
    cc.svm.seed = seed.wrapping_add(2);
    let model = classify::train(classifier, &balanced, &cc)?;
    Ok((model, balanced.len()))
}

fn importance_of(model: &Model) -> Result<Option<ImportanceReport>> {
    match model {
        Model::Tree(tree) => {
            let per_feature = predictor_importance(tree);
            let grouped = aggregate_importance(&per_feature.feature_names, &per_feature.normalized)?;
            Ok(Some(ImportanceReport { per_feature, grouped }))
        }
        Model::Svm(_) => Ok(None),
    }
}

/// Runs the post-preprocessing part of an experiment on an already prepared dataset.
pub fn evaluate_prepared(
    setting: &ExperimentSetting,
    prepared: &Prepared,
    input_digest: &str,
    cfg: &PipelineConfig,
) -> Result<EvaluationReport, ExperimentError> {
    let ds = prepared.dataset.project(&setting.feature_mode.names()).map_err(ExperimentError::at("features"))?;
    let eval_cfg = EvalConfig { split: setting.eval, seed: setting.seed, ..cfg.eval.clone() };
    let (confusion, kfold, importance, split) = match setting.eval {
        SplitKind::Holdout => {
            let h = stratified_holdout(&ds, eval_cfg.train_fraction, setting.seed).map_err(ExperimentError::at("split"))?;
            let train = ds.subset(&h.train);
            let test = ds.subset(&h.test);
            assert_original(&test).map_err(ExperimentError::at("split"))?;
            let (model, balanced) = fit(&train, setting.balance, setting.classifier, setting.seed, cfg).map_err(ExperimentError::at("training"))?;
            let predicted = model.predict_many(&test.rows);
            let cm = ConfusionMatrix::from_predictions(&test.labels, &predicted);
            let imp = importance_of(&model).map_err(ExperimentError::at("importance"))?;
            let split = SplitSummary { train_size: train.len(), balanced_train_size: balanced, test_size: test.len() };
            (cm, None, imp, split)
        }
        SplitKind::Kfold => {
            let report = kfold_eval(&ds, &eval_cfg, |train, test| Ok(fit(train, setting.balance, setting.classifier, setting.seed, cfg)?.0.predict_many(&test.rows)))
                .map_err(ExperimentError::at("kfold"))?;
            let mut cm = ConfusionMatrix::default();
            report.folds.iter().for_each(|f| cm.add(&f.confusion));
            (cm, Some(report), None, SplitSummary { train_size: ds.len(), ..Default::default() })
        }
    };
    let metrics = metrics(&confusion, &eval_cfg.metrics).map_err(ExperimentError::at("metrics"))?;
    let mut caveats = Vec::new();
    if setting.segmentation == Segmentation::FullTrack {
        caveats.push("whole-track instances vary in length and are less comparable than fixed segments".to_string());
    }
    Ok(EvaluationReport {
        id: setting.id(),
        setting: setting.clone(),
        config: cfg.clone(),
        seed: setting.seed,
        input_digest: input_digest.to_string(),
        data: prepared.summary.clone(),
        split,
        confusion,
        metrics,
        kfold,
        importance,
        caveats,
    })
}

pub fn run_experiment(setting: &ExperimentSetting, input: &ExperimentInput, cfg: &PipelineConfig) -> Result<EvaluationReport, ExperimentError> {
    cfg.validate().map_err(ExperimentError::at("config"))?;
    let prepared = prepare(&input.records, setting.stages(), cfg)?;
    evaluate_prepared(setting, &prepared, &input.digest, cfg)
}
