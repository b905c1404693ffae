//! Metrics, stratified splits, k-fold cross-validation and Pareto fronts.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::ingest::{Label, ShipType};

/// Counts with fishing as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> ConfusionMatrix {
        assert_eq!(truth.len(), predicted.len());
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Fishing, Label::Fishing) => cm.tp += 1,
                (Label::Fishing, Label::NonFishing) => cm.fn_ += 1,
                (Label::NonFishing, Label::Fishing) => cm.fp += 1,
                (Label::NonFishing, Label::NonFishing) => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// The β of F_β.
    pub f_measure_sigma: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { f_measure_sigma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Metrics whose ratio was 0/0 and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

pub fn metrics(cm: &ConfusionMatrix, cfg: &MetricsConfig) -> Result<Metrics> {
    let beta = cfg.f_measure_sigma;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidConfig(format!("f_measure_sigma must be positive, got {beta}")));
    }
    if cm.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut degenerate = Vec::new();
    let mut ratio = |name: &str, num: f64, den: f64| {
        if den == 0.0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };
    let (tp, fn_, fp, tn) = (cm.tp as f64, cm.fn_ as f64, cm.fp as f64, cm.tn as f64);
    let accuracy = (tp + tn) / (tp + fn_ + fp + tn);
    let precision = ratio("precision", tp, tp + fp);
    let recall = ratio("recall", tp, tp + fn_);
    let b2 = beta * beta;
    let f_measure = ratio("f_measure", (1.0 + b2) * precision * recall, b2 * precision + recall);
    Ok(Metrics { accuracy, precision, recall, f_measure, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    #[serde(rename = "holdout_70_30", alias = "holdout")]
    Holdout,
    Kfold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub split: SplitKind,
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub metrics: MetricsConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { split: SplitKind::Holdout, k: 10, train_fraction: 0.7, seed: 0, metrics: MetricsConfig::default() }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k must be at least 2, got {}", self.k)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        Ok(())
    }
}

/// Row indices grouped by ship type, each group shuffled under `seed`.
fn shuffled_groups(ds: &LabeledDataset, seed: u64) -> BTreeMap<ShipType, Vec<usize>> {
    let mut groups: BTreeMap<ShipType, Vec<usize>> = BTreeMap::new();
    for (i, t) in ds.ship_types.iter().enumerate() {
        groups.entry(*t).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holdout {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits each ship type separately so every type is represented on both sides.
pub fn stratified_holdout(ds: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<Holdout> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut split = Holdout { train: Vec::new(), test: Vec::new() };
    for (ship_type, idx) in shuffled_groups(ds, seed) {
        let n = idx.len();
        let n_train = if n >= 2 { ((train_fraction * n as f64).round() as usize).clamp(1, n - 1) } else { n };
        if n < 2 {
            log::warn!("ship type {} has a single instance; it goes to training only", ship_type.name());
        }
        split.train.extend_from_slice(&idx[..n_train]);
        split.test.extend_from_slice(&idx[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Stratified folds: types are shuffled, concatenated and dealt round-robin.
pub fn kfold_splits(ds: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    let minority = ds.count(ds.minority());
    if k > minority {
        return Err(Error::TooManyFolds { k, count: minority });
    }
    let mut folds = vec![Vec::new(); k];
    let order: Vec<usize> = shuffled_groups(ds, seed).into_values().flatten().collect();
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Fails on the first row of a test partition that is not original data.
pub fn assert_original(test: &LabeledDataset) -> Result<()> {
    match test.provenance.iter().position(|p| *p != Provenance::Original) {
        Some(row) => Err(Error::Leakage { row }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFoldReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_f_measure: f64,
}

/// Runs `tail(train, test) -> predictions` on every fold. `tail` is where balancing
/// and training happen, so they only ever see the k-1 training folds.
pub fn kfold_eval<F>(ds: &LabeledDataset, cfg: &EvalConfig, tail: F) -> Result<KFoldReport>
where
    F: Fn(&LabeledDataset, &LabeledDataset) -> Result<Vec<Label>> + Sync,
{
    cfg.validate()?;
    assert_original(ds)?;
    let folds = kfold_splits(ds, cfg.k, cfg.seed)?;
    let results: Vec<FoldResult> = (0..cfg.k)
        .into_par_iter()
        .map(|f| {
            let test_idx = &folds[f];
            let train_idx: Vec<usize> =
                folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
            let train = ds.subset(&train_idx);
            let test = ds.subset(test_idx);
            assert_original(&test)?;
            let predicted = tail(&train, &test)?;
            if predicted.len() != test.len() {
                return Err(Error::Data(format!("{} predictions for {} test rows", predicted.len(), test.len())));
            }
            let confusion = ConfusionMatrix::from_predictions(&test.labels, &predicted);
            Ok(FoldResult {
                fold: f,
                train_size: train.len(),
                test_size: test.len(),
                confusion,
                metrics: metrics(&confusion, &cfg.metrics)?,
            })
        })
        .collect::<Result<_>>()?;
    let k = results.len() as f64;
    let mean_accuracy = results.iter().map(|r| r.metrics.accuracy).sum::<f64>() / k;
    let mean_f_measure = results.iter().map(|r| r.metrics.f_measure).sum::<f64>() / k;
    Ok(KFoldReport { k: cfg.k, folds: results, mean_accuracy, mean_f_measure })
}

/// `p` is at least as good as `q` in both coordinates and better in one.
pub fn dominates(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 >= q.0 && p.1 >= q.1 && (p.0 > q.0 || p.1 > q.1)
}

/// Indices of the non-dominated points (both coordinates maximized), in input
/// order; of several identical points only the first is kept.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // decreasing first coordinate, then decreasing second, then input order
    order.sort_by(|&a, &b| {
        points[b].0.total_cmp(&points[a].0).then(points[b].1.total_cmp(&points[a].1)).then(a.cmp(&b))
    });
    let mut front = Vec::new();
    let mut best_second = f64::NEG_INFINITY;
    let mut last: Option<(f64, f64)> = None;
    for i in order {
        let p = points[i];
        if last == Some(p) {
            continue;
        }
        if p.1 > best_second {
            front.push(i);
            best_second = p.1;
            last = Some(p);
        }
    }
    front.sort_unstable();
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_front(points: &[(f64, f64)]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| !points.iter().any(|q| dominates(*q, points[i])))
            .filter(|&i| !points[..i].contains(&points[i]))
            .collect()
    }

    #[test]
    fn reference_confusion_matrix() {
        let cm = ConfusionMatrix { tp: 1234, fn_: 4989, fp: 361, tn: 28730 };
        let m = metrics(&cm, &MetricsConfig::default()).unwrap();
        assert!((m.accuracy - 0.84851).abs() <= 1e-5, "{}", m.accuracy);
        assert!((m.f_measure - 0.3157).abs() <= 1e-3, "{}", m.f_measure);
        // independent recomputation
        let p = 1234.0 / (1234.0 + 361.0);
        let r = 1234.0 / (1234.0 + 4989.0);
        assert!((m.f_measure - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = metrics(&ConfusionMatrix { tp: 5, fn_: 0, fp: 0, tn: 7 }, &MetricsConfig::default()).unwrap();
        assert_eq!((m.accuracy, m.f_measure), (1.0, 1.0));
        let m = metrics(&ConfusionMatrix { tp: 0, fn_: 3, fp: 0, tn: 7 }, &MetricsConfig::default()).unwrap();
        assert_eq!(m.f_measure, 0.0);
        assert_eq!(m.degenerate, vec!["precision".to_string(), "f_measure".to_string()]);
        let m = metrics(&ConfusionMatrix { tp: 0, fn_: 3, fp: 2, tn: 7 }, &MetricsConfig::default()).unwrap();
        assert_eq!(m.f_measure, 0.0);
        assert!(metrics(&ConfusionMatrix::default(), &MetricsConfig::default()).is_err());
    }

    #[test]
    fn f_beta_weighting() {
        let cm = ConfusionMatrix { tp: 10, fn_: 10, fp: 0, tn: 5 };
        let m = metrics(&cm, &MetricsConfig { f_measure_sigma: 2.0 }).unwrap();
        // P = 1, R = 0.5
        assert!((m.f_measure - 5.0 * 0.5 / (4.0 + 0.5)).abs() < 1e-15);
    }

    fn typed(counts: &[(ShipType, usize)]) -> LabeledDataset {
        let mut ds = LabeledDataset::new(vec!["x".into()]);
        for (t, n) in counts {
            for i in 0..*n {
                let label = if *t == ShipType::Fishing { Label::Fishing } else { Label::NonFishing };
                ds.push(vec![i as f64], label, *t, Provenance::Original);
            }
        }
        ds
    }

    #[test]
    fn holdout_rounding() {
        let ds = typed(&[(ShipType::Fishing, 10), (ShipType::Cargo, 20)]);
        let h = stratified_holdout(&ds, 0.7, 3).unwrap();
        let count = |idx: &[usize], t| idx.iter().filter(|&&i| ds.ship_types[i] == t).count();
        assert_eq!((count(&h.train, ShipType::Fishing), count(&h.train, ShipType::Cargo)), (7, 14));
        assert_eq!((count(&h.test, ShipType::Fishing), count(&h.test, ShipType::Cargo)), (3, 6));
        assert_eq!(h, stratified_holdout(&ds, 0.7, 3).unwrap());
    }

    #[test]
    fn holdout_single_instance_and_small_types() {
        let ds = typed(&[(ShipType::Fishing, 1), (ShipType::Cargo, 2)]);
        let h = stratified_holdout(&ds, 0.7, 0).unwrap();
        assert_eq!(h.train.len(), 2);
        assert_eq!(h.test.len(), 1);
        assert!(stratified_holdout(&typed(&[]), 0.7, 0).is_err());
    }

    #[test]
    fn folds_of_ten() {
        let ds = typed(&[(ShipType::Fishing, 30), (ShipType::Cargo, 50), (ShipType::Tanker, 20)]);
        let folds = kfold_splits(&ds, 10, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 10));
        for t in [ShipType::Fishing, ShipType::Cargo, ShipType::Tanker] {
            for f in &folds {
                let n = f.iter().filter(|&&i| ds.ship_types[i] == t).count() as f64;
                let target = ds.ship_types.iter().filter(|&&s| s == t).count() as f64 / 10.0;
                assert!((n - target).abs() <= 1.0);
            }
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn too_many_folds() {
        let ds = typed(&[(ShipType::Fishing, 5), (ShipType::Cargo, 50)]);
        assert!(matches!(kfold_splits(&ds, 10, 0), Err(Error::TooManyFolds { k: 10, count: 5 })));
    }

    #[test]
    fn kfold_mean_is_fold_mean() {
        let ds = typed(&[(ShipType::Fishing, 40), (ShipType::Cargo, 60)]);
        let cfg = EvalConfig { split: SplitKind::Kfold, seed: 5, ..Default::default() };
        // predict fishing for even x
        let report = kfold_eval(&ds, &cfg, |_, test| {
            Ok(test.rows.iter().map(|r| if r[0] as usize % 2 == 0 { Label::Fishing } else { Label::NonFishing }).collect())
        })
        .unwrap();
        let mean = report.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 10.0;
        assert!((report.mean_accuracy - mean).abs() < 1e-12);
        assert!(report.folds.iter().all(|f| f.test_size == 10 && f.train_size == 90));
    }

    #[test]
    fn synthetic_rows_in_input_are_rejected() {
        let mut ds = typed(&[(ShipType::Fishing, 20), (ShipType::Cargo, 20)]);
        ds.provenance[3] = Provenance::Synthetic;
        let cfg = EvalConfig { k: 2, ..Default::default() };
        let r = kfold_eval(&ds, &cfg, |_, t| Ok(vec![Label::Fishing; t.len()]));
        assert!(matches!(r, Err(Error::Leakage { row: 3 })));
    }

    #[test]
    fn pareto_example() {
        let pts = [(0.9, 0.1), (0.8, 0.3), (0.85, 0.05)];
        assert_eq!(pareto_front(&pts), vec![0, 1]);
        assert_eq!(pareto_front(&[(0.5, 0.5)]), vec![0]);
        assert!(pareto_front(&[]).is_empty());
        assert_eq!(pareto_front(&[(0.5, 0.5), (0.5, 0.5), (0.4, 0.6)]), vec![0, 2]);
    }

    proptest! {
        #[test]
        fn pareto_matches_brute_force(pts in prop::collection::vec((0u8..20, 0u8..20), 0..40)) {
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64 / 20.0, b as f64 / 20.0)).collect();
            let front = pareto_front(&pts);
            prop_assert_eq!(&front, &brute_front(&pts));
            let sub: Vec<(f64, f64)> = front.iter().map(|&i| pts[i]).collect();
            prop_assert_eq!(pareto_front(&sub), (0..sub.len()).collect::<Vec<_>>());
        }

        #[test]
        fn holdout_partitions(counts in prop::collection::vec(0usize..15, 1..5), seed in any::<u64>()) {
            let types = [ShipType::Fishing, ShipType::Cargo, ShipType::Tanker, ShipType::Passenger, ShipType::Tug];
            let spec: Vec<(ShipType, usize)> = counts.iter().enumerate().map(|(i, n)| (types[i], *n)).collect();
            let ds = typed(&spec);
            prop_assume!(!ds.is_empty());
            let h = stratified_holdout(&ds, 0.7, seed).unwrap();
            let mut all = [h.train.clone(), h.test.clone()].concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
            for (t, n) in spec {
                let k = h.train.iter().filter(|&&i| ds.ship_types[i] == t).count() as f64;
                prop_assert!((k - 0.7 * n as f64).abs() <= 1.0);
            }
        }
    }
}
