//! One check per acceptance criterion; each prints a single PASS/FAIL line.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trawl_core::classify::{aggregate_importance, predictor_importance, train_tree, TreeNode, TreeParams};
use trawl_core::cleaning::clean;
use trawl_core::estimation::smooth_track;
use trawl_core::evaluate::{kfold_eval, metrics, pareto_front, ConfusionMatrix, EvalConfig, MetricsConfig, SplitKind};
use trawl_core::pipeline::{
    complete_matrix, default_matrix, evaluate_prepared, generate_synthetic, prepare, run_experiment, run_matrix, write_matrix,
    DefectConfig, EvaluationReport, ExperimentInput, ExperimentSetting, PipelineConfig, Prepared, Preset, SyntheticScenario,
};
use trawl_core::rebalance::{balance, BalanceConfig, BalanceMethod};
use trawl_core::stats::stats8;
use trawl_core::*;

// pinned tolerances
const C1_ACCURACY: f64 = 0.84851;
const C1_ACCURACY_TOL: f64 = 0.00001;
const C1_F1: f64 = 0.3157;
const C1_F1_TOL: f64 = 0.001;
const C3_RMSE_RATIO: f64 = 0.7;
const C3_PROB_SUM_TOL: f64 = 1e-12;
const C3_TRACKS: usize = 50;
const C3_SIGMA_M: f64 = 10.0;
const C4_STATS_SERIES: usize = 1000;
const C4_TREE_DATASETS: usize = 100;
const C4_TREE_MAX_ROWS: usize = 200;
const C4_PARETO_SETS: usize = 100;
const C5_CONVEX_TOL: f64 = 1e-9;
const C6_FOLDS: usize = 10;
const C7_ACCURACY: f64 = 0.95;
const C7_F1: f64 = 0.90;
const C7_UNBALANCED_F1: f64 = 0.5;
const C8_SPEED_SHARE: f64 = 0.9;
const C8_REDUCED_GAP: f64 = 0.03;
const C9_MATRIX_SIZE: usize = 30;
const SEED: u64 = 2024;

fn verdict(n: &str, what: &str, pass: bool, elapsed: Duration, limit: Duration, detail: String) -> bool {
    let ok = pass && elapsed <= limit;
    println!(
        "criterion {n}: {} - {what} [{:.2}s of {}s] {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

/// The default scenario (200 fishing, 800 transit tracks) prepared under the complete process.
fn default_data() -> &'static (ExperimentInput, Prepared) {
    static DATA: OnceLock<(ExperimentInput, Prepared)> = OnceLock::new();
    DATA.get_or_init(|| {
        let scenario = SyntheticScenario { seed: SEED, ..Default::default() };
        let input = ExperimentInput::from_records(generate_synthetic(&scenario).records).unwrap();
        let prepared = prepare(&input.records, Preset::Complete.stages(), &PipelineConfig::default()).unwrap();
        (input, prepared)
    })
}

fn complete_run(balance: BalanceMethod, classifier: ClassifierKind, mode: FeatureMode) -> EvaluationReport {
    let (input, prepared) = default_data();
    let setting = ExperimentSetting::new(Preset::Complete, balance, classifier, mode, SEED);
    evaluate_prepared(&setting, prepared, &input.digest, &PipelineConfig::default()).unwrap()
}

#[test]
fn criterion_01_metric_math() {
    let t = Instant::now();
    let cm = ConfusionMatrix { tp: 1234, fn_: 4989, fp: 361, tn: 28730 };
    let m = metrics(&cm, &MetricsConfig::default()).unwrap();
    let pass = (m.accuracy - C1_ACCURACY).abs() <= C1_ACCURACY_TOL && (m.f_measure - C1_F1).abs() <= C1_F1_TOL;
    let detail = format!("accuracy {:.5}, F1 {:.4}", m.accuracy, m.f_measure);
    assert!(verdict("1", "metrics on the reference confusion matrix", pass, t.elapsed(), Duration::from_secs(1), detail));
}

#[test]
fn criterion_02_scale_substitution() {
    println!("criterion 2: N/A - full-scale figures are not reproducible offline; criteria 3-10 are the desk-scale substitutes");
}

#[test]
fn criterion_03_filtering_efficacy() {
    let t = Instant::now();
    let scenario = SyntheticScenario { fishing_tracks: 0, transit_tracks: C3_TRACKS, noise_sigma_m: C3_SIGMA_M, seed: SEED, ..Default::default() };
    let noisy = generate_synthetic(&scenario);
    let truth = generate_synthetic(&SyntheticScenario { noise_sigma_m: 0.0, ..scenario.clone() });
    let truth_at: HashMap<(u32, i64), (f64, f64)> =
        truth.records.iter().map(|r| ((r.mmsi, r.timestamp), (r.lat, r.lon))).collect();
    let tracks = clean(&noisy.records, &CleaningConfig::default()).unwrap().tracks;
    let cfg = ImmConfig::default();
    let (mut raw_sq, mut filt_sq, mut n) = (0.0, 0.0, 0usize);
    let mut worst_sum = 0.0f64;
    for track in &tracks {
        let kt = smooth_track(track, &cfg).unwrap();
        for (p, est) in track.points.iter().zip(&kt.points) {
            let (tlat, tlon) = truth_at[&(p.mmsi, p.timestamp)];
            let (gx, gy) = kt.frame.project(tlat, tlon);
            let (mx, my) = kt.frame.project(p.lat, p.lon);
            raw_sq += (mx - gx).powi(2) + (my - gy).powi(2);
            filt_sq += (est.x - gx).powi(2) + (est.y - gy).powi(2);
            n += 1;
            if let Some(mp) = est.mode_probs {
                worst_sum = worst_sum.max((mp[0] + mp[1] - 1.0).abs());
            }
        }
    }
    let (raw, filt) = ((raw_sq / n as f64).sqrt(), (filt_sq / n as f64).sqrt());
    let pass = tracks.len() == C3_TRACKS && filt <= C3_RMSE_RATIO * raw && worst_sum <= C3_PROB_SUM_TOL;
    let detail = format!(
        "{} tracks, raw RMSE {raw:.2} m, filtered {filt:.2} m (ratio {:.3}), max |sum mu - 1| {worst_sum:.1e}",
        tracks.len(),
        filt / raw
    );
    assert!(verdict("3", "IMM position error vs raw fixes", pass, t.elapsed(), Duration::from_secs(10), detail));
}

fn quantile_oracle(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn gini(a: f64, b: f64) -> f64 {
    let n = a + b;
    if n == 0.0 { 0.0 } else { 1.0 - (a / n).powi(2) - (b / n).powi(2) }
}

/// Exhaustive search: best impurity decrease over every feature and midpoint.
fn root_split_oracle(ds: &LabeledDataset) -> Option<(usize, f64)> {
    let n = ds.len() as f64;
    let fish = |idx: &mut dyn Iterator<Item = usize>| idx.fold((0.0, 0.0), |(a, b), i| {
        if ds.labels[i] == Label::Fishing { (a + 1.0, b) } else { (a, b + 1.0) }
    });
    let (pa, pb) = fish(&mut (0..ds.len()));
    let parent = gini(pa, pb);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..ds.n_features() {
        let values: BTreeSet<u64> = ds.rows.iter().map(|r| r[f].to_bits()).collect();
        let mut values: Vec<f64> = values.into_iter().map(f64::from_bits).collect();
        values.sort_by(f64::total_cmp);
        for w in values.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (la, lb) = fish(&mut (0..ds.len()).filter(|&i| ds.rows[i][f] < thr));
            let (ra, rb) = (pa - la, pb - lb);
            let delta = parent - (la + lb) / n * gini(la, lb) - (ra + rb) / n * gini(ra, rb);
            if best.is_none_or(|(d, _, _)| delta > d + 1e-12) {
                best = Some((delta, f, thr));
            }
        }
    }
    best.filter(|(d, _, _)| *d > 1e-12).map(|(_, f, thr)| (f, thr))
}

#[test]
fn criterion_04_oracle_equivalences() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut stats_ok = 0;
    for _ in 0..C4_STATS_SERIES {
        let n = rng.random_range(1..120);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let st = stats8(&s, 1);
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        let expected = [sorted[0], sorted[n - 1], quantile_oracle(&sorted, 0.25), quantile_oracle(&sorted, 0.5), quantile_oracle(&sorted, 0.75)];
        stats_ok += usize::from([st.min, st.max, st.q1, st.q2, st.q3] == expected);
    }

    let mut tree_ok = 0;
    for _ in 0..C4_TREE_DATASETS {
        let rows = rng.random_range(2..=C4_TREE_MAX_ROWS);
        let d = rng.random_range(1..6);
        let discrete = rng.random::<bool>();
        let p_fish = rng.random_range(0.1..0.9);
        let mut ds = LabeledDataset::new((0..d).map(|i| format!("f{i}")).collect());
        for _ in 0..rows {
            let row: Vec<f64> = (0..d).map(|_| if discrete { rng.random_range(0..8) as f64 } else { rng.random_range(0.0..1.0) }).collect();
            let label = if rng.random::<f64>() < p_fish { Label::Fishing } else { Label::NonFishing };
            ds.push(row, label, ShipType::Unknown, Provenance::Original);
        }
        let tree = train_tree(&ds, &TreeParams { max_depth: Some(1), ..Default::default() }).unwrap();
        let got = match tree.root {
            TreeNode::Branch { feature, threshold, .. } => Some((feature, threshold)),
            TreeNode::Leaf { .. } => None,
        };
        tree_ok += usize::from(got == root_split_oracle(&ds));
    }

    let mut pareto_ok = 0;
    for _ in 0..C4_PARETO_SETS {
        let n = rng.random_range(0..60);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0..15) as f64 / 15.0, rng.random_range(0..15) as f64 / 15.0)).collect();
        let brute: Vec<usize> = (0..n)
            .filter(|&i| !pts.iter().any(|q| q.0 >= pts[i].0 && q.1 >= pts[i].1 && (q.0 > pts[i].0 || q.1 > pts[i].1)))
            .filter(|&i| !pts[..i].contains(&pts[i]))
            .collect();
        pareto_ok += usize::from(pareto_front(&pts) == brute);
    }
    let pass = stats_ok == C4_STATS_SERIES && tree_ok == C4_TREE_DATASETS && pareto_ok == C4_PARETO_SETS;
    let detail = format!("stats {stats_ok}/{C4_STATS_SERIES}, root split {tree_ok}/{C4_TREE_DATASETS}, pareto {pareto_ok}/{C4_PARETO_SETS}");
    assert!(verdict("4", "sort / exhaustive-split / dominance oracles", pass, t.elapsed(), Duration::from_secs(30), detail));
}

fn on_segment(s: &[f64], a: &[f64], b: &[f64]) -> bool {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 { s.iter().zip(a).zip(&ab).map(|((s, a), d)| (s - a) * d).sum::<f64>() / len2 } else { 0.0 };
    if !(-C5_CONVEX_TOL..=1.0 + C5_CONVEX_TOL).contains(&t) {
        return false;
    }
    s.iter().zip(a).zip(&ab).all(|((s, a), d)| (a + t * d - s).abs() <= C5_CONVEX_TOL * (1.0 + s.abs()))
}

#[test]
fn criterion_05_balancing_exactness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut cases, mut ok) = (0, 0);
    for case in 0..40 {
        let minority = rng.random_range(2..30);
        let majority = rng.random_range(minority..150);
        let d = rng.random_range(1..6);
        let mut ds = LabeledDataset::new((0..d).map(|i| format!("f{i}")).collect());
        let (small, large) = if case % 2 == 0 { (Label::Fishing, Label::NonFishing) } else { (Label::NonFishing, Label::Fishing) };
        for i in 0..minority + majority {
            let row = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            ds.push(row, if i < minority { small } else { large }, ShipType::Unknown, Provenance::Original);
        }
        for method in [BalanceMethod::RandomUndersample, BalanceMethod::Smote] {
            cases += 1;
            let out = balance(&ds, &BalanceConfig { method, seed: case, ..Default::default() }).unwrap();
            let half = out.count(small) * 2 == out.len();
            let sound = match method {
                BalanceMethod::RandomUndersample => out.rows.iter().all(|r| ds.rows.contains(r)),
                _ => {
                    let originals: Vec<&Vec<f64>> = (0..ds.len()).filter(|&i| ds.labels[i] == small).map(|i| &ds.rows[i]).collect();
                    (0..out.len()).filter(|&i| out.provenance[i] == Provenance::Synthetic).all(|i| {
                        out.labels[i] == small
                            && originals.iter().any(|a| originals.iter().any(|b| on_segment(&out.rows[i], a, b)))
                    })
                }
            };
            ok += usize::from(half && sound);
        }
    }
    let detail = format!("{ok}/{cases} balanced datasets exact and sound");
    assert!(verdict("5", "minority fraction 0.5, convex SMOTE, undersample subset", ok == cases, t.elapsed(), Duration::from_secs(5), detail));
}

#[test]
fn criterion_06_leakage_freedom() {
    let t = Instant::now();
    let (_, prepared) = default_data();
    let cfg = EvalConfig { split: SplitKind::Kfold, k: C6_FOLDS, seed: SEED, ..Default::default() };
    let synthetic_in_test = std::sync::atomic::AtomicUsize::new(0);
    let synthetic_in_train = std::sync::atomic::AtomicUsize::new(0);
    let report = kfold_eval(&prepared.dataset, &cfg, |train, test| {
        let bad = test.provenance.iter().filter(|p| **p != Provenance::Original).count();
        synthetic_in_test.fetch_add(bad, std::sync::atomic::Ordering::SeqCst);
        let balanced = balance(train, &BalanceConfig { method: BalanceMethod::Smote, seed: SEED, ..Default::default() })?;
        synthetic_in_train.fetch_add(
            balanced.provenance.iter().filter(|p| **p == Provenance::Synthetic).count(),
            std::sync::atomic::Ordering::SeqCst,
        );
        let tree = train_tree(&balanced, &TreeParams::default())?;
        Ok(tree.predict_many(&test.rows))
    })
    .unwrap();
    let leaked = synthetic_in_test.into_inner();
    let made = synthetic_in_train.into_inner();
    let pass = leaked == 0 && made > 0 && report.folds.len() == C6_FOLDS;
    let detail = format!("{leaked} synthetic rows in test folds, {made} generated in training folds, mean accuracy {:.4}", report.mean_accuracy);
    assert!(verdict("6", "10-fold SMOTE keeps test folds original", pass, t.elapsed(), Duration::from_secs(60), detail));
}

#[test]
fn criterion_07_end_to_end_separability() {
    let t = Instant::now();
    let mut balanced_ok = true;
    let mut parts = Vec::new();
    for b in [BalanceMethod::RandomUndersample, BalanceMethod::Smote] {
        for c in [ClassifierKind::Tree, ClassifierKind::Svm] {
            let r = complete_run(b, c, FeatureMode::Full44);
            let (acc, f1) = r.headline();
            balanced_ok &= acc >= C7_ACCURACY && f1 >= C7_F1;
            parts.push(format!("{}/{} acc {acc:.4} F1 {f1:.4}", b.as_str(), c.as_str()));
        }
    }
    let r = complete_run(BalanceMethod::None, ClassifierKind::Svm, FeatureMode::Full44);
    let (acc, f1) = r.headline();
    let test_majority = (r.confusion.tn + r.confusion.fp) as f64 / r.confusion.total() as f64;
    let unbalanced_ok = f1 < C7_UNBALANCED_F1 && acc >= test_majority;
    parts.push(format!("none/svm acc {acc:.4} (majority {test_majority:.4}) F1 {f1:.4} [needs F1 < {C7_UNBALANCED_F1}]"));
    let detail = format!("balanced {}; unbalanced {}; {}", ok_str(balanced_ok), ok_str(unbalanced_ok), parts.join(", "));
    assert!(verdict("7", "complete process separability and imbalance collapse", balanced_ok && unbalanced_ok, t.elapsed(), Duration::from_secs(300), detail));
}

fn ok_str(b: bool) -> &'static str {
    if b { "ok" } else { "not met" }
}

#[test]
fn criterion_08_predictor_importance() {
    let t = Instant::now();
    // (a) only the speed statistics carry the class
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let names = FeatureMode::Full44.names();
    let mut ds = LabeledDataset::new(names.clone());
    for i in 0..600 {
        let label = if i % 4 == 0 { Label::Fishing } else { Label::NonFishing };
        let row = names
            .iter()
            .map(|n| {
                let base: f64 = rng.random_range(0.0..1.0);
                match (n.starts_with("speed_") && !n.starts_with("speed_variation"), label) {
                    (true, Label::Fishing) => 0.4 * base,
                    (true, Label::NonFishing) => 0.6 + 0.4 * base,
                    _ => base,
                }
            })
            .collect();
        ds.push(row, label, ShipType::Unknown, Provenance::Original);
    }
    let imp = predictor_importance(&train_tree(&ds, &TreeParams::default()).unwrap());
    let grouped = aggregate_importance(&imp.feature_names, &imp.normalized).unwrap();
    let speed_share = grouped.kinematic("speed").unwrap();
    let a_ok = speed_share >= C8_SPEED_SHARE;

    // (b) ranking on the end-to-end scenario
    let r = complete_run(BalanceMethod::Smote, ClassifierKind::Tree, FeatureMode::Full44);
    let ranking = r.importance.as_ref().unwrap().grouped.kinematic_ranking();
    let top: BTreeSet<&str> = ranking.iter().take(3).filter(|(_, v)| *v > 0.0).map(|(n, _)| n.as_str()).collect();
    let b_ok = top == BTreeSet::from(["speed", "total_time", "course_variation"]);

    // (c) reduced inputs stay close to the full set
    let mut worst_gap = 0.0f64;
    for b in [BalanceMethod::None, BalanceMethod::RandomUndersample, BalanceMethod::Smote] {
        for c in [ClassifierKind::Tree, ClassifierKind::Svm] {
            let full = complete_run(b, c, FeatureMode::Full44).headline().0;
            let reduced = complete_run(b, c, FeatureMode::Reduced13).headline().0;
            worst_gap = worst_gap.max((full - reduced).abs());
        }
    }
    let c_ok = worst_gap <= C8_REDUCED_GAP;
    let ranking_text: Vec<String> = ranking.iter().map(|(n, v)| format!("{n} {v:.3}")).collect();
    let detail = format!(
        "(a) speed share {speed_share:.3} {}; (b) kinematic ranking [{}] {}; (c) worst reduced gap {:.2} pp {}",
        ok_str(a_ok),
        ranking_text.join(", "),
        ok_str(b_ok),
        worst_gap * 100.0,
        ok_str(c_ok)
    );
    assert!(verdict("8", "importance recovery, ranking and reduced inputs", a_ok && b_ok && c_ok, t.elapsed(), Duration::from_secs(300), detail));
}

#[test]
fn criterion_09_matrix_structure_and_cleaning_order() {
    let t = Instant::now();
    let settings = default_matrix(SEED);
    let size_ok = settings.len() == C9_MATRIX_SIZE && complete_matrix(SEED).len() == 12;
    let scenario = SyntheticScenario { seed: SEED, defects: DefectConfig::typical(), ..Default::default() };
    let input = ExperimentInput::from_records(generate_synthetic(&scenario).records).unwrap();
    let result = run_matrix(&settings, &input, &PipelineConfig::default(), 4, false).unwrap();
    let summary = result.summary();
    let complete = summary.by_preset["complete"].mean_accuracy;
    let no_cleaning = summary.by_preset["no_cleaning"].mean_accuracy;
    let pass = size_ok && summary.failed.is_empty() && no_cleaning <= complete;
    let detail = format!(
        "{} experiments, {} failed; mean accuracy complete {complete:.4} vs no_cleaning {no_cleaning:.4} (delta {:.4})",
        settings.len(),
        summary.failed.len(),
        complete - no_cleaning
    );
    assert!(verdict("9", "30-experiment matrix, cleaning helps on defective data", pass, t.elapsed(), Duration::from_secs(900), detail));
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let (input, _) = default_data();
    let setting = ExperimentSetting::new(Preset::Complete, BalanceMethod::Smote, ClassifierKind::Svm, FeatureMode::Full44, SEED);
    let cfg = PipelineConfig::default();
    let a = run_experiment(&setting, input, &cfg).unwrap().to_json().unwrap();
    let b = run_experiment(&setting, input, &cfg).unwrap().to_json().unwrap();

    let small = SyntheticScenario { fishing_tracks: 30, transit_tracks: 90, seed: SEED, defects: DefectConfig::typical(), ..Default::default() };
    let regenerated = || ExperimentInput::from_records(generate_synthetic(&small).records).unwrap();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_matrix(d1.path(), &run_matrix(&default_matrix(SEED), &regenerated(), &cfg, 1, true).unwrap()).unwrap();
    write_matrix(d2.path(), &run_matrix(&default_matrix(SEED), &regenerated(), &cfg, 4, true).unwrap()).unwrap();
    let (f1, f2) = (dir_bytes(d1.path()), dir_bytes(d2.path()));
    let pass = a == b && f1 == f2 && !f1.is_empty();
    let detail = format!("report reruns identical: {}, matrix outputs ({} files, 1 vs 4 workers) identical: {}", a == b, f1.len(), f1 == f2);
    assert!(verdict("10", "byte-identical reruns", pass, t.elapsed(), Duration::from_secs(300), detail));
}
