//! Linear soft-margin SVM trained by dual coordinate descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// Stop once the dual objective changes by less than this fraction in an epoch.
    pub tolerance: f64,
    /// Stop once the projected-gradient spread falls below this.
    pub gradient_tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, tolerance: 1e-8, gradient_tolerance: 1e-6, max_epochs: 2000, seed: 0 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-feature z-score parameters; `std == 0` marks a constant feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                std[j] += (r[j] - mean[j]).powi(2);
            }
        }
        for (s, m) in std.iter_mut().zip(&mean) {
            *s = (*s / n).sqrt();
            // rounding noise on a constant column is not spread
            if !(*s > 1e-12 * m.abs().max(1.0)) || !s.is_finite() {
                *s = 0.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub feature_names: Vec<String>,
    /// Weights in standardized feature space; constant features carry 0.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
    pub c: f64,
    pub epochs: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        if self.decision(row) > 0.0 {
            Label::Fishing
        } else {
            Label::NonFishing
        }
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<Label> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

fn sign(label: Label) -> f64 {
    match label {
        Label::Fishing => 1.0,
        Label::NonFishing => -1.0,
    }
}

/// Hinge-loss primal objective in standardized space (bias included in the norm).
pub fn primal_objective(model: &SvmModel, ds: &LabeledDataset) -> f64 {
    let norm: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let loss: f64 = ds
        .rows
        .iter()
        .zip(&ds.labels)
        .map(|(r, l)| (1.0 - sign(*l) * model.decision(r)).max(0.0))
        .sum();
    0.5 * norm + model.c * loss
}

/// Trains on z-standardized features augmented with a constant 1 so the bias is
/// learned as an ordinary weight. Each epoch visits the rows in a seeded random order.
pub fn train_svm(ds: &LabeledDataset, params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.count(Label::Fishing) == 0 || ds.count(Label::NonFishing) == 0 {
        return Err(Error::SingleClass);
    }
    let standardizer = Standardizer::fit(&ds.rows);
    let d = ds.n_features();
    let xs: Vec<Vec<f64>> = ds
        .rows
        .iter()
        .map(|r| {
            let mut z = standardizer.apply(r);
            z.push(1.0);
            z
        })
        .collect();
    let ys: Vec<f64> = ds.labels.iter().map(|l| sign(*l)).collect();
    let qii: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
    let c = params.c;
    let n = xs.len();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut dual_prev = 0.0;
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let x = &xs[i];
            let g = ys[i] * dot(&w, x) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * ys[i];
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += step * xj;
                }
            }
        }
        let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
        let relative = (dual - dual_prev).abs() / dual.abs().max(1e-300);
        dual_prev = dual;
        if pg_max - pg_min < params.gradient_tolerance || relative < params.tolerance {
            converged = true;
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("SVM training diverged".into()));
    }
    let bias = w.pop().unwrap_or(0.0);
    for (wj, s) in w.iter_mut().zip(&standardizer.std) {
        if *s == 0.0 {
            *wj = 0.0;
        }
    }
    Ok(SvmModel { feature_names: ds.feature_names.clone(), weights: w, bias, standardizer, c, epochs, converged })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
