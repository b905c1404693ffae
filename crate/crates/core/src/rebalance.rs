//! Class rebalancing by random undersampling or SMOTE.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMethod {
    None,
    #[serde(alias = "undersample")]
    RandomUndersample,
    Smote,
}

impl BalanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BalanceMethod::None => "none",
            BalanceMethod::RandomUndersample => "undersample",
            BalanceMethod::Smote => "smote",
        }
    }
}

impl std::str::FromStr for BalanceMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(BalanceMethod::None),
            "undersample" | "random_undersample" => Ok(BalanceMethod::RandomUndersample),
            "smote" => Ok(BalanceMethod::Smote),
            other => Err(format!("unknown balancing method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    pub method: BalanceMethod,
    pub target_minority_fraction: f64,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig { method: BalanceMethod::Smote, target_minority_fraction: 0.5, k_neighbors: 5, seed: 0 }
    }
}

impl BalanceConfig {
    pub fn validate(&self) -> Result<()> {
        let f = self.target_minority_fraction;
        if !(f > 0.0 && f < 1.0) || self.k_neighbors == 0 {
            return Err(Error::InvalidConfig(format!("balance settings out of range: {self:?}")));
        }
        Ok(())
    }
}

pub fn balance(ds: &LabeledDataset, cfg: &BalanceConfig) -> Result<LabeledDataset> {
    match cfg.method {
        BalanceMethod::None => Ok(ds.clone()),
        BalanceMethod::RandomUndersample => random_undersample(ds, cfg),
        BalanceMethod::Smote => smote(ds, cfg),
    }
}

/// Removes majority rows uniformly at random until the minority reaches the target
/// fraction. Surviving rows keep their input order.
pub fn random_undersample(ds: &LabeledDataset, cfg: &BalanceConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let minority = ds.minority();
    let minority_count = ds.count(minority);
    if minority_count == 0 {
        return Err(Error::Data("no minority instances to balance against".into()));
    }
    let f = cfg.target_minority_fraction;
    let target = (minority_count as f64 * (1.0 - f) / f).round() as usize;
    let majority_rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] != minority).collect();
    if majority_rows.len() <= target {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut keep = vec![false; ds.len()];
    for i in sample(&mut rng, majority_rows.len(), target) {
        keep[majority_rows[i]] = true;
    }
    let indices: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == minority || keep[i]).collect();
    Ok(ds.subset(&indices))
}

/// Where a synthetic SMOTE row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

pub fn smote(ds: &LabeledDataset, cfg: &BalanceConfig) -> Result<LabeledDataset> {
    smote_traced(ds, cfg).map(|(out, _)| out)
}

/// Per-feature (mean, std) over all rows; constant features get std 0.
fn column_moments(ds: &LabeledDataset) -> Vec<(f64, f64)> {
    let n = ds.len() as f64;
    (0..ds.n_features())
        .map(|j| {
            let mean = ds.rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = ds.rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// SMOTE with the parent indices of every synthetic row (indices into `ds`).
///
/// Base rows are taken round-robin over the minority class; for each, one of its
/// `k` nearest minority neighbors (z-standardized Euclidean distance) is drawn and
/// the new row placed at a uniform point on the segment between them.
pub fn smote_traced(ds: &LabeledDataset, cfg: &BalanceConfig) -> Result<(LabeledDataset, Vec<SyntheticOrigin>)> {
    cfg.validate()?;
    let minority = ds.minority();
    let members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == minority).collect();
    if members.len() < 2 {
        return Err(Error::InsufficientMinority { found: members.len() });
    }
    let majority_count = ds.len() - members.len();
    let f = cfg.target_minority_fraction;
    let target = (majority_count as f64 * f / (1.0 - f)).round() as usize;
    if target <= members.len() {
        return Ok((ds.clone(), Vec::new()));
    }
    let needed = target - members.len();

    let moments = column_moments(ds);
    let scaled: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| ds.rows[i].iter().zip(&moments).map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 }).collect())
        .collect();
    let k = cfg.k_neighbors.min(members.len() - 1);
    let neighbors: Vec<Vec<usize>> = (0..members.len())
        .map(|a| {
            let mut d: Vec<(f64, usize)> = (0..members.len())
                .filter(|&b| b != a)
                .map(|b| (scaled[a].iter().zip(&scaled[b]).map(|(x, y)| (x - y).powi(2)).sum(), b))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = ds.clone();
    let mut origins = Vec::with_capacity(needed);
    for s in 0..needed {
        let a = s % members.len();
        let b = neighbors[a][rng.random_range(0..k)];
        let gap: f64 = rng.random();
        let (base, neighbor) = (members[a], members[b]);
        let row = ds.rows[base].iter().zip(&ds.rows[neighbor]).map(|(x, n)| x + gap * (n - x)).collect();
        out.push(row, minority, ds.ship_types[base], Provenance::Synthetic);
        origins.push(SyntheticOrigin { base, neighbor, gap });
    }
    Ok((out, origins))
}
