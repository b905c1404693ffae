//! Tree predictor importance and its grouping by statistic and kinematic series.

use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeNode};
use crate::error::{Error, Result};
use crate::features::{EXTRAS, SERIES, STATISTICS, TOTAL_TIME};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature_names: Vec<String>,
    pub raw: Vec<f64>,
    /// Raw scores scaled to sum to 1; all zeros when the tree never splits.
    pub normalized: Vec<f64>,
}

/// Sum of risk decreases of the splits on each feature, divided by the number of branch nodes.
pub fn predictor_importance(tree: &DecisionTree) -> Importance {
    let d = tree.feature_names.len();
    let mut raw = vec![0.0; d];
    let mut branches = 0usize;
    tree.root.visit(&mut |node| {
        if let TreeNode::Branch { feature, risk, left, right, .. } = node {
            raw[*feature] += risk - left.risk() - right.risk();
            branches += 1;
        }
    });
    if branches > 0 {
        raw.iter_mut().for_each(|r| *r /= branches as f64);
    }
    let total: f64 = raw.iter().sum();
    let normalized = if total > 0.0 { raw.iter().map(|r| r / total).collect() } else { vec![0.0; d] };
    Importance { feature_names: tree.feature_names.clone(), raw, normalized }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedImportance {
    /// mean, max, ... summed over the five series.
    pub by_statistic: Vec<(String, f64)>,
    /// The five series plus total_time.
    pub by_kinematic: Vec<(String, f64)>,
    pub extras: Vec<(String, f64)>,
    pub total: f64,
}

impl GroupedImportance {
    pub fn kinematic(&self, name: &str) -> Option<f64> {
        self.by_kinematic.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.by_statistic.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Kinematic groups sorted by decreasing importance, stable on ties.
    pub fn kinematic_ranking(&self) -> Vec<(String, f64)> {
        let mut v = self.by_kinematic.clone();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }
}

pub fn aggregate_importance(names: &[String], scores: &[f64]) -> Result<GroupedImportance> {
    if names.len() != scores.len() {
        return Err(Error::Data(format!("{} names for {} scores", names.len(), scores.len())));
    }
    let mut by_statistic: Vec<(String, f64)> = STATISTICS.iter().map(|s| (s.to_string(), 0.0)).collect();
    let mut by_kinematic: Vec<(String, f64)> =
        SERIES.iter().chain(std::iter::once(&TOTAL_TIME)).map(|s| (s.to_string(), 0.0)).collect();
    let mut extras: Vec<(String, f64)> = EXTRAS.iter().map(|s| (s.to_string(), 0.0)).collect();
    for (name, &score) in names.iter().zip(scores) {
        if name == TOTAL_TIME {
            by_kinematic[SERIES.len()].1 += score;
        } else if let Some(slot) = EXTRAS.iter().position(|e| e == name) {
            extras[slot].1 += score;
        } else {
            let (series, stat) = SERIES
                .iter()
                .enumerate()
                .find_map(|(i, s)| {
                    let rest = name.strip_prefix(s)?.strip_prefix('_')?;
                    STATISTICS.iter().position(|t| *t == rest).map(|j| (i, j))
                })
                .ok_or_else(|| Error::UnknownFeature(name.clone()))?;
            by_kinematic[series].1 += score;
            by_statistic[stat].1 += score;
        }
    }
    Ok(GroupedImportance { by_statistic, by_kinematic, extras, total: scores.iter().sum() })
}
