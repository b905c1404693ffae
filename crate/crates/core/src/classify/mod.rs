//! Binary fishing / non-fishing classifiers.

pub mod importance;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use importance::{aggregate_importance, predictor_importance, GroupedImportance, Importance};
pub use svm::{train_svm, Standardizer, SvmModel, SvmParams};
pub use tree::{train_tree, DecisionTree, TreeNode, TreeParams};

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::ingest::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Tree,
    Svm,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Tree => "tree",
            ClassifierKind::Svm => "svm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(ClassifierKind::Tree),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(format!("unknown classifier `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub tree: TreeParams,
    pub svm: SvmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "snake_case")]
pub enum Model {
    Tree(DecisionTree),
    Svm(SvmModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Tree(_) => ClassifierKind::Tree,
            Model::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Tree(t) => &t.feature_names,
            Model::Svm(m) => &m.feature_names,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        match self {
            Model::Tree(t) => t.predict(row),
            Model::Svm(m) => m.predict(row),
        }
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<Label> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub fn train(kind: ClassifierKind, ds: &LabeledDataset, cfg: &ClassifierConfig) -> Result<Model> {
    Ok(match kind {
        ClassifierKind::Tree => Model::Tree(train_tree(ds, &cfg.tree)?),
        ClassifierKind::Svm => Model::Svm(train_svm(ds, &cfg.svm)?),
    })
}
