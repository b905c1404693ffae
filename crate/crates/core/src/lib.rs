//! Fishing-vessel behavior classification from AIS trajectories.
//!
//! Raw AIS contacts are cleaned into tracks, smoothed with an interacting
//! multiple model filter, cut into fixed-length segments and summarized as
//! kinematic statistics. Balanced training sets feed a decision tree or a
//! linear SVM that separates fishing from non-fishing vessels.

pub mod classify;
pub mod cleaning;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod evaluate;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod rebalance;
pub mod segmentation;
pub mod stats;
pub mod store;

pub use classify::{ClassifierConfig, ClassifierKind, DecisionTree, Model, SvmModel, SvmParams, TreeNode, TreeParams};
pub use cleaning::{CleaningConfig, CleaningReport, DropReason, StaticExtras, Track};
pub use dataset::{LabeledDataset, Provenance};
pub use error::{Error, Result};
pub use estimation::{ImmConfig, KinematicPoint, KinematicTrack};
pub use evaluate::{ConfusionMatrix, EvalConfig, Metrics, MetricsConfig, SplitKind};
pub use features::{FeatureConfig, FeatureMode};
pub use geo::LocalFrame;
pub use ingest::{AisRecord, ColumnMapping, Label, MobileClass, NavStatus, ShipType};
pub use pipeline::{EvaluationReport, ExperimentInput, ExperimentSetting, PipelineConfig, Preset, SyntheticScenario};
pub use rebalance::{BalanceConfig, BalanceMethod};
pub use segmentation::{Segment, SegmentationMode};
