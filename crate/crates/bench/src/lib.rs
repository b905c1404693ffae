//! Shared fixtures for the benchmarks: a small synthetic scenario carried through
//! each stage once, so every bench times a single stage on realistic input.

use trawl_core::cleaning::clean;
use trawl_core::estimation::smooth_all;
use trawl_core::features::extract_dataset;
use trawl_core::pipeline::generate_synthetic;
use trawl_core::segmentation::segment_all;
use trawl_core::{
    AisRecord, CleaningConfig, FeatureConfig, ImmConfig, KinematicTrack, LabeledDataset, Segment, SegmentationMode,
    SyntheticScenario, Track,
};

pub struct Fixture {
    pub records: Vec<AisRecord>,
    pub tracks: Vec<Track>,
    pub kinematic: Vec<KinematicTrack>,
    pub segments: Vec<Segment>,
    pub dataset: LabeledDataset,
}

pub fn fixture(fishing: usize, transit: usize) -> Fixture {
    let scenario = SyntheticScenario { fishing_tracks: fishing, transit_tracks: transit, seed: 11, ..Default::default() };
    let records = generate_synthetic(&scenario).records;
    let tracks = clean(&records, &CleaningConfig::default()).expect("synthetic data cleans").tracks;
    let (kinematic, _) = smooth_all(&tracks, &ImmConfig::default());
    let segments = segment_all(&kinematic, SegmentationMode::Fixed { length: 50 });
    let dataset = extract_dataset(&segments, &FeatureConfig::default());
    Fixture { records, tracks, kinematic, segments, dataset }
}
