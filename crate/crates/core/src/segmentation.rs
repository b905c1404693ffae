//! Fixed-size, non-overlapping segmentation of kinematic tracks.

use serde::{Deserialize, Serialize};

use crate::cleaning::StaticExtras;
use crate::estimation::{KinematicPoint, KinematicTrack};
use crate::ingest::{Label, ShipType};

pub const DEFAULT_SEGMENT_LENGTH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub mmsi: u32,
    /// Position of the segment within its parent track.
    pub index: usize,
    pub label: Label,
    pub ship_type: ShipType,
    pub static_extras: StaticExtras,
    pub points: Vec<KinematicPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMode {
    /// Windows of exactly `length` points.
    Fixed { length: usize },
    /// One segment per track.
    FullTrack,
}

impl Default for SegmentationMode {
    fn default() -> Self {
        SegmentationMode::Fixed { length: DEFAULT_SEGMENT_LENGTH }
    }
}

fn make_segment(track: &KinematicTrack, index: usize, points: &[KinematicPoint]) -> Segment {
    Segment {
        mmsi: track.mmsi,
        index,
        label: track.class,
        ship_type: track.ship_type,
        static_extras: track.static_extras.clone(),
        points: points.to_vec(),
    }
}

/// Windows `[0, L)`, `[L, 2L)`, ...; a trailing remainder shorter than `L` is dropped.
pub fn segment_track(track: &KinematicTrack, length: usize) -> Vec<Segment> {
    assert!(length >= 2, "segments need at least two points");
    track.points.chunks_exact(length).enumerate().map(|(i, chunk)| make_segment(track, i, chunk)).collect()
}

pub fn whole_track(track: &KinematicTrack) -> Segment {
    make_segment(track, 0, &track.points)
}

pub fn segment_all(tracks: &[KinematicTrack], mode: SegmentationMode) -> Vec<Segment> {
    match mode {
        SegmentationMode::Fixed { length } => tracks.iter().flat_map(|t| segment_track(t, length)).collect(),
        SegmentationMode::FullTrack => tracks.iter().filter(|t| t.points.len() >= 2).map(whole_track).collect(),
    }
}
