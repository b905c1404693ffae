//! Track reconstruction and cleaning of raw AIS contacts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_m, LocalFrame};
use crate::ingest::{to_binary_class, AisRecord, Label, MobileClass, NavStatus, ShipType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InconsistencyConfig {
    /// Fraction of contacts reporting moored/at anchor needed to call the track stationary.
    pub status_fraction: f64,
    /// Net first-to-last displacement that contradicts a stationary status.
    pub displacement_m: f64,
}

impl Default for InconsistencyConfig {
    fn default() -> Self {
        InconsistencyConfig { status_fraction: 0.9, displacement_m: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub max_gap_s: i64,
    pub min_points: usize,
    pub extreme_speed_mps: f64,
    pub motionless_diag_m: f64,
    pub inconsistency: InconsistencyConfig,
    /// Full cleaning; `false` keeps only the minimum needed by later stages.
    pub full: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            max_gap_s: 11,
            min_points: 50,
            extreme_speed_mps: 55.0,
            motionless_diag_m: 100.0,
            inconsistency: InconsistencyConfig::default(),
            full: true,
        }
    }
}

impl CleaningConfig {
    pub fn minimum() -> Self {
        CleaningConfig { full: false, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.inconsistency.status_fraction;
        if self.max_gap_s <= 0
            || self.min_points == 0
            || !(self.extreme_speed_mps > 0.0)
            || !(self.motionless_diag_m > 0.0)
            || !(self.inconsistency.displacement_m > 0.0)
            || !(f > 0.0 && f <= 1.0)
        {
            return Err(Error::InvalidConfig(format!("cleaning thresholds out of range: {self:?}")));
        }
        Ok(())
    }
}

/// A time-ordered run of contacts from one MMSI, not yet validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub mmsi: u32,
    pub points: Vec<AisRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StaticExtras {
    /// Most frequent navigational status over the track.
    pub nav_status: Option<NavStatus>,
    pub length: Option<f64>,
    pub width: Option<f64>,
}

/// A cleaned, labeled vessel trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub mmsi: u32,
    pub class: Label,
    pub ship_type: ShipType,
    pub static_extras: StaticExtras,
    pub points: Vec<AisRecord>,
}

impl Track {
    pub fn first_timestamp(&self) -> i64 {
        self.points.first().map_or(0, |p| p.timestamp)
    }

    /// Checks the post-conditions every cleaned track must satisfy.
    pub fn check_invariants(&self, cfg: &CleaningConfig) -> std::result::Result<(), String> {
        if self.points.len() < cfg.min_points {
            return Err(format!("{} points < {}", self.points.len(), cfg.min_points));
        }
        for w in self.points.windows(2) {
            let dt = w[1].timestamp - w[0].timestamp;
            if dt <= 0 {
                return Err(format!("timestamps not strictly increasing at {}", w[1].timestamp));
            }
            if dt > cfg.max_gap_s {
                return Err(format!("gap of {dt} s at {}", w[1].timestamp));
            }
        }
        if self.points.iter().any(|p| p.mmsi != self.mmsi) {
            return Err("mixed MMSIs".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Unlabeled,
    NotAShip,
    Motionless,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedTrack {
    pub mmsi: u32,
    pub first_timestamp: i64,
    pub points: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_records: usize,
    pub candidates: usize,
    pub noise_points_removed: usize,
    /// Fragments that fell under the size limit once noise was removed.
    pub short_after_noise: usize,
    pub dropped: Vec<DroppedTrack>,
    pub retained: usize,
}

impl CleaningReport {
    pub fn drop_counts(&self) -> BTreeMap<DropReason, usize> {
        let mut counts = BTreeMap::new();
        for d in &self.dropped {
            *counts.entry(d.reason).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone)]
pub struct CleanOutput {
    pub tracks: Vec<Track>,
    pub report: CleaningReport,
}

/// Groups contacts by MMSI, orders them in time, collapses duplicate timestamps
/// to their first occurrence and cuts each group at every gap above `max_gap_s`.
/// Fragments shorter than `min_points` are discarded.
pub fn split_tracks(records: &[AisRecord], cfg: &CleaningConfig) -> Vec<Candidate> {
    let mut groups: BTreeMap<u32, Vec<&AisRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.mmsi).or_default().push(r);
    }
    let mut out = Vec::new();
    for (mmsi, mut group) in groups {
        // stable: equal timestamps keep input order, so dedup keeps the first
        group.sort_by_key(|r| r.timestamp);
        group.dedup_by_key(|r| r.timestamp);
        let points: Vec<AisRecord> = group.into_iter().cloned().collect();
        out.extend(cut_on_gaps(mmsi, points, cfg));
    }
    out
}

fn cut_on_gaps(mmsi: u32, points: Vec<AisRecord>, cfg: &CleaningConfig) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut current: Vec<AisRecord> = Vec::new();
    for p in points {
        if let Some(last) = current.last() {
            if p.timestamp - last.timestamp > cfg.max_gap_s {
                let done = std::mem::take(&mut current);
                if done.len() >= cfg.min_points {
                    out.push(Candidate { mmsi, points: done });
                }
            }
        }
        current.push(p);
    }
    if current.len() >= cfg.min_points {
        out.push(Candidate { mmsi, points: current });
    }
    out
}

fn implied_speed(a: &AisRecord, b: &AisRecord) -> f64 {
    let dt = (b.timestamp - a.timestamp) as f64;
    haversine_m(a.lat, a.lon, b.lat, b.lon) / dt
}

/// Removes contacts whose jump from the last accepted contact implies a speed above
/// `extreme_speed_mps`. Returns `None` when fewer than `min_points` contacts survive.
pub fn remove_extreme_noise(candidate: Candidate, cfg: &CleaningConfig) -> Option<Candidate> {
    remove_extreme_noise_counted(candidate, cfg).0
}

fn remove_extreme_noise_counted(candidate: Candidate, cfg: &CleaningConfig) -> (Option<Candidate>, usize) {
    let limit = cfg.extreme_speed_mps;
    let Candidate { mmsi, points } = candidate;
    let mut start = 0;
    // A leading outlier would otherwise reject every contact after it.
    while points.len() - start >= 3
        && implied_speed(&points[start], &points[start + 1]) > limit
        && implied_speed(&points[start], &points[start + 2]) > limit
        && implied_speed(&points[start + 1], &points[start + 2]) <= limit
    {
        start += 1;
    }
    let mut kept: Vec<AisRecord> = Vec::with_capacity(points.len());
    for p in points.iter().skip(start) {
        match kept.last() {
            Some(prev) if implied_speed(prev, p) > limit => {}
            _ => kept.push(p.clone()),
        }
    }
    let removed = points.len() - kept.len();
    if kept.len() < cfg.min_points {
        (None, removed)
    } else {
        (Some(Candidate { mmsi, points: kept }), removed)
    }
}

fn mode_by<T: Copy + Ord>(values: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    // max_by_key returns the last maximum; iterate in reverse so ties go to the smallest key
    counts.into_iter().rev().max_by_key(|(_, c)| *c).map(|(v, _)| v)
}

fn bbox_diagonal_m(points: &[AisRecord]) -> f64 {
    let frame = LocalFrame::new(points[0].lat, points[0].lon);
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        let (x, y) = frame.project(p.lat, p.lon);
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    (max_x - min_x).hypot(max_y - min_y)
}

fn classify_candidate(c: &Candidate, cfg: &CleaningConfig) -> std::result::Result<Track, DropReason> {
    let ship_type = mode_by(c.points.iter().filter_map(|p| p.ship_type));
    let class = to_binary_class(ship_type).label().ok_or(DropReason::Unlabeled)?;
    let ship_type = ship_type.expect("labeled tracks carry a ship type");

    if cfg.full {
        let ships = c.points.iter().filter(|p| p.mobile_class == MobileClass::Ship).count();
        if ships * 2 <= c.points.len() {
            return Err(DropReason::NotAShip);
        }
    }
    if bbox_diagonal_m(&c.points) < cfg.motionless_diag_m {
        return Err(DropReason::Motionless);
    }
    if cfg.full {
        let stationary = c.points.iter().filter(|p| p.nav_status.is_some_and(NavStatus::is_stationary)).count();
        let (first, last) = (&c.points[0], &c.points[c.points.len() - 1]);
        let displacement = haversine_m(first.lat, first.lon, last.lat, last.lon);
        if stationary as f64 >= cfg.inconsistency.status_fraction * c.points.len() as f64
            && displacement > cfg.inconsistency.displacement_m
        {
            return Err(DropReason::Inconsistent);
        }
    }

    let static_extras = StaticExtras {
        nav_status: mode_by(c.points.iter().filter_map(|p| p.nav_status)),
        length: c.points.iter().find_map(|p| p.length),
        width: c.points.iter().find_map(|p| p.width),
    };
    Ok(Track { mmsi: c.mmsi, class, ship_type, static_extras, points: c.points.clone() })
}

/// Applies the validity rules: unlabeled and motionless tracks always go; non-ship
/// emitters and status/motion inconsistencies go only under full cleaning.
pub fn drop_invalid(candidates: Vec<Candidate>, cfg: &CleaningConfig) -> (Vec<Track>, Vec<DroppedTrack>) {
    let results: Vec<_> = candidates.par_iter().map(|c| classify_candidate(c, cfg)).collect();
    let mut tracks = Vec::new();
    let mut dropped = Vec::new();
    for (c, result) in candidates.iter().zip(results) {
        match result {
            Ok(t) => tracks.push(t),
            Err(reason) => dropped.push(DroppedTrack {
                mmsi: c.mmsi,
                first_timestamp: c.points[0].timestamp,
                points: c.points.len(),
                reason,
            }),
        }
    }
    (tracks, dropped)
}

/// Full cleaning chain: split, extreme-noise removal (re-cutting any gap the removal
/// opened), then the validity rules. Output is sorted by MMSI, then first timestamp.
pub fn clean(records: &[AisRecord], cfg: &CleaningConfig) -> Result<CleanOutput> {
    cfg.validate()?;
    let candidates = split_tracks(records, cfg);
    let n_candidates = candidates.len();

    let denoised: Vec<(Vec<Candidate>, usize, bool)> = candidates
        .into_par_iter()
        .map(|c| {
            let mmsi = c.mmsi;
            match remove_extreme_noise_counted(c, cfg) {
                (Some(c), removed) => {
                    let parts = cut_on_gaps(mmsi, c.points, cfg);
                    let lost = parts.is_empty();
                    (parts, removed, lost)
                }
                (None, removed) => (Vec::new(), removed, true),
            }
        })
        .collect();

    let mut report = CleaningReport { input_records: records.len(), candidates: n_candidates, ..Default::default() };
    let mut survivors = Vec::new();
    for (parts, removed, lost) in denoised {
        report.noise_points_removed += removed;
        report.short_after_noise += usize::from(lost);
        survivors.extend(parts);
    }

    let (mut tracks, dropped) = drop_invalid(survivors, cfg);
    tracks.sort_by_key(|t| (t.mmsi, t.first_timestamp()));
    report.dropped = dropped;
    report.retained = tracks.len();
    Ok(CleanOutput { tracks, report })
}
