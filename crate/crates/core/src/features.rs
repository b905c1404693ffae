//! Kinematic feature extraction from segments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, Provenance};
use crate::ingest::Label;
use crate::segmentation::Segment;
use crate::stats::{stats8, Stats8};

/// Series in feature-vector order.
pub const SERIES: [&str; 5] = ["course_variation", "distance", "speed", "speed_variation", "dt"];
pub const STATISTICS: [&str; 8] = Stats8::NAMES;
pub const TOTAL_TIME: &str = "total_time";
pub const EXTRAS: [&str; 3] = ["nav_status", "length", "width"];

const REDUCED_SERIES: [&str; 2] = ["course_variation", "speed"];
const REDUCED_STATISTICS: [&str; 6] = ["mean", "max", "std", "q1", "q2", "q3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// All series statistics, total time and the static extras.
    #[serde(rename = "full_44")]
    Full44,
    /// As `Full44` without the static extras.
    #[serde(rename = "kinematic_41")]
    Kinematic41,
    /// Speed and course variation without min and mode, plus total time.
    #[serde(rename = "reduced_13")]
    Reduced13,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Full44 => "full_44",
            FeatureMode::Kinematic41 => "kinematic_41",
            FeatureMode::Reduced13 => "reduced_13",
        }
    }

    /// Stable feature names. `total_time` leads so that, for fixed-length segments,
    /// a split on it is preferred over the equivalent split on `dt_mean`.
    pub fn names(self) -> Vec<String> {
        let mut names = vec![TOTAL_TIME.to_string()];
        for series in SERIES {
            for stat in STATISTICS {
                if self == FeatureMode::Reduced13 && !(REDUCED_SERIES.contains(&series) && REDUCED_STATISTICS.contains(&stat)) {
                    continue;
                }
                names.push(format!("{series}_{stat}"));
            }
        }
        if self == FeatureMode::Full44 {
            names.extend(EXTRAS.iter().map(|s| s.to_string()));
        }
        names
    }

    pub fn len(self) -> usize {
        match self {
            FeatureMode::Full44 => 44,
            FeatureMode::Kinematic41 => 41,
            FeatureMode::Reduced13 => 13,
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full_44" | "full44" | "full" => Ok(FeatureMode::Full44),
            "kinematic_41" | "kinematic41" | "kinematic" => Ok(FeatureMode::Kinematic41),
            "reduced_13" | "reduced13" | "reduced" => Ok(FeatureMode::Reduced13),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    /// Decimal places used to discretize series before taking their mode.
    pub mode_decimals: i32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { mode: FeatureMode::Full44, mode_decimals: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSet {
    /// Degrees per step, wrapped to (-180, 180].
    pub course_variation: Vec<f64>,
    /// Meters between consecutive points.
    pub step_distance: Vec<f64>,
    /// m/s per point.
    pub speed: Vec<f64>,
    /// m/s per step.
    pub speed_variation: Vec<f64>,
    /// Seconds per step.
    pub dt: Vec<f64>,
}

impl SeriesSet {
    fn in_order(&self) -> [&[f64]; 5] {
        [&self.course_variation, &self.step_distance, &self.speed, &self.speed_variation, &self.dt]
    }
}

pub fn wrap_degrees(d: f64) -> f64 {
    let d = d.rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

pub fn derive_series(segment: &Segment) -> SeriesSet {
    let p = &segment.points;
    let steps = p.windows(2);
    SeriesSet {
        course_variation: steps.clone().map(|w| wrap_degrees(w[1].course - w[0].course)).collect(),
        step_distance: steps.clone().map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).collect(),
        speed: p.iter().map(|q| q.speed).collect(),
        speed_variation: steps.clone().map(|w| w[1].speed - w[0].speed).collect(),
        dt: steps.map(|w| (w[1].timestamp - w[0].timestamp) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub mode: FeatureMode,
    pub values: Vec<f64>,
    pub label: Label,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<String> {
        self.mode.names()
    }
}

/// Builds the feature vector for one segment. Absent extras are encoded as 0;
/// the navigational status is stored as `code + 1` so 0 always means absent.
pub fn extract(segment: &Segment, cfg: &FeatureConfig) -> FeatureVector {
    let series = derive_series(segment);
    let p = &segment.points;
    let total_time = (p[p.len() - 1].timestamp - p[0].timestamp) as f64;
    let mut values = Vec::with_capacity(cfg.mode.len());
    values.push(total_time);
    for (name, s) in SERIES.iter().zip(series.in_order()) {
        let all = stats8(s, cfg.mode_decimals).to_array();
        for (stat, v) in STATISTICS.iter().zip(all) {
            if cfg.mode == FeatureMode::Reduced13 && !(REDUCED_SERIES.contains(name) && REDUCED_STATISTICS.contains(stat)) {
                continue;
            }
            values.push(v);
        }
    }
    if cfg.mode == FeatureMode::Full44 {
        let extras = &segment.static_extras;
        values.push(extras.nav_status.map_or(0.0, |s| f64::from(s.code()) + 1.0));
        values.push(extras.length.unwrap_or(0.0));
        values.push(extras.width.unwrap_or(0.0));
    }
    debug_assert_eq!(values.len(), cfg.mode.len());
    FeatureVector { mode: cfg.mode, values, label: segment.label }
}

/// Extracts every segment into a dataset, preserving segment order.
pub fn extract_dataset(segments: &[Segment], cfg: &FeatureConfig) -> LabeledDataset {
    let rows: Vec<FeatureVector> = segments.par_iter().map(|s| extract(s, cfg)).collect();
    let mut ds = LabeledDataset::new(cfg.mode.names());
    for (seg, fv) in segments.iter().zip(rows) {
        ds.push(fv.values, fv.label, seg.ship_type, Provenance::Original);
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaning::StaticExtras;
    use crate::estimation::{course_deg, KinematicPoint};
    use crate::ingest::{NavStatus, ShipType};

    fn segment_from(points: Vec<(i64, f64, f64, f64, f64)>) -> Segment {
        Segment {
            mmsi: 219_000_001,
            index: 0,
            label: Label::NonFishing,
            ship_type: ShipType::Cargo,
            static_extras: StaticExtras { nav_status: Some(NavStatus::UnderWayUsingEngine), length: Some(120.0), width: None },
            points: points
                .into_iter()
                .map(|(t, x, y, vx, vy)| KinematicPoint {
                    timestamp: t,
                    x,
                    y,
                    vx,
                    vy,
                    speed: vx.hypot(vy),
                    course: course_deg(vx, vy),
                    mode_probs: None,
                })
                .collect(),
        }
    }

    fn straight(n: usize) -> Segment {
        segment_from((0..n).map(|i| (i as i64 * 10, 30.0 * i as f64, 40.0 * i as f64, 3.0, 4.0)).collect())
    }

    #[test]
    fn names_are_stable() {
        let full = FeatureMode::Full44.names();
        assert_eq!(full.len(), 44);
        assert_eq!(full[0], "total_time");
        assert_eq!(full[1], "course_variation_mean");
        assert_eq!(full[40], "dt_q3");
        assert_eq!(&full[41..], &["nav_status", "length", "width"]);
        assert_eq!(FeatureMode::Kinematic41.names(), full[..41].to_vec());
        let reduced = FeatureMode::Reduced13.names();
        assert_eq!(reduced.len(), 13);
        assert!(reduced.iter().all(|n| full.contains(n)));
        assert!(!reduced.iter().any(|n| n.ends_with("_min") || n.ends_with("_mode")));
    }

    #[test]
    fn straight_segment_has_no_variation() {
        let s = derive_series(&straight(50));
        assert!(s.course_variation.iter().all(|v| *v == 0.0));
        assert!(s.speed_variation.iter().all(|v| *v == 0.0));
        assert_eq!(s.course_variation.len(), 49);
        assert_eq!(s.speed.len(), 50);
        assert!(s.step_distance.iter().all(|d| (d - 50.0).abs() < 1e-12));
    }

    #[test]
    fn course_wraps_through_north() {
        assert_eq!(wrap_degrees(10.0 - 350.0), 20.0);
        assert_eq!(wrap_degrees(350.0 - 10.0), -20.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
    }

    #[test]
    fn circular_motion_turns_at_constant_rate() {
        // radius 200 m, omega 0.02 rad/s, dt 10 s: 0.2 rad = 11.459 deg per step
        let (r, omega, dt) = (200.0, 0.02, 10.0);
        let pts = (0..50)
            .map(|i| {
                let th = omega * dt * i as f64;
                (i as i64 * 10, r * th.sin(), r * th.cos(), r * omega * th.cos(), -r * omega * th.sin())
            })
            .collect();
        let s = derive_series(&segment_from(pts));
        let expected = (omega * dt).to_degrees();
        for v in &s.course_variation {
            assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
        }
    }

    #[test]
    fn total_time_and_lengths() {
        let cfg = FeatureConfig::default();
        let fv = extract(&straight(50), &cfg);
        assert_eq!(fv.values.len(), 44);
        assert_eq!(fv.values[0], 490.0);
        assert!(fv.values.iter().all(|v| v.is_finite()));
        // status code 0 is stored as 1; absent width as 0
        assert_eq!(&fv.values[41..], &[1.0, 120.0, 0.0]);
    }

    #[test]
    fn reduced_on_straight_segment() {
        let fv = extract(&straight(50), &FeatureConfig { mode: FeatureMode::Reduced13, ..Default::default() });
        let names = FeatureMode::Reduced13.names();
        for (n, v) in names.iter().zip(&fv.values) {
            if n.starts_with("course_variation") || n == "speed_std" {
                assert_eq!(*v, 0.0, "{n}");
            } else if n.starts_with("speed") {
                assert!((v - 5.0).abs() < 1e-12, "{n}");
            }
        }
    }

    #[test]
    fn reduced_is_a_projection_of_full() {
        let pts = (0..50)
            .map(|i| {
                let f = i as f64;
                (i as i64 * 7 + (i % 3) as i64, f * 20.0 + f.sin() * 5.0, f.cos() * 30.0, 2.0 + f.sin(), 1.0 - f.cos())
            })
            .collect();
        let seg = segment_from(pts);
        let full = extract(&seg, &FeatureConfig::default());
        let reduced = extract(&seg, &FeatureConfig { mode: FeatureMode::Reduced13, ..Default::default() });
        let full_names = FeatureMode::Full44.names();
        for (n, v) in FeatureMode::Reduced13.names().iter().zip(&reduced.values) {
            let idx = full_names.iter().position(|f| f == n).unwrap();
            assert_eq!(full.values[idx], *v, "{n}");
        }
    }
}
