//! Seeded AIS scenario generator with a ground-truth ledger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cleaning::DropReason;
use crate::geo::LocalFrame;
use crate::ingest::{AisRecord, Label, MobileClass, NavStatus, ShipType};

const KNOT_MPS: f64 = 0.514_444;
/// Reporting intervals of a class A transponder, seconds.
const SLOW_INTERVAL: i64 = 10;
const FAST_INTERVAL: i64 = 6;
const TURNING_INTERVAL: i64 = 3;
/// 14 knots: above it the transponder reports faster.
const FAST_SPEED_MPS: f64 = 7.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitBehavior {
    pub speed_mps: (f64, f64),
    /// Random-walk heading noise per second.
    pub heading_drift_deg: f64,
}

impl Default for TransitBehavior {
    fn default() -> Self {
        TransitBehavior { speed_mps: (6.0, 10.0), heading_drift_deg: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FishingBehavior {
    pub speed_mps: (f64, f64),
    pub turn_deg: (f64, f64),
    pub turn_interval_s: (f64, f64),
    /// Rate at which a course change is executed.
    pub turn_rate_deg_s: f64,
    /// Probability that a fishing track is steaming to or from the grounds instead:
    /// straight, at `steaming_speed_mps`.
    pub steaming_fraction: f64,
    pub steaming_speed_mps: (f64, f64),
}

impl Default for FishingBehavior {
    fn default() -> Self {
        FishingBehavior {
            speed_mps: (1.0, 3.0),
            turn_deg: (20.0, 90.0),
            turn_interval_s: (30.0, 120.0),
            turn_rate_deg_s: 3.0,
            steaming_fraction: 0.0,
            steaming_speed_mps: (4.0, 7.0),
        }
    }
}

/// Data-quality problems injected on top of the clean behaviors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefectConfig {
    /// Fraction of tracks with one reporting gap of `gap_s`.
    pub gap_fraction: f64,
    pub gap_s: i64,
    /// Per-contact probability of a position jump of `spike_m`.
    pub spike_rate: f64,
    pub spike_m: f64,
    /// Moving fishing vessels whose status claims they are moored.
    pub inconsistent_tracks: usize,
    /// Labeled emitters that are not ships (base stations and other units) wandering slowly.
    pub non_ship_tracks: usize,
    /// Tracks without a ship type.
    pub unlabeled_tracks: usize,
    /// Vessels lying still.
    pub motionless_tracks: usize,
}

impl DefectConfig {
    pub fn typical() -> DefectConfig {
        DefectConfig {
            gap_fraction: 0.1,
            gap_s: 30,
            spike_rate: 0.002,
            spike_m: 3000.0,
            inconsistent_tracks: 60,
            non_ship_tracks: 60,
            unlabeled_tracks: 20,
            motionless_tracks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticScenario {
    pub fishing_tracks: usize,
    pub transit_tracks: usize,
    /// Contacts per track, inclusive range.
    pub points_per_track: (usize, usize),
    pub transit: TransitBehavior,
    pub fishing: FishingBehavior,
    /// Gaussian position noise, metres.
    pub noise_sigma_m: f64,
    pub defects: DefectConfig,
    pub origin: (f64, f64),
    /// Track start positions are spread over a square of this half-width, metres.
    pub area_m: f64,
    pub start_timestamp: i64,
    pub seed: u64,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        SyntheticScenario {
            fishing_tracks: 200,
            transit_tracks: 800,
            points_per_track: (150, 300),
            transit: TransitBehavior::default(),
            fishing: FishingBehavior::default(),
            noise_sigma_m: 10.0,
            defects: DefectConfig::default(),
            origin: (56.0, 11.0),
            area_m: 50_000.0,
            start_timestamp: 1_700_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Transit,
    Fishing,
    Steaming,
    Inconsistent,
    NonShip,
    Unlabeled,
    Motionless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrack {
    pub mmsi: u32,
    pub behavior: Behavior,
    pub ship_type: Option<ShipType>,
    pub label: Option<Label>,
    pub first_timestamp: i64,
    pub last_timestamp: i64,
    pub points: usize,
    /// Timestamps of the first contact after each injected gap.
    pub gaps: Vec<i64>,
    /// Timestamps of contacts displaced by a spike.
    pub spikes: Vec<i64>,
    /// The cleaning rule expected to remove the track under full cleaning.
    pub expected_drop: Option<DropReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: SyntheticScenario,
    pub tracks: Vec<TruthTrack>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Contacts of all tracks, ordered by timestamp then MMSI like a live feed.
    pub records: Vec<AisRecord>,
    pub truth: GroundTruth,
}

const TRANSIT_FLEET: [(ShipType, f64, (f64, f64)); 8] = [
    (ShipType::Cargo, 0.35, (80.0, 300.0)),
    (ShipType::Tanker, 0.2, (90.0, 330.0)),
    (ShipType::Passenger, 0.15, (30.0, 250.0)),
    (ShipType::Tug, 0.08, (20.0, 40.0)),
    (ShipType::Pleasure, 0.08, (8.0, 30.0)),
    (ShipType::Sailing, 0.05, (8.0, 25.0)),
    (ShipType::Hsc, 0.05, (30.0, 90.0)),
    (ShipType::Military, 0.04, (40.0, 150.0)),
];

fn pick_transit_type(rng: &mut ChaCha8Rng) -> (ShipType, (f64, f64)) {
    let mut u: f64 = rng.random();
    for (t, w, len) in TRANSIT_FLEET {
        if u < w {
            return (t, len);
        }
        u -= w;
    }
    (ShipType::Cargo, (80.0, 300.0))
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Ground-truth kinematic state sampled once per second.
struct Mover {
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    turn_left: f64,
    next_turn: f64,
}

impl Mover {
    fn step(&mut self, behavior: Behavior, scenario: &SyntheticScenario, rng: &mut ChaCha8Rng, t: f64) {
        match behavior {
            Behavior::Fishing | Behavior::NonShip => {
                let p = &scenario.fishing;
                if self.turn_left == 0.0 && t >= self.next_turn {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    self.turn_left = sign * uniform(rng, p.turn_deg);
                    self.next_turn = t + uniform(rng, p.turn_interval_s);
                }
                if self.turn_left != 0.0 {
                    let d = self.turn_left.clamp(-p.turn_rate_deg_s, p.turn_rate_deg_s);
                    self.heading += d;
                    self.turn_left -= d;
                }
                self.speed = (self.speed + rng.random_range(-0.02..0.02)).clamp(p.speed_mps.0, p.speed_mps.1);
            }
            Behavior::Transit | Behavior::Steaming | Behavior::Inconsistent => {
                let drift = scenario.transit.heading_drift_deg;
                if drift > 0.0 {
                    self.heading += rng.random_range(-drift..drift);
                }
            }
            Behavior::Unlabeled => {}
            Behavior::Motionless => return,
        }
        let h = self.heading.to_radians();
        self.x += self.speed * h.sin();
        self.y += self.speed * h.cos();
    }

    fn turning(&self) -> bool {
        self.turn_left != 0.0
    }
}

fn report_interval(mover: &Mover, rng: &mut ChaCha8Rng) -> i64 {
    let nominal = if mover.turning() {
        TURNING_INTERVAL
    } else if mover.speed > FAST_SPEED_MPS {
        FAST_INTERVAL
    } else {
        SLOW_INTERVAL
    };
    // slot timing jitter
    let jitter = match rng.random_range(0..10) {
        0 => -1,
        1 => 1,
        _ => 0,
    };
    (nominal + jitter).clamp(2, 11)
}

struct TrackPlan {
    mmsi: u32,
    ship_type: Option<ShipType>,
    length: Option<f64>,
    status: [NavStatus; 2],
    status_p: f64,
    mobile_class: MobileClass,
    speed: f64,
}

fn plan(behavior: Behavior, mmsi: u32, scenario: &SyntheticScenario, rng: &mut ChaCha8Rng) -> TrackPlan {
    use NavStatus::*;
    let (ship_type, length, speed, status, status_p, mobile_class) = match behavior {
        Behavior::Transit => {
            let (t, len) = pick_transit_type(rng);
            let s = uniform(rng, scenario.transit.speed_mps);
            (Some(t), uniform(rng, len), s, [UnderWayUsingEngine, Undefined], 0.85, MobileClass::Ship)
        }
        Behavior::Fishing => {
            let s = uniform(rng, scenario.fishing.speed_mps);
            (Some(ShipType::Fishing), uniform(rng, (10.0, 70.0)), s, [EngagedInFishing, UnderWayUsingEngine], 0.6, MobileClass::Ship)
        }
        Behavior::Steaming => {
            let s = uniform(rng, scenario.fishing.steaming_speed_mps);
            (Some(ShipType::Fishing), uniform(rng, (10.0, 70.0)), s, [UnderWayUsingEngine, EngagedInFishing], 0.8, MobileClass::Ship)
        }
        Behavior::Inconsistent => {
            let s = uniform(rng, scenario.fishing.steaming_speed_mps);
            (Some(ShipType::Fishing), uniform(rng, (10.0, 70.0)), s, [Moored, UnderWayUsingEngine], 0.97, MobileClass::Ship)
        }
        Behavior::NonShip => {
            let (t, len) = pick_transit_type(rng);
            let class = if rng.random::<bool>() { MobileClass::BaseStation } else { MobileClass::Other };
            (Some(t), uniform(rng, len), uniform(rng, scenario.fishing.speed_mps), [Undefined, Undefined], 1.0, class)
        }
        Behavior::Unlabeled => {
            let s = uniform(rng, scenario.transit.speed_mps);
            (None, uniform(rng, (10.0, 200.0)), s, [UnderWayUsingEngine, Undefined], 0.9, MobileClass::Ship)
        }
        Behavior::Motionless => {
            let (t, len) = pick_transit_type(rng);
            (Some(t), uniform(rng, len), 0.0, [Moored, AtAnchor], 0.9, MobileClass::Ship)
        }
    };
    TrackPlan {
        mmsi,
        ship_type,
        length: Some(length.round()),
        status,
        status_p,
        mobile_class,
        speed,
    }
}

fn expected_drop(behavior: Behavior) -> Option<DropReason> {
    match behavior {
        Behavior::Inconsistent => Some(DropReason::Inconsistent),
        Behavior::NonShip => Some(DropReason::NotAShip),
        Behavior::Unlabeled => Some(DropReason::Unlabeled),
        Behavior::Motionless => Some(DropReason::Motionless),
        _ => None,
    }
}

/// Generates every track of the scenario. Ships get MMSIs 219000000 + i; base
/// stations get 2190000 + i so their MMSI marks them as such.
pub fn generate_synthetic(scenario: &SyntheticScenario) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let d = &scenario.defects;
    let mut behaviors = Vec::new();
    behaviors.extend(std::iter::repeat_n(Behavior::Fishing, scenario.fishing_tracks));
    behaviors.extend(std::iter::repeat_n(Behavior::Transit, scenario.transit_tracks));
    behaviors.extend(std::iter::repeat_n(Behavior::Inconsistent, d.inconsistent_tracks));
    behaviors.extend(std::iter::repeat_n(Behavior::NonShip, d.non_ship_tracks));
    behaviors.extend(std::iter::repeat_n(Behavior::Unlabeled, d.unlabeled_tracks));
    behaviors.extend(std::iter::repeat_n(Behavior::Motionless, d.motionless_tracks));

    let frame = LocalFrame::new(scenario.origin.0, scenario.origin.1);
    let noise = Normal::new(0.0, scenario.noise_sigma_m.max(0.0)).expect("finite sigma");
    // a separate stream, so the same seed with zero noise yields the true trajectories
    let mut noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x6e6f_6973_65);
    let mut records = Vec::new();
    let mut truth = Vec::new();

    for (i, &b) in behaviors.iter().enumerate() {
        let behavior = if b == Behavior::Fishing && rng.random::<f64>() < scenario.fishing.steaming_fraction {
            Behavior::Steaming
        } else {
            b
        };
        let mut p = plan(behavior, 0, scenario, &mut rng);
        p.mmsi = match p.mobile_class {
            MobileClass::BaseStation => 2_190_000 + i as u32,
            _ => 219_000_000 + i as u32,
        };
        let n = rng.random_range(scenario.points_per_track.0..=scenario.points_per_track.1);
        let gap_at = (rng.random::<f64>() < d.gap_fraction && d.gap_s > 0 && n >= 120).then(|| rng.random_range(60..n - 59));
        let mut mover = Mover {
            x: rng.random_range(-scenario.area_m..scenario.area_m),
            y: rng.random_range(-scenario.area_m..scenario.area_m),
            heading: rng.random_range(0.0..360.0),
            speed: p.speed,
            turn_left: 0.0,
            next_turn: 0.0,
        };
        mover.next_turn = uniform(&mut rng, scenario.fishing.turn_interval_s);
        let start = scenario.start_timestamp + rng.random_range(0..3600);
        let width = p.length.map(|l| (l / rng.random_range(4.0..7.0)).round());
        let mut t = 0i64;
        let mut entry = TruthTrack {
            mmsi: p.mmsi,
            behavior,
            ship_type: p.ship_type,
            label: p.ship_type.and_then(|s| crate::ingest::to_binary_class(Some(s)).label()),
            first_timestamp: start,
            last_timestamp: start,
            points: n,
            gaps: Vec::new(),
            spikes: Vec::new(),
            expected_drop: expected_drop(behavior),
        };
        for k in 0..n {
            if k > 0 {
                let mut dt = report_interval(&mover, &mut rng);
                if gap_at == Some(k) {
                    dt = d.gap_s;
                }
                for s in 0..dt {
                    mover.step(behavior, scenario, &mut rng, (t + s) as f64);
                }
                t += dt;
            }
            let ts = start + t;
            if gap_at == Some(k) {
                entry.gaps.push(ts);
            }
            // a moored GPS wanders far less than a moving one
            let scale = if behavior == Behavior::Motionless { 0.2 } else { 1.0 };
            let (mut x, mut y) = (mover.x + scale * noise.sample(&mut noise_rng), mover.y + scale * noise.sample(&mut noise_rng));
            if k > 0 && k + 1 < n && rng.random::<f64>() < d.spike_rate {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                x += d.spike_m * a.sin();
                y += d.spike_m * a.cos();
                entry.spikes.push(ts);
            }
            let (lat, lon) = frame.unproject(x, y);
            let status = if rng.random::<f64>() < p.status_p { p.status[0] } else { p.status[1] };
            records.push(AisRecord {
                timestamp: ts,
                mmsi: p.mmsi,
                lat,
                lon,
                sog: Some(((mover.speed / KNOT_MPS + rng.random_range(-0.1..0.1)).max(0.0) * 10.0).round() / 10.0),
                cog: Some(mover.heading.rem_euclid(360.0).round() % 360.0),
                nav_status: Some(status),
                ship_type: p.ship_type,
                length: p.length,
                width,
                mobile_class: p.mobile_class,
            });
            entry.last_timestamp = ts;
        }
        truth.push(entry);
    }
    records.sort_by_key(|r| (r.timestamp, r.mmsi));
    SyntheticData { records, truth: GroundTruth { scenario: scenario.clone(), tracks: truth } }
}
