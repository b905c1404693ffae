//! Trajectory smoothing with a two-mode IMM filter in a local metric plane.

pub mod imm;
pub mod kalman;

use log::warn;
use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use imm::{imm_step, ImmConfig, ImmState, ModeConfig, ModeEstimate, ModeName};
pub use kalman::ekf_step;

pub use crate::geo::LocalFrame;

use crate::cleaning::{StaticExtras, Track};
use crate::error::{Error, Result};
use crate::ingest::{Label, ShipType};

/// Per-contact kinematics, either filtered or finite-differenced from raw positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicPoint {
    pub timestamp: i64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// m/s
    pub speed: f64,
    /// Degrees clockwise from north, [0, 360).
    pub course: f64,
    /// `[linear, maneuver]` probabilities; absent when the filter was bypassed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_probs: Option<[f64; 2]>,
}

/// A track expressed in its local plane, ready for segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicTrack {
    pub mmsi: u32,
    pub class: Label,
    pub ship_type: ShipType,
    pub static_extras: StaticExtras,
    pub frame: LocalFrame,
    pub filtered: bool,
    pub points: Vec<KinematicPoint>,
}

/// Course over ground for a planar velocity, [0, 360).
pub fn course_deg(vx: f64, vy: f64) -> f64 {
    let c = vx.atan2(vy).to_degrees();
    let c = if c < 0.0 { c + 360.0 } else { c };
    if c >= 360.0 {
        0.0
    } else {
        c
    }
}

fn kinematic_point(timestamp: i64, x: f64, vx: f64, y: f64, vy: f64, mode_probs: Option<[f64; 2]>) -> KinematicPoint {
    KinematicPoint { timestamp, x, y, vx, vy, speed: vx.hypot(vy), course: course_deg(vx, vy), mode_probs }
}

fn projected(track: &Track) -> (LocalFrame, Vec<Vector2<f64>>) {
    let frame = LocalFrame::new(track.points[0].lat, track.points[0].lon);
    let zs = track
        .points
        .iter()
        .map(|p| {
            let (x, y) = frame.project(p.lat, p.lon);
            Vector2::new(x, y)
        })
        .collect();
    (frame, zs)
}

/// Filters a cleaned track. Speed is the norm of the filtered velocity and course
/// its bearing from north.
pub fn smooth_track(track: &Track, cfg: &ImmConfig) -> Result<KinematicTrack> {
    cfg.validate()?;
    if track.points.is_empty() {
        return Err(Error::Data(format!("track {} has no points", track.mmsi)));
    }
    let (frame, zs) = projected(track);
    let mut state = ImmState::initialize(&zs[0], cfg);
    let mut points = Vec::with_capacity(zs.len());
    let push = |points: &mut Vec<KinematicPoint>, t: i64, s: &ImmState| {
        let x = &s.combined_state;
        points.push(kinematic_point(t, x[0], x[1], x[2], x[3], Some(s.probabilities)));
    };
    push(&mut points, track.points[0].timestamp, &state);
    for (step, (z, w)) in zs.iter().skip(1).zip(track.points.windows(2)).enumerate() {
        let dt = (w[1].timestamp - w[0].timestamp) as f64;
        if dt <= 0.0 {
            return Err(Error::Data(format!("track {} has non-increasing timestamps", track.mmsi)));
        }
        state = imm_step(&state, z, dt, cfg).map_err(|e| Error::Numerical {
            mmsi: track.mmsi,
            step: step + 1,
            detail: e.to_string(),
        })?;
        push(&mut points, w[1].timestamp, &state);
    }
    Ok(KinematicTrack {
        mmsi: track.mmsi,
        class: track.class,
        ship_type: track.ship_type,
        static_extras: track.static_extras.clone(),
        frame,
        filtered: true,
        points,
    })
}

/// Kinematics straight from raw positions: backward differences, with the first
/// point borrowing the first forward difference.
pub fn raw_kinematics(track: &Track) -> Result<KinematicTrack> {
    if track.points.len() < 2 {
        return Err(Error::Data(format!("track {} needs at least two points", track.mmsi)));
    }
    let (frame, zs) = projected(track);
    let ts: Vec<i64> = track.points.iter().map(|p| p.timestamp).collect();
    let velocity = |i: usize| {
        let dt = (ts[i] - ts[i - 1]) as f64;
        (zs[i] - zs[i - 1]) / dt
    };
    let points = (0..zs.len())
        .map(|i| {
            let v = velocity(i.max(1));
            kinematic_point(ts[i], zs[i][0], v[0], zs[i][1], v[1], None)
        })
        .collect();
    Ok(KinematicTrack {
        mmsi: track.mmsi,
        class: track.class,
        ship_type: track.ship_type,
        static_extras: track.static_extras.clone(),
        frame,
        filtered: false,
        points,
    })
}

/// Filters every track in parallel. Tracks the filter cannot handle are excluded
/// and returned alongside their error.
pub fn smooth_all(tracks: &[Track], cfg: &ImmConfig) -> (Vec<KinematicTrack>, Vec<(u32, Error)>) {
    let results: Vec<_> = tracks.par_iter().map(|t| smooth_track(t, cfg)).collect();
    let mut ok = Vec::with_capacity(tracks.len());
    let mut failed = Vec::new();
    for (t, r) in tracks.iter().zip(results) {
        match r {
            Ok(k) => ok.push(k),
            Err(e) => {
                warn!("excluding track {}: {e}", t.mmsi);
                failed.push((t.mmsi, e));
            }
        }
    }
    (ok, failed)
}
