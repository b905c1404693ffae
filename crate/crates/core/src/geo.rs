//! Great-circle distance and the equirectangular local plane used for filtering.

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Haversine distance in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Tangent plane anchored at a track's first point: x east, y north, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub earth_radius: f64,
}

impl LocalFrame {
    pub fn new(origin_lat: f64, origin_lon: f64) -> Self {
        LocalFrame { origin_lat, origin_lon, earth_radius: EARTH_RADIUS_M }
    }

    pub fn project(&self, lat: f64, lon: f64) -> (f64, f64) {
        let cos0 = self.origin_lat.to_radians().cos();
        let x = self.earth_radius * (lon - self.origin_lon).to_radians() * cos0;
        let y = self.earth_radius * (lat - self.origin_lat).to_radians();
        (x, y)
    }

    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        let cos0 = self.origin_lat.to_radians().cos();
        let lat = self.origin_lat + (y / self.earth_radius).to_degrees();
        let lon = self.origin_lon + (x / (self.earth_radius * cos0)).to_degrees();
        (lat, lon)
    }
}
