use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BoundingBox;
use crate::ids::CandidateId;

/// Mean Earth radius.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsuSite {
    pub rsu: CandidateId,
    pub latitude: f64,
    pub longitude: f64,
    /// Coverage radius in meters.
    pub coverage_radius: f64,
}

impl RsuSite {
    pub fn covers(&self, latitude: f64, longitude: f64) -> bool {
        haversine_m(self.latitude, self.longitude, latitude, longitude) <= self.coverage_radius
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Places `n` RSUs at the cell centres of a `⌈√n⌉ × ⌈√n⌉` grid over `bbox`
/// (row-major, truncated to `n`) with radii uniform in `radius_range`.
pub fn deploy_rsus(
    n: usize,
    bbox: &BoundingBox,
    radius_range: (f64, f64),
    seed: u64,
) -> Vec<RsuSite> {
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    let dlat = (bbox.lat_max - bbox.lat_min) / side as f64;
    let dlon = (bbox.lon_max - bbox.lon_min) / side as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            let radius = if radius_range.0 < radius_range.1 {
                rng.gen_range(radius_range.0..=radius_range.1)
            } else {
                radius_range.0
            };
            RsuSite {
                rsu: CandidateId(i as u32),
                latitude: bbox.lat_min + (row as f64 + 0.5) * dlat,
                longitude: bbox.lon_min + (col as f64 + 0.5) * dlon,
                coverage_radius: radius,
            }
        })
        .collect()
}
