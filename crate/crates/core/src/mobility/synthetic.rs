use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundingBox, MobilityError, TracePoint, EARTH_RADIUS_M};
use crate::ids::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTraceConfig {
    pub n_vehicles: usize,
    pub bbox: BoundingBox,
    pub speed_range_kmh: (f64, f64),
    pub duration_s: i64,
    pub step_s: i64,
    pub start_time: i64,
}

impl SyntheticTraceConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        self.bbox.validate()?;
        if self.n_vehicles == 0 {
            return Err(MobilityError::Config("n_vehicles must be at least 1"));
        }
        if self.step_s <= 0 || self.duration_s < 0 {
            return Err(MobilityError::Config("step must be positive and duration >= 0"));
        }
        let (lo, hi) = self.speed_range_kmh;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(MobilityError::Config("speed range must be positive and ordered"));
        }
        Ok(())
    }
}

/// Local equirectangular frame anchored at the box's south-west corner.
struct Frame {
    lat0: f64,
    lon0: f64,
    m_per_deg_lat: f64,
    m_per_deg_lon: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(b: &BoundingBox) -> Self {
        let m_per_deg_lat = EARTH_RADIUS_M.to_radians();
        let m_per_deg_lon = m_per_deg_lat * b.center().0.to_radians().cos();
        Self {
            lat0: b.lat_min,
            lon0: b.lon_min,
            m_per_deg_lat,
            m_per_deg_lon,
            width: (b.lon_max - b.lon_min) * m_per_deg_lon,
            height: (b.lat_max - b.lat_min) * m_per_deg_lat,
        }
    }

    fn to_geo(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (self.lat0 + y / self.m_per_deg_lat, self.lon0 + x / self.m_per_deg_lon)
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        // Keep a sliver away from the edges so points stay strictly inside.
        let margin = 1e-6;
        (
            rng.gen_range(margin..1.0 - margin) * self.width,
            rng.gen_range(margin..1.0 - margin) * self.height,
        )
    }

    fn farthest_corner(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let cx = if x < self.width / 2.0 { self.width } else { 0.0 };
        let cy = if y < self.height / 2.0 { self.height } else { 0.0 };
        (cx * (1.0 - 1e-6) + 1e-6 * x, cy * (1.0 - 1e-6) + 1e-6 * y)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Random-waypoint traces. Every step covers exactly `speed · step` meters in
/// a straight line: when the current waypoint is closer than that, a fresh
/// waypoint and speed are drawn before moving. One point per vehicle per
/// step, grouped by vehicle.
pub fn synthetic_traces(
    cfg: &SyntheticTraceConfig,
    seed: u64,
) -> Result<Vec<TracePoint>, MobilityError> {
    cfg.validate()?;
    let frame = Frame::new(&cfg.bbox);
    let (lo, hi) = cfg.speed_range_kmh;
    let draw_speed = |rng: &mut ChaCha8Rng| -> f64 {
        let kmh = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
        kmh / 3.6
    };
    let steps = cfg.duration_s / cfg.step_s;
    let mut out = Vec::with_capacity(cfg.n_vehicles * (steps as usize + 1));
    for v in 0..cfg.n_vehicles {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(v as u64);
        let mut pos = frame.random_point(&mut rng);
        let mut target = frame.random_point(&mut rng);
        let mut speed = draw_speed(&mut rng);
        for i in 0..=steps {
            let (latitude, longitude) = frame.to_geo(pos);
            out.push(TracePoint {
                vehicle: VehicleId(v as u32),
                latitude,
                longitude,
                timestamp: cfg.start_time + i * cfg.step_s,
            });
            if i == steps {
                break;
            }
            let mut tries = 0;
            while dist(pos, target) < speed * cfg.step_s as f64 {
                tries += 1;
                target = if tries < 32 {
                    frame.random_point(&mut rng)
                } else {
                    frame.farthest_corner(pos)
                };
                speed = draw_speed(&mut rng);
                if tries >= 32 {
                    break;
                }
            }
            let d = dist(pos, target);
            let travel = (speed * cfg.step_s as f64).min(d);
            if d > 0.0 {
                pos = (
                    pos.0 + (target.0 - pos.0) * travel / d,
                    pos.1 + (target.1 - pos.1) * travel / d,
                );
            }
        }
    }
    Ok(out)
}
