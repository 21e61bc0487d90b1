//! Vehicle traces, RSU placement and the interaction stream derived from them.

mod events;
mod sites;
mod synthetic;
mod trace;

pub use events::{
    interaction_events, BehaviorMode, BehaviorProfile, BehaviorWindow, InteractionConfig,
    InteractionRecord, Victims,
};
pub use sites::{deploy_rsus, haversine_m, RsuSite, EARTH_RADIUS_M};
pub use synthetic::{synthetic_traces, SyntheticTraceConfig};
pub use trace::{filter_region, load_trace_dir, parse_trace, ParsedTrace, TracePoint, TraceSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("trace {name} has no valid points ({skipped} malformed lines)")]
    EmptyTrace { name: String, skipped: usize },
    #[error("no trace files found in {0}")]
    EmptyDirectory(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid bounding box: {0}")]
    BoundingBox(&'static str),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Latitude/longitude rectangle, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    /// Downtown San Francisco area covered by the cab traces.
    pub const SAN_FRANCISCO: BoundingBox = BoundingBox {
        lat_min: 37.7,
        lat_max: 37.81,
        lon_min: -122.52,
        lon_max: -122.38,
    };

    pub const WORLD: BoundingBox = BoundingBox {
        lat_min: -90.0,
        lat_max: 90.0,
        lon_min: -180.0,
        lon_max: 180.0,
    };

    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self, MobilityError> {
        let b = Self {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.lat_min < self.lat_max) {
            return Err(MobilityError::BoundingBox("lat_min must be below lat_max"));
        }
        if !(self.lon_min < self.lon_max) {
            return Err(MobilityError::BoundingBox("lon_min must be below lon_max"));
        }
        Ok(())
    }

    /// Strict containment.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat > self.lat_min && lat < self.lat_max && lon > self.lon_min && lon < self.lon_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.lat_min + self.lat_max),
            0.5 * (self.lon_min + self.lon_max),
        )
    }
}
