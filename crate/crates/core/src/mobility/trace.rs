use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundingBox, MobilityError};
use crate::ids::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub vehicle: VehicleId,
    pub latitude: f64,
    pub longitude: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    /// Ascending by timestamp, one point per timestamp.
    pub points: Vec<TracePoint>,
    pub skipped: usize,
}

fn parse_line(vehicle: VehicleId, line: &str) -> Option<TracePoint> {
    let mut fields = line.split_whitespace();
    let latitude: f64 = fields.next()?.parse().ok()?;
    let longitude: f64 = fields.next()?.parse().ok()?;
    let _occupancy: u8 = fields.next()?.parse().ok()?;
    let timestamp: i64 = fields.next()?.parse().ok()?;
    if fields.next().is_some() || !latitude.is_finite() || !longitude.is_finite() {
        return None;
    }
    if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
        return None;
    }
    Some(TracePoint {
        vehicle,
        latitude,
        longitude,
        timestamp,
    })
}

/// Parses `lat lon occupancy unix_time` lines of one vehicle. Blank lines are
/// ignored and malformed ones counted. Output is re-sorted ascending, keeping
/// the first point of any repeated timestamp.
pub fn parse_trace<'a>(
    name: &str,
    vehicle: VehicleId,
    lines: impl IntoIterator<Item = &'a str>,
) -> Result<ParsedTrace, MobilityError> {
    let mut points = Vec::new();
    let mut skipped = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(vehicle, line) {
            Some(p) => points.push(p),
            None => skipped += 1,
        }
    }
    if points.is_empty() {
        return Err(MobilityError::EmptyTrace {
            name: name.to_owned(),
            skipped,
        });
    }
    points.sort_by_key(|p| p.timestamp);
    points.dedup_by_key(|p| p.timestamp);
    Ok(ParsedTrace { points, skipped })
}

/// All vehicles of a trace directory; vehicle ids follow sorted file names.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub names: Vec<String>,
    /// Grouped by vehicle, ascending timestamps within a vehicle.
    pub points: Vec<TracePoint>,
    pub skipped: usize,
}

pub fn load_trace_dir(dir: &Path) -> Result<TraceSet, MobilityError> {
    let io = |source| MobilityError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        if entry.file_type().map_err(io)?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(MobilityError::EmptyDirectory(dir.display().to_string()));
    }
    let mut set = TraceSet {
        names: Vec::with_capacity(files.len()),
        points: Vec::new(),
        skipped: 0,
    };
    for (i, path) in files.iter().enumerate() {
        let text = fs::read_to_string(path).map_err(|source| MobilityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parsed = parse_trace(&name, VehicleId(i as u32), text.lines())?;
        set.skipped += parsed.skipped;
        set.points.extend(parsed.points);
        set.names.push(name);
    }
    Ok(set)
}

/// Keeps points strictly inside `bbox`.
pub fn filter_region(points: &[TracePoint], bbox: &BoundingBox) -> Vec<TracePoint> {
    points
        .iter()
        .filter(|p| bbox.contains(p.latitude, p.longitude))
        .copied()
        .collect()
}
