//! Ground-truth categories for named places, read off a storm track.

use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat};
use serde::Deserialize;

use crate::corpus::{csv_err, GeoPoint, PlaceTable};
use crate::error::{Error, Result};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

pub const DEFAULT_RADIUS_KM: f64 = 50.0;

/// One storm-center fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub position: GeoPoint,
    /// UTC seconds.
    pub time: i64,
    /// Saffir-Simpson category, 0 below hurricane strength.
    pub category: u8,
}

impl TrackPoint {
    pub fn new(position: GeoPoint, time: i64, category: u8) -> Result<Self> {
        if category > 5 {
            return Err(Error::CategoryOutOfRange(category.into()));
        }
        Ok(TrackPoint {
            position,
            time,
            category,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceEntry {
    pub name: String,
    pub position: GeoPoint,
}

/// How a place's category is read from the track points within the radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CategoryRule {
    /// Category of the closest point; equal distances go to the earlier fix.
    #[default]
    Nearest,
    /// Highest category among all points within the radius.
    MaxWithinRadius,
}

impl CategoryRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CategoryRule::Nearest => "nearest",
            CategoryRule::MaxWithinRadius => "max-within-radius",
        }
    }
}

impl FromStr for CategoryRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(CategoryRule::Nearest),
            "max-within-radius" => Ok(CategoryRule::MaxWithinRadius),
            other => Err(Error::InvalidConfig(format!(
                "unknown category rule {other:?} (expected nearest or max-within-radius)"
            ))),
        }
    }
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat().to_radians(), b.lat().to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon() - a.lon()).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn assign_category(
    place: &PlaceEntry,
    track: &[TrackPoint],
    radius_km: f64,
    rule: CategoryRule,
) -> Result<Option<u8>> {
    if track.is_empty() {
        return Err(Error::Empty("track"));
    }
    if radius_km.is_nan() || radius_km <= 0.0 || !radius_km.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "radius_km must be positive, got {radius_km}"
        )));
    }
    let within = track
        .iter()
        .map(|p| (haversine_km(place.position, p.position), p))
        .filter(|(d, _)| *d <= radius_km);
    let picked = match rule {
        CategoryRule::Nearest => within
            .min_by(|(da, a), (db, b)| da.total_cmp(db).then(a.time.cmp(&b.time)))
            .map(|(_, p)| p.category),
        CategoryRule::MaxWithinRadius => within.map(|(_, p)| p.category).max(),
    };
    Ok(picked)
}

/// Places that received a category, in input order.
pub fn build_place_table(
    places: &[PlaceEntry],
    track: &[TrackPoint],
    radius_km: f64,
    rule: CategoryRule,
) -> Result<PlaceTable> {
    let mut table = PlaceTable::new();
    for place in places {
        if let Some(cat) = assign_category(place, track, radius_km, rule)? {
            if cat == 0 {
                log::warn!(
                    "place {:?} is nearest to a sub-hurricane fix; it will not be labeled",
                    place.name
                );
            }
            table.insert(&place.name, cat.into())?;
        }
    }
    Ok(table)
}

#[derive(Deserialize)]
struct TrackRow {
    time: String,
    lat: f64,
    lon: f64,
    category: i64,
}

#[derive(Deserialize)]
struct PlaceRow {
    name: String,
    lat: f64,
    lon: f64,
}

/// Read `time,lat,lon,category` with header; `time` is ISO-8601.
pub fn read_track<R: Read>(source: R) -> Result<Vec<TrackPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut track = Vec::new();
    for row in reader.deserialize::<TrackRow>() {
        let row = row.map_err(csv_err("track file"))?;
        let line = track.len() + 2;
        let bad = |reason: String| Error::Parse {
            what: "track file",
            line,
            reason,
        };
        let time = DateTime::parse_from_rfc3339(&row.time)
            .map_err(|e| bad(format!("bad time {:?}: {e}", row.time)))?
            .timestamp();
        let position = GeoPoint::new(row.lat, row.lon).map_err(|e| bad(e.to_string()))?;
        let category = u8::try_from(row.category)
            .ok()
            .filter(|c| *c <= 5)
            .ok_or_else(|| bad(format!("category {} outside 0-5", row.category)))?;
        track.push(TrackPoint::new(position, time, category)?);
    }
    Ok(track)
}

/// Read `name,lat,lon` with header.
pub fn read_places<R: Read>(source: R) -> Result<Vec<PlaceEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut places = Vec::new();
    for row in reader.deserialize::<PlaceRow>() {
        let row = row.map_err(csv_err("place list"))?;
        let line = places.len() + 2;
        if row.name.is_empty() {
            return Err(Error::Parse {
                what: "place list",
                line,
                reason: "empty name".into(),
            });
        }
        let position = GeoPoint::new(row.lat, row.lon).map_err(|e| Error::Parse {
            what: "place list",
            line,
            reason: e.to_string(),
        })?;
        places.push(PlaceEntry {
            name: row.name,
            position,
        });
    }
    Ok(places)
}

/// Write `time,lat,lon,category` in the format [`read_track`] reads.
pub fn write_track<W: Write>(mut sink: W, track: &[TrackPoint]) -> Result<()> {
    writeln!(sink, "time,lat,lon,category")?;
    for p in track {
        let time = DateTime::from_timestamp(p.time, 0)
            .ok_or_else(|| Error::InvalidConfig(format!("timestamp {} out of range", p.time)))?
            .to_rfc3339_opts(SecondsFormat::Secs, true);
        writeln!(
            sink,
            "{time},{},{},{}",
            p.position.lat(),
            p.position.lon(),
            p.category
        )?;
    }
    Ok(())
}

/// Write `name,lat,lon` in the format [`read_places`] reads.
pub fn write_places<W: Write>(sink: W, places: &[PlaceEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["name", "lat", "lon"])
        .map_err(csv_err("place list"))?;
    for p in places {
        w.write_record([
            p.name.clone(),
            p.position.lat().to_string(),
            p.position.lon().to_string(),
        ])
        .map_err(csv_err("place list"))?;
    }
    w.flush()?;
    Ok(())
}
