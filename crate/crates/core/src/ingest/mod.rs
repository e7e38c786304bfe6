//! Validated in-memory tables for trips, station status, weather and
//! pairwise distances.
//!
//! Timestamps are naive local times: every file is read in the single
//! timezone the data was recorded in, and no conversion is applied.

mod filter;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub use filter::{filter_stations, residual_threshold};
pub use parse::{
    parse_distances, parse_status, parse_trips, parse_weather, read_distances, read_status,
    read_trips, read_weather, write_distances, write_status, write_trips, write_weather,
    TripSchema, TIMESTAMP_FORMAT,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Self {
        StationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        StationId(s.to_owned())
    }
}

/// One historical trip.
#[derive(Clone, Debug, PartialEq)]
pub struct TripRecord {
    /// Seconds, strictly positive.
    pub duration: u32,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub start_station: StationId,
    pub end_station: StationId,
    pub start_lat: f64,
    pub start_lon: f64,
    pub end_lat: f64,
    pub end_lon: f64,
}

impl TripRecord {
    /// Checks the record invariants, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.duration == 0 {
            return Err("trip duration must be positive".into());
        }
        if self.end_time < self.start_time {
            return Err(format!(
                "end time {} precedes start time {}",
                self.end_time, self.start_time
            ));
        }
        if self.start_station.0.trim().is_empty() || self.end_station.0.trim().is_empty() {
            return Err("empty station identifier".into());
        }
        check_coordinate(self.start_lat, self.start_lon)?;
        check_coordinate(self.end_lat, self.end_lon)?;
        Ok(())
    }
}

pub(crate) fn check_coordinate(lat: f64, lon: f64) -> Result<(), String> {
    if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
        return Err(format!("latitude {lat} outside [-90, 90]"));
    }
    if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
        return Err(format!("longitude {lon} outside [-180, 180]"));
    }
    Ok(())
}

/// A row dropped during parsing. `line` is the 1-based line in the source
/// file (the header is line 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

/// Renders rejects as a plain text log, one `line <n>: <reason>` per row.
pub fn reject_log(rejects: &[Reject]) -> String {
    let mut out = String::new();
    for r in rejects {
        out.push_str(&format!("line {}: {}\n", r.line, r.reason));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TripTable {
    pub rows: Vec<TripRecord>,
    pub rejects: Vec<Reject>,
}

impl TripTable {
    pub fn new(rows: Vec<TripRecord>) -> Self {
        TripTable {
            rows,
            rejects: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatusRecord {
    pub station: StationId,
    pub time: NaiveDateTime,
    pub bikes_available: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatusTable {
    pub rows: Vec<StatusRecord>,
    pub rejects: Vec<Reject>,
}

/// Hourly-ish weather observation. `None` marks a missing measurement,
/// which is distinct from a measured zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WeatherRecord {
    pub time: NaiveDateTime,
    /// Degrees Fahrenheit.
    pub air_temp: Option<f64>,
    /// Percent in [0, 100].
    pub rel_humidity: Option<f64>,
    /// Miles per hour.
    pub wind_speed: Option<f64>,
    /// Millimetres over the last hour.
    pub precip_1h: Option<f64>,
    /// Miles.
    pub visibility: Option<f64>,
}

impl WeatherRecord {
    pub const VARIABLES: usize = 5;

    pub fn values(&self) -> [Option<f64>; 5] {
        [
            self.air_temp,
            self.rel_humidity,
            self.wind_speed,
            self.precip_1h,
            self.visibility,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let names = ["air_temp", "rel_humidity", "wind_speed", "precip_1h", "visibility"];
        for (name, v) in names.iter().zip(self.values()) {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(format!("{name} is not finite"));
                }
            }
        }
        if let Some(h) = self.rel_humidity {
            if !(0.0..=100.0).contains(&h) {
                return Err(format!("rel_humidity {h} outside [0, 100]"));
            }
        }
        for (name, v) in [
            ("wind_speed", self.wind_speed),
            ("precip_1h", self.precip_1h),
            ("visibility", self.visibility),
        ] {
            if let Some(v) = v {
                if v < 0.0 {
                    return Err(format!("{name} {v} is negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeatherTable {
    /// Sorted by time.
    pub rows: Vec<WeatherRecord>,
    pub rejects: Vec<Reject>,
}

impl WeatherTable {
    pub fn new(mut rows: Vec<WeatherRecord>) -> Self {
        rows.sort_by_key(|r| r.time);
        WeatherTable {
            rows,
            rejects: Vec::new(),
        }
    }

    /// The latest record at or before `t`, or the first record when `t`
    /// precedes the whole table.
    pub fn at(&self, t: NaiveDateTime) -> Option<&WeatherRecord> {
        if self.rows.is_empty() {
            return None;
        }
        let idx = self.rows.partition_point(|r| r.time <= t);
        Some(&self.rows[idx.saturating_sub(1)])
    }
}

/// Mean of the present values; `None` when nothing is present.
pub fn mean_present<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Square matrix of routing distances in metres; entry `(h, k)` is the
/// directed distance from station `h` to station `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub stations: Vec<StationId>,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries, forcing the diagonal to zero.
    /// Returns the warnings for any coerced diagonal entry.
    pub fn from_rows(
        stations: Vec<StationId>,
        d: Vec<f64>,
    ) -> Result<(Self, Vec<String>), String> {
        let n = stations.len();
        if d.len() != n * n {
            return Err(format!("{} entries for {} stations", d.len(), n));
        }
        let mut warnings = Vec::new();
        let mut m = DistanceMatrix { stations, d };
        for i in 0..n {
            for j in 0..n {
                let v = m.d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(format!(
                        "distance {} -> {} is {v}; entries must be finite and non-negative",
                        m.stations[i], m.stations[j]
                    ));
                }
            }
            let diag = m.d[i * n + i];
            if diag != 0.0 {
                warnings.push(format!(
                    "diagonal entry for station {} was {diag}; coerced to 0",
                    m.stations[i]
                ));
                m.d[i * n + i] = 0.0;
            }
        }
        Ok((m, warnings))
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn get(&self, h: usize, k: usize) -> f64 {
        self.d[h * self.stations.len() + k]
    }

    pub fn index_of(&self, id: &StationId) -> Option<usize> {
        self.stations.iter().position(|s| s == id)
    }

    /// Stations of `set` that the matrix does not cover, and matrix
    /// stations the set has no coordinates for.
    pub fn coverage_warnings(&self, set: &StationSet) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.stations {
            if !set.stations.contains_key(s) {
                out.push(format!("station {s} in distance matrix has no coordinates"));
            }
        }
        out
    }

    /// Symmetrised distances `(d(h,k) + d(k,h)) / 2` over the given station
    /// ordering, row-major.
    pub fn symmetrized_for(&self, order: &[StationId]) -> Result<Vec<f64>, String> {
        let lookup: std::collections::HashMap<&StationId, usize> =
            self.stations.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let idx: Vec<usize> = order
            .iter()
            .map(|s| {
                lookup
                    .get(s)
                    .copied()
                    .ok_or_else(|| format!("station {s} missing from distance matrix"))
            })
            .collect::<Result<_, _>>()?;
        let n = order.len();
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let v = 0.5 * (self.get(idx[a], idx[b]) + self.get(idx[b], idx[a]));
                out[a * n + b] = v;
                out[b * n + a] = v;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationInfo {
    pub lat: f64,
    pub lon: f64,
    pub trip_count: u64,
}

/// Stations retained for analysis, in identifier order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StationSet {
    pub stations: BTreeMap<StationId, StationInfo>,
}

impl StationSet {
    pub fn ids(&self) -> Vec<StationId> {
        self.stations.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn contains(&self, id: &StationId) -> bool {
        self.stations.contains_key(id)
    }

    /// Position of every station in identifier order.
    pub fn index(&self) -> std::collections::HashMap<StationId, usize> {
        self.stations
            .keys()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect()
    }
}
