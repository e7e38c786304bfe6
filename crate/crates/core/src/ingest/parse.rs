use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{
    DistanceMatrix, Reject, StationId, StatusRecord, StatusTable, TripRecord, TripTable,
    WeatherRecord, WeatherTable,
};
use crate::error::{Error, Result};

/// Format used when writing timestamps. Fractional seconds are emitted only
/// when present.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.f";

const PARSE_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
];

pub(crate) fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    PARSE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Column names for the trip fields. Defaults follow the 2018 CitiBike
/// public trip files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripSchema {
    pub duration: String,
    pub start_time: String,
    pub end_time: String,
    pub start_station: String,
    pub start_lat: String,
    pub start_lon: String,
    pub end_station: String,
    pub end_lat: String,
    pub end_lon: String,
}

impl Default for TripSchema {
    fn default() -> Self {
        TripSchema {
            duration: "tripduration".into(),
            start_time: "starttime".into(),
            end_time: "stoptime".into(),
            start_station: "start station id".into(),
            start_lat: "start station latitude".into(),
            start_lon: "start station longitude".into(),
            end_station: "end station id".into(),
            end_lat: "end station latitude".into(),
            end_lon: "end station longitude".into(),
        }
    }
}

impl TripSchema {
    /// Loads a JSON column-name map; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn columns(&self) -> [&str; 9] {
        [
            &self.duration,
            &self.start_time,
            &self.end_time,
            &self.start_station,
            &self.start_lat,
            &self.start_lon,
            &self.end_station,
            &self.end_lat,
            &self.end_lon,
        ]
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

struct HeaderIndex(HashMap<String, usize>);

impl HeaderIndex {
    fn new(headers: &csv::StringRecord) -> Self {
        HeaderIndex(
            headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_lowercase(), i))
                .collect(),
        )
    }

    fn find(&self, source: &str, names: &[&str]) -> Result<usize> {
        names
            .iter()
            .find_map(|n| self.0.get(&n.to_lowercase()).copied())
            .ok_or_else(|| Error::MissingColumn {
                path: source.into(),
                column: names[0].to_owned(),
            })
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &str) -> std::result::Result<&'a str, String> {
    rec.get(idx).ok_or_else(|| format!("missing field '{name}'"))
}

fn number<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
    s.parse::<T>()
        .map_err(|_| format!("cannot parse {name} '{s}'"))
}

fn timestamp(s: &str, name: &str) -> std::result::Result<NaiveDateTime, String> {
    parse_timestamp(s).ok_or_else(|| format!("cannot parse {name} timestamp '{s}'"))
}

fn line_of(rec: &csv::StringRecord, fallback: u64) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(fallback)
}

pub fn parse_trips(path: &Path, schema: &TripSchema) -> Result<TripTable> {
    read_trips(open(path)?, schema, &path.display().to_string())
}

/// Reads trips from any reader. Rows failing validation are collected as
/// rejects; a missing required column is fatal.
pub fn read_trips<R: Read>(input: R, schema: &TripSchema, source: &str) -> Result<TripTable> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let index = HeaderIndex::new(&headers);
    let cols = schema.columns();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(cols) {
        *slot = index.find(source, &[name])?;
    }
    let mut table = TripTable::default();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&rec, n as u64 + 2);
        let parsed = (|| -> std::result::Result<TripRecord, String> {
            let get = |i: usize| field(&rec, idx[i], cols[i]);
            let duration_s = get(0)?;
            let duration = match duration_s.parse::<u32>() {
                Ok(d) => d,
                Err(_) => {
                    let f: f64 = number(duration_s, cols[0])?;
                    if !(f.is_finite() && f >= 0.0) {
                        return Err(format!("invalid trip duration '{duration_s}'"));
                    }
                    f.round() as u32
                }
            };
            let trip = TripRecord {
                duration,
                start_time: timestamp(get(1)?, cols[1])?,
                end_time: timestamp(get(2)?, cols[2])?,
                start_station: StationId::new(get(3)?),
                start_lat: number(get(4)?, cols[4])?,
                start_lon: number(get(5)?, cols[5])?,
                end_station: StationId::new(get(6)?),
                end_lat: number(get(7)?, cols[7])?,
                end_lon: number(get(8)?, cols[8])?,
            };
            trip.validate()?;
            Ok(trip)
        })();
        match parsed {
            Ok(t) => table.rows.push(t),
            Err(reason) => table.rejects.push(Reject { line, reason }),
        }
    }
    Ok(table)
}

pub fn write_trips<W: Write>(out: W, table: &TripTable, schema: &TripSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e| Error::csv("trip output", e);
    w.write_record(schema.columns()).map_err(map)?;
    for t in &table.rows {
        w.write_record([
            t.duration.to_string(),
            t.start_time.format(TIMESTAMP_FORMAT).to_string(),
            t.end_time.format(TIMESTAMP_FORMAT).to_string(),
            t.start_station.0.clone(),
            t.start_lat.to_string(),
            t.start_lon.to_string(),
            t.end_station.0.clone(),
            t.end_lat.to_string(),
            t.end_lon.to_string(),
        ])
        .map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("trip output", e))
}

pub fn parse_status(path: &Path) -> Result<StatusTable> {
    read_status(open(path)?, &path.display().to_string())
}

pub fn read_status<R: Read>(input: R, source: &str) -> Result<StatusTable> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let index = HeaderIndex::new(&headers);
    let station = index.find(source, &["station", "station_id"])?;
    let time = index.find(source, &["time", "timestamp"])?;
    let bikes = index.find(source, &["bikes_available", "num_bikes_available", "avail_bikes"])?;
    let mut table = StatusTable::default();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&rec, n as u64 + 2);
        let parsed = (|| -> std::result::Result<StatusRecord, String> {
            let id = field(&rec, station, "station")?;
            if id.is_empty() {
                return Err("empty station identifier".into());
            }
            let b = field(&rec, bikes, "bikes_available")?;
            let bikes_available = b
                .parse::<u32>()
                .map_err(|_| format!("bikes_available '{b}' is not a non-negative integer"))?;
            Ok(StatusRecord {
                station: StationId::new(id),
                time: timestamp(field(&rec, time, "time")?, "status")?,
                bikes_available,
            })
        })();
        match parsed {
            Ok(r) => table.rows.push(r),
            Err(reason) => table.rejects.push(Reject { line, reason }),
        }
    }
    Ok(table)
}

pub fn write_status<W: Write>(out: W, table: &StatusTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e| Error::csv("status output", e);
    w.write_record(["station", "time", "bikes_available"]).map_err(map)?;
    for r in &table.rows {
        w.write_record([
            r.station.0.clone(),
            r.time.format(TIMESTAMP_FORMAT).to_string(),
            r.bikes_available.to_string(),
        ])
        .map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("status output", e))
}

const WEATHER_COLUMNS: [(&str, &[&str]); 5] = [
    ("air_temp", &["air_temp", "tmpf"]),
    ("rel_humidity", &["rel_humidity", "relh"]),
    ("wind_speed", &["wind_speed", "sped"]),
    ("precip_1h", &["precip_1h", "p01m"]),
    ("visibility", &["visibility", "vsby"]),
];

fn optional(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    match s {
        "" | "M" | "m" | "NA" | "null" => Ok(None),
        // trace amounts
        "T" => Ok(Some(0.0)),
        _ => number::<f64>(s, name).map(Some),
    }
}

pub fn parse_weather(path: &Path) -> Result<WeatherTable> {
    read_weather(open(path)?, &path.display().to_string())
}

/// Columns may use the canonical names or the IEM ASOS ones
/// (`valid, tmpf, relh, sped, p01m, vsby`). Empty cells and `M` are missing.
pub fn read_weather<R: Read>(input: R, source: &str) -> Result<WeatherTable> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let index = HeaderIndex::new(&headers);
    let time = index.find(source, &["time", "valid"])?;
    let mut cols = [0usize; 5];
    for (slot, (_, names)) in cols.iter_mut().zip(WEATHER_COLUMNS) {
        *slot = index.find(source, names)?;
    }
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(source, e))?;
        let line = line_of(&rec, n as u64 + 2);
        let parsed = (|| -> std::result::Result<WeatherRecord, String> {
            let mut v = [None; 5];
            for (i, (name, _)) in WEATHER_COLUMNS.iter().enumerate() {
                v[i] = optional(rec.get(cols[i]).unwrap_or(""), name)?;
            }
            let r = WeatherRecord {
                time: timestamp(field(&rec, time, "time")?, "weather")?,
                air_temp: v[0],
                rel_humidity: v[1],
                wind_speed: v[2],
                precip_1h: v[3],
                visibility: v[4],
            };
            r.validate()?;
            Ok(r)
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }
    let mut table = WeatherTable::new(rows);
    table.rejects = rejects;
    Ok(table)
}

pub fn write_weather<W: Write>(out: W, table: &WeatherTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e| Error::csv("weather output", e);
    let mut header = vec!["time"];
    header.extend(WEATHER_COLUMNS.iter().map(|(n, _)| *n));
    w.write_record(&header).map_err(map)?;
    for r in &table.rows {
        let mut row = vec![r.time.format(TIMESTAMP_FORMAT).to_string()];
        row.extend(
            r.values()
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
        );
        w.write_record(&row).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("weather output", e))
}

pub fn parse_distances(path: &Path) -> Result<(DistanceMatrix, Vec<String>)> {
    read_distances(open(path)?, &path.display().to_string())
}

/// Reads `station,<id_1>,…,<id_n>` followed by one row per station. Rows may
/// come in any order but must cover exactly the header stations.
pub fn read_distances<R: Read>(input: R, source: &str) -> Result<(DistanceMatrix, Vec<String>)> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let stations: Vec<StationId> = headers.iter().skip(1).map(StationId::new).collect();
    let n = stations.len();
    let position: HashMap<&StationId, usize> =
        stations.iter().enumerate().map(|(i, s)| (s, i)).collect();
    if position.len() != n {
        return Err(Error::Input(format!("duplicate station in header of '{source}'")));
    }
    let mut d = vec![f64::NAN; n * n];
    let mut seen = vec![false; n];
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(source, e))?;
        rows += 1;
        if rec.len() != n + 1 {
            return Err(Error::NonSquare {
                path: source.into(),
                detail: format!("row {} has {} distances, expected {n}", rows, rec.len() - 1),
            });
        }
        let id = StationId::new(&rec[0]);
        let i = *position.get(&id).ok_or_else(|| {
            Error::Input(format!("row station {id} of '{source}' not in header"))
        })?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Input(format!("station {id} repeated in '{source}'")));
        }
        for j in 0..n {
            let s = &rec[j + 1];
            d[i * n + j] = s
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("distance '{s}' in '{source}' is not a number")))?;
        }
    }
    if rows != n {
        return Err(Error::NonSquare {
            path: source.into(),
            detail: format!("{rows} rows for {n} columns"),
        });
    }
    DistanceMatrix::from_rows(stations, d).map_err(Error::Input)
}

pub fn write_distances<W: Write>(out: W, m: &DistanceMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e| Error::csv("distance output", e);
    let mut header = vec!["station".to_string()];
    header.extend(m.stations.iter().map(|s| s.0.clone()));
    w.write_record(&header).map_err(map)?;
    for (i, s) in m.stations.iter().enumerate() {
        let mut row = vec![s.0.clone()];
        row.extend((0..m.len()).map(|j| m.get(i, j).to_string()));
        w.write_record(&row).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("distance output", e))
}
