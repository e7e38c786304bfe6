use std::collections::HashMap;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{StationId, TripRecord, WeatherRecord, WeatherTable};

pub const SEASONS: usize = 4;
pub const WEEKDAYS: usize = 7;
pub const PERIODS: usize = 6;
const WEATHER_BLOCK: usize = SEASONS * WeatherRecord::VARIABLES;

/// Meteorological season: 0 spring (Mar-May), 1 summer, 2 autumn, 3 winter (Dec-Feb).
pub fn season(t: NaiveDateTime) -> usize {
    match t.month() {
        3..=5 => 0,
        6..=8 => 1,
        9..=11 => 2,
        _ => 3,
    }
}

/// Four-hour departure period starting at 07:00; the sixth is [03:00, 07:00).
pub fn departure_period(t: NaiveDateTime) -> usize {
    ((t.hour() as usize + 24 - 7) % 24) / 4
}

pub fn feature_len(with_cluster: bool) -> usize {
    usize::from(with_cluster) + WEATHER_BLOCK + WEEKDAYS + PERIODS
}

/// Raw (unstandardised) node features, one row per node.
///
/// Layout: optional cluster id, then weather means season-major
/// (temperature, humidity, wind, precipitation, visibility per season),
/// then the Monday..Sunday departure histogram and the six-period one.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub with_cluster: bool,
    pub rows: Vec<Vec<f64>>,
    /// Nodes whose weather block fell back to city-wide averages.
    pub weather_fallback: Vec<usize>,
}

impl FeatureTable {
    pub fn dim(&self) -> usize {
        feature_len(self.with_cluster)
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sum: f64,
    count: u64,
}

pub fn node_features(
    nodes: &[StationId],
    trips: &[TripRecord],
    weather: &WeatherTable,
    clusters: Option<&[usize]>,
) -> Result<FeatureTable> {
    if let Some(c) = clusters {
        if c.len() != nodes.len() {
            return Err(Error::Input(format!(
                "{} cluster labels for {} nodes",
                c.len(),
                nodes.len()
            )));
        }
    }
    let index: HashMap<&StationId, usize> = nodes.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = nodes.len();
    let mut station_weather = vec![[Acc::default(); WEATHER_BLOCK]; n];
    let mut city_weather = [Acc::default(); WEATHER_BLOCK];
    let mut weekday = vec![[0.0; WEEKDAYS]; n];
    let mut period = vec![[0.0; PERIODS]; n];

    for t in trips {
        let Some(&s) = index.get(&t.start_station) else {
            continue;
        };
        weekday[s][t.start_time.weekday().num_days_from_monday() as usize] += 1.0;
        period[s][departure_period(t.start_time)] += 1.0;
        if let Some(rec) = weather.at(t.start_time) {
            let base = season(t.start_time) * WeatherRecord::VARIABLES;
            for (v, value) in rec.values().into_iter().enumerate() {
                if let Some(x) = value {
                    for acc in [&mut station_weather[s][base + v], &mut city_weather[base + v]] {
                        acc.sum += x;
                        acc.count += 1;
                    }
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(n);
    let mut weather_fallback = Vec::new();
    for s in 0..n {
        let mut row = Vec::with_capacity(feature_len(clusters.is_some()));
        if let Some(c) = clusters {
            row.push(c[s] as f64);
        }
        let mut fell_back = false;
        for (own, city) in station_weather[s].iter().zip(&city_weather) {
            if own.count > 0 {
                row.push(own.sum / own.count as f64);
            } else {
                fell_back = true;
                row.push(if city.count > 0 { city.sum / city.count as f64 } else { 0.0 });
            }
        }
        if fell_back {
            weather_fallback.push(s);
        }
        for hist in [&weekday[s][..], &period[s][..]] {
            let total: f64 = hist.iter().sum();
            row.extend(hist.iter().map(|&c| if total > 0.0 { c / total } else { 0.0 }));
        }
        rows.push(row);
    }
    Ok(FeatureTable {
        with_cluster: clusters.is_some(),
        rows,
        weather_fallback,
    })
}

/// Per-column standardisation; constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Input("no feature rows to standardise".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, x), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        std.iter_mut().for_each(|s| *s = s.sqrt());
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 1e-12 { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}
