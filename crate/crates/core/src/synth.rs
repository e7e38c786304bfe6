//! Seeded synthetic cities with planted communities.
//!
//! Stations sit around community centres laid out on a square grid. Trips
//! are drawn from a community x community x slot rate kernel with endpoints
//! uniform inside the chosen communities, so both the geography and the
//! transition structure carry the planted partition.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use rand::distr::weighted::WeightedIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::demand::{DayClass, TIME_SLOTS};
use crate::error::{Error, Result};
use crate::ingest::{
    write_distances, write_status, write_trips, write_weather, DistanceMatrix, StationId,
    StatusRecord, StatusTable, TripRecord, TripSchema, TripTable, WeatherRecord, WeatherTable,
};
use crate::linkpred::{FeatureTable, TransitionGraph};
use crate::output::write_atomic;
use crate::seed;

const METRES_PER_DEGREE: f64 = 111_320.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub seed: u64,
    pub n_stations: usize,
    pub communities: usize,
    pub trips: usize,
    pub year: i32,
    /// Distance between neighbouring community centres, metres.
    pub spacing_m: f64,
    /// Standard deviation of station positions around their centre, metres.
    pub jitter_m: f64,
    /// Relative trip rates, indexed `[from][to][slot]`.
    pub kernel: Vec<Vec<[f64; 5]>>,
    /// Share of stations that get status snapshots.
    pub status_share: f64,
    /// Latitude and longitude of the grid origin.
    pub origin: (f64, f64),
}

impl SyntheticScenario {
    /// 200 stations, 4 communities, 50k trips in 2018.
    pub fn desk(seed: u64) -> Self {
        Self::new(seed, 200, 4, 50_000)
    }

    pub fn new(seed: u64, n_stations: usize, communities: usize, trips: usize) -> Self {
        SyntheticScenario {
            seed,
            n_stations,
            communities,
            trips,
            year: 2018,
            spacing_m: 2500.0,
            jitter_m: 400.0,
            kernel: diagonal_kernel(communities, 0.04),
            status_share: 0.5,
            origin: (40.70, -74.00),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.communities;
        if k == 0 || self.n_stations < k {
            return Err(Error::Config(format!(
                "{} stations cannot fill {k} communities",
                self.n_stations
            )));
        }
        if self.kernel.len() != k || self.kernel.iter().any(|row| row.len() != k) {
            return Err(Error::Config(format!("kernel must be {k} x {k} x 5")));
        }
        let rates = self.kernel.iter().flatten().flatten();
        if rates.clone().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config("trip rates must be finite and non-negative".into()));
        }
        if rates.sum::<f64>() <= 0.0 {
            return Err(Error::Config("kernel has zero total rate".into()));
        }
        if !(0.0..=1.0).contains(&self.status_share) {
            return Err(Error::Config("status share outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Intra-community rate 1, inter-community rate `off`, with a per-community
/// tilt of the slot profile so check-out patterns differ between communities.
pub fn diagonal_kernel(k: usize, off: f64) -> Vec<Vec<[f64; 5]>> {
    let base = [1.0, 0.6, 1.0, 0.8, 0.4];
    (0..k)
        .map(|from| {
            let mut slots = base;
            slots[from % 5] *= 1.8;
            (0..k)
                .map(|to| {
                    let scale = if from == to { 1.0 } else { off };
                    slots.map(|s| s * scale)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SyntheticCity {
    pub scenario: SyntheticScenario,
    pub stations: Vec<StationId>,
    pub community: Vec<usize>,
    /// Planar positions in metres.
    pub positions: Vec<(f64, f64)>,
    pub trips: TripTable,
    pub status: StatusTable,
    pub weather: WeatherTable,
    pub distances: DistanceMatrix,
}

pub fn generate(scenario: &SyntheticScenario) -> Result<SyntheticCity> {
    scenario.validate()?;
    let s = scenario;
    let k = s.communities;
    let mut rng = seed::rng(s.seed, &[20]);

    let side = (k as f64).sqrt().ceil() as usize;
    let centres: Vec<(f64, f64)> = (0..k)
        .map(|c| ((c % side) as f64 * s.spacing_m, (c / side) as f64 * s.spacing_m))
        .collect();
    let jitter = Normal::new(0.0, s.jitter_m).map_err(|e| Error::Config(e.to_string()))?;
    let community: Vec<usize> = (0..s.n_stations).map(|i| i % k).collect();
    let positions: Vec<(f64, f64)> = community
        .iter()
        .map(|&c| (centres[c].0 + jitter.sample(&mut rng), centres[c].1 + jitter.sample(&mut rng)))
        .collect();
    let width = (s.n_stations.max(1) as f64).log10().floor() as usize + 1;
    let stations: Vec<StationId> = (0..s.n_stations)
        .map(|i| StationId::new(format!("S{:0width$}", i + 1)))
        .collect();
    let coords: Vec<(f64, f64)> = positions
        .iter()
        .map(|&(x, y)| {
            let lat = s.origin.0 + y / METRES_PER_DEGREE;
            let lon = s.origin.1 + x / (METRES_PER_DEGREE * s.origin.0.to_radians().cos());
            (lat, lon)
        })
        .collect();
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..s.n_stations).filter(|&i| community[i] == c).collect())
        .collect();

    let mut dates: [Vec<NaiveDate>; 2] = [Vec::new(), Vec::new()];
    let mut day = NaiveDate::from_ymd_opt(s.year, 1, 1).ok_or_else(|| Error::Config("bad year".into()))?;
    while day.year() == s.year {
        let class = DayClass::of(day.weekday());
        dates[usize::from(class == DayClass::Weekend)].push(day);
        day = day.succ_opt().expect("date in range");
    }

    let cells: Vec<(usize, usize, usize)> = (0..k)
        .flat_map(|a| (0..k).flat_map(move |b| (0..5).map(move |t| (a, b, t))))
        .collect();
    let weights: Vec<f64> = cells.iter().map(|&(a, b, t)| s.kernel[a][b][t]).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;

    let mut rows = Vec::with_capacity(s.trips);
    while rows.len() < s.trips {
        let (a, b, t) = cells[pick.sample(&mut rng)];
        let origin = *members[a].choose(&mut rng).expect("non-empty community");
        let dest = *members[b].choose(&mut rng).expect("non-empty community");
        if origin == dest {
            continue;
        }
        let slot = &TIME_SLOTS[t];
        let pool = &dates[usize::from(slot.day_class == DayClass::Weekend)];
        let date = *pool.choose(&mut rng).expect("year has both day classes");
        let window = i64::from(slot.end_hour - slot.start_hour) * 3600;
        let start = date.and_hms_opt(slot.start_hour, 0, 0).expect("valid hour")
            + Duration::seconds(rng.random_range(0..window));
        let metres = dist(positions[origin], positions[dest]);
        let duration = (metres / rng.random_range(3.0..5.0) + rng.random_range(60.0..240.0)).round() as u32;
        rows.push(TripRecord {
            duration,
            start_time: start,
            end_time: start + Duration::seconds(i64::from(duration)),
            start_station: stations[origin].clone(),
            end_station: stations[dest].clone(),
            start_lat: coords[origin].0,
            start_lon: coords[origin].1,
            end_lat: coords[dest].0,
            end_lon: coords[dest].1,
        });
    }
    rows.sort_by(|x, y| (x.start_time, &x.start_station).cmp(&(y.start_time, &y.start_station)));

    let status = status_for(s, &stations, &rows, &mut rng);
    let weather = weather_for(s.year, &mut rng);
    let n = s.n_stations;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i * n + j] = dist(positions[i], positions[j]);
            }
        }
    }
    let (distances, _) = DistanceMatrix::from_rows(stations.clone(), d).map_err(Error::Input)?;
    Ok(SyntheticCity {
        scenario: scenario.clone(),
        stations,
        community,
        positions,
        trips: TripTable::new(rows),
        status,
        weather,
        distances,
    })
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Snapshots at 06:00, 12:00 and 18:00 of every active day, consistent with
/// the trips: the day's opening stock is the smallest one keeping the level
/// non-negative plus a few spare bikes.
fn status_for<R: Rng>(s: &SyntheticScenario, stations: &[StationId], trips: &[TripRecord], rng: &mut R) -> StatusTable {
    let count = (s.status_share * stations.len() as f64).round() as usize;
    let mut chosen: Vec<usize> = (0..stations.len()).collect();
    chosen.shuffle(rng);
    chosen.truncate(count);
    let tracked: BTreeMap<&StationId, usize> = chosen.into_iter().map(|i| (&stations[i], i)).collect();
    let mut days: BTreeMap<(usize, NaiveDate), Vec<(NaiveDateTime, i32)>> = BTreeMap::new();
    for t in trips {
        if let Some(&i) = tracked.get(&t.start_station) {
            days.entry((i, t.start_time.date())).or_default().push((t.start_time, -1));
        }
        if let Some(&i) = tracked.get(&t.end_station) {
            days.entry((i, t.end_time.date())).or_default().push((t.end_time, 1));
        }
    }
    let mut rows = Vec::new();
    for ((i, date), mut events) in days {
        events.sort();
        let mut level = 0i32;
        let mut low = 0i32;
        for &(_, e) in &events {
            level += e;
            low = low.min(level);
        }
        let opening = -low + rng.random_range(0..=4);
        for hour in [6, 12, 18] {
            let at = date.and_hms_opt(hour, 0, 0).expect("valid hour");
            // snapshots apply before trips sharing their timestamp
            let before: i32 = events.iter().filter(|(t, _)| *t < at).map(|(_, e)| e).sum();
            rows.push(StatusRecord {
                station: stations[i].clone(),
                time: at,
                bikes_available: (opening + before) as u32,
            });
        }
    }
    rows.sort_by(|a, b| (&a.station, a.time).cmp(&(&b.station, b.time)));
    StatusTable { rows, rejects: Vec::new() }
}

/// Hourly records with a seasonal temperature cycle; about 3% of the
/// precipitation readings are missing.
fn weather_for<R: Rng>(year: i32, rng: &mut R) -> WeatherTable {
    let mut rows = Vec::new();
    let mut t = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year").and_hms_opt(0, 0, 0).expect("midnight");
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    while t.year() == year {
        let phase = (f64::from(t.ordinal()) - 200.0) / 365.0 * std::f64::consts::TAU;
        let temp = 55.0 + 22.0 * phase.cos() + 3.0 * noise.sample(rng);
        let rain: f64 = if rng.random_bool(0.1) { rng.random_range(0.1..6.0) } else { 0.0 };
        rows.push(WeatherRecord {
            time: t,
            air_temp: Some((temp * 10.0).round() / 10.0),
            rel_humidity: Some((60.0 + 15.0 * noise.sample(rng)).clamp(5.0, 100.0).round()),
            wind_speed: Some((8.0 + 3.0 * noise.sample(rng)).max(0.0).round()),
            precip_1h: (!rng.random_bool(0.03)).then_some((rain * 10.0).round() / 10.0),
            visibility: Some(if rain > 0.0 { 4.0 } else { 10.0 }),
        });
        t += Duration::hours(1);
    }
    WeatherTable::new(rows)
}

impl SyntheticCity {
    /// Writes `trips.csv`, `status.csv`, `weather.csv`, `distances.csv` and
    /// `communities.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut buf = Vec::new();
        write_trips(&mut buf, &self.trips, &TripSchema::default())?;
        write_atomic(&dir.join("trips.csv"), &buf)?;
        buf.clear();
        write_status(&mut buf, &self.status)?;
        write_atomic(&dir.join("status.csv"), &buf)?;
        buf.clear();
        write_weather(&mut buf, &self.weather)?;
        write_atomic(&dir.join("weather.csv"), &buf)?;
        buf.clear();
        write_distances(&mut buf, &self.distances)?;
        write_atomic(&dir.join("distances.csv"), &buf)?;
        let mut gt = String::from("station,community\n");
        for (id, c) in self.stations.iter().zip(&self.community) {
            gt.push_str(&format!("{id},{c}\n"));
        }
        write_atomic(&dir.join("communities.csv"), gt.as_bytes())
    }
}

/// Reads a `station,community` file.
pub fn read_communities(path: &Path) -> Result<BTreeMap<StationId, usize>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let c = rec
            .get(1)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Input(format!("{}: bad community row {rec:?}", path.display())))?;
        out.insert(StationId::new(rec.get(0).unwrap_or_default().trim()), c);
    }
    Ok(out)
}

/// Stochastic block graph with `k` equal communities (node `i` in `i % k`)
/// and a directed trip count of 1 to 10 each way on every edge.
pub fn planted_partition_graph(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(TransitionGraph, Vec<usize>)> {
    if k == 0 || !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) {
        return Err(Error::Config("invalid planted-partition parameters".into()));
    }
    let mut rng = seed::rng(seed, &[21]);
    let community: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let p = if community[a] == community[b] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let mut g = TransitionGraph::anonymous(n, &edges)?;
    for &(a, b) in &edges {
        g.trip_counts.insert((a, b), rng.random_range(1..=10));
        g.trip_counts.insert((b, a), rng.random_range(1..=10));
    }
    Ok((g, community))
}

/// Features drawn around a per-community mean with unit noise; the cluster
/// entry, when requested, is the planted community.
pub fn community_features(community: &[usize], with_cluster: bool, signal: f64, seed: u64) -> FeatureTable {
    let base = crate::linkpred::feature_len(false);
    let k = community.iter().max().map_or(0, |m| m + 1);
    let mut rng = seed::rng(seed, &[22]);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..base).map(|_| if rng.random_bool(0.5) { signal } else { -signal }).collect())
        .collect();
    let rows = community
        .iter()
        .map(|&c| {
            let mut row = Vec::with_capacity(base + 1);
            if with_cluster {
                row.push(c as f64);
            }
            row.extend(means[c].iter().map(|m| m + noise.sample(&mut rng)));
            row
        })
        .collect();
    FeatureTable { with_cluster, rows, weather_fallback: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_only_kernel_stays_inside_communities() {
        let mut s = SyntheticScenario::new(1, 40, 4, 2000);
        s.kernel = diagonal_kernel(4, 0.0);
        let city = generate(&s).unwrap();
        let index: BTreeMap<&StationId, usize> = city.stations.iter().enumerate().map(|(i, s)| (s, i)).collect();
        for t in &city.trips.rows {
            assert_eq!(city.community[index[&t.start_station]], city.community[index[&t.end_station]]);
        }
    }

    #[test]
    fn zero_rate_is_rejected() {
        let mut s = SyntheticScenario::new(1, 8, 2, 10);
        s.kernel = diagonal_kernel(2, 0.0).into_iter().map(|r| r.into_iter().map(|_| [0.0; 5]).collect()).collect();
        assert!(generate(&s).is_err());
    }

    #[test]
    fn tables_validate() {
        let city = generate(&SyntheticScenario::new(3, 20, 2, 3000)).unwrap();
        assert!(city.trips.rows.iter().all(|t| t.validate().is_ok()));
        assert!(city.weather.rows.iter().all(|w| w.validate().is_ok()));
        assert!(!city.status.rows.is_empty());
        assert_eq!(city.distances.len(), 20);
    }
}
