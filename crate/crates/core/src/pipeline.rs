//! Stage orchestration shared by the command-line front end and the
//! examples.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::clustering::{
    adatc_plus, baseline_km, baseline_spectral, checkout_matrix, geo_matrix, index_trips,
    AdaTcParams, AffinityForm, ClusterQualityReport, Clustering, ClusteringInput,
    DissimilarityMatrix,
};
use crate::demand::{compute_profiles, ProfileSet};
use crate::error::{Error, Result};
use crate::ingest::{
    filter_stations, parse_distances, parse_status, parse_trips, parse_weather, DistanceMatrix,
    StationId, StationSet, StatusTable, TripSchema, TripTable, WeatherTable,
};
use crate::linkpred::{node_features, FeatureTable, TransitionGraph};
use crate::seed;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub trips: PathBuf,
    pub status: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    pub schema: Option<PathBuf>,
}

impl InputPaths {
    /// The standard file names written by the synthetic generator.
    pub fn in_dir(dir: &Path) -> Self {
        InputPaths {
            trips: dir.join("trips.csv"),
            status: Some(dir.join("status.csv")),
            weather: Some(dir.join("weather.csv")),
            distances: Some(dir.join("distances.csv")),
            schema: None,
        }
    }

    /// Every file given, for hashing.
    pub fn files(&self) -> Vec<&Path> {
        std::iter::once(self.trips.as_path())
            .chain(self.status.as_deref())
            .chain(self.weather.as_deref())
            .chain(self.distances.as_deref())
            .chain(self.schema.as_deref())
            .collect()
    }
}

/// Parsed and filtered inputs for one year.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub year: i32,
    pub stations: StationSet,
    /// Trips of the year between retained stations.
    pub trips: TripTable,
    pub rejected_trips: usize,
    pub status: StatusTable,
    pub weather: WeatherTable,
    pub distances: Option<DistanceMatrix>,
}

impl Dataset {
    pub fn ids(&self) -> Vec<StationId> {
        self.stations.ids()
    }
}

pub fn load(paths: &InputPaths, year: i32) -> Result<Dataset> {
    let schema = match &paths.schema {
        Some(p) => TripSchema::from_file(p)?,
        None => TripSchema::default(),
    };
    let raw = parse_trips(&paths.trips, &schema)?;
    if !raw.rejects.is_empty() {
        warn!("{}: {} rows rejected", paths.trips.display(), raw.rejects.len());
    }
    let (stations, trips) = filter_stations(&raw, year)?;
    info!("{} stations and {} trips retained for {year}", stations.len(), trips.len());
    let status = match &paths.status {
        Some(p) => parse_status(p)?,
        None => StatusTable::default(),
    };
    let weather = match &paths.weather {
        Some(p) => parse_weather(p)?,
        None => WeatherTable::default(),
    };
    let distances = match &paths.distances {
        Some(p) => {
            let (m, warnings) = parse_distances(p)?;
            for w in warnings.iter().chain(&m.coverage_warnings(&stations)) {
                warn!("{w}");
            }
            Some(m)
        }
        None => None,
    };
    Ok(Dataset {
        year,
        stations,
        rejected_trips: raw.rejects.len(),
        trips,
        status,
        weather,
        distances,
    })
}

/// Profiles and dissimilarity inputs over the retained stations.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub ids: Vec<StationId>,
    pub profiles: ProfileSet,
    pub input: ClusteringInput,
}

pub fn prepare_clustering(data: &Dataset) -> Result<Prepared> {
    let ids = data.ids();
    let distances = data
        .distances
        .as_ref()
        .ok_or_else(|| Error::Input("clustering needs a distance matrix (--distances)".into()))?;
    let n = ids.len();
    let geo = DissimilarityMatrix::from_vec(n, distances.symmetrized_for(&ids).map_err(Error::Input)?)?;
    let profiles = compute_profiles(&data.trips, &data.status, &data.stations, data.year)?;
    let checkout = checkout_matrix(&profiles.vectors());
    let trips = index_trips(&data.trips.rows, &data.stations.index());
    Ok(Prepared {
        ids,
        profiles,
        input: ClusteringInput::new(geo, checkout, trips)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    AdaTc,
    Gc,
    Km,
    Sc,
    Nc,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adatc+" | "adatc" => Ok(Method::AdaTc),
            "gc" => Ok(Method::Gc),
            "km" => Ok(Method::Km),
            "sc" => Ok(Method::Sc),
            "nc" => Ok(Method::Nc),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::AdaTc => "adatc+",
            Method::Gc => "gc",
            Method::Km => "km",
            Method::Sc => "sc",
            Method::Nc => "nc",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub clustering: Clustering,
    pub reports: Vec<ClusterQualityReport>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs one clustering method. KM and SC use `k1` clusters on the GC
/// dissimilarity with trade-off `rho1`.
pub fn run_method(input: &ClusteringInput, method: Method, params: &AdaTcParams, affinity: AffinityForm) -> Result<MethodOutcome> {
    let single = |clustering: Clustering| {
        let diss = geo_matrix(&input.geo, &input.checkout, params.rho1);
        let report = crate::clustering::quality_report(&clustering, &input.geo, &input.checkout, &diss);
        MethodOutcome { clustering, reports: vec![report], iterations: 1, converged: true }
    };
    match method {
        Method::AdaTc => {
            let out = adatc_plus(input, params)?;
            Ok(MethodOutcome { clustering: out.gc, reports: out.reports, iterations: out.iterations, converged: out.converged })
        }
        Method::Gc => {
            let out = adatc_plus(input, &AdaTcParams { n_outer: 1, ..*params })?;
            Ok(MethodOutcome { clustering: out.gc, reports: out.reports, iterations: 1, converged: true })
        }
        Method::Km => {
            params.validate(input.len())?;
            let diss = geo_matrix(&input.geo, &input.checkout, params.rho1);
            let c = baseline_km(&diss, params.k1, seed::derive(params.seed, &[30]), params.max_iters_gc)?;
            Ok(single(c))
        }
        Method::Sc => {
            params.validate(input.len())?;
            let diss = geo_matrix(&input.geo, &input.checkout, params.rho1);
            let c = baseline_spectral(&diss, params.k1, seed::derive(params.seed, &[31]), affinity, params.max_iters_gc)?;
            Ok(single(c))
        }
        Method::Nc => Err(Error::Config("nc has no clustering output".into())),
    }
}

pub fn transition_graph(data: &Dataset) -> TransitionGraph {
    TransitionGraph::build(&data.trips.rows, &data.ids())
}

/// Node features over the dataset's stations; cluster labels come from the
/// clustering document when given.
pub fn features(data: &Dataset, labels: Option<&[usize]>) -> Result<FeatureTable> {
    if data.weather.rows.is_empty() {
        warn!("no weather records; weather features fall back to 0");
    }
    let f = node_features(&data.ids(), &data.trips.rows, &data.weather, labels)?;
    if !f.weather_fallback.is_empty() {
        warn!("{} stations use city-wide weather averages", f.weather_fallback.len());
    }
    Ok(f)
}

/// Drops stations not in `previous`, with every trip touching them.
pub fn restrict_to_prior_year(data: &Dataset, previous: &BTreeSet<StationId>) -> Result<Dataset> {
    let mut out = data.clone();
    out.stations.stations.retain(|id, _| previous.contains(id));
    if out.stations.is_empty() {
        return Err(Error::Input("no station of this year existed in the previous year".into()));
    }
    out.trips
        .rows
        .retain(|t| previous.contains(&t.start_station) && previous.contains(&t.end_station));
    for info in out.stations.stations.values_mut() {
        info.trip_count = 0;
    }
    for t in &out.trips.rows {
        for id in [&t.start_station, &t.end_station] {
            if let Some(info) = out.stations.stations.get_mut(id) {
                info.trip_count += 1;
            }
        }
    }
    info!(
        "restricted to {} of {} stations present the year before",
        out.stations.len(),
        data.stations.len()
    );
    Ok(out)
}

/// Station ids from a JSON file: either an array of ids or an object with a
/// `stations` array or map (as in a clustering document).
pub fn read_station_list(path: &Path) -> Result<BTreeSet<StationId>> {
    let value: serde_json::Value = crate::output::read_json(path)?;
    let bad = || Error::Input(format!("{}: expected a list of station ids", path.display()));
    let list = match &value {
        serde_json::Value::Object(map) => map.get("stations").ok_or_else(bad)?,
        v => v,
    };
    match list {
        serde_json::Value::Array(items) => items
            .iter()
            .map(|v| v.as_str().map(StationId::new).ok_or_else(bad))
            .collect(),
        serde_json::Value::Object(map) => Ok(map.keys().map(StationId::new).collect()),
        _ => Err(bad()),
    }
}
