//! Parses trip files (including renamed columns and a broken row) and drops
//! low-activity stations.

use std::fs;

use bikelink::ingest::{filter_stations, parse_trips, reject_log, residual_threshold, TripSchema};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let city = generate(&SyntheticScenario::new(3, 60, 3, 8_000))?;
    city.write_files(dir.path())?;

    // same data with operator-specific headers and one corrupted line
    let original = fs::read_to_string(dir.path().join("trips.csv")).expect("read trips");
    let renamed = original
        .replacen("start station id", "from_id", 1)
        .replacen("end station id", "to_id", 1)
        + "99,2018-05-01 08:00:00,not a time,S001,40.7,-74.0,S002,40.7,-74.0\n";
    let trips = dir.path().join("renamed.csv");
    fs::write(&trips, renamed).expect("write trips");
    let schema_map = dir.path().join("schema.json");
    fs::write(&schema_map, r#"{"start_station": "from_id", "end_station": "to_id"}"#).expect("write map");

    let schema = TripSchema::from_file(&schema_map)?;
    let table = parse_trips(&trips, &schema)?;
    println!("parsed {} trips, rejected {}", table.len(), table.rejects.len());
    print!("{}", reject_log(&table.rejects));

    let (stations, kept) = filter_stations(&table, 2018)?;
    println!(
        "kept {} of {} stations and {} trips (threshold {} trips per station)",
        stations.len(),
        city.stations.len(),
        kept.len(),
        residual_threshold(2018)
    );
    Ok(())
}
