//! Generates a seeded synthetic city and writes it as CSV files.
//!
//! ```text
//! cargo run --example synth_city -- /tmp/city 7
//! ```

use std::path::PathBuf;

use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bikelink-city"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let scenario = SyntheticScenario::desk(seed);
    let city = generate(&scenario)?;
    std::fs::create_dir_all(&dir).expect("create output directory");
    city.write_files(&dir)?;

    println!("{} stations, {} trips, {} status snapshots, {} weather hours",
        city.stations.len(), city.trips.len(), city.status.rows.len(), city.weather.rows.len());
    let mut inside = vec![0usize; scenario.communities];
    let mut leaving = vec![0usize; scenario.communities];
    let index: std::collections::HashMap<_, _> = city.stations.iter().cloned().zip(0..).collect();
    for t in &city.trips.rows {
        let (a, b) = (city.community[index[&t.start_station]], city.community[index[&t.end_station]]);
        if a == b { inside[a] += 1 } else { leaving[a] += 1 }
    }
    for c in 0..scenario.communities {
        println!("community {c}: {} trips stay inside, {} leave", inside[c], leaving[c]);
    }
    println!("files written to {}", dir.display());
    Ok(())
}
