//! Rebuilds bike availability and derives the five-slot check-out profile
//! of every station.

use bikelink::demand::{compute_profiles, offset_levels, TIME_SLOTS};
use bikelink::pipeline::{load, InputPaths};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    // a station that only sees its balance: -1 -1 +1 -1 needs 2 bikes at opening
    let (start, levels) = offset_levels(&[-1, -1, 1, -1]);
    println!("offset method: start with {start}, levels {levels:?}");

    let dir = tempfile::tempdir().expect("temp dir");
    let city = generate(&SyntheticScenario::new(11, 40, 2, 20_000))?;
    city.write_files(dir.path())?;
    let data = load(&InputPaths::in_dir(dir.path()), 2018)?;
    let set = compute_profiles(&data.trips, &data.status, &data.stations, data.year)?;
    println!("{:?}", set.diagnostics);

    let labels: Vec<String> = TIME_SLOTS.iter().map(|s| format!("U{}   ", s.id)).collect();
    println!("station  community  {}", labels.join("  "));
    for p in set.profiles.iter().take(8) {
        let idx = city.stations.iter().position(|s| *s == p.station).expect("station exists");
        let u: Vec<String> = p.u.iter().map(|v| format!("{v:.3}")).collect();
        println!("{}  {}          {}", p.station, city.community[idx], u.join("  "));
    }
    Ok(())
}
