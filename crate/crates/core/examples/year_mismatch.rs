//! Trains on one year and scores the next, whose network has grown, with
//! and without restricting it to the stations of the first year.

use bikelink::linkpred::{evaluate_model, fit, LinkPredParams, PlotAnnotations, TrainConfig};
use bikelink::pipeline::{features, load, restrict_to_prior_year, transition_graph, InputPaths};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let root = tempfile::tempdir().expect("temp dir");
    let mut years = Vec::new();
    for (year, stations, seed) in [(2018, 150, 1), (2019, 200, 2)] {
        let dir = root.path().join(year.to_string());
        std::fs::create_dir_all(&dir).expect("year dir");
        let scenario = SyntheticScenario { year, ..SyntheticScenario::new(seed, stations, 4, stations * 250) };
        generate(&scenario)?.write_files(&dir)?;
        years.push(load(&InputPaths::in_dir(&dir), year)?);
    }
    let (first, second) = (&years[0], &years[1]);

    let params = LinkPredParams { train: TrainConfig { epochs: 10, ..TrainConfig::default() }, seed: 3, ..LinkPredParams::default() };
    let (model, _, _, _) = fit(&transition_graph(first), &features(first, None)?, &params)?;

    let previous = first.stations.stations.keys().cloned().collect();
    for (name, data) in [("all stations", second.clone()), ("restricted", restrict_to_prior_year(second, &previous)?)] {
        let report = evaluate_model(&model, &transition_graph(&data), &features(&data, None)?, PlotAnnotations::default())?;
        println!(
            "{} {name}: {} stations, accuracy {:.3}, mean PE {:.1}% / {:.1}%",
            data.year,
            data.stations.len(),
            report.accuracy,
            report.origin.mean,
            report.destination.mean
        );
    }
    Ok(())
}
