//! Trains the link predictor with and without cluster labels, calibrates it
//! and prints the per-station prediction error table.

use bikelink::clustering::AdaTcParams;
use bikelink::linkpred::{fit_and_evaluate, LinkPredParams, PlotAnnotations, TrainConfig};
use bikelink::pipeline::{features, load, prepare_clustering, transition_graph, InputPaths};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    generate(&SyntheticScenario::desk(4))?.write_files(dir.path())?;
    let data = load(&InputPaths::in_dir(dir.path()), 2018)?;
    let prepared = prepare_clustering(&data)?;
    let clusters = bikelink::clustering::adatc_plus(
        &prepared.input,
        &AdaTcParams { k1: 20, k2: 5, seed: 2, ..AdaTcParams::default() },
    )?;

    let graph = transition_graph(&data);
    println!("{} stations, {} links, {} non-links", graph.len(), graph.edge_count(), graph.non_edge_count());
    let params = LinkPredParams { train: TrainConfig { epochs: 10, ..TrainConfig::default() }, seed: 8, ..LinkPredParams::default() };

    for labels in [Some(clusters.tc.assignment.as_slice()), None] {
        let raw = features(&data, labels)?;
        let run = fit_and_evaluate(&graph, &raw, &params, PlotAnnotations::default())?;
        println!(
            "\n{} features: test accuracy {:.3}, validation gap {:.3} -> {:.3} after calibration",
            raw.dim(),
            run.report.accuracy,
            run.val_gap_raw,
            run.val_gap_calibrated
        );
        print!("{}", run.report.pe_table_tsv());
    }
    Ok(())
}
