//! A reduced parameter grid with Pareto ranking and the mid-K1 annotation.

use bikelink::clustering::{grid_search, AdaTcParams, GridSpec};
use bikelink::pipeline::{load, prepare_clustering, InputPaths};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    generate(&SyntheticScenario::desk(2))?.write_files(dir.path())?;
    let prepared = prepare_clustering(&load(&InputPaths::in_dir(dir.path()), 2018)?)?;

    let spec = GridSpec {
        rho1: vec![0.0, 0.1, 0.3, 0.505, 0.7],
        k1: vec![10, 15, 20],
        k2: vec![2, 4, 6],
        rho1_window: (0.1, 0.505),
    };
    let base = AdaTcParams { n_outer: 4, seed: 1, ..AdaTcParams::default() };
    let report = grid_search(&prepared.input, &spec, &base, &[], |_| {})?;

    println!("{} cells, {} on the first front", report.rows.len(), report.ranks.iter().filter(|r| **r == Some(1)).count());
    println!("rank  rho1   k1  k2  agd_inner  acod_inner  tdf");
    for i in report.ranking().into_iter().take(10) {
        let (row, r) = (&report.rows[i], report.rows[i].report.expect("ranked"));
        println!(
            "{:<4}  {:<5}  {:<3} {:<3} {:>9.1}  {:>10.4}  {:.1}",
            report.ranks[i].expect("ranked"), row.cell.rho1, row.cell.k1, row.cell.k2, r.agd_inner, r.acod_inner, r.tdf()
        );
    }
    if let Some(i) = report.mid_k1 {
        let c = report.rows[i].cell;
        println!("mid-K1 candidate: rho1 = {}, K1 = {}, K2 = {}", c.rho1, c.k1, c.k2);
    }
    Ok(())
}
