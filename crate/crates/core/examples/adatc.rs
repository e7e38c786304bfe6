//! Runs AdaTC+ on a synthetic city and compares the result with the
//! planted communities.

use bikelink::clustering::{adjusted_rand_index, AdaTcParams};
use bikelink::pipeline::{load, prepare_clustering, InputPaths};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let city = generate(&SyntheticScenario::desk(5))?;
    city.write_files(dir.path())?;
    let data = load(&InputPaths::in_dir(dir.path()), 2018)?;
    let prepared = prepare_clustering(&data)?;

    let params = AdaTcParams { rho1: 0.3, k1: 16, k2: 4, n_outer: 10, seed: 1, ..AdaTcParams::default() };
    let out = bikelink::clustering::adatc_plus(&prepared.input, &params)?;
    println!("{} outer iterations, converged = {}", out.iterations, out.converged);
    println!("iter  agd_inner  acod_inner  td_gc      td_tc");
    for (i, r) in out.reports.iter().enumerate() {
        println!("{:<4}  {:>9.1}  {:>10.4}  {:>9.1}  {:>7.3}", i + 1, r.agd_inner, r.acod_inner, r.td_gc, r.td_tc);
    }

    // compare in the same station order
    let truth: Vec<usize> = prepared
        .ids
        .iter()
        .map(|id| city.community[city.stations.iter().position(|s| s == id).expect("known station")])
        .collect();
    println!("ARI of the {} transit groups vs planted communities: {:.3}", out.tc.k(), adjusted_rand_index(&out.tc.assignment, &truth));
    println!("ARI of the {} geo clusters vs planted communities:   {:.3}", out.gc.k(), adjusted_rand_index(&out.gc.assignment, &truth));
    Ok(())
}
