//! GC, KM and spectral clustering side by side on the same dissimilarities.

use bikelink::clustering::{AdaTcParams, AffinityForm};
use bikelink::pipeline::{load, prepare_clustering, run_method, InputPaths, Method};
use bikelink::synth::{generate, SyntheticScenario};

fn main() -> bikelink::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    generate(&SyntheticScenario::desk(9))?.write_files(dir.path())?;
    let data = load(&InputPaths::in_dir(dir.path()), 2018)?;
    let prepared = prepare_clustering(&data)?;
    let params = AdaTcParams { k1: 20, k2: 5, seed: 3, ..AdaTcParams::default() };

    println!("method  affinity  agd_inner  acod_inner  agd_inter  acod_inter  tdf");
    for (method, affinity) in [
        (Method::AdaTc, AffinityForm::Literal),
        (Method::Gc, AffinityForm::Literal),
        (Method::Km, AffinityForm::Literal),
        (Method::Sc, AffinityForm::Literal),
        (Method::Sc, AffinityForm::Scaled),
    ] {
        let out = run_method(&prepared.input, method, &params, affinity)?;
        let r = out.reports.last().expect("one report per run");
        println!(
            "{method:<6}  {affinity:<8?}  {:>9.1}  {:>10.4}  {:>9.1}  {:>10.4}  {:.1}",
            r.agd_inner, r.acod_inner, r.agd_inter, r.acod_inter, r.tdf()
        );
    }
    match run_method(&prepared.input, Method::Nc, &params, AffinityForm::Literal) {
        Err(e) => println!("nc: {e}"),
        Ok(_) => unreachable!("nc never clusters"),
    }
    Ok(())
}
