use std::fs;
use std::path::{Path, PathBuf};

use bikelink::cli::{main_with, ModelDocument};
use bikelink::output::{read_json, write_json};

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("bikelink").chain(args.iter().copied()))
}

struct City {
    _dir: tempfile::TempDir,
    data: PathBuf,
    out: PathBuf,
}

impl City {
    fn new(seed: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let out = dir.path().join("out");
        let d = data.to_str().unwrap();
        assert_eq!(run(&["synth", "--out", d, "--seed", seed, "--stations", "60", "--n-trips", "9000"]), 0);
        City { _dir: dir, data, out }
    }

    fn inputs(&self) -> Vec<String> {
        let f = |n: &str| self.data.join(n).to_string_lossy().into_owned();
        vec![
            "--trips".into(), f("trips.csv"),
            "--status".into(), f("status.csv"),
            "--weather".into(), f("weather.csv"),
            "--distances".into(), f("distances.csv"),
            "--out".into(), self.out.to_string_lossy().into_owned(),
        ]
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> i32 {
        let inputs = self.inputs();
        let mut args: Vec<&str> = vec![cmd];
        args.extend(inputs.iter().map(String::as_str));
        args.extend_from_slice(extra);
        run(&args)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn cluster_writes_the_requested_number_of_clusters() {
    let city = City::new("1");
    assert_eq!(city.run("cluster", &["--method", "adatc+", "--k1", "12", "--k2", "4", "--rho1", "0.505"]), 0);
    let doc: serde_json::Value = read_json(&city.out("adatc.json")).unwrap();
    assert_eq!(doc["k"], 12);
    assert_eq!(doc["stations"].as_object().unwrap().len(), 60);
    assert!(doc["stamp"]["config_hash"].as_str().unwrap().len() == 64);
    assert!(fs::read_to_string(city.out("adatc_quality.tsv")).unwrap().starts_with("# config_hash="));

    assert_eq!(city.run("cluster", &["--method", "nc"]), 1);
    assert!(!city.out("nc.json").exists());
}

#[test]
fn rerun_overwrites_with_identical_bytes() {
    let city = City::new("2");
    let args = ["--method", "km", "--k1", "6", "--k2", "3", "--seed", "5"];
    assert_eq!(city.run("cluster", &args), 0);
    let first = fs::read(city.out("km.json")).unwrap();
    assert_eq!(city.run("cluster", &args), 0);
    assert_eq!(fs::read(city.out("km.json")).unwrap(), first);
    // no temporary files left behind
    assert!(fs::read_dir(&city.out).unwrap().flatten().all(|e| !e.file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn grid_single_cell_and_resume() {
    let city = City::new("3");
    let one = ["--rho1", "0.3", "--k1", "6", "--k2", "3", "--n-outer", "2"];
    assert_eq!(city.run("validate-params", &one), 0);
    let rows = data_lines(&city.out("grid.tsv"));
    // header plus the seven metrics of the single cell
    assert_eq!(rows.len(), 1 + 7);

    let grid = ["--rho1", "0.1,0.3", "--k1", "6,8", "--k2", "3", "--n-outer", "2"];
    assert_eq!(city.run("validate-params", &grid), 0);
    let full = fs::read_to_string(city.out("grid.tsv")).unwrap();
    let ckpt = city.out("grid.checkpoint.jsonl");
    assert_eq!(fs::read_to_string(&ckpt).unwrap().lines().count(), 1 + 4);

    // simulate an interruption after two cells, plus a torn line
    let lines: Vec<String> = fs::read_to_string(&ckpt).unwrap().lines().take(3).map(String::from).collect();
    fs::write(&ckpt, lines.join("\n") + "\n{\"cell\":").unwrap();
    assert_eq!(city.run("validate-params", &grid), 0);
    assert_eq!(fs::read_to_string(city.out("grid.tsv")).unwrap(), full);
    assert_eq!(fs::read_to_string(&ckpt).unwrap().lines().count(), 1 + 4);
}

#[test]
fn train_and_evaluate() {
    let city = City::new("4");
    assert_eq!(city.run("cluster", &["--k1", "8", "--k2", "4"]), 0);
    let clustering = city.out("adatc.json").to_string_lossy().into_owned();
    let model = city.out("model.json").to_string_lossy().into_owned();

    assert_eq!(city.run("train-lp", &["--epochs", "2", "--no-clustering"]), 0);
    let doc: ModelDocument = read_json(&city.out("model.json")).unwrap();
    assert_eq!(doc.model.network.config.in_dim, 33);

    assert_eq!(city.run("train-lp", &["--epochs", "2", "--clustering", "/nonexistent/adatc.json"]), 1);
    assert_eq!(city.run("train-lp", &["--epochs", "2", "--clustering", &clustering]), 0);
    let doc: ModelDocument = read_json(&city.out("model.json")).unwrap();
    assert_eq!(doc.model.network.config.in_dim, 34);
    assert_eq!(data_lines(&city.out("training_log.tsv")).len(), 1 + 2);

    assert_eq!(city.run("evaluate", &["--model", &model, "--clustering", &clustering]), 0);
    let table = data_lines(&city.out("pe_table.tsv"));
    let intervals: Vec<&str> = table.iter().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(intervals, ["[0-5]", "]5-15]", "]15-30]", "]30-45]", "]45-60]", "]60-75]", "]75-90]", ">90", "inf"]);
    assert!(city.out("reliability.tsv").exists() && city.out("pe_plot.tsv").exists());

    // restricted to the first 40 stations of the previous year
    let prev = city.out("prev.json");
    let ids: Vec<String> = (1..=40).map(|i| format!("S{i:02}")).collect();
    write_json(&prev, &ids).unwrap();
    let prev = prev.to_string_lossy().into_owned();
    assert_eq!(city.run("evaluate", &["--model", &model, "--clustering", &clustering, "--mismatch", "--prev-stations", &prev]), 0);
    let eval: serde_json::Value = read_json(&city.out("eval_mismatch.json")).unwrap();
    assert_eq!(eval["stations"], 40);

    // a checkpoint that never trained is refused
    let mut untrained = doc;
    untrained.model.epochs_trained = 0;
    let bad = city.out("untrained.json");
    write_json(&bad, &untrained).unwrap();
    assert_eq!(city.run("evaluate", &["--model", bad.to_str().unwrap(), "--clustering", &clustering]), 1);

    assert_eq!(run(&["report", "--out", city.out.to_str().unwrap()]), 0);
    let report = fs::read_to_string(city.out("report.tsv")).unwrap();
    assert!(report.contains("adatc+\tclusters\t8"));
    assert!(report.contains("eval_mismatch\tstations\t40"));
}

#[test]
fn missing_inputs_are_fatal() {
    assert_eq!(run(&["cluster", "--trips", "/nonexistent.csv", "--k1", "3"]), 1);
    assert_eq!(run(&["report", "--out", "/nonexistent-dir"]), 1);
}
