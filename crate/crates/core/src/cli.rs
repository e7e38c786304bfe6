//! Command-line front end. Logs go to standard error, results to files in the
//! output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::clustering::{grid_search, AdaTcParams, AffinityForm, GridReport, GridRow, GridSpec};
use crate::error::{Error, Result};
use crate::linkpred::{
    self, EvalReport, LinkHead, LinkModel, LinkPredParams, ModelConfig, PlotAnnotations,
    SplitFractions, TrainConfig,
};
use crate::output::{config_hash, read_json, write_atomic, write_json, ClusteringDocument, RunStamp};
use crate::pipeline::{self, Dataset, InputPaths, Method};
use crate::synth::{generate, SyntheticScenario};

#[derive(Debug, Parser)]
#[command(name = "bikelink", version, about = "Station clustering and trip link prediction for bike sharing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic city (trips, status, weather, distances).
    Synth(SynthArgs),
    /// Cluster stations with AdaTC+ or a baseline.
    Cluster(ClusterArgs),
    /// Grid search over rho1, K1 and K2 with Pareto ranking.
    ValidateParams(ValidateArgs),
    /// Train the link predictor and calibrate it.
    TrainLp(TrainArgs),
    /// Score a trained link predictor on a test split.
    Evaluate(EvaluateArgs),
    /// Summarise the documents found in an output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Trip records (CSV).
    #[arg(long)]
    pub trips: PathBuf,
    /// Station status snapshots (CSV).
    #[arg(long)]
    pub status: Option<PathBuf>,
    /// Hourly weather observations (CSV).
    #[arg(long)]
    pub weather: Option<PathBuf>,
    /// Station-to-station routing distances (CSV matrix).
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long, default_value_t = 2018)]
    pub year: i32,
    /// JSON object renaming trip columns.
    #[arg(long = "schema-map", value_name = "FILE")]
    pub schema_map: Option<PathBuf>,
}

impl InputArgs {
    fn paths(&self) -> InputPaths {
        InputPaths {
            trips: self.trips.clone(),
            status: self.status.clone(),
            weather: self.weather.clone(),
            distances: self.distances.clone(),
            schema: self.schema_map.clone(),
        }
    }

    fn load(&self) -> Result<Dataset> {
        let paths = self.paths();
        for p in paths.files() {
            if !p.exists() {
                return Err(Error::Input(format!("{} does not exist", p.display())));
            }
        }
        pipeline::load(&paths, self.year)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 200)]
    pub stations: usize,
    #[arg(long, default_value_t = 4)]
    pub communities: usize,
    #[arg(long = "n-trips", default_value_t = 50_000)]
    pub n_trips: usize,
    #[arg(long, default_value_t = 2018)]
    pub year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    #[value(name = "adatc+", alias = "adatc")]
    AdaTc,
    Gc,
    Km,
    Sc,
    Nc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::AdaTc => Method::AdaTc,
            MethodArg::Gc => Method::Gc,
            MethodArg::Km => Method::Km,
            MethodArg::Sc => Method::Sc,
            MethodArg::Nc => Method::Nc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum AffinityArg {
    Literal,
    Scaled,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlgoArgs {
    #[arg(long, default_value_t = 0.505)]
    pub rho1: f64,
    #[arg(long, default_value_t = 70)]
    pub k1: usize,
    #[arg(long, default_value_t = 40)]
    pub k2: usize,
    /// Outer AdaTC+ iterations.
    #[arg(long = "n-outer", default_value_t = 10)]
    pub n_outer: usize,
    /// Iteration cap of every K-Medoids run.
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
}

impl AlgoArgs {
    fn params(&self, seed: u64) -> AdaTcParams {
        AdaTcParams {
            rho1: self.rho1,
            k1: self.k1,
            k2: self.k2,
            n_outer: self.n_outer,
            max_iters_gc: self.max_iters,
            max_iters_tc: self.max_iters,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::AdaTc)]
    pub method: MethodArg,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Affinity used by the spectral baseline.
    #[arg(long, value_enum, default_value_t = AffinityArg::Literal)]
    pub affinity: AffinityArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// rho1 values (default: the 11-value grid).
    #[arg(long = "rho1", value_delimiter = ',')]
    pub rho1: Vec<f64>,
    /// K1 values (default: 50..=100 step 10).
    #[arg(long = "k1", value_delimiter = ',')]
    pub k1: Vec<usize>,
    /// K2 values (default: 10..=50 step 10).
    #[arg(long = "k2", value_delimiter = ',')]
    pub k2: Vec<usize>,
    /// Ranking window for rho1, as LO,HI.
    #[arg(long = "rho1-window", value_delimiter = ',', num_args = 2)]
    pub rho1_window: Vec<f64>,
    #[arg(long = "n-outer", default_value_t = 10)]
    pub n_outer: usize,
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
    /// Ignore any checkpoint and start over.
    #[arg(long)]
    pub fresh: bool,
}

impl ValidateArgs {
    fn spec(&self) -> Result<GridSpec> {
        let mut spec = GridSpec::standard();
        if !self.rho1.is_empty() {
            spec.rho1 = self.rho1.clone();
            let lo = self.rho1.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.rho1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spec.rho1_window = (lo.max(spec.rho1_window.0).min(hi), hi.min(spec.rho1_window.1).max(lo));
        }
        if !self.k1.is_empty() {
            spec.k1 = self.k1.clone();
        }
        if !self.k2.is_empty() {
            spec.k2 = self.k2.clone();
        }
        if let [lo, hi] = self.rho1_window[..] {
            if lo > hi {
                return Err(Error::Config(format!("empty rho1 window [{lo}, {hi}]")));
            }
            spec.rho1_window = (lo, hi);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum HeadArg {
    Dot,
    Hadamard,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LpArgs {
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long = "batch-size", default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long = "learning-rate", default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long = "test-frac", default_value_t = 0.1)]
    pub test_frac: f64,
    #[arg(long = "val-frac", default_value_t = 0.1)]
    pub val_frac: f64,
    #[arg(long = "train-frac", default_value_t = 0.1)]
    pub train_frac: f64,
    #[arg(long, value_enum, default_value_t = HeadArg::Dot)]
    pub head: HeadArg,
}

impl LpArgs {
    fn params(&self, seed: u64) -> LinkPredParams {
        LinkPredParams {
            model: ModelConfig {
                head: match self.head {
                    HeadArg::Dot => LinkHead::Dot,
                    HeadArg::Hadamard => LinkHead::Hadamard,
                },
                ..ModelConfig::default()
            },
            train: TrainConfig {
                epochs: self.epochs,
                batch_size: self.batch_size,
                learning_rate: self.learning_rate,
                ..TrainConfig::default()
            },
            fractions: SplitFractions { test: self.test_frac, val: self.val_frac, train: self.train_frac },
            seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(id = "features", required = true, multiple = false, args = ["clustering", "no_clustering"])]
pub struct FeatureArgs {
    /// Clustering document whose labels become the first feature.
    #[arg(long)]
    pub clustering: Option<PathBuf>,
    /// Leave the cluster label out of the features.
    #[arg(long = "no-clustering")]
    pub no_clustering: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub lp: LpArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint written by `train-lp`.
    #[arg(long)]
    pub model: PathBuf,
    /// Clustering document, required when the model uses cluster labels.
    #[arg(long)]
    pub clustering: Option<PathBuf>,
    /// Keep only stations that existed the year before.
    #[arg(long, requires = "prev_stations")]
    pub mismatch: bool,
    /// JSON list of the previous year's stations (or a clustering document).
    #[arg(long = "prev-stations", value_name = "FILE")]
    pub prev_stations: Option<PathBuf>,
    /// Reference line for trips per station in the plot data.
    #[arg(long = "ref-trips", default_value_t = 67.0)]
    pub ref_trips: f64,
    /// Reference line for the error percentage in the plot data.
    #[arg(long = "ref-pe", default_value_t = 12.0)]
    pub ref_pe: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Directory holding the outputs of earlier subcommands.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Checkpoint written by `train-lp`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub stamp: RunStamp,
    pub model: LinkModel,
    pub losses: Vec<f64>,
    pub val_gap_raw: f64,
    pub val_gap_calibrated: f64,
    pub split_sizes: [usize; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalDocument {
    pub stamp: RunStamp,
    pub mismatch: bool,
    pub stations: usize,
    pub report: EvalReport,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Cluster(a) => cmd_cluster(&a),
        Command::ValidateParams(a) => cmd_validate_params(&a),
        Command::TrainLp(a) => cmd_train_lp(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn stamp<T: Serialize>(params: &T, files: &[&Path], seed: u64) -> Result<RunStamp> {
    Ok(RunStamp { config_hash: config_hash(params, files)?, seed })
}

/// Hashed part of a run: everything except where the files live.
#[derive(Serialize)]
struct Hashed<'a, T: Serialize> {
    command: &'a str,
    year: i32,
    params: T,
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let scenario = SyntheticScenario {
        year: a.year,
        ..SyntheticScenario::new(a.common.seed, a.stations, a.communities, a.n_trips)
    };
    let city = generate(&scenario)?;
    out_dir(&a.common.out)?;
    city.write_files(&a.common.out)?;
    let stamp = stamp(&Hashed { command: "synth", year: a.year, params: &scenario }, &[], a.common.seed)?;
    write_json(&a.common.out.join("scenario.json"), &(stamp, &scenario))?;
    info!(
        "wrote {} trips over {} stations to {}",
        city.trips.rows.len(),
        city.stations.len(),
        a.common.out.display()
    );
    Ok(())
}

/// File name of a clustering document.
pub fn clustering_file(method: Method) -> &'static str {
    match method {
        Method::AdaTc => "adatc.json",
        Method::Gc => "gc.json",
        Method::Km => "km.json",
        Method::Sc => "sc.json",
        Method::Nc => "nc.json",
    }
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    let method = Method::from(a.method);
    if method == Method::Nc {
        return Err(Error::Config("nc has no clustering output".into()));
    }
    let params = a.algo.params(a.common.seed);
    let affinity = match a.affinity {
        AffinityArg::Literal => AffinityForm::Literal,
        AffinityArg::Scaled => AffinityForm::Scaled,
    };
    let paths = a.input.paths();
    let stamp = stamp(
        &Hashed { command: "cluster", year: a.input.year, params: (method, &params, affinity) },
        &paths.files(),
        a.common.seed,
    )?;
    let data = a.input.load()?;
    let prepared = pipeline::prepare_clustering(&data)?;
    let outcome = pipeline::run_method(&prepared.input, method, &params, affinity)?;
    info!(
        "{method}: {} clusters after {} iteration(s), converged = {}",
        outcome.clustering.k(),
        outcome.iterations,
        outcome.converged
    );

    out_dir(&a.common.out)?;
    let doc = ClusteringDocument::new(
        stamp.clone(),
        &method.to_string(),
        params,
        &prepared.ids,
        &outcome.clustering,
        outcome.reports.clone(),
        outcome.iterations,
        outcome.converged,
    );
    let file = clustering_file(method);
    write_json(&a.common.out.join(file), &doc)?;

    let mut tsv = stamp.header();
    tsv.push_str("iteration\tmetric\tvalue\n");
    for (i, r) in outcome.reports.iter().enumerate() {
        for (name, v) in r.metrics() {
            let _ = writeln!(tsv, "{}\t{name}\t{v:.6}", i + 1);
        }
    }
    let stem = file.trim_end_matches(".json");
    write_atomic(&a.common.out.join(format!("{stem}_quality.tsv")), tsv.as_bytes())?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config_hash: String,
}

fn read_checkpoint(path: &Path, hash: &str) -> Result<Vec<GridRow>> {
    let Ok(f) = fs::File::open(path) else {
        return Ok(Vec::new());
    };
    let mut lines = BufReader::new(f).lines();
    let header: Option<CheckpointHeader> = lines
        .next()
        .and_then(|l| l.ok())
        .and_then(|l| serde_json::from_str(&l).ok());
    if header.is_none_or(|h| h.config_hash != hash) {
        warn!("{} belongs to another configuration; starting over", path.display());
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        // a torn last line from an interrupted run is dropped
        match serde_json::from_str::<GridRow>(&line) {
            Ok(r) => rows.push(r),
            Err(_) => warn!("skipping unreadable checkpoint line"),
        }
    }
    Ok(rows)
}

pub fn cmd_validate_params(a: &ValidateArgs) -> Result<()> {
    let spec = a.spec()?;
    let base = AdaTcParams {
        n_outer: a.n_outer,
        max_iters_gc: a.max_iters,
        max_iters_tc: a.max_iters,
        seed: a.common.seed,
        ..AdaTcParams::default()
    };
    let paths = a.input.paths();
    let stamp = stamp(
        &Hashed { command: "validate-params", year: a.input.year, params: (&spec, &base) },
        &paths.files(),
        a.common.seed,
    )?;
    let data = a.input.load()?;
    let prepared = pipeline::prepare_clustering(&data)?;
    out_dir(&a.common.out)?;

    let ckpt = a.common.out.join("grid.checkpoint.jsonl");
    let done = if a.fresh { Vec::new() } else { read_checkpoint(&ckpt, &stamp.config_hash)? };
    let cells = spec.cells().len();
    info!("{cells} grid cells, {} already done", done.len());

    // rewrite the checkpoint with what survived, then append as cells finish
    let mut text = serde_json::to_string(&CheckpointHeader { config_hash: stamp.config_hash.clone() })?;
    text.push('\n');
    for r in &done {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_atomic(&ckpt, text.as_bytes())?;
    let file = fs::OpenOptions::new().append(true).open(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
    let sink = Mutex::new(file);
    let report = grid_search(&prepared.input, &spec, &base, &done, |row| {
        let Ok(line) = serde_json::to_string(row) else { return };
        let mut f = sink.lock().expect("checkpoint lock");
        if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
            warn!("checkpoint write failed: {e}");
        }
    })?;

    let mut tsv = stamp.header();
    tsv.push_str(&report.to_tsv());
    write_atomic(&a.common.out.join("grid.tsv"), tsv.as_bytes())?;
    write_atomic(&a.common.out.join("ranking.tsv"), ranking_tsv(&stamp, &report).as_bytes())?;
    write_json(&a.common.out.join("grid.json"), &(stamp, &report))?;
    Ok(())
}

fn ranking_tsv(stamp: &RunStamp, report: &GridReport) -> String {
    let mut s = stamp.header();
    if let Some(i) = report.mid_k1 {
        let c = report.rows[i].cell;
        let _ = writeln!(s, "# mid-K1 front candidate: rho1={} k1={} k2={}", c.rho1, c.k1, c.k2);
    }
    s.push_str("rank\trho1\tk1\tk2\tagd_inner\tacod_inner\tagd_inter\tacod_inter\ttdf\n");
    for i in report.ranking() {
        let (row, r) = (&report.rows[i], report.rows[i].report.expect("ranked rows have reports"));
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            report.ranks[i].expect("ranked"),
            row.cell.rho1,
            row.cell.k1,
            row.cell.k2,
            r.agd_inner,
            r.acod_inner,
            r.agd_inter,
            r.acod_inter,
            r.tdf()
        );
    }
    s
}

fn labels(data: &Dataset, clustering: Option<&Path>) -> Result<Option<Vec<usize>>> {
    let Some(path) = clustering else { return Ok(None) };
    if !path.exists() {
        return Err(Error::Input(format!("clustering file {} does not exist", path.display())));
    }
    let doc: ClusteringDocument = read_json(path)?;
    Ok(Some(doc.labels_for(&data.ids())?))
}

pub fn cmd_train_lp(a: &TrainArgs) -> Result<()> {
    let params = a.lp.params(a.common.seed);
    let paths = a.input.paths();
    let mut files = paths.files();
    if let Some(c) = &a.features.clustering {
        if !c.exists() {
            return Err(Error::Input(format!("clustering file {} does not exist", c.display())));
        }
        files.push(c);
    }
    let stamp = stamp(
        &Hashed { command: "train-lp", year: a.input.year, params: (&params, a.features.clustering.is_some()) },
        &files,
        a.common.seed,
    )?;
    let data = a.input.load()?;
    let labels = labels(&data, a.features.clustering.as_deref())?;
    let graph = pipeline::transition_graph(&data);
    let raw = pipeline::features(&data, labels.as_deref())?;
    info!("{} nodes, {} links, {} features", graph.len(), graph.edge_count(), raw.dim());
    let (model, split, losses, [val_gap_raw, val_gap_calibrated]) = linkpred::fit(&graph, &raw, &params)?;
    info!("validation reliability gap {val_gap_raw:.4} raw, {val_gap_calibrated:.4} calibrated");

    out_dir(&a.common.out)?;
    let mut log = stamp.header();
    log.push_str("epoch\tloss\n");
    for (e, l) in losses.iter().enumerate() {
        let _ = writeln!(log, "{}\t{l:.6}", e + 1);
    }
    write_atomic(&a.common.out.join("training_log.tsv"), log.as_bytes())?;
    let doc = ModelDocument {
        stamp,
        model,
        losses,
        val_gap_raw,
        val_gap_calibrated,
        split_sizes: [split.test.len(), split.val.len(), split.train.len()],
    };
    write_json(&a.common.out.join("model.json"), &doc)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    if !a.model.exists() {
        return Err(Error::Input(format!("model file {} does not exist", a.model.display())));
    }
    let doc: ModelDocument = read_json(&a.model)?;
    if !doc.model.is_trained() {
        return Err(Error::Input("checkpoint holds an untrained model".into()));
    }
    if doc.model.with_cluster && a.clustering.is_none() {
        return Err(Error::Input("the model uses cluster labels; pass --clustering".into()));
    }
    let annotations = PlotAnnotations { mean_trips: a.ref_trips, error_pct: a.ref_pe };
    let paths = a.input.paths();
    let mut files = paths.files();
    files.push(&a.model);
    files.extend(a.clustering.as_deref());
    if a.mismatch {
        files.extend(a.prev_stations.as_deref());
    }
    let stamp = stamp(
        &Hashed { command: "evaluate", year: a.input.year, params: (a.mismatch, annotations) },
        &files,
        a.common.seed,
    )?;

    let mut data = a.input.load()?;
    if a.mismatch {
        let prev = a.prev_stations.as_deref().expect("clap enforces --prev-stations");
        let previous = pipeline::read_station_list(prev)?;
        data = pipeline::restrict_to_prior_year(&data, &previous)?;
    }
    let clustering = if doc.model.with_cluster { a.clustering.as_deref() } else { None };
    let labels = labels(&data, clustering)?;
    let graph = pipeline::transition_graph(&data);
    let raw = pipeline::features(&data, labels.as_deref())?;
    let report = linkpred::evaluate_model(&doc.model, &graph, &raw, annotations)?;
    info!(
        "accuracy {:.4}; mean PE {:.2}% (origin), {:.2}% (destination)",
        report.accuracy, report.origin.mean, report.destination.mean
    );

    out_dir(&a.common.out)?;
    let out = &a.common.out;
    let header = stamp.header();
    write_atomic(&out.join("pe_table.tsv"), format!("{header}{}", report.pe_table_tsv()).as_bytes())?;
    write_atomic(&out.join("pe_plot.tsv"), format!("{header}{}", report.plot_tsv()).as_bytes())?;
    let mut rel = header.clone();
    rel.push_str("lower\tupper\tcount\tmean_probability\tfrequency\n");
    for b in &report.reliability {
        let _ = writeln!(
            rel,
            "{:.2}\t{:.2}\t{}\t{:.6}\t{:.6}",
            b.lower, b.upper, b.count, b.mean_probability, b.frequency
        );
    }
    write_atomic(&out.join("reliability.tsv"), rel.as_bytes())?;
    let name = if a.mismatch { "eval_mismatch.json" } else { "eval.json" };
    write_json(
        &out.join(name),
        &EvalDocument { stamp, mismatch: a.mismatch, stations: graph.len(), report },
    )
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    if !a.out.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", a.out.display())));
    }
    let mut s = String::from("section\tkey\tvalue\n");
    let mut found = 0;
    for method in [Method::AdaTc, Method::Gc, Method::Km, Method::Sc] {
        let path = a.out.join(clustering_file(method));
        if !path.exists() {
            continue;
        }
        found += 1;
        let doc: ClusteringDocument = read_json(&path)?;
        let _ = writeln!(s, "{method}\tconfig_hash\t{}", doc.stamp.config_hash);
        let _ = writeln!(s, "{method}\tseed\t{}", doc.stamp.seed);
        let _ = writeln!(s, "{method}\tclusters\t{}", doc.k);
        let _ = writeln!(s, "{method}\titerations\t{}", doc.iterations);
        if let Some(r) = doc.reports.last() {
            for (name, v) in r.metrics() {
                let _ = writeln!(s, "{method}\t{name}\t{v:.6}");
            }
        }
    }
    let grid = a.out.join("grid.json");
    if grid.exists() {
        found += 1;
        let (stamp, report): (RunStamp, GridReport) = read_json(&grid)?;
        let _ = writeln!(s, "grid\tconfig_hash\t{}", stamp.config_hash);
        let _ = writeln!(s, "grid\tcells\t{}", report.rows.len());
        let front = report.ranks.iter().filter(|r| **r == Some(1)).count();
        let _ = writeln!(s, "grid\tfront_size\t{front}");
        if let Some(i) = report.mid_k1 {
            let c = report.rows[i].cell;
            let _ = writeln!(s, "grid\tmid_k1\trho1={} k1={} k2={}", c.rho1, c.k1, c.k2);
        }
    }
    let model = a.out.join("model.json");
    if model.exists() {
        found += 1;
        let doc: ModelDocument = read_json(&model)?;
        let _ = writeln!(s, "model\tconfig_hash\t{}", doc.stamp.config_hash);
        let _ = writeln!(s, "model\tfeatures\t{}", doc.model.network.config.in_dim);
        let _ = writeln!(s, "model\tepochs\t{}", doc.model.epochs_trained);
        if let Some(l) = doc.losses.last() {
            let _ = writeln!(s, "model\tfinal_loss\t{l:.6}");
        }
        let _ = writeln!(s, "model\tval_gap_raw\t{:.6}", doc.val_gap_raw);
        let _ = writeln!(s, "model\tval_gap_calibrated\t{:.6}", doc.val_gap_calibrated);
    }
    for name in ["eval.json", "eval_mismatch.json"] {
        let path = a.out.join(name);
        if !path.exists() {
            continue;
        }
        found += 1;
        let doc: EvalDocument = read_json(&path)?;
        let section = name.trim_end_matches(".json");
        let r = &doc.report;
        let _ = writeln!(s, "{section}\tconfig_hash\t{}", doc.stamp.config_hash);
        let _ = writeln!(s, "{section}\tstations\t{}", doc.stations);
        let _ = writeln!(s, "{section}\taccuracy\t{:.6}", r.accuracy);
        let _ = writeln!(s, "{section}\torigin_mean_pe\t{:.4}", r.origin.mean);
        let _ = writeln!(s, "{section}\tdestination_mean_pe\t{:.4}", r.destination.mean);
        let _ = writeln!(s, "{section}\treliability_gap\t{:.6}", r.reliability_gap);
    }
    if found == 0 {
        return Err(Error::Input(format!("no outputs found in {}", a.out.display())));
    }
    write_atomic(&a.out.join("report.tsv"), s.as_bytes())?;
    info!("summarised {found} document(s) into {}", a.out.join("report.tsv").display());
    Ok(())
}
