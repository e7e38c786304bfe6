//! Link prediction on the station transition graph.
//!
//! [`fit_and_evaluate`] runs the whole procedure: nested edge split with
//! DFS negatives, training on the training graph, isotonic calibration on
//! the validation graph and scoring on the test graph.

mod calibrate;
mod evaluate;
mod features;
mod graph;
mod model;
mod split;
mod train;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calibrate::{fit_calibrator, reliability_gap, reliability_table, IsotonicCalibrator, ReliabilityBin};
pub use evaluate::{
    evaluate, pe_bin, prediction_error, EvalReport, PeSummary, PlotAnnotations, Role, StationError,
    PE_BIN_LABELS,
};
pub use features::{
    departure_period, feature_len, node_features, season, FeatureTable, Standardizer, PERIODS,
    SEASONS, WEEKDAYS,
};
pub use graph::TransitionGraph;
pub use model::{pair_plans, sample_plan, sigmoid, GraphSage, LinkHead, ModelConfig, NodePlan};
pub use split::{dfs_candidate, sample_negative, split_edges, EdgeSplit, Example, SplitFractions};
pub use train::{batch_loss_grad, predict_examples, train, Adam, TrainConfig};

/// Everything needed to score new pairs: network, feature scaling and
/// calibrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub network: GraphSage,
    pub standardizer: Standardizer,
    pub calibrator: Option<IsotonicCalibrator>,
    pub with_cluster: bool,
    pub fractions: SplitFractions,
    pub train: TrainConfig,
    pub seed: u64,
    pub epochs_trained: usize,
}

impl LinkModel {
    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    /// Calibrated probabilities of `examples` embedded in `g`.
    pub fn predict(&self, g: &TransitionGraph, x: &[Vec<f64>], examples: &[Example], seed: u64) -> Vec<f64> {
        let raw = predict_examples(&self.network, g, x, examples, seed);
        match &self.calibrator {
            Some(c) => c.apply_all(&raw),
            None => raw,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkPredParams {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub fractions: SplitFractions,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPredRun {
    pub model: LinkModel,
    pub losses: Vec<f64>,
    pub val_gap_raw: f64,
    pub val_gap_calibrated: f64,
    pub report: EvalReport,
    /// Examples per split: test, validation, training.
    pub split_sizes: [usize; 3],
}

/// Seeds of the individual stages under one master seed.
pub mod seeds {
    use crate::seed::derive;

    pub fn split(master: u64) -> u64 {
        derive(master, &[10])
    }
    pub fn init(master: u64) -> u64 {
        derive(master, &[11])
    }
    pub fn train(master: u64) -> u64 {
        derive(master, &[12])
    }
    pub fn validate(master: u64) -> u64 {
        derive(master, &[13])
    }
    pub fn test(master: u64) -> u64 {
        derive(master, &[14])
    }
}

/// Trains on an edge split of `graph` with standardised `raw` features.
pub fn fit(graph: &TransitionGraph, raw: &FeatureTable, params: &LinkPredParams) -> Result<(LinkModel, EdgeSplit, Vec<f64>, [f64; 2])> {
    if raw.rows.len() != graph.len() {
        return Err(Error::Input(format!(
            "{} feature rows for {} nodes",
            raw.rows.len(),
            graph.len()
        )));
    }
    let standardizer = Standardizer::fit(&raw.rows)?;
    let x = standardizer.apply_all(&raw.rows);
    let split = split_edges(graph, params.fractions, seeds::split(params.seed))?;
    info!(
        "split: {} test, {} validation, {} training examples",
        split.test.len(),
        split.val.len(),
        split.train.len()
    );
    let config = ModelConfig { in_dim: raw.dim(), ..params.model };
    let mut network = GraphSage::init(config, seeds::init(params.seed))?;
    let tc = TrainConfig { seed: seeds::train(params.seed), ..params.train };
    let losses = train(&mut network, &split.train_graph, &x, &split.train, &tc)?;

    let val_raw = predict_examples(&network, &split.val_graph, &x, &split.val, seeds::validate(params.seed));
    let val_labels: Vec<bool> = split.val.iter().map(|e| e.label).collect();
    let calibrator = fit_calibrator(&val_raw, &val_labels)?;
    let gaps = [
        reliability_gap(&reliability_table(&val_raw, &val_labels, 10)),
        reliability_gap(&reliability_table(&calibrator.apply_all(&val_raw), &val_labels, 10)),
    ];
    let model = LinkModel {
        network,
        standardizer,
        calibrator: Some(calibrator),
        with_cluster: raw.with_cluster,
        fractions: params.fractions,
        train: tc,
        seed: params.seed,
        epochs_trained: tc.epochs,
    };
    Ok((model, split, losses, gaps))
}

pub fn fit_and_evaluate(
    graph: &TransitionGraph,
    raw: &FeatureTable,
    params: &LinkPredParams,
    annotations: PlotAnnotations,
) -> Result<LinkPredRun> {
    let (model, split, losses, [val_gap_raw, val_gap_calibrated]) = fit(graph, raw, params)?;
    let x = model.standardizer.apply_all(&raw.rows);
    let probs = model.predict(&split.test_graph, &x, &split.test, seeds::test(params.seed));
    let report = evaluate(graph, &split.test, &probs, annotations)?;
    info!("test accuracy {:.4}", report.accuracy);
    Ok(LinkPredRun {
        model,
        losses,
        val_gap_raw,
        val_gap_calibrated,
        report,
        split_sizes: [split.test.len(), split.val.len(), split.train.len()],
    })
}

/// Scores a trained model on the test split of `graph`, which may be a
/// different year's graph than the one it was trained on.
pub fn evaluate_model(
    model: &LinkModel,
    graph: &TransitionGraph,
    raw: &FeatureTable,
    annotations: PlotAnnotations,
) -> Result<EvalReport> {
    if !model.is_trained() {
        return Err(Error::Input("checkpoint holds an untrained model".into()));
    }
    if raw.with_cluster != model.with_cluster || raw.dim() != model.network.config.in_dim {
        return Err(Error::Input(format!(
            "features have {} entries, model expects {}",
            raw.dim(),
            model.network.config.in_dim
        )));
    }
    let x = model.standardizer.apply_all(&raw.rows);
    let split = split_edges(graph, model.fractions, seeds::split(model.seed))?;
    let probs = model.predict(&split.test_graph, &x, &split.test, seeds::test(model.seed));
    evaluate(graph, &split.test, &probs, annotations)
}
