use log::info;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair_plans, Example, GraphSage, TransitionGraph};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Update only the link head.
    pub head_only: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            head_only: false,
            seed: 0,
        }
    }
}

/// Adam moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -= cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Mean loss and gradient of a batch, neighbourhoods drawn per example from
/// `batch_seed`.
pub fn batch_loss_grad(
    model: &GraphSage,
    g: &TransitionGraph,
    x: &[Vec<f64>],
    batch: &[Example],
    batch_seed: u64,
) -> (f64, Vec<f64>) {
    let n = model.num_params();
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (pa, pb) = pair_plans(g, e.a, e.b, model.config.samples, seed::derive(batch_seed, &[i as u64]));
            let mut grad = vec![0.0; n];
            let loss = model.example_grad(x, &pa, &pb, e.label, &mut grad);
            (loss, grad)
        })
        .collect();
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut grad = vec![0.0; n];
    let mut loss = 0.0;
    for (l, gr) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(gr) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|v| *v *= scale);
    (loss * scale, grad)
}

/// Mini-batch Adam on binary cross-entropy. Returns the mean loss per epoch.
pub fn train(
    model: &mut GraphSage,
    g: &TransitionGraph,
    x: &[Vec<f64>],
    examples: &[Example],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(Error::Input("no training examples".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Config("epochs and batch size must be positive".into()));
    }
    let mut adam = Adam::new(model.num_params());
    let head = model.head_range();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = seed::rng(cfg.seed, &[8]);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Example> = chunk.iter().map(|&i| examples[i]).collect();
            let (loss, mut grad) =
                batch_loss_grad(model, g, x, &batch, seed::derive(cfg.seed, &[6, epoch as u64, b as u64]));
            if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite loss {loss} at epoch {epoch}, batch {b}"
                )));
            }
            if cfg.head_only {
                for (i, v) in grad.iter_mut().enumerate() {
                    if !head.contains(&i) {
                        *v = 0.0;
                    }
                }
            }
            adam.step(&mut model.params, &grad, cfg);
            total += loss * batch.len() as f64;
        }
        let mean = total / examples.len() as f64;
        info!("epoch {epoch}: loss {mean:.5}");
        losses.push(mean);
    }
    Ok(losses)
}

/// Raw link probabilities, neighbourhoods drawn from `seed` per example.
pub fn predict_examples(
    model: &GraphSage,
    g: &TransitionGraph,
    x: &[Vec<f64>],
    examples: &[Example],
    seed: u64,
) -> Vec<f64> {
    examples
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let (pa, pb) = pair_plans(g, e.a, e.b, model.config.samples, seed::derive(seed, &[5, i as u64]));
            model.predict(x, &pa, &pb)
        })
        .collect()
}
