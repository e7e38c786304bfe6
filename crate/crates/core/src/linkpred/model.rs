//! Two-layer mean-aggregator embedder with a scalar link head.
//!
//! Each layer maps `concat(self, mean of sampled neighbours)` through one
//! dense matrix. The first layer is followed by ReLU, the second by unit-norm
//! scaling. Gradients are computed by hand.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::TransitionGraph;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkHead {
    /// `sigmoid(a * <z_h, z_k> + b)`.
    #[default]
    Dot,
    /// `sigmoid(w . (z_h * z_k) + b)`.
    Hadamard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_dim: usize,
    pub widths: [usize; 2],
    /// Neighbours sampled at hop 1 and hop 2.
    pub samples: [usize; 2],
    pub head: LinkHead,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { in_dim: 34, widths: [32, 32], samples: [20, 10], head: LinkHead::Dot }
    }
}

/// Offsets of the parameter blocks in the flat vector.
#[derive(Clone, Copy, Debug)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    head: usize,
    end: usize,
}

impl Layout {
    fn of(c: &ModelConfig) -> Self {
        let [h1, h2] = c.widths;
        let w1 = 0;
        let b1 = w1 + h1 * 2 * c.in_dim;
        let w2 = b1 + h1;
        let b2 = w2 + h2 * 2 * h1;
        let head = b2 + h2;
        let end = head
            + match c.head {
                LinkHead::Dot => 2,
                LinkHead::Hadamard => h2 + 1,
            };
        Layout { w1, b1, w2, b2, head, end }
    }
}

/// Sampled computation tree of one target node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePlan {
    pub node: usize,
    pub hop1: Vec<usize>,
    /// Neighbours of each hop-1 node.
    pub hop2: Vec<Vec<usize>>,
}

fn sample_neighbors<R: Rng>(g: &TransitionGraph, v: usize, size: usize, rng: &mut R) -> Vec<usize> {
    let nb = g.neighbors(v);
    if nb.len() <= size {
        return nb.to_vec();
    }
    let mut picked: Vec<usize> = sample(rng, nb.len(), size).into_iter().map(|i| nb[i]).collect();
    picked.sort_unstable();
    picked
}

/// All neighbours when the degree fits the sample size, otherwise a sample
/// without replacement.
pub fn sample_plan<R: Rng>(g: &TransitionGraph, node: usize, samples: [usize; 2], rng: &mut R) -> NodePlan {
    let hop1 = sample_neighbors(g, node, samples[0], rng);
    let hop2 = hop1.iter().map(|&u| sample_neighbors(g, u, samples[1], rng)).collect();
    NodePlan { node, hop1, hop2 }
}

/// Plans for both ends of a pair, drawn from a per-example seed.
pub fn pair_plans(g: &TransitionGraph, a: usize, b: usize, samples: [usize; 2], seed: u64) -> (NodePlan, NodePlan) {
    let mut rng = seed::rng(seed, &[]);
    let pa = sample_plan(g, a, samples, &mut rng);
    let pb = sample_plan(g, b, samples, &mut rng);
    (pa, pb)
}

fn mean_of(rows: impl Iterator<Item = impl AsRef<[f64]>>, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    let mut count = 0usize;
    for r in rows {
        for (o, x) in out.iter_mut().zip(r.as_ref()) {
            *o += x;
        }
        count += 1;
    }
    if count > 0 {
        out.iter_mut().for_each(|o| *o /= count as f64);
    }
    out
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// `W x + b` for row-major `W` with `b.len()` rows.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(r, &bias)| bias + w[r * x.len()..(r + 1) * x.len()].iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
        .collect()
}

/// Intermediate values of one node embedding, kept for the backward pass.
struct Trace {
    c1_self: Vec<f64>,
    pre1_self: Vec<f64>,
    c1_nb: Vec<Vec<f64>>,
    pre1_nb: Vec<Vec<f64>>,
    c2: Vec<f64>,
    norm: f64,
    z: Vec<f64>,
}

const NORM_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSage {
    pub config: ModelConfig,
    pub params: Vec<f64>,
}

impl GraphSage {
    /// Glorot-uniform weights, zero biases, head at `a = 1, b = 0`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        if config.in_dim == 0 || config.widths.contains(&0) {
            return Err(Error::Config(format!("degenerate model shape {config:?}")));
        }
        let l = Layout::of(&config);
        let mut params = vec![0.0; l.end];
        let mut rng = seed::rng(seed, &[7]);
        let [h1, h2] = config.widths;
        let mut glorot = |block: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            block.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
        };
        glorot(&mut params[l.w1..l.b1], 2 * config.in_dim, h1);
        glorot(&mut params[l.w2..l.b2], 2 * h1, h2);
        match config.head {
            LinkHead::Dot => params[l.head] = 1.0,
            LinkHead::Hadamard => glorot(&mut params[l.head..l.end - 1], h2, 1),
        }
        Ok(GraphSage { config, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        let l = Layout::of(&config);
        if params.len() != l.end {
            return Err(Error::Input(format!(
                "{} parameters for a model needing {}",
                params.len(),
                l.end
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite model parameter".into()));
        }
        Ok(GraphSage { config, params })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Range of the link-head parameters inside `params`.
    pub fn head_range(&self) -> std::ops::Range<usize> {
        let l = Layout::of(&self.config);
        l.head..l.end
    }

    fn trace(&self, x: &[Vec<f64>], plan: &NodePlan) -> Trace {
        let l = Layout::of(&self.config);
        let f = self.config.in_dim;
        let [h1, _] = self.config.widths;
        let p = &self.params;
        let (w1, b1) = (&p[l.w1..l.b1], &p[l.b1..l.w2]);
        let (w2, b2) = (&p[l.w2..l.b2], &p[l.b2..l.head]);

        let c1_self = concat(&x[plan.node], &mean_of(plan.hop1.iter().map(|&u| &x[u]), f));
        let pre1_self = affine(w1, b1, &c1_self);
        let mut c1_nb = Vec::with_capacity(plan.hop1.len());
        let mut pre1_nb = Vec::with_capacity(plan.hop1.len());
        for (&u, nbrs) in plan.hop1.iter().zip(&plan.hop2) {
            let c = concat(&x[u], &mean_of(nbrs.iter().map(|&w| &x[w]), f));
            pre1_nb.push(affine(w1, b1, &c));
            c1_nb.push(c);
        }
        let relu = |v: &[f64]| v.iter().map(|&a| a.max(0.0)).collect::<Vec<_>>();
        let h1_self = relu(&pre1_self);
        let m = mean_of(pre1_nb.iter().map(|p| relu(p)), h1);
        let c2 = concat(&h1_self, &m);
        let h2 = affine(w2, b2, &c2);
        let norm = h2.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_FLOOR);
        let z = h2.iter().map(|v| v / norm).collect();
        Trace { c1_self, pre1_self, c1_nb, pre1_nb, c2, norm, z }
    }

    /// Unit-norm embedding of the plan's target node.
    pub fn embed(&self, x: &[Vec<f64>], plan: &NodePlan) -> Vec<f64> {
        self.trace(x, plan).z
    }

    /// Embeddings of both ends of a pair, neighbourhoods drawn from `seed`.
    pub fn embed_pair(&self, g: &TransitionGraph, x: &[Vec<f64>], pair: (usize, usize), seed: u64) -> (Vec<f64>, Vec<f64>) {
        let (pa, pb) = pair_plans(g, pair.0, pair.1, self.config.samples, seed);
        (self.embed(x, &pa), self.embed(x, &pb))
    }

    pub fn logit(&self, zh: &[f64], zk: &[f64]) -> f64 {
        let head = &self.params[self.head_range()];
        match self.config.head {
            LinkHead::Dot => head[0] * dot(zh, zk) + head[1],
            LinkHead::Hadamard => {
                let (w, b) = head.split_at(head.len() - 1);
                b[0] + zh.iter().zip(zk).zip(w).map(|((a, c), w)| a * c * w).sum::<f64>()
            }
        }
    }

    /// Link probability of two embeddings.
    pub fn score_link(&self, zh: &[f64], zk: &[f64]) -> f64 {
        sigmoid(self.logit(zh, zk))
    }

    pub fn predict(&self, x: &[Vec<f64>], pa: &NodePlan, pb: &NodePlan) -> f64 {
        self.score_link(&self.embed(x, pa), &self.embed(x, pb))
    }

    /// Binary cross-entropy of one example and its gradient, accumulated
    /// into `grad`.
    pub fn example_grad(&self, x: &[Vec<f64>], pa: &NodePlan, pb: &NodePlan, label: bool, grad: &mut [f64]) -> f64 {
        let ta = self.trace(x, pa);
        let tb = self.trace(x, pb);
        let logit = self.logit(&ta.z, &tb.z);
        let y = if label { 1.0 } else { 0.0 };
        let loss = logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
        let g = sigmoid(logit) - y;

        let l = Layout::of(&self.config);
        let head = &self.params[l.head..l.end];
        let (dza, dzb): (Vec<f64>, Vec<f64>) = match self.config.head {
            LinkHead::Dot => {
                grad[l.head] += g * dot(&ta.z, &tb.z);
                grad[l.head + 1] += g;
                let a = head[0];
                (tb.z.iter().map(|v| a * g * v).collect(), ta.z.iter().map(|v| a * g * v).collect())
            }
            LinkHead::Hadamard => {
                let d2 = ta.z.len();
                for i in 0..d2 {
                    grad[l.head + i] += g * ta.z[i] * tb.z[i];
                }
                grad[l.end - 1] += g;
                (
                    (0..d2).map(|i| g * head[i] * tb.z[i]).collect(),
                    (0..d2).map(|i| g * head[i] * ta.z[i]).collect(),
                )
            }
        };
        self.backward(&ta, &dza, grad);
        self.backward(&tb, &dzb, grad);
        loss
    }

    fn backward(&self, t: &Trace, dz: &[f64], grad: &mut [f64]) {
        let l = Layout::of(&self.config);
        let [h1, _] = self.config.widths;
        let w2 = &self.params[l.w2..l.b2];

        let zdz = dot(&t.z, dz);
        let dh2: Vec<f64> = if t.norm > NORM_FLOOR {
            dz.iter().zip(&t.z).map(|(d, z)| (d - z * zdz) / t.norm).collect()
        } else {
            dz.iter().map(|d| d / t.norm).collect()
        };
        let c2n = t.c2.len();
        let mut dc2 = vec![0.0; c2n];
        for (r, &d) in dh2.iter().enumerate() {
            grad[l.b2 + r] += d;
            let row = &w2[r * c2n..(r + 1) * c2n];
            for j in 0..c2n {
                grad[l.w2 + r * c2n + j] += d * t.c2[j];
                dc2[j] += row[j] * d;
            }
        }
        let mut layer1 = |c1: &[f64], pre: &[f64], dh1: &[f64]| {
            let cn = c1.len();
            for r in 0..h1 {
                if pre[r] <= 0.0 {
                    continue;
                }
                let d = dh1[r];
                grad[l.b1 + r] += d;
                let off = l.w1 + r * cn;
                for j in 0..cn {
                    grad[off + j] += d * c1[j];
                }
            }
        };
        layer1(&t.c1_self, &t.pre1_self, &dc2[..h1]);
        if !t.c1_nb.is_empty() {
            let k = t.c1_nb.len() as f64;
            let dm: Vec<f64> = dc2[h1..].iter().map(|v| v / k).collect();
            for (c, pre) in t.c1_nb.iter().zip(&t.pre1_nb) {
                layer1(c, pre, &dm);
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
