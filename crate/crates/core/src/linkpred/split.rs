use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TransitionGraph;
use crate::error::{Error, Result};
use crate::seed;

/// A labelled node pair, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub a: usize,
    pub b: usize,
    pub label: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub test: f64,
    pub val: f64,
    pub train: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { test: 0.1, val: 0.1, train: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct EdgeSplit {
    pub test_graph: TransitionGraph,
    pub val_graph: TransitionGraph,
    pub train_graph: TransitionGraph,
    pub test: Vec<Example>,
    pub val: Vec<Example>,
    pub train: Vec<Example>,
}

const DFS_RETRIES: usize = 100;
const DEPTHS: std::ops::RangeInclusive<usize> = 2..=5;

/// Target reached by a randomised depth-first walk of exactly `depth` steps
/// from `src` that is neither adjacent to `src` nor excluded.
pub fn dfs_candidate<R: Rng>(
    g: &TransitionGraph,
    src: usize,
    depth: usize,
    rng: &mut R,
    exclude: &HashSet<(usize, usize)>,
) -> Option<usize> {
    let mut visited = vec![false; g.len()];
    visited[src] = true;
    let mut stack = vec![(src, 0)];
    while let Some((v, d)) = stack.pop() {
        if d == depth {
            let pair = (src.min(v), src.max(v));
            if !g.has_edge(src, v) && !exclude.contains(&pair) {
                return Some(v);
            }
            continue;
        }
        let mut next: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| !visited[u]).collect();
        next.shuffle(rng);
        for u in next {
            visited[u] = true;
            stack.push((u, d + 1));
        }
    }
    None
}

/// One negative pair: DFS at a random depth from a uniform source, with
/// bounded retries before falling back to a uniform non-edge.
pub fn sample_negative<R: Rng>(
    g: &TransitionGraph,
    rng: &mut R,
    exclude: &HashSet<(usize, usize)>,
) -> Result<(usize, usize)> {
    let n = g.len();
    if g.non_edge_count() == 0 {
        return Err(Error::Input("no negative examples exist: the graph is complete".into()));
    }
    for _ in 0..DFS_RETRIES {
        let src = rng.random_range(0..n);
        let depth = rng.random_range(DEPTHS);
        if let Some(t) = dfs_candidate(g, src, depth, rng, exclude) {
            return Ok((src.min(t), src.max(t)));
        }
    }
    let free: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !g.has_edge(a, b) && !exclude.contains(&(a, b)))
        .collect();
    free.get(rng.random_range(0..free.len().max(1)))
        .copied()
        .ok_or_else(|| Error::Input("every non-edge has already been sampled".into()))
}

/// Nested split: test positives leave `G` first, validation positives leave
/// the test graph, training positives leave the validation graph. Each split
/// gets as many negatives as positives, all distinct non-edges of `G`.
pub fn split_edges(g: &TransitionGraph, fractions: SplitFractions, seed: u64) -> Result<EdgeSplit> {
    let m = g.edge_count();
    let count = |f: f64| (f * m as f64).round() as usize;
    let (n_test, n_val, n_train) = (count(fractions.test), count(fractions.val), count(fractions.train));
    let fr = [fractions.test, fractions.val, fractions.train];
    if fr.iter().any(|f| !(f.is_finite() && *f > 0.0)) || fr.iter().sum::<f64>() >= 1.0 {
        return Err(Error::Config(format!("invalid split fractions {fractions:?}")));
    }
    if n_test + n_val + n_train > m {
        return Err(Error::Config(format!("{m} edges cannot supply the requested splits")));
    }
    let wanted = n_test + n_val + n_train;
    let available = g.non_edge_count();
    if available < wanted {
        return Err(Error::Input(format!(
            "need {wanted} negative examples but the graph has only {available} non-edges"
        )));
    }

    let mut rng = seed::rng(seed, &[4]);
    let mut pool: Vec<(usize, usize)> = g.edges().collect();
    pool.shuffle(&mut rng);
    let test_pos = &pool[..n_test];
    let val_pos = &pool[n_test..n_test + n_val];
    let train_pos = &pool[n_test + n_val..wanted];

    let test_graph = g.without_edges(test_pos);
    let val_graph = test_graph.without_edges(val_pos);
    let train_graph = val_graph.without_edges(train_pos);
    let isolated = (0..g.len())
        .filter(|&v| g.degree(v) > 0 && train_graph.degree(v) == 0)
        .count();
    if isolated > 0 {
        warn!("{isolated} nodes lost every edge in the training graph");
    }

    let mut taken = HashSet::new();
    let mut examples = |positives: &[(usize, usize)]| -> Result<Vec<Example>> {
        let mut out: Vec<Example> = positives
            .iter()
            .map(|&(a, b)| Example { a, b, label: true })
            .collect();
        for _ in 0..positives.len() {
            let (a, b) = sample_negative(g, &mut rng, &taken)?;
            taken.insert((a, b));
            out.push(Example { a, b, label: false });
        }
        Ok(out)
    };
    let test = examples(test_pos)?;
    let val = examples(val_pos)?;
    let train = examples(train_pos)?;
    Ok(EdgeSplit { test_graph, val_graph, train_graph, test, val, train })
}
