//! K-Medoids by alternating assignment and medoid update, seeded with a
//! greedy farthest-first initialisation and polished with single
//! medoid/non-medoid swaps once the alternation reaches a fixed point.
//!
//! Ties are always broken towards the lowest station index.

use rand::Rng;
use rayon::prelude::*;

use super::{Clustering, DissimilarityMatrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct KMedoidsFit {
    pub clustering: Clustering,
    pub objective: f64,
    /// Alternation steps plus accepted swaps.
    pub iterations: usize,
    /// Objective after initial assignment and after every iteration.
    pub trace: Vec<f64>,
    /// False when `max_iters` stopped the search.
    pub converged: bool,
}

pub fn k_medoids(d: &DissimilarityMatrix, k: usize, seed: u64, max_iters: usize) -> Result<KMedoidsFit> {
    let n = d.len();
    if k == 0 {
        return Err(Error::Config("k-medoids needs k >= 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds the {n} points")));
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be at least 1".into()));
    }

    let mut medoids = farthest_first(d, k, seed);
    let mut assignment = assign(d, &medoids);
    let mut objective = cost(d, &assignment, &medoids);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < max_iters {
        // alternate until the medoids stop moving
        loop {
            let next = update(d, &assignment, &medoids);
            if next == medoids {
                break;
            }
            medoids = next;
            assignment = assign(d, &medoids);
            objective = cost(d, &assignment, &medoids);
            trace.push(objective);
            iterations += 1;
            if iterations >= max_iters {
                break 'outer;
            }
        }
        match best_swap(d, &medoids) {
            Some((slot, candidate, delta)) if delta < -1e-12 * (1.0 + objective.abs()) => {
                medoids[slot] = candidate;
                assignment = assign(d, &medoids);
                objective = cost(d, &assignment, &medoids);
                trace.push(objective);
                iterations += 1;
            }
            _ => {
                converged = true;
                break;
            }
        }
    }

    let clustering = Clustering::new(assignment, medoids);
    Ok(KMedoidsFit {
        objective: clustering.objective(d),
        clustering,
        iterations,
        trace,
        converged,
    })
}

/// First medoid drawn uniformly from the seed, then repeatedly the point
/// farthest from the chosen set.
fn farthest_first(d: &DissimilarityMatrix, k: usize, seed: u64) -> Vec<usize> {
    let n = d.len();
    let mut rng = seed::rng(seed, &[]);
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut is_chosen = vec![false; n];
    is_chosen[first] = true;
    let mut nearest: Vec<f64> = d.row(first).to_vec();
    while chosen.len() < k {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for i in 0..n {
            if !is_chosen[i] && nearest[i] > best_d {
                best = i;
                best_d = nearest[i];
            }
        }
        chosen.push(best);
        is_chosen[best] = true;
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(d.get(best, i));
        }
    }
    chosen
}

/// Nearest medoid for every point; medoids always keep themselves.
fn assign(d: &DissimilarityMatrix, medoids: &[usize]) -> Vec<usize> {
    let n = d.len();
    let mut own = vec![usize::MAX; n];
    for (c, &m) in medoids.iter().enumerate() {
        own[m] = c;
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            if own[i] != usize::MAX {
                return own[i];
            }
            let mut best = 0;
            for c in 1..medoids.len() {
                let (dc, db) = (d.get(i, medoids[c]), d.get(i, medoids[best]));
                if dc < db || (dc == db && medoids[c] < medoids[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn update(d: &DissimilarityMatrix, assignment: &[usize], medoids: &[usize]) -> Vec<usize> {
    let mut groups = vec![Vec::new(); medoids.len()];
    for (i, &c) in assignment.iter().enumerate() {
        groups[c].push(i);
    }
    groups
        .par_iter()
        .map(|members| {
            let mut best = members[0];
            let mut best_cost = f64::INFINITY;
            for &x in members {
                let c: f64 = members.iter().map(|&y| d.get(x, y)).sum();
                if c < best_cost {
                    best = x;
                    best_cost = c;
                }
            }
            best
        })
        .collect()
}

fn cost(d: &DissimilarityMatrix, assignment: &[usize], medoids: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| d.get(i, medoids[c]))
        .sum()
}

/// The single swap (medoid slot, replacement) with the lowest objective
/// change, ties to the lowest slot then replacement index.
fn best_swap(d: &DissimilarityMatrix, medoids: &[usize]) -> Option<(usize, usize, f64)> {
    let n = d.len();
    let k = medoids.len();
    if k == n {
        return None;
    }
    let mut is_medoid = vec![false; n];
    for &m in medoids {
        is_medoid[m] = true;
    }
    // nearest and second-nearest medoid distances per point
    let near: Vec<(usize, f64, f64)> = (0..n)
        .map(|p| {
            let mut first = (usize::MAX, f64::INFINITY);
            let mut second = f64::INFINITY;
            for (slot, &m) in medoids.iter().enumerate() {
                let v = d.get(p, m);
                if v < first.1 {
                    second = first.1;
                    first = (slot, v);
                } else if v < second {
                    second = v;
                }
            }
            (first.0, first.1, second)
        })
        .collect();

    let candidates: Vec<usize> = (0..n).filter(|&x| !is_medoid[x]).collect();
    let deltas: Vec<(usize, usize, f64)> = candidates
        .par_iter()
        .flat_map_iter(|&x| {
            let near = &near;
            (0..k).map(move |slot| {
                let delta: f64 = (0..n)
                    .map(|p| {
                        let (ns, d1, d2) = near[p];
                        let dx = d.get(p, x);
                        let new = if ns == slot { d2.min(dx) } else { d1.min(dx) };
                        new - d1
                    })
                    .sum();
                (slot, x, delta)
            })
        })
        .collect();
    deltas.into_iter().fold(None, |best, cand| match best {
        None => Some(cand),
        Some(b) => {
            if cand.2 < b.2 || (cand.2 == b.2 && (cand.0, cand.1) < (b.0, b.1)) {
                Some(cand)
            } else {
                Some(b)
            }
        }
    })
}

/// True when no single medoid/non-medoid swap lowers the objective by more
/// than `tol`.
pub fn is_swap_stable(d: &DissimilarityMatrix, medoids: &[usize], tol: f64) -> bool {
    best_swap(d, medoids).is_none_or(|(_, _, delta)| delta >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let d = line(&[0.0, 3.0, 7.0, 8.0]);
        let fit = k_medoids(&d, 4, 3, 50).unwrap();
        assert_eq!(fit.objective, 0.0);
        assert_eq!(fit.clustering.medoids, vec![0, 1, 2, 3]);
        assert_eq!(fit.clustering.assignment, vec![0, 1, 2, 3]);
    }

    #[test]
    fn separated_pairs() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        for seed in 0..10 {
            let c = k_medoids(&d, 2, seed, 50).unwrap().clustering;
            assert_eq!(c.assignment[0], c.assignment[1]);
            assert_eq!(c.assignment[2], c.assignment[3]);
            assert_ne!(c.assignment[0], c.assignment[2]);
            // ties inside each pair resolve to the lower index
            assert_eq!(c.medoids, vec![0, 2]);
        }
    }

    #[test]
    fn invalid_k() {
        let d = line(&[0.0, 1.0]);
        assert!(k_medoids(&d, 3, 0, 10).is_err());
        assert!(k_medoids(&d, 0, 0, 10).is_err());
    }

    #[test]
    fn duplicates_keep_clusters_nonempty() {
        let d = line(&[1.0, 1.0, 1.0, 5.0, 5.0]);
        let fit = k_medoids(&d, 3, 1, 50).unwrap();
        fit.clustering.validate().unwrap();
        assert!(fit.clustering.sizes().iter().all(|&s| s > 0));
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn objective_never_increases() {
        let pts: Vec<f64> = (0..60).map(|i| ((i * 37) % 101) as f64 * 0.7).collect();
        let d = line(&pts);
        let fit = k_medoids(&d, 5, 9, 100).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(fit.converged);
        assert!(is_swap_stable(&d, &fit.clustering.medoids, 1e-9));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let pts: Vec<f64> = (0..30).map(|i| ((i * 13) % 31) as f64).collect();
        let d = line(&pts);
        assert_eq!(k_medoids(&d, 4, 5, 100).unwrap(), k_medoids(&d, 4, 5, 100).unwrap());
    }
}
