//! Spectral clustering baseline on a dense normalised Laplacian.

use serde::{Deserialize, Serialize};

use super::{k_medoids, Clustering, DissimilarityMatrix};
use crate::error::{Error, Result};

/// How dissimilarities become affinities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AffinityForm {
    /// `max(0, (1 - D) / max D)`.
    #[default]
    Literal,
    /// `1 - D / max D`, usable when `D` is in metres.
    Scaled,
}

pub fn affinity_from_dissimilarity(d: &DissimilarityMatrix, form: AffinityForm) -> Result<Vec<f64>> {
    let max = d.max();
    if max <= 0.0 {
        return Ok(vec![1.0; d.len() * d.len()]);
    }
    let s: Vec<f64> = d
        .as_slice()
        .iter()
        .map(|&v| match form {
            AffinityForm::Literal => ((1.0 - v) / max).max(0.0),
            AffinityForm::Scaled => 1.0 - v / max,
        })
        .collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite affinity entry".into()));
    }
    Ok(s)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[j]` is the unit eigenvector of `values[j]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations on a row-major symmetric `n x n` matrix.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::Input(format!("{} entries for a {n}x{n} matrix", matrix.len())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite matrix entry".into()));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order
            .iter()
            .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
            .collect(),
    })
}

/// Clusters `n` points given a row-major affinity matrix.
pub fn spectral_clustering(affinity: &[f64], n: usize, k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} outside 1..={n}")));
    }
    let deg: Vec<f64> = (0..n).map(|i| affinity[i * n..(i + 1) * n].iter().sum()).collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut lap = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            lap[i * n + j] = id - inv_sqrt[i] * affinity[i * n + j] * inv_sqrt[j];
        }
    }
    let eig = jacobi_eigen(&lap, n)?;
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| eig.vectors[..k].iter().map(|v| v[i]).collect())
        .collect();
    for r in &mut rows {
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|x| *x /= norm);
        }
    }
    let d = DissimilarityMatrix::from_fn(n, |i, j| {
        rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    });
    Ok(k_medoids(&d, k, seed, max_iters)?.clustering)
}

/// Single K-Medoids run on the GC dissimilarity.
pub fn baseline_km(d_gc: &DissimilarityMatrix, k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    Ok(k_medoids(d_gc, k, seed, max_iters)?.clustering)
}

pub fn baseline_spectral(
    d: &DissimilarityMatrix,
    k: usize,
    seed: u64,
    form: AffinityForm,
    max_iters: usize,
) -> Result<Clustering> {
    let s = affinity_from_dissimilarity(d, form)?;
    spectral_clustering(&s, d.len(), k, seed, max_iters)
}
