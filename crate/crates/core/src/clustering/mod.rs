//! Station clustering: K-Medoids, Geo-Clustering (GC), T-Matrix generation,
//! Transit-Clustering (TC), the iterated AdaTC+ loop, the KM and spectral
//! baselines and the parameter-validation metrics.

mod adatc;
mod apportion;
mod geo;
mod grid;
mod kmedoids;
mod metrics;
mod quality;
mod spectral;
mod transit;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adatc::{adatc_plus, AdaTcOutcome, AdaTcParams, ClusteringInput};
pub use apportion::apportion_groups;
pub use geo::{
    checkout_difference, checkout_matrix, geo_cluster_step, geo_dissimilarity, geo_matrix,
};
pub use grid::{
    grid_search, pareto_ranks, GridCell, GridReport, GridRow, GridSpec, DEFAULT_RHO1_GRID,
};
pub use kmedoids::{is_swap_stable, k_medoids, KMedoidsFit};
pub use metrics::adjusted_rand_index;
pub use quality::{quality_report, total_dissimilarity, ClusterQualityReport};
pub use spectral::{
    affinity_from_dissimilarity, baseline_km, baseline_spectral, jacobi_eigen,
    spectral_clustering, AffinityForm, SymmetricEigen,
};
pub use transit::{
    build_transit_matrices, build_transit_matrix, index_trips, transit_cluster_step,
    transit_dissimilarity, transit_matrix_dissimilarities, SlotTrip, TransitMatrix,
};

/// Symmetric, zero-diagonal matrix of finite non-negative dissimilarities.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Evaluates `f` on the upper triangle (in parallel) and mirrors it.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DissimilarityMatrix { n, data }
    }

    /// Wraps a row-major matrix after checking the invariants.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Input(format!(
                "{} entries for a {n}x{n} dissimilarity matrix",
                data.len()
            )));
        }
        let m = DissimilarityMatrix { n, data };
        for i in 0..n {
            if m.get(i, i) != 0.0 {
                return Err(Error::Input(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Input(format!("entry ({i},{j}) = {v}")));
                }
                if v != m.get(j, i) {
                    return Err(Error::Input(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        DissimilarityMatrix { n: m, data }
    }
}

/// Assignment of `n` stations to `k` clusters, each with a medoid.
///
/// Clusters are numbered by increasing medoid index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    /// Station index → cluster id.
    pub assignment: Vec<usize>,
    /// Cluster id → medoid station index.
    pub medoids: Vec<usize>,
}

impl Clustering {
    /// Builds a clustering and renumbers clusters by medoid index.
    pub fn new(assignment: Vec<usize>, medoids: Vec<usize>) -> Self {
        let mut order: Vec<usize> = (0..medoids.len()).collect();
        order.sort_by_key(|&c| medoids[c]);
        let mut relabel = vec![0; medoids.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        Clustering {
            assignment: assignment.iter().map(|&c| relabel[c]).collect(),
            medoids: order.iter().map(|&c| medoids[c]).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.medoids.len()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == cluster)
            .collect()
    }

    /// Members of every cluster, indexed by cluster id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignment.iter().enumerate() {
            g[c].push(i);
        }
        g
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups().iter().map(Vec::len).collect()
    }

    pub fn medoid_set(&self) -> BTreeSet<usize> {
        self.medoids.iter().copied().collect()
    }

    /// Sum over stations of the dissimilarity to their cluster's medoid.
    pub fn objective(&self, d: &DissimilarityMatrix) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| d.get(i, self.medoids[c]))
            .sum()
    }

    /// Every cluster non-empty, every medoid inside its own cluster.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.assignment.iter().any(|&c| c >= k) {
            return Err(Error::Input("assignment to unknown cluster".into()));
        }
        for (c, &m) in self.medoids.iter().enumerate() {
            if self.assignment.get(m) != Some(&c) {
                return Err(Error::Input(format!("medoid {m} not in its cluster {c}")));
            }
        }
        Ok(())
    }
}
