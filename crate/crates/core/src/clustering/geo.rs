use super::{apportion_groups, k_medoids, Clustering, DissimilarityMatrix};
use crate::error::Result;
use crate::seed;

/// Euclidean distance between two check-out profiles.
pub fn checkout_difference(u_h: &[f64; 5], u_k: &[f64; 5]) -> f64 {
    u_h.iter()
        .zip(u_k)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// GC dissimilarity: `rho1 * gd + ||U_h - U_k||_2`, with `gd` the
/// symmetrised routing distance in metres.
pub fn geo_dissimilarity(gd: f64, u_h: &[f64; 5], u_k: &[f64; 5], rho1: f64) -> f64 {
    rho1 * gd + checkout_difference(u_h, u_k)
}

pub fn checkout_matrix(profiles: &[[f64; 5]]) -> DissimilarityMatrix {
    DissimilarityMatrix::from_fn(profiles.len(), |i, j| {
        checkout_difference(&profiles[i], &profiles[j])
    })
}

/// GC dissimilarity matrix from precomputed distance and check-out terms.
pub fn geo_matrix(
    gd: &DissimilarityMatrix,
    checkout: &DissimilarityMatrix,
    rho1: f64,
) -> DissimilarityMatrix {
    DissimilarityMatrix::from_fn(gd.len(), |i, j| rho1 * gd.get(i, j) + checkout.get(i, j))
}

/// One Geo-Clustering pass: K-Medoids inside every input group, with the
/// `k1` clusters apportioned by group size. The union is a `k1`-clustering
/// of all stations.
pub fn geo_cluster_step(
    diss: &DissimilarityMatrix,
    groups: &[Vec<usize>],
    k1: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Clustering> {
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let counts = apportion_groups(&sizes, k1)?;
    let mut assignment = vec![usize::MAX; diss.len()];
    let mut medoids = Vec::with_capacity(k1);
    for (g, (members, &k)) in groups.iter().zip(&counts).enumerate() {
        let fit = k_medoids(
            &diss.submatrix(members),
            k,
            seed::derive(seed, &[g as u64]),
            max_iters,
        )?;
        let base = medoids.len();
        medoids.extend(fit.clustering.medoids.iter().map(|&m| members[m]));
        for (local, &c) in fit.clustering.assignment.iter().enumerate() {
            assignment[members[local]] = base + c;
        }
    }
    debug_assert!(assignment.iter().all(|&c| c != usize::MAX));
    Ok(Clustering::new(assignment, medoids))
}
