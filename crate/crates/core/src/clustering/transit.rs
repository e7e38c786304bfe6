use std::collections::HashMap;

use rayon::prelude::*;

use super::{k_medoids, Clustering, DissimilarityMatrix};
use crate::demand::slot_and_period;
use crate::error::{Error, Result};
use crate::ingest::{StationId, TripRecord};

/// A trip reduced to station indices and the time slots of its departure
/// and arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotTrip {
    pub origin: usize,
    pub dest: usize,
    /// 0-based slot of the start time.
    pub depart_slot: Option<u8>,
    /// 0-based slot of the end time.
    pub arrive_slot: Option<u8>,
}

/// Keeps trips whose endpoints are both indexed.
pub fn index_trips(trips: &[TripRecord], index: &HashMap<StationId, usize>) -> Vec<SlotTrip> {
    trips
        .iter()
        .filter_map(|t| {
            Some(SlotTrip {
                origin: *index.get(&t.start_station)?,
                dest: *index.get(&t.end_station)?,
                depart_slot: slot_and_period(t.start_time).map(|(s, _)| s.index() as u8),
                arrive_slot: slot_and_period(t.end_time).map(|(s, _)| s.index() as u8),
            })
        })
        .collect()
}

/// A station's 5 × 2K₁ transition matrix. Row `i` is the Ride-To-Cluster
/// distribution of slot-`i` departures followed by the Return-From-Cluster
/// distribution of slot-`i` arrivals. A half without trips is all zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitMatrix {
    pub k1: usize,
    data: Vec<f64>,
}

impl TransitMatrix {
    pub const ROWS: usize = 5;

    pub fn zeros(k1: usize) -> Self {
        TransitMatrix {
            k1,
            data: vec![0.0; Self::ROWS * 2 * k1],
        }
    }

    pub fn from_rows(k1: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != Self::ROWS * 2 * k1 {
            return Err(Error::Input(format!(
                "{} entries for a 5x{} T-Matrix",
                data.len(),
                2 * k1
            )));
        }
        Ok(TransitMatrix { k1, data })
    }

    pub fn cols(&self) -> usize {
        2 * self.k1
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        &self.data[slot * self.cols()..(slot + 1) * self.cols()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn normalise(&mut self) {
        let k1 = self.k1;
        for chunk in self.data.chunks_mut(k1) {
            let total: f64 = chunk.iter().sum();
            if total > 0.0 {
                chunk.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
}

/// T-Matrices of all `n` stations under a K₁-clustering.
pub fn build_transit_matrices(n: usize, trips: &[SlotTrip], clustering: &Clustering) -> Vec<TransitMatrix> {
    let k1 = clustering.k();
    let cols = 2 * k1;
    let mut out = vec![TransitMatrix::zeros(k1); n];
    for t in trips {
        if let Some(slot) = t.depart_slot {
            let c = clustering.assignment[t.dest];
            out[t.origin].data[usize::from(slot) * cols + c] += 1.0;
        }
        if let Some(slot) = t.arrive_slot {
            let c = clustering.assignment[t.origin];
            out[t.dest].data[usize::from(slot) * cols + k1 + c] += 1.0;
        }
    }
    out.par_iter_mut().for_each(TransitMatrix::normalise);
    out
}

pub fn build_transit_matrix(station: usize, trips: &[SlotTrip], clustering: &Clustering) -> TransitMatrix {
    let relevant: Vec<SlotTrip> = trips
        .iter()
        .copied()
        .filter(|t| t.origin == station || t.dest == station)
        .collect();
    build_transit_matrices(clustering.len(), &relevant, clustering).swap_remove(station)
}

/// Frobenius norm of the difference.
pub fn transit_dissimilarity(a: &TransitMatrix, b: &TransitMatrix) -> Result<f64> {
    if a.k1 != b.k1 {
        return Err(Error::Input(format!(
            "T-Matrix shapes differ: 5x{} vs 5x{}",
            a.cols(),
            b.cols()
        )));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

pub fn transit_matrix_dissimilarities(ms: &[TransitMatrix]) -> Result<DissimilarityMatrix> {
    if let Some(first) = ms.first() {
        if ms.iter().any(|m| m.k1 != first.k1) {
            return Err(Error::Input("T-Matrices of mixed shapes".into()));
        }
    }
    Ok(DissimilarityMatrix::from_fn(ms.len(), |i, j| {
        transit_dissimilarity(&ms[i], &ms[j]).expect("shapes checked")
    }))
}

/// Transit-Clustering: K-Medoids with `k2` clusters over the Frobenius
/// distances between T-Matrices.
pub fn transit_cluster_step(
    ms: &[TransitMatrix],
    k2: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Clustering> {
    if let Some(first) = ms.first() {
        if k2 > first.k1 {
            return Err(Error::Config(format!("K2 = {k2} exceeds K1 = {}", first.k1)));
        }
    }
    let d = transit_matrix_dissimilarities(ms)?;
    Ok(k_medoids(&d, k2, seed, max_iters)?.clustering)
}
