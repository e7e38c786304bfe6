use log::debug;
use serde::{Deserialize, Serialize};

use super::{
    build_transit_matrices, geo_cluster_step, geo_matrix, k_medoids, quality_report,
    transit_matrix_dissimilarities, ClusterQualityReport, Clustering, DissimilarityMatrix,
    SlotTrip,
};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaTcParams {
    pub rho1: f64,
    pub k1: usize,
    pub k2: usize,
    /// Outer-iteration cap N.
    pub n_outer: usize,
    pub max_iters_gc: usize,
    pub max_iters_tc: usize,
    pub seed: u64,
}

impl Default for AdaTcParams {
    fn default() -> Self {
        AdaTcParams {
            rho1: 0.505,
            k1: 70,
            k2: 40,
            n_outer: 10,
            max_iters_gc: 100,
            max_iters_tc: 100,
            seed: 0,
        }
    }
}

impl AdaTcParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.rho1.is_finite() && self.rho1 >= 0.0) {
            return Err(Error::Config(format!("rho1 = {} must be finite and >= 0", self.rho1)));
        }
        if self.k2 == 0 || self.k2 > self.k1 || self.k1 > n {
            return Err(Error::Config(format!(
                "need 1 <= K2 <= K1 <= n, got K2 = {}, K1 = {}, n = {n}",
                self.k2, self.k1
            )));
        }
        if self.n_outer == 0 || self.max_iters_gc == 0 || self.max_iters_tc == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything the clustering stages need, over one station ordering.
#[derive(Clone, Debug)]
pub struct ClusteringInput {
    /// Symmetrised routing distances in metres.
    pub geo: DissimilarityMatrix,
    /// Check-out profile differences `||U_h - U_k||`.
    pub checkout: DissimilarityMatrix,
    pub trips: Vec<SlotTrip>,
}

impl ClusteringInput {
    pub fn new(
        geo: DissimilarityMatrix,
        checkout: DissimilarityMatrix,
        trips: Vec<SlotTrip>,
    ) -> Result<Self> {
        if geo.len() != checkout.len() {
            return Err(Error::Input(format!(
                "distance matrix covers {} stations, profiles {}",
                geo.len(),
                checkout.len()
            )));
        }
        if let Some(t) = trips.iter().find(|t| t.origin.max(t.dest) >= geo.len()) {
            return Err(Error::Input(format!("trip endpoint {t:?} outside the station set")));
        }
        Ok(ClusteringInput { geo, checkout, trips })
    }

    pub fn len(&self) -> usize {
        self.geo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.geo.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaTcOutcome {
    /// Final K1 Geo-Clustering, the algorithm's output.
    pub gc: Clustering,
    /// K2 Transit-Clustering of the last outer iteration.
    pub tc: Clustering,
    /// One report per outer iteration.
    pub reports: Vec<ClusterQualityReport>,
    pub iterations: usize,
    /// True when the GC medoid set repeated before the cap.
    pub converged: bool,
}

pub fn adatc_plus(input: &ClusteringInput, params: &AdaTcParams) -> Result<AdaTcOutcome> {
    let n = input.len();
    params.validate(n)?;
    let diss_gc = geo_matrix(&input.geo, &input.checkout, params.rho1);

    let mut groups = vec![(0..n).collect::<Vec<_>>()];
    let mut reports = Vec::new();
    let mut previous: Option<Clustering> = None;
    let mut converged = false;
    let mut last = None;

    for it in 0..params.n_outer {
        let gc = geo_cluster_step(
            &diss_gc,
            &groups,
            params.k1,
            seed::derive(params.seed, &[1, it as u64]),
            params.max_iters_gc,
        )?;
        let tms = build_transit_matrices(n, &input.trips, &gc);
        let diss_tc = transit_matrix_dissimilarities(&tms)?;
        let tc = k_medoids(
            &diss_tc,
            params.k2,
            seed::derive(params.seed, &[2, it as u64]),
            params.max_iters_tc,
        )?;
        let mut report = quality_report(&gc, &input.geo, &input.checkout, &diss_gc);
        report.td_tc = tc.objective;
        debug!(
            "outer {it}: TD_GC {:.4} TD_TC {:.4} TDF {:.4}",
            report.td_gc,
            report.td_tc,
            report.tdf()
        );
        reports.push(report);

        let same = previous
            .as_ref()
            .is_some_and(|p| p.medoid_set() == gc.medoid_set());
        groups = tc.clustering.groups();
        previous = Some(gc.clone());
        last = Some((gc, tc.clustering));
        if same {
            converged = true;
            break;
        }
    }

    let (gc, tc) = last.expect("at least one outer iteration");
    Ok(AdaTcOutcome {
        gc,
        tc,
        iterations: reports.len(),
        reports,
        converged,
    })
}
