use serde::{Deserialize, Serialize};

use super::{Clustering, DissimilarityMatrix};

/// Parameter-validation metrics of one clustering.
///
/// Inner averages run over unordered pairs of stations sharing a cluster,
/// inter averages over unordered pairs of medoids. With no pair to average
/// the value is 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterQualityReport {
    pub agd_inner: f64,
    pub acod_inner: f64,
    pub agd_inter: f64,
    pub acod_inter: f64,
    pub td_gc: f64,
    pub td_tc: f64,
}

impl ClusterQualityReport {
    /// Total dissimilarity of one outer iteration, `TD_GC + TD_TC`.
    pub fn tdf(&self) -> f64 {
        self.td_gc + self.td_tc
    }

    pub fn metrics(&self) -> [(&'static str, f64); 7] {
        [
            ("agd_inner", self.agd_inner),
            ("acod_inner", self.acod_inner),
            ("agd_inter", self.agd_inter),
            ("acod_inter", self.acod_inter),
            ("td_gc", self.td_gc),
            ("td_tc", self.td_tc),
            ("tdf", self.tdf()),
        ]
    }
}

/// Sum over stations of `diss(S_i, medoid of S_i)`.
pub fn total_dissimilarity(clustering: &Clustering, diss: &DissimilarityMatrix) -> f64 {
    clustering.objective(diss)
}

/// Inner/inter metrics on `geo` (metres) and `checkout` (profile
/// distances); `td_gc` is the total dissimilarity under `diss_used` and
/// `td_tc` is left at zero for the caller to fill.
pub fn quality_report(
    clustering: &Clustering,
    geo: &DissimilarityMatrix,
    checkout: &DissimilarityMatrix,
    diss_used: &DissimilarityMatrix,
) -> ClusterQualityReport {
    let mut inner = (0.0, 0.0, 0u64);
    for members in clustering.groups() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                inner.0 += geo.get(i, j);
                inner.1 += checkout.get(i, j);
                inner.2 += 1;
            }
        }
    }
    let mut inter = (0.0, 0.0, 0u64);
    let m = &clustering.medoids;
    for (a, &i) in m.iter().enumerate() {
        for &j in &m[a + 1..] {
            inter.0 += geo.get(i, j);
            inter.1 += checkout.get(i, j);
            inter.2 += 1;
        }
    }
    let avg = |s: f64, c: u64| if c == 0 { 0.0 } else { s / c as f64 };
    ClusterQualityReport {
        agd_inner: avg(inner.0, inner.2),
        acod_inner: avg(inner.1, inner.2),
        agd_inter: avg(inter.0, inter.2),
        acod_inter: avg(inter.1, inter.2),
        td_gc: total_dissimilarity(clustering, diss_used),
        td_tc: 0.0,
    }
}
