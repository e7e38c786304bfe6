use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{reliability_gap, reliability_table, Example, ReliabilityBin, TransitionGraph};
use crate::error::{Error, Result};
use crate::ingest::StationId;

pub const PE_BIN_LABELS: [&str; 8] = [
    "[0-5]", "]5-15]", "]15-30]", "]30-45]", "]45-60]", "]60-75]", "]75-90]", ">90",
];
const PE_BIN_UPPER: [f64; 7] = [5.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0];

/// `100 |x_t - x_p| / x_t`; infinite when `x_t = 0 < x_p`.
pub fn prediction_error(x_t: f64, x_p: f64) -> f64 {
    if x_t == 0.0 {
        return if x_p == 0.0 { 0.0 } else { f64::INFINITY };
    }
    100.0 * (x_t - x_p).abs() / x_t
}

/// Interval index of a finite PE.
pub fn pe_bin(pe: f64) -> Option<usize> {
    if !pe.is_finite() {
        return None;
    }
    Some(PE_BIN_UPPER.iter().position(|&u| pe <= u).unwrap_or(PE_BIN_UPPER.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Origin,
    Destination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationError {
    pub station: StationId,
    pub role: Role,
    pub trips_true: f64,
    pub trips_predicted: f64,
    /// `None` when infinite.
    pub pe: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeSummary {
    /// Mean over finite PEs.
    pub mean: f64,
    pub stations: usize,
    pub infinite: usize,
    pub bins: [usize; 8],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotAnnotations {
    /// Reference line for the mean trip count per station.
    pub mean_trips: f64,
    /// Reference line for the error percentage.
    pub error_pct: f64,
}

impl Default for PlotAnnotations {
    fn default() -> Self {
        PlotAnnotations { mean_trips: 67.0, error_pct: 12.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub examples: usize,
    pub origin: PeSummary,
    pub destination: PeSummary,
    pub reliability: Vec<ReliabilityBin>,
    pub reliability_gap: f64,
    pub stations: Vec<StationError>,
    pub annotations: PlotAnnotations,
}

/// Scores calibrated probabilities against the labels and the trip counts
/// of `graph`.
///
/// A predicted-positive pair contributes its directed trip counts when it is
/// a real link and one trip per direction otherwise.
pub fn evaluate(
    graph: &TransitionGraph,
    examples: &[Example],
    probs: &[f64],
    annotations: PlotAnnotations,
) -> Result<EvalReport> {
    if examples.is_empty() || examples.len() != probs.len() {
        return Err(Error::Input(format!(
            "{} examples for {} probabilities",
            examples.len(),
            probs.len()
        )));
    }
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let correct = probs.iter().zip(&labels).filter(|(p, l)| (**p >= 0.5) == **l).count();

    let n = graph.len();
    let mut truth = vec![[0.0f64; 2]; n];
    let mut pred = vec![[0.0f64; 2]; n];
    for (e, &p) in examples.iter().zip(probs) {
        let (ab, ba) = if e.label {
            (graph.trips(e.a, e.b) as f64, graph.trips(e.b, e.a) as f64)
        } else {
            (0.0, 0.0)
        };
        if e.label {
            truth[e.a][0] += ab;
            truth[e.b][1] += ab;
            truth[e.b][0] += ba;
            truth[e.a][1] += ba;
        }
        if p >= 0.5 {
            let (ab, ba) = if e.label { (ab, ba) } else { (1.0, 1.0) };
            pred[e.a][0] += ab;
            pred[e.b][1] += ab;
            pred[e.b][0] += ba;
            pred[e.a][1] += ba;
        }
    }

    let mut stations = Vec::new();
    let mut summaries = [PeSummary::default(), PeSummary::default()];
    for v in 0..n {
        for (r, role) in [Role::Origin, Role::Destination].into_iter().enumerate() {
            let (xt, xp) = (truth[v][r], pred[v][r]);
            if xt == 0.0 && xp == 0.0 {
                continue;
            }
            let pe = prediction_error(xt, xp);
            let s = &mut summaries[r];
            match pe_bin(pe) {
                Some(b) => {
                    s.bins[b] += 1;
                    s.mean += pe;
                    s.stations += 1;
                }
                None => s.infinite += 1,
            }
            stations.push(StationError {
                station: graph.nodes()[v].clone(),
                role,
                trips_true: xt,
                trips_predicted: xp,
                pe: pe.is_finite().then_some(pe),
            });
        }
    }
    for s in &mut summaries {
        if s.stations > 0 {
            s.mean /= s.stations as f64;
        }
    }
    let reliability = reliability_table(probs, &labels, 10);
    let [origin, destination] = summaries;
    Ok(EvalReport {
        accuracy: correct as f64 / examples.len() as f64,
        examples: examples.len(),
        origin,
        destination,
        reliability_gap: reliability_gap(&reliability),
        reliability,
        stations,
        annotations,
    })
}

impl EvalReport {
    /// PE intervals by role, one line per interval plus the infinite count.
    pub fn pe_table_tsv(&self) -> String {
        let mut s = String::from("interval\torigin\tdestination\n");
        for (i, label) in PE_BIN_LABELS.iter().enumerate() {
            let _ = writeln!(s, "{label}\t{}\t{}", self.origin.bins[i], self.destination.bins[i]);
        }
        let _ = writeln!(s, "inf\t{}\t{}", self.origin.infinite, self.destination.infinite);
        s
    }

    /// Per-station trip count against PE, for plotting.
    pub fn plot_tsv(&self) -> String {
        let mut s = format!(
            "# ref_mean_trips={} ref_error_pct={}\nstation\trole\ttrips_true\ttrips_predicted\tpe\n",
            self.annotations.mean_trips, self.annotations.error_pct
        );
        for e in &self.stations {
            let role = match e.role {
                Role::Origin => "origin",
                Role::Destination => "destination",
            };
            let pe = e.pe.map_or_else(|| "inf".to_string(), |p| format!("{p:.6}"));
            let _ = writeln!(s, "{}\t{role}\t{}\t{}\t{pe}", e.station, e.trips_true, e.trips_predicted);
        }
        s
    }
}
