use std::collections::HashSet;
use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adatc_plus, AdaTcParams, ClusterQualityReport, ClusteringInput};
use crate::error::{Error, Result};
use crate::seed;

/// The eleven trade-off values: a log-like ladder and its midpoints.
pub const DEFAULT_RHO1_GRID: [f64; 11] = [
    0.0, 5e-4, 1e-3, 5.5e-3, 1e-2, 5.5e-2, 1e-1, 0.505, 1.0, 5.5, 10.0,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rho1: Vec<f64>,
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    /// Ranking only considers rows with `rho1` inside this closed window.
    pub rho1_window: (f64, f64),
}

impl GridSpec {
    /// 11 x 6 x 5 = 330 combinations.
    pub fn standard() -> Self {
        GridSpec {
            rho1: DEFAULT_RHO1_GRID.to_vec(),
            k1: (50..=100).step_by(10).collect(),
            k2: (10..=50).step_by(10).collect(),
            rho1_window: (0.1, 0.505),
        }
    }

    pub fn single(rho1: f64, k1: usize, k2: usize) -> Self {
        GridSpec {
            rho1: vec![rho1],
            k1: vec![k1],
            k2: vec![k2],
            rho1_window: (rho1, rho1),
        }
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &rho1 in &self.rho1 {
            for &k1 in &self.k1 {
                for &k2 in &self.k2 {
                    out.push(GridCell { rho1, k1, k2 });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub rho1: f64,
    pub k1: usize,
    pub k2: usize,
}

impl GridCell {
    fn key(&self) -> (u64, usize, usize) {
        (self.rho1.to_bits(), self.k1, self.k2)
    }
}

/// Outcome of one combination; `error` is set when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub cell: GridCell,
    pub report: Option<ClusterQualityReport>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// In grid order.
    pub rows: Vec<GridRow>,
    /// Pareto layer per row (1 = non-dominated); `None` outside the
    /// ranking window or for failed rows.
    pub ranks: Vec<Option<usize>>,
    /// Front row whose K1 is closest to the middle of the K1 range.
    pub mid_k1: Option<usize>,
}

/// Runs every cell not already in `done`, calling `on_row` as each finishes.
pub fn grid_search<F>(
    input: &ClusteringInput,
    spec: &GridSpec,
    base: &AdaTcParams,
    done: &[GridRow],
    on_row: F,
) -> Result<GridReport>
where
    F: Fn(&GridRow) + Sync,
{
    let cells = spec.cells();
    if cells.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let finished: HashSet<_> = done.iter().map(|r| r.cell.key()).collect();
    let fresh: Vec<GridRow> = cells
        .par_iter()
        .enumerate()
        .filter(|(_, c)| !finished.contains(&c.key()))
        .map(|(i, &cell)| {
            let params = AdaTcParams {
                rho1: cell.rho1,
                k1: cell.k1,
                k2: cell.k2,
                seed: seed::derive(base.seed, &[3, i as u64]),
                ..*base
            };
            let row = match adatc_plus(input, &params) {
                Ok(out) => GridRow {
                    cell,
                    report: out.reports.last().copied(),
                    iterations: out.iterations,
                    converged: out.converged,
                    error: None,
                },
                Err(e) => {
                    warn!("grid cell {cell:?} failed: {e}");
                    GridRow { cell, report: None, iterations: 0, converged: false, error: Some(e.to_string()) }
                }
            };
            on_row(&row);
            row
        })
        .collect();

    let mut by_key: std::collections::HashMap<_, GridRow> =
        done.iter().chain(&fresh).map(|r| (r.cell.key(), r.clone())).collect();
    let rows: Vec<GridRow> = cells
        .iter()
        .map(|c| by_key.remove(&c.key()).expect("every cell evaluated"))
        .collect();

    let (lo, hi) = spec.rho1_window;
    let eligible: Vec<Option<[f64; 4]>> = rows
        .iter()
        .map(|r| {
            let rep = r.report?;
            (r.cell.rho1 >= lo && r.cell.rho1 <= hi)
                .then_some([rep.agd_inner, rep.acod_inner, -rep.agd_inter, -rep.acod_inter])
        })
        .collect();
    let ranks = pareto_ranks(&eligible);

    let (kmin, kmax) = (
        spec.k1.iter().copied().min().unwrap_or(0),
        spec.k1.iter().copied().max().unwrap_or(0),
    );
    let mid = (kmin + kmax) as f64 / 2.0;
    let mid_k1 = (0..rows.len())
        .filter(|&i| ranks[i] == Some(1))
        .min_by(|&a, &b| {
            let da = (rows[a].cell.k1 as f64 - mid).abs();
            let db = (rows[b].cell.k1 as f64 - mid).abs();
            let ta = rows[a].report.map_or(f64::INFINITY, |r| r.tdf());
            let tb = rows[b].report.map_or(f64::INFINITY, |r| r.tdf());
            da.total_cmp(&db).then(ta.total_cmp(&tb)).then(a.cmp(&b))
        });
    Ok(GridReport { rows, ranks, mid_k1 })
}

/// Non-dominated sorting of minimisation objectives; `None` entries are
/// left unranked.
pub fn pareto_ranks(points: &[Option<[f64; 4]>]) -> Vec<Option<usize>> {
    let dominates = |a: &[f64; 4], b: &[f64; 4]| {
        a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
    };
    let mut ranks = vec![None; points.len()];
    let mut remaining: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_some()).collect();
    let mut layer = 1;
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                let p = points[i].as_ref().unwrap();
                !remaining
                    .iter()
                    .any(|&j| j != i && dominates(points[j].as_ref().unwrap(), p))
            })
            .collect();
        for &i in &front {
            ranks[i] = Some(layer);
        }
        remaining.retain(|i| !front.contains(i));
        layer += 1;
    }
    ranks
}

impl GridReport {
    /// Long table: one line per combination and metric.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("rho1\tk1\tk2\tmetric\tvalue\trank\n");
        for (row, rank) in self.rows.iter().zip(&self.ranks) {
            let rank = rank.map_or_else(|| "-".to_string(), |r| r.to_string());
            let c = row.cell;
            match &row.report {
                Some(rep) => {
                    for (name, v) in rep.metrics() {
                        let _ = writeln!(s, "{}\t{}\t{}\t{name}\t{v:.6}\t{rank}", c.rho1, c.k1, c.k2);
                    }
                }
                None => {
                    let _ = writeln!(s, "{}\t{}\t{}\terror\tNaN\t{rank}", c.rho1, c.k1, c.k2);
                }
            }
        }
        s
    }

    /// Rows ordered by Pareto layer, then TDF.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rows.len()).filter(|&i| self.ranks[i].is_some()).collect();
        idx.sort_by(|&a, &b| {
            let ta = self.rows[a].report.map_or(f64::INFINITY, |r| r.tdf());
            let tb = self.rows[b].report.map_or(f64::INFINITY, |r| r.tdf());
            self.ranks[a].cmp(&self.ranks[b]).then(ta.total_cmp(&tb)).then(a.cmp(&b))
        });
        idx
    }
}
