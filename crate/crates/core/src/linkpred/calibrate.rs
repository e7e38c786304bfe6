use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-decreasing step function fitted by pool-adjacent-violators.
///
/// `knots[i]` is the smallest raw probability of block `i`; a query takes the
/// value of the last knot at or below it (the first block below all knots).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotonicCalibrator {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl IsotonicCalibrator {
    pub fn apply(&self, p: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= p);
        self.values[idx.saturating_sub(1)]
    }

    pub fn apply_all(&self, ps: &[f64]) -> Vec<f64> {
        ps.iter().map(|&p| self.apply(p)).collect()
    }
}

pub fn fit_calibrator(probs: &[f64], labels: &[bool]) -> Result<IsotonicCalibrator> {
    if probs.len() != labels.len() {
        return Err(Error::Input("probabilities and labels differ in length".into()));
    }
    if probs.len() < 2 {
        return Err(Error::Input("calibration needs at least two validation examples".into()));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric("non-finite probability".into()));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        warn!("validation labels are all one class; calibrator is constant");
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    // (knot, label sum, weight); equal raw values pooled first, equal
    // adjacent means merged
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for &i in &order {
        let y = if labels[i] { 1.0 } else { 0.0 };
        match blocks.last_mut() {
            Some(b) if b.0 == probs[i] => {
                b.1 += y;
                b.2 += 1.0;
            }
            _ => blocks.push((probs[i], y, 1.0)),
        }
    }
    let mut stack: Vec<(f64, f64, f64)> = Vec::with_capacity(blocks.len());
    for b in blocks {
        stack.push(b);
        while stack.len() >= 2 {
            let top = stack[stack.len() - 1];
            let below = stack[stack.len() - 2];
            if below.1 / below.2 >= top.1 / top.2 {
                stack.pop();
                let merged = stack.last_mut().unwrap();
                merged.1 += top.1;
                merged.2 += top.2;
            } else {
                break;
            }
        }
    }
    Ok(IsotonicCalibrator {
        knots: stack.iter().map(|b| b.0).collect(),
        values: stack.iter().map(|b| b.1 / b.2).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_probability: f64,
    pub frequency: f64,
}

/// Equal-width bins over [0, 1]; the last bin is closed.
pub fn reliability_table(probs: &[f64], labels: &[bool], bins: usize) -> Vec<ReliabilityBin> {
    let mut sums = vec![(0usize, 0.0, 0.0); bins];
    for (&p, &l) in probs.iter().zip(labels) {
        let b = ((p * bins as f64).floor() as usize).min(bins - 1);
        sums[b].0 += 1;
        sums[b].1 += p;
        sums[b].2 += if l { 1.0 } else { 0.0 };
    }
    sums.iter()
        .enumerate()
        .map(|(i, &(count, ps, ys))| ReliabilityBin {
            lower: i as f64 / bins as f64,
            upper: (i + 1) as f64 / bins as f64,
            count,
            mean_probability: if count > 0 { ps / count as f64 } else { 0.0 },
            frequency: if count > 0 { ys / count as f64 } else { 0.0 },
        })
        .collect()
}

/// Mean `|frequency - mean probability|` over occupied bins.
pub fn reliability_gap(table: &[ReliabilityBin]) -> f64 {
    let occupied: Vec<_> = table.iter().filter(|b| b.count > 0).collect();
    if occupied.is_empty() {
        return 0.0;
    }
    occupied
        .iter()
        .map(|b| (b.frequency - b.mean_probability).abs())
        .sum::<f64>()
        / occupied.len() as f64
}
