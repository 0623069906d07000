// SPDX-License-Identifier: Apache-2.0

//! Trace similarity: Euclidean coverage distance, per-register DTW state
//! distance, and their weighted sum.

use serde::{Deserialize, Serialize};

use crate::hdl::Design;
use crate::sim::ExecutionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    /// Coverage weight.
    pub alpha: f64,
    /// State weight.
    pub beta: f64,
}

impl DistanceWeights {
    pub fn new(alpha: f64, beta: f64) -> Self {
        DistanceWeights { alpha, beta }
    }

    /// alpha = 1/z, beta = 1/k; beta is 0 for designs without registers.
    pub fn auto(design: &Design) -> Self {
        let z = design.statement_count();
        let k = design.register_count();
        DistanceWeights {
            alpha: if z == 0 { 0.0 } else { 1.0 / z as f64 },
            beta: if k == 0 { 0.0 } else { 1.0 / k as f64 },
        }
    }

    pub fn is_valid(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite() && self.alpha >= 0.0 && self.beta >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("coverage vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("traces record different register counts ({0} vs {1})")]
    RegisterMismatch(usize, usize),
}

pub fn coverage_distance(h_w: &[u64], h_b: &[u64]) -> Result<f64, MetricsError> {
    if h_w.len() != h_b.len() {
        return Err(MetricsError::LengthMismatch(h_w.len(), h_b.len()));
    }
    let sum: f64 = h_w
        .iter()
        .zip(h_b)
        .map(|(&w, &b)| {
            let d = w.abs_diff(b) as f64;
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Dynamic time warping with unit mismatch cost.
///
/// `D(0,0) = 0`, `D(i,0) = i`, `D(0,j) = j`, and
/// `D(i,j) = [q_w[i] != q_b[j]] + min(D(i-1,j), D(i,j-1), D(i-1,j-1))`.
/// Returns `D(len(q_w), len(q_b))`.
pub fn dtw(q_w: &[u64], q_b: &[u64]) -> u64 {
    let cols = q_b.len();
    let mut prev: Vec<u64> = (0..=cols as u64).collect();
    let mut cur = vec![0u64; cols + 1];
    for (i, &w) in q_w.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, &b) in q_b.iter().enumerate() {
            let best = prev[j + 1].min(cur[j]).min(prev[j]);
            cur[j + 1] = (w != b) as u64 + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[cols]
}

fn register_values(trace: &ExecutionTrace) -> impl Iterator<Item = Vec<u64>> + '_ {
    trace
        .transitions
        .iter()
        .map(|seq| seq.iter().map(|t| t.value).collect())
}

pub fn state_distance(trace_w: &ExecutionTrace, trace_b: &ExecutionTrace) -> Result<f64, MetricsError> {
    if trace_w.transitions.len() != trace_b.transitions.len() {
        return Err(MetricsError::RegisterMismatch(
            trace_w.transitions.len(),
            trace_b.transitions.len(),
        ));
    }
    let sum: f64 = register_values(trace_w)
        .zip(register_values(trace_b))
        .map(|(w, b)| {
            let d = dtw(&w, &b) as f64;
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// `alpha * coverage_distance + beta * state_distance`; a component with
/// zero weight is not computed.
pub fn distance(
    trace_w: &ExecutionTrace,
    trace_b: &ExecutionTrace,
    w: DistanceWeights,
) -> Result<f64, MetricsError> {
    let cov = if w.alpha != 0.0 {
        w.alpha * coverage_distance(&trace_w.coverage, &trace_b.coverage)?
    } else {
        0.0
    };
    let state = if w.beta != 0.0 {
        w.beta * state_distance(trace_w, trace_b)?
    } else {
        0.0
    };
    Ok(cov + state)
}
