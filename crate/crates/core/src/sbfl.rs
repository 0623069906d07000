// SPDX-License-Identifier: Apache-2.0

//! Spectrum-based suspiciousness from one failing trace and a set of
//! witness (passing) traces, with average-rank tie handling.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::hdl::{Design, StatementId};
use crate::sim::ExecutionTrace;
use crate::witgen::SearchConfig;

/// Ochiai coefficient; 0 when the statement is never executed by a failing run.
pub fn ochiai(e_f: u64, n_f: u64, e_p: u64) -> f64 {
    if e_f == 0 {
        return 0.0;
    }
    e_f as f64 / (((e_f + n_f) as f64) * ((e_f + e_p) as f64)).sqrt()
}

/// Ochiai with a single failing run that executes the statement.
pub fn single_failure_score(e_p: u64) -> f64 {
    1.0 / (1.0 + e_p as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatementScore {
    pub statement_id: StatementId,
    pub touched: bool,
    pub e_p: u64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SbflError {
    #[error("witness trace {index} covers {found} statements, failing trace covers {expected}")]
    ShapeMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}

/// Score every statement. Statements the failing run never touches score 0.
pub fn suspiciousness<'a, I>(failing: &ExecutionTrace, witnesses: I) -> Result<Vec<StatementScore>, SbflError>
where
    I: IntoIterator<Item = &'a ExecutionTrace>,
{
    let z = failing.coverage.len();
    let mut e_p = vec![0u64; z];
    for (index, w) in witnesses.into_iter().enumerate() {
        if w.coverage.len() != z {
            return Err(SbflError::ShapeMismatch {
                index,
                expected: z,
                found: w.coverage.len(),
            });
        }
        for (count, &hits) in e_p.iter_mut().zip(&w.coverage) {
            *count += (hits > 0) as u64;
        }
    }
    Ok(failing
        .coverage
        .iter()
        .zip(e_p)
        .enumerate()
        .map(|(i, (&hits, e_p))| {
            let touched = hits > 0;
            StatementScore {
                statement_id: StatementId(i),
                touched,
                e_p,
                score: if touched { single_failure_score(e_p) } else { 0.0 },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub statement_id: StatementId,
    pub source_line: usize,
    pub e_p: u64,
    pub score: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousnessReport {
    /// Sorted by rank, then statement id.
    pub entries: Vec<ReportEntry>,
    pub touched_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_echo: Option<SearchConfig>,
}

/// Sort by descending score; equal scores share the mean of the positions
/// they occupy. Untouched statements (score 0) come last.
pub fn rank(design: &Design, scores: &[StatementScore]) -> SuspiciousnessReport {
    let mut order: Vec<&StatementScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.touched
            .cmp(&a.touched)
            .then(b.score.total_cmp(&a.score))
            .then(a.statement_id.cmp(&b.statement_id))
    });
    let mut entries = Vec::with_capacity(order.len());
    let mut start = 0;
    while start < order.len() {
        let key = (order[start].touched, order[start].score);
        let end = order[start..]
            .iter()
            .position(|s| (s.touched, s.score) != key)
            .map_or(order.len(), |n| start + n);
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for s in &order[start..end] {
            entries.push(ReportEntry {
                statement_id: s.statement_id,
                source_line: design
                    .statements
                    .get(s.statement_id.0)
                    .map_or(0, |st| st.source_line),
                e_p: s.e_p,
                score: s.score,
                rank,
            });
        }
        start = end;
    }
    SuspiciousnessReport {
        entries,
        touched_count: scores.iter().filter(|s| s.touched).count(),
        config_echo: None,
    }
}

impl SuspiciousnessReport {
    pub fn rank_of(&self, id: StatementId) -> Option<f64> {
        self.entries.iter().find(|e| e.statement_id == id).map(|e| e.rank)
    }

    /// Best (smallest) rank among `ids`.
    pub fn best_rank(&self, ids: &[StatementId]) -> Option<f64> {
        ids.iter()
            .filter_map(|&id| self.rank_of(id))
            .min_by(f64::total_cmp)
    }

    pub fn to_table(&self, design: &Design) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>6} | {:>4} | {:>5} | {:>8} | {:>4} | statement", "rank", "id", "line", "score", "e_p");
        let _ = writeln!(out, "{:-<6}-+-{:-<4}-+-{:-<5}-+-{:-<8}-+-{:-<4}-+-{:-<9}", "", "", "", "", "", "");
        for e in &self.entries {
            let text = design
                .statements
                .get(e.statement_id.0)
                .map_or("", |s| s.text.as_str());
            let _ = writeln!(
                out,
                "{:>6} | {:>4} | {:>5} | {:>8.4} | {:>4} | {}",
                format_rank(e.rank),
                format!("s{}", e.statement_id.0),
                e.source_line,
                e.score,
                e.e_p,
                text
            );
        }
        out
    }
}

fn format_rank(rank: f64) -> String {
    if rank.fract() == 0.0 {
        format!("{rank:.0}")
    } else {
        format!("{rank:.1}")
    }
}
