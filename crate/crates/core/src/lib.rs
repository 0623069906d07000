// SPDX-License-Identifier: Apache-2.0

//! Bug localization for small synchronous RTL designs.
//!
//! Given a buggy design, its golden reference and one failing test case,
//! [`witgen`] searches for passing "witness" test cases whose execution
//! resembles the failing one, and [`sbfl`] ranks statements by how rarely
//! the witnesses execute them.

pub mod bench;
pub mod cli;
pub mod hdl;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod sbfl;
pub mod sim;
pub mod witgen;

pub use hdl::{enumerate_coverpoints, parse_design, Design, StatementId};
pub use metrics::DistanceWeights;
pub use oracle::{classify, Status, Verdict};
pub use sbfl::{rank, suspiciousness, SuspiciousnessReport};
pub use sim::{simulate, ExecutionTrace, TestCase};
pub use witgen::{generate_witnesses, SearchConfig, SearchMode, WitnessSet};

use crate::witgen::WitgenError;

/// Full pipeline: search for witnesses, then rank statements.
///
/// In degraded mode (no witnesses) every touched statement scores 1.
pub fn localize(
    golden: &Design,
    buggy: &Design,
    c_b: &TestCase,
    cfg: &SearchConfig,
    constraints: &witgen::InputConstraints,
) -> Result<(WitnessSet, SuspiciousnessReport), WitgenError> {
    let set = witgen::generate_witnesses_constrained(golden, buggy, c_b, cfg, constraints)?;
    let scores = suspiciousness(&set.bug_trace, set.traces())
        .expect("witness traces come from the same design");
    let mut report = rank(buggy, &scores);
    report.config_echo = Some(set.config.clone());
    Ok((set, report))
}
