// SPDX-License-Identifier: Apache-2.0

//! Golden-model validator: a test case fails when any output of the buggy
//! design differs from the golden design in any cycle.

use serde::{Deserialize, Serialize};

use crate::hdl::Design;
use crate::sim::{simulate, ExecutionTrace, SimError, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub first_divergence_cycle: Option<usize>,
    pub output_rows_compared: usize,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("interface mismatch between golden and buggy designs: {0}")]
    Interface(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Both designs must expose identical input and output ports (name, width, order).
pub fn check_interfaces(golden: &Design, buggy: &Design) -> Result<(), OracleError> {
    let ports = |d: &Design, ids: &[crate::hdl::SignalId]| -> Vec<(String, u32)> {
        ids.iter()
            .map(|&i| (d.signal(i).name.clone(), d.signal(i).width))
            .collect()
    };
    if ports(golden, &golden.inputs) != ports(buggy, &buggy.inputs) {
        return Err(OracleError::Interface("inputs differ".into()));
    }
    if ports(golden, &golden.outputs) != ports(buggy, &buggy.outputs) {
        return Err(OracleError::Interface("outputs differ".into()));
    }
    Ok(())
}

/// Compare the output rows of two traces cycle by cycle.
pub fn compare_outputs(golden: &ExecutionTrace, buggy: &ExecutionTrace) -> Verdict {
    let rows = golden.outputs.len().min(buggy.outputs.len());
    let first = golden
        .outputs
        .iter()
        .zip(&buggy.outputs)
        .position(|(g, b)| g != b);
    Verdict {
        status: if first.is_some() { Status::Fail } else { Status::Pass },
        first_divergence_cycle: first,
        output_rows_compared: rows,
    }
}

/// Classify `case`; only the golden design's outputs are consulted.
pub fn classify(golden: &Design, buggy: &Design, case: &TestCase) -> Result<Verdict, OracleError> {
    check_interfaces(golden, buggy)?;
    let g = simulate(golden, case)?;
    let b = simulate(buggy, case)?;
    Ok(compare_outputs(&g, &b))
}
