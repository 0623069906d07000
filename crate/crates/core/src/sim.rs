// SPDX-License-Identifier: Apache-2.0

//! Two-state, cycle-accurate interpreter.
//!
//! Each cycle: drive the inputs, settle the continuous assigns, run every
//! clocked block top to bottom (blocking writes land immediately,
//! nonblocking writes are queued), commit the queue, settle again, then
//! sample outputs and record register transitions. Registers start at their
//! declared reset value; that value is logged as the cycle-0 transition.

use serde::{Deserialize, Serialize};

use crate::hdl::{
    width_mask, BinaryOp, Design, Expr, ExprKind, LValue, Process, SignalId, Stmt, UnaryOp,
};

/// Stimulus: values of the design inputs over `t` clock cycles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub signals: Vec<String>,
    /// One row per cycle, one column per entry of `signals`.
    pub cycles: Vec<Vec<u64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("test case signals [{found}] do not match design inputs [{expected}]")]
    SignalMismatch { expected: String, found: String },
    #[error("cycle {cycle}: value {value} exceeds the {width}-bit range of {signal}")]
    ValueTooWide {
        cycle: usize,
        signal: String,
        value: u64,
        width: u32,
    },
    #[error("cycle {cycle}: expected {expected} values, found {found}")]
    RowLength {
        cycle: usize,
        expected: usize,
        found: usize,
    },
    #[error("test case has no cycles")]
    Empty,
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Parse `123`, `0x7f` or `0b101`.
pub fn parse_value(text: &str) -> Option<u64> {
    let t = text.trim().replace('_', "");
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(h, 16).ok()
    } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        u64::from_str_radix(b, 2).ok()
    } else {
        t.parse().ok()
    }
}

impl TestCase {
    pub fn new(id: impl Into<String>, signals: Vec<String>, cycles: Vec<Vec<u64>>) -> TestCase {
        TestCase {
            id: id.into(),
            signals,
            cycles,
        }
    }

    /// t
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Header row of signal names, one row per cycle.
    pub fn from_csv(id: impl Into<String>, text: &str) -> Result<TestCase, SimError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| SimError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        };
        let signals: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut cycles = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let row = record
                .iter()
                .map(|field| {
                    parse_value(field).ok_or_else(|| SimError::Csv {
                        line,
                        message: format!("invalid value {field:?}"),
                    })
                })
                .collect::<Result<Vec<u64>, SimError>>()?;
            cycles.push(row);
        }
        Ok(TestCase::new(id, signals, cycles))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        w.write_record(&self.signals).expect("in-memory csv");
        for row in &self.cycles {
            w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// The first `cycles` rows.
    pub fn prefix(&self, cycles: usize) -> TestCase {
        TestCase::new(
            self.id.clone(),
            self.signals.clone(),
            self.cycles[..cycles.min(self.cycles.len())].to_vec(),
        )
    }

    /// Check shape and value ranges against a design's inputs.
    pub fn check(&self, design: &Design) -> Result<(), SimError> {
        let expected = design.input_names();
        if self.signals.len() != expected.len() || self.signals.iter().zip(&expected).any(|(a, b)| a != b) {
            return Err(SimError::SignalMismatch {
                expected: expected.join(", "),
                found: self.signals.join(", "),
            });
        }
        if self.cycles.is_empty() {
            return Err(SimError::Empty);
        }
        for (cycle, row) in self.cycles.iter().enumerate() {
            if row.len() != expected.len() {
                return Err(SimError::RowLength {
                    cycle,
                    expected: expected.len(),
                    found: row.len(),
                });
            }
            for (&value, &id) in row.iter().zip(&design.inputs) {
                let decl = design.signal(id);
                if value & !decl.mask() != 0 {
                    return Err(SimError::ValueTooWide {
                        cycle,
                        signal: decl.name.clone(),
                        value,
                        width: decl.width,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A register taking `value` after cycle `cycle` (0 = reset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub cycle: usize,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// Hit count per statement id.
    pub coverage: Vec<u64>,
    /// One value-change sequence per register, in `Design::registers` order.
    pub transitions: Vec<Vec<Transition>>,
    /// Output values after each cycle, in `Design::outputs` order.
    pub outputs: Vec<Vec<u64>>,
}

impl ExecutionTrace {
    /// Register `i`'s transition values with the timestamps dropped.
    pub fn values(&self, register: usize) -> impl Iterator<Item = u64> + '_ {
        self.transitions[register].iter().map(|t| t.value)
    }

    pub fn touched(&self, id: usize) -> bool {
        self.coverage[id] > 0
    }
}

/// Mutable interpreter state for one design.
pub struct Simulator<'d> {
    design: &'d Design,
    values: Vec<u64>,
    coverage: Vec<u64>,
    pending: Vec<(LValue, u64)>,
}

impl<'d> Simulator<'d> {
    pub fn new(design: &'d Design) -> Self {
        Simulator {
            design,
            values: vec![0; design.signals.len()],
            coverage: vec![0; design.statements.len()],
            pending: Vec::new(),
        }
    }

    pub fn run(&mut self, case: &TestCase) -> Result<ExecutionTrace, SimError> {
        case.check(self.design)?;
        let design = self.design;
        for (v, s) in self.values.iter_mut().zip(&design.signals) {
            *v = s.reset_value;
        }
        self.coverage.iter_mut().for_each(|c| *c = 0);

        let mut transitions: Vec<Vec<Transition>> = design
            .registers
            .iter()
            .map(|&r| {
                vec![Transition {
                    cycle: 0,
                    value: self.values[r.0],
                }]
            })
            .collect();
        let mut outputs = Vec::with_capacity(case.len());

        for (j, row) in case.cycles.iter().enumerate() {
            for (&value, &id) in row.iter().zip(&design.inputs) {
                self.values[id.0] = value;
            }
            self.settle(false);
            for p in &design.processes {
                if let Process::Clocked(block) = p {
                    self.exec(&block.body);
                }
            }
            for (lv, value) in std::mem::take(&mut self.pending) {
                self.write(lv, value);
            }
            self.settle(true);
            outputs.push(design.outputs.iter().map(|o| self.values[o.0]).collect());
            for (seq, &r) in transitions.iter_mut().zip(&design.registers) {
                let v = self.values[r.0];
                if seq.last().map(|t| t.value) != Some(v) {
                    seq.push(Transition { cycle: j + 1, value: v });
                }
            }
        }

        Ok(ExecutionTrace {
            coverage: self.coverage.clone(),
            transitions,
            outputs,
        })
    }

    /// Continuous assigns are counted once per cycle, on the final settle.
    fn settle(&mut self, count: bool) {
        let design = self.design;
        for &i in &design.settle_order {
            let Process::Assign(a) = &design.processes[i] else {
                unreachable!("settle order only lists assigns")
            };
            let v = self.eval(&a.expr) & design.signal(a.target).mask();
            self.values[a.target.0] = v;
            if count {
                self.coverage[a.id.0] += 1;
            }
        }
    }

    fn write(&mut self, lv: LValue, value: u64) {
        let decl = self.design.signal(lv.signal);
        let slot = &mut self.values[lv.signal.0];
        match lv.bit {
            None => *slot = value & decl.mask(),
            Some(b) => {
                *slot = (*slot & !(1u64 << b)) | ((value & 1) << b);
            }
        }
    }

    fn exec(&mut self, body: &[Stmt]) {
        for s in body {
            match s {
                Stmt::Assign {
                    id,
                    target,
                    expr,
                    blocking,
                } => {
                    self.coverage[id.0] += 1;
                    let v = self.eval(expr);
                    if *blocking {
                        self.write(*target, v);
                    } else {
                        self.pending.push((*target, v));
                    }
                }
                Stmt::If {
                    cond,
                    then_arm,
                    else_arm,
                } => {
                    if self.eval(cond) != 0 {
                        self.coverage[then_arm.id.0] += 1;
                        self.exec(&then_arm.body);
                    } else if let Some(e) = else_arm {
                        self.coverage[e.id.0] += 1;
                        self.exec(&e.body);
                    }
                }
                Stmt::Case {
                    subject,
                    arms,
                    default,
                } => {
                    let v = self.eval(subject);
                    let hit = arms
                        .iter()
                        .find(|a| a.labels.iter().any(|l| l.as_const() == Some(v)))
                        .map(|a| &a.arm)
                        .or(default.as_ref());
                    if let Some(arm) = hit {
                        self.coverage[arm.id.0] += 1;
                        self.exec(&arm.body);
                    }
                }
            }
        }
    }

    fn read(&self, id: SignalId) -> u64 {
        self.values[id.0]
    }

    fn eval(&self, e: &Expr) -> u64 {
        let mask = width_mask(e.width);
        match &e.kind {
            ExprKind::Const { value, .. } => value & mask,
            ExprKind::Signal(id) => self.read(*id),
            ExprKind::Bit { signal, index } => {
                let i = self.eval(index);
                if i >= self.design.signal(*signal).width as u64 {
                    0
                } else {
                    (self.read(*signal) >> i) & 1
                }
            }
            ExprKind::Unary(op, operand) => {
                let v = self.eval(operand);
                match op {
                    UnaryOp::Not => !v & mask,
                    UnaryOp::LogicalNot => (v == 0) as u64,
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l);
                let b = self.eval(r);
                let v = match op {
                    BinaryOp::Add => a.wrapping_add(b),
                    BinaryOp::Sub => a.wrapping_sub(b),
                    BinaryOp::Mul => a.wrapping_mul(b),
                    BinaryOp::And => a & b,
                    BinaryOp::Or => a | b,
                    BinaryOp::Xor => a ^ b,
                    BinaryOp::LogicalAnd => (a != 0 && b != 0) as u64,
                    BinaryOp::LogicalOr => (a != 0 || b != 0) as u64,
                    BinaryOp::Eq => (a == b) as u64,
                    BinaryOp::Ne => (a != b) as u64,
                    BinaryOp::Lt => (a < b) as u64,
                    BinaryOp::Le => (a <= b) as u64,
                    BinaryOp::Gt => (a > b) as u64,
                    BinaryOp::Ge => (a >= b) as u64,
                    BinaryOp::Shl => a.checked_shl(b.min(64) as u32).unwrap_or(0),
                    BinaryOp::Shr => a.checked_shr(b.min(64) as u32).unwrap_or(0),
                };
                v & mask
            }
        }
    }
}

/// Run `case` on `design` from reset.
pub fn simulate(design: &Design, case: &TestCase) -> Result<ExecutionTrace, SimError> {
    Simulator::new(design).run(case)
}
