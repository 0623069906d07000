// SPDX-License-Identifier: Apache-2.0

//! Front end for the restricted synchronous HDL accepted by the toolchain.
//!
//! A design is a single flat module: ANSI-style ports, `reg`/`wire`
//! declarations, `localparam` constants, `assign` statements and
//! `always @(posedge clk)` blocks containing `begin/end`, `if/else`, `case`
//! and blocking/nonblocking assignments. Elaboration assigns every
//! assignment and every if/case arm a dense statement id in source order;
//! those ids are the coverpoints of the coverage vector.

mod elab;
mod lexer;
mod parser;
mod printer;

use serde::{Deserialize, Serialize};
use std::fmt;

pub use elab::validate;
pub use printer::print_design;
pub(crate) use printer::render_statement;

/// Dense index of a coverpoint inside a [`Design`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub usize);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Index into [`Design::signals`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRole {
    Input,
    Output,
    Register,
    Wire,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDecl {
    pub name: String,
    pub width: u32,
    pub role: SignalRole,
    /// Initial value of a register; always 0 for other roles.
    pub reset_value: u64,
    /// `output reg` ports are registers that are also sampled as outputs.
    pub is_output: bool,
}

impl SignalDecl {
    pub fn mask(&self) -> u64 {
        width_mask(self.width)
    }
}

pub fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementKind {
    ContinuousAssign,
    BlockingAssign,
    NonblockingAssign,
    IfArm,
    CaseArm,
}

/// One coverpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: StatementId,
    pub kind: StatementKind,
    pub source_line: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radix {
    Decimal,
    Hex,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    LogicalNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    LogicalAnd,
    LogicalOr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::LogicalAnd => "&&",
            BinaryOp::LogicalOr => "||",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Mul => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::And => 5,
            BinaryOp::Xor => 4,
            BinaryOp::Or => 3,
            BinaryOp::LogicalAnd => 2,
            BinaryOp::LogicalOr => 1,
        }
    }

    fn is_boolean(self) -> bool {
        matches!(
            self,
            BinaryOp::LogicalAnd
                | BinaryOp::LogicalOr
                | BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Const {
        value: u64,
        /// Explicit `N'...` size, if written.
        size: Option<u32>,
        radix: Radix,
        /// Set when the constant came from a `localparam` reference.
        name: Option<String>,
    },
    Signal(SignalId),
    Bit {
        signal: SignalId,
        index: Box<Expr>,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Elaborated expression with its self-determined width.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub width: u32,
}

/// Width of an unsized decimal literal.
pub const UNSIZED_WIDTH: u32 = 32;

impl Expr {
    pub fn constant(value: u64, size: Option<u32>, radix: Radix, name: Option<String>) -> Expr {
        Expr {
            width: size.unwrap_or(UNSIZED_WIDTH),
            kind: ExprKind::Const {
                value,
                size,
                radix,
                name,
            },
        }
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        let width = match op {
            UnaryOp::Not => operand.width,
            UnaryOp::LogicalNot => 1,
        };
        Expr {
            kind: ExprKind::Unary(op, Box::new(operand)),
            width,
        }
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        let width = if op.is_boolean() {
            1
        } else if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
            lhs.width
        } else {
            lhs.width.max(rhs.width).min(64)
        };
        Expr {
            kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            width,
        }
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind {
            ExprKind::Const { value, .. } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LValue {
    pub signal: SignalId,
    pub bit: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub id: StatementId,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub arm: Arm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        id: StatementId,
        target: LValue,
        expr: Expr,
        blocking: bool,
    },
    If {
        cond: Expr,
        then_arm: Arm,
        else_arm: Option<Arm>,
    },
    Case {
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Option<Arm>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuousAssign {
    pub id: StatementId,
    pub target: SignalId,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockedBlock {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Process {
    Assign(ContinuousAssign),
    Clocked(ClockedBlock),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalParam {
    pub name: String,
    pub value: u64,
    pub size: Option<u32>,
    pub radix: Radix,
}

/// An elaborated, statement-instrumented single-module design.
///
/// Immutable after elaboration; share it freely between threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub name: String,
    pub signals: Vec<SignalDecl>,
    pub inputs: Vec<SignalId>,
    pub outputs: Vec<SignalId>,
    pub registers: Vec<SignalId>,
    pub wires: Vec<SignalId>,
    pub localparams: Vec<LocalParam>,
    /// Source order.
    pub processes: Vec<Process>,
    /// Indices into `processes` of the continuous assigns, in dependency order.
    pub settle_order: Vec<usize>,
    pub statements: Vec<Statement>,
}

/// A coverpoint as reported to users: statement id plus source line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverpoint {
    pub id: StatementId,
    pub source_line: usize,
}

impl Design {
    pub fn signal(&self, id: SignalId) -> &SignalDecl {
        &self.signals[id.0]
    }

    pub fn signal_by_name(&self, name: &str) -> Option<SignalId> {
        self.signals.iter().position(|s| s.name == name).map(SignalId)
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|&id| self.signal(id).name.as_str()).collect()
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|&id| self.signal(id).name.as_str()).collect()
    }

    /// z
    pub fn statement_count(&self) -> usize {
        self.statements.len()
    }

    /// k
    pub fn register_count(&self) -> usize {
        self.registers.len()
    }

    pub fn statement(&self, id: StatementId) -> &Statement {
        &self.statements[id.0]
    }

    pub fn localparam_named(&self, value: u64) -> Option<&LocalParam> {
        self.localparams.iter().find(|p| p.value == value)
    }
}

/// Parse and elaborate design source text.
pub fn parse_design(source: &str) -> Result<Design, HdlError> {
    let module = parser::parse(source)?;
    elab::elaborate(&module, source)
}

/// All coverpoints in statement-id order.
pub fn enumerate_coverpoints(design: &Design) -> Vec<Coverpoint> {
    design
        .statements
        .iter()
        .map(|s| Coverpoint {
            id: s.id,
            source_line: s.source_line,
        })
        .collect()
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HdlError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: undeclared signal {name}")]
    UndeclaredSignal { pos: Pos, name: String },
    #[error("{pos}: width mismatch: {message}")]
    WidthMismatch { pos: Pos, message: String },
    #[error("{pos}: combinational loop detected through {signals}")]
    CombinationalLoop { pos: Pos, signals: String },
    #[error("{pos}: unsupported construct: {construct}")]
    Unsupported { pos: Pos, construct: String },
    #[error("{pos}: {message}")]
    Semantic { pos: Pos, message: String },
}

impl HdlError {
    pub fn pos(&self) -> Pos {
        match self {
            HdlError::Syntax { pos, .. }
            | HdlError::UndeclaredSignal { pos, .. }
            | HdlError::WidthMismatch { pos, .. }
            | HdlError::CombinationalLoop { pos, .. }
            | HdlError::Unsupported { pos, .. }
            | HdlError::Semantic { pos, .. } => *pos,
        }
    }

    /// `file:line:col: message` form used by the command line.
    pub fn diagnostic(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}
