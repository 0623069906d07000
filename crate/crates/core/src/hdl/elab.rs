// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use super::parser::{DeclKind, Item, Module, SynExpr, SynExprKind, SynLValue, SynStmt};
use super::*;

pub(super) fn elaborate(module: &Module, source: &str) -> Result<Design, HdlError> {
    let lines: Vec<&str> = source.lines().collect();
    let mut el = Elaborator {
        lines,
        design: Design {
            name: module.name.clone(),
            signals: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            registers: Vec::new(),
            wires: Vec::new(),
            localparams: Vec::new(),
            processes: Vec::new(),
            settle_order: Vec::new(),
            statements: Vec::new(),
        },
        names: HashMap::new(),
        drivers: HashMap::new(),
    };
    el.declare(module)?;
    for item in &module.items {
        match item {
            Item::Decl(_) | Item::LocalParam { .. } => {}
            Item::Assign { target, expr, pos } => {
                let target_id = el.lookup_signal(target, *pos)?;
                let decl = el.design.signal(target_id).clone();
                if decl.role == SignalRole::Input {
                    return Err(semantic(*pos, format!("cannot assign to input {target}")));
                }
                if decl.role == SignalRole::Register {
                    return Err(semantic(
                        *pos,
                        format!("continuous assign to register {target}; registers are driven from always blocks"),
                    ));
                }
                el.claim_driver(target_id, Driver::Assign, *pos)?;
                let id = el.new_statement(StatementKind::ContinuousAssign, *pos);
                let expr = el.expr(expr)?;
                check_const_fits(&expr, decl.width, *pos)?;
                el.design.processes.push(Process::Assign(ContinuousAssign {
                    id,
                    target: target_id,
                    expr,
                }));
            }
            Item::Always { body } => {
                let block_index = el.design.processes.len();
                let body = el.stmts(body, block_index)?;
                el.design.processes.push(Process::Clocked(ClockedBlock { body }));
            }
        }
    }
    el.design.settle_order = settle_order(&el.design, module)?;
    Ok(el.design)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Driver {
    Assign,
    Block(usize),
}

enum Name {
    Signal(SignalId),
    Param(usize),
}

struct Elaborator<'a> {
    lines: Vec<&'a str>,
    design: Design,
    names: HashMap<String, Name>,
    drivers: HashMap<SignalId, Driver>,
}

fn semantic(pos: Pos, message: String) -> HdlError {
    HdlError::Semantic { pos, message }
}

impl Elaborator<'_> {
    fn declare(&mut self, module: &Module) -> Result<(), HdlError> {
        for item in &module.items {
            match item {
                Item::Decl(d) => {
                    if self.names.contains_key(&d.name) {
                        return Err(semantic(d.pos, format!("duplicate declaration of {}", d.name)));
                    }
                    // The clock is implicit: it is never part of the stimulus.
                    if d.name == "clk" {
                        if d.kind != DeclKind::Input || d.width != 1 {
                            return Err(semantic(d.pos, "`clk` must be a 1-bit input".into()));
                        }
                        continue;
                    }
                    let role = match d.kind {
                        DeclKind::Input => SignalRole::Input,
                        DeclKind::Output => SignalRole::Output,
                        DeclKind::OutputReg | DeclKind::Reg => SignalRole::Register,
                        DeclKind::Wire => SignalRole::Wire,
                    };
                    let reset_value = match &d.init {
                        Some(e) => {
                            let value = self.const_value(e)?;
                            if value & !width_mask(d.width) != 0 {
                                return Err(HdlError::WidthMismatch {
                                    pos: e.pos,
                                    message: format!(
                                        "initial value {value} does not fit {}-bit register {}",
                                        d.width, d.name
                                    ),
                                });
                            }
                            value
                        }
                        None => 0,
                    };
                    let id = SignalId(self.design.signals.len());
                    self.design.signals.push(SignalDecl {
                        name: d.name.clone(),
                        width: d.width,
                        role,
                        reset_value,
                        is_output: d.kind == DeclKind::OutputReg,
                    });
                    match d.kind {
                        DeclKind::Input => self.design.inputs.push(id),
                        DeclKind::Output => self.design.outputs.push(id),
                        DeclKind::OutputReg => {
                            self.design.outputs.push(id);
                            self.design.registers.push(id);
                        }
                        DeclKind::Reg => self.design.registers.push(id),
                        DeclKind::Wire => self.design.wires.push(id),
                    }
                    self.names.insert(d.name.clone(), Name::Signal(id));
                }
                Item::LocalParam { name, value, pos } => {
                    if self.names.contains_key(name) {
                        return Err(semantic(*pos, format!("duplicate declaration of {name}")));
                    }
                    let SynExprKind::Number { value, size, radix } = value.kind else {
                        return Err(HdlError::Unsupported {
                            pos: value.pos,
                            construct: "non-literal localparam value".into(),
                        });
                    };
                    check_literal(value, size, *pos)?;
                    self.names
                        .insert(name.clone(), Name::Param(self.design.localparams.len()));
                    self.design.localparams.push(LocalParam {
                        name: name.clone(),
                        value,
                        size,
                        radix,
                    });
                }
                Item::Assign { .. } | Item::Always { .. } => {}
            }
        }
        Ok(())
    }

    fn lookup_signal(&self, name: &str, pos: Pos) -> Result<SignalId, HdlError> {
        match self.names.get(name) {
            Some(Name::Signal(id)) => Ok(*id),
            Some(Name::Param(_)) => Err(semantic(pos, format!("{name} is a constant, not a signal"))),
            None if name == "clk" => Err(semantic(pos, "`clk` may only appear in the event control".into())),
            None => Err(HdlError::UndeclaredSignal {
                pos,
                name: name.to_string(),
            }),
        }
    }

    fn claim_driver(&mut self, id: SignalId, driver: Driver, pos: Pos) -> Result<(), HdlError> {
        match self.drivers.get(&id) {
            Some(existing) if *existing != driver => Err(semantic(
                pos,
                format!("{} has multiple drivers", self.design.signal(id).name),
            )),
            _ => {
                self.drivers.insert(id, driver);
                Ok(())
            }
        }
    }

    fn new_statement(&mut self, kind: StatementKind, pos: Pos) -> StatementId {
        let id = StatementId(self.design.statements.len());
        let text = self
            .lines
            .get(pos.line.saturating_sub(1))
            .map(|l| l.trim().to_string())
            .unwrap_or_default();
        self.design.statements.push(Statement {
            id,
            kind,
            source_line: pos.line,
            text,
        });
        id
    }

    fn const_value(&self, e: &SynExpr) -> Result<u64, HdlError> {
        match &e.kind {
            SynExprKind::Number { value, size, .. } => {
                check_literal(*value, *size, e.pos)?;
                Ok(*value)
            }
            SynExprKind::Ident(name) => match self.names.get(name) {
                Some(Name::Param(i)) => Ok(self.design.localparams[*i].value),
                Some(Name::Signal(_)) => Err(semantic(e.pos, format!("{name} is not a constant"))),
                None => Err(HdlError::UndeclaredSignal {
                    pos: e.pos,
                    name: name.clone(),
                }),
            },
            _ => Err(HdlError::Unsupported {
                pos: e.pos,
                construct: "non-literal constant expression".into(),
            }),
        }
    }

    fn expr(&self, e: &SynExpr) -> Result<Expr, HdlError> {
        Ok(match &e.kind {
            SynExprKind::Number { value, size, radix } => {
                check_literal(*value, *size, e.pos)?;
                Expr::constant(*value, *size, *radix, None)
            }
            SynExprKind::Ident(name) => match self.names.get(name) {
                Some(Name::Param(i)) => {
                    let p = &self.design.localparams[*i];
                    Expr::constant(p.value, p.size, p.radix, Some(p.name.clone()))
                }
                _ => {
                    let id = self.lookup_signal(name, e.pos)?;
                    Expr {
                        kind: ExprKind::Signal(id),
                        width: self.design.signal(id).width,
                    }
                }
            },
            SynExprKind::Bit(name, index) => {
                let signal = self.lookup_signal(name, e.pos)?;
                let index = self.expr(index)?;
                let width = self.design.signal(signal).width;
                if let Some(i) = index.as_const() {
                    if i >= width as u64 {
                        return Err(HdlError::WidthMismatch {
                            pos: e.pos,
                            message: format!("bit index {i} out of range for {width}-bit {name}"),
                        });
                    }
                }
                Expr {
                    kind: ExprKind::Bit {
                        signal,
                        index: Box::new(index),
                    },
                    width: 1,
                }
            }
            SynExprKind::Unary(op, operand) => Expr::unary(*op, self.expr(operand)?),
            SynExprKind::Binary(op, l, r) => Expr::binary(*op, self.expr(l)?, self.expr(r)?),
        })
    }

    fn lvalue(&mut self, lv: &SynLValue, block: usize) -> Result<LValue, HdlError> {
        let signal = self.lookup_signal(&lv.name, lv.pos)?;
        let decl = self.design.signal(signal).clone();
        if decl.role != SignalRole::Register {
            return Err(semantic(
                lv.pos,
                format!("procedural assignment to non-register {}", lv.name),
            ));
        }
        self.claim_driver(signal, Driver::Block(block), lv.pos)?;
        let bit = match &lv.bit {
            None => None,
            Some(e) => {
                let i = self.const_value(e)?;
                if i >= decl.width as u64 {
                    return Err(HdlError::WidthMismatch {
                        pos: e.pos,
                        message: format!("bit index {i} out of range for {}-bit {}", decl.width, lv.name),
                    });
                }
                Some(i as u32)
            }
        };
        Ok(LValue { signal, bit })
    }

    fn stmts(&mut self, body: &[SynStmt], block: usize) -> Result<Vec<Stmt>, HdlError> {
        body.iter().map(|s| self.stmt(s, block)).collect()
    }

    fn stmt(&mut self, s: &SynStmt, block: usize) -> Result<Stmt, HdlError> {
        Ok(match s {
            SynStmt::Assign {
                target,
                expr,
                blocking,
                pos,
            } => {
                let kind = if *blocking {
                    StatementKind::BlockingAssign
                } else {
                    StatementKind::NonblockingAssign
                };
                let id = self.new_statement(kind, *pos);
                let target = self.lvalue(target, block)?;
                let width = match target.bit {
                    Some(_) => 1,
                    None => self.design.signal(target.signal).width,
                };
                let expr = self.expr(expr)?;
                check_const_fits(&expr, width, *pos)?;
                Stmt::Assign {
                    id,
                    target,
                    expr,
                    blocking: *blocking,
                }
            }
            SynStmt::If {
                cond,
                then_body,
                else_branch,
                pos,
            } => {
                let cond = self.expr(cond)?;
                let then_id = self.new_statement(StatementKind::IfArm, *pos);
                let then_body = self.stmts(then_body, block)?;
                let else_arm = match else_branch {
                    Some((epos, body)) => {
                        let id = self.new_statement(StatementKind::IfArm, *epos);
                        Some(Arm {
                            id,
                            body: self.stmts(body, block)?,
                        })
                    }
                    None => None,
                };
                Stmt::If {
                    cond,
                    then_arm: Arm {
                        id: then_id,
                        body: then_body,
                    },
                    else_arm,
                }
            }
            SynStmt::Case {
                subject,
                arms,
                default,
            } => {
                let subject = self.expr(subject)?;
                let mut out = Vec::with_capacity(arms.len());
                for arm in arms {
                    let mut labels = Vec::with_capacity(arm.labels.len());
                    for l in &arm.labels {
                        let label = self.expr(l)?;
                        let Some(v) = label.as_const() else {
                            return Err(HdlError::Unsupported {
                                pos: l.pos,
                                construct: "non-constant case label".into(),
                            });
                        };
                        if v & !width_mask(subject.width) != 0 {
                            return Err(HdlError::WidthMismatch {
                                pos: l.pos,
                                message: format!(
                                    "case label {v} does not fit {}-bit case subject",
                                    subject.width
                                ),
                            });
                        }
                        labels.push(label);
                    }
                    let id = self.new_statement(StatementKind::CaseArm, arm.pos);
                    let body = self.stmts(&arm.body, block)?;
                    out.push(CaseArm {
                        labels,
                        arm: Arm { id, body },
                    });
                }
                let default = match default {
                    Some((dpos, body)) => {
                        let id = self.new_statement(StatementKind::CaseArm, *dpos);
                        Some(Arm {
                            id,
                            body: self.stmts(body, block)?,
                        })
                    }
                    None => None,
                };
                Stmt::Case {
                    subject,
                    arms: out,
                    default,
                }
            }
        })
    }
}

fn check_literal(value: u64, size: Option<u32>, pos: Pos) -> Result<(), HdlError> {
    if let Some(size) = size {
        if size == 0 || size > 64 {
            return Err(HdlError::WidthMismatch {
                pos,
                message: format!("literal size {size} outside 1..=64"),
            });
        }
        if value & !width_mask(size) != 0 {
            return Err(HdlError::WidthMismatch {
                pos,
                message: format!("literal value {value} does not fit in {size} bits"),
            });
        }
    }
    Ok(())
}

/// A constant right-hand side must fit the target.
fn check_const_fits(expr: &Expr, width: u32, pos: Pos) -> Result<(), HdlError> {
    if let ExprKind::Const { value, size, .. } = &expr.kind {
        let too_wide_literal = size.is_some_and(|s| s > width);
        if *value & !width_mask(width) != 0 || too_wide_literal {
            return Err(HdlError::WidthMismatch {
                pos,
                message: format!(
                    "constant {value}{} assigned to {width}-bit target",
                    size.map(|s| format!(" ({s}-bit)")).unwrap_or_default()
                ),
            });
        }
    }
    Ok(())
}

fn read_set(expr: &Expr, out: &mut BTreeSet<SignalId>) {
    match &expr.kind {
        ExprKind::Const { .. } => {}
        ExprKind::Signal(id) => {
            out.insert(*id);
        }
        ExprKind::Bit { signal, index } => {
            out.insert(*signal);
            read_set(index, out);
        }
        ExprKind::Unary(_, e) => read_set(e, out),
        ExprKind::Binary(_, l, r) => {
            read_set(l, out);
            read_set(r, out);
        }
    }
}

/// Kahn's algorithm over continuous assigns, preferring source order among
/// ready assigns so the result is deterministic.
fn settle_order(design: &Design, module: &Module) -> Result<Vec<usize>, HdlError> {
    let assigns: Vec<(usize, &ContinuousAssign)> = design
        .processes
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            Process::Assign(a) => Some((i, a)),
            Process::Clocked(_) => None,
        })
        .collect();
    let by_target: HashMap<SignalId, usize> = assigns
        .iter()
        .enumerate()
        .map(|(k, (_, a))| (a.target, k))
        .collect();
    let deps: Vec<Vec<usize>> = assigns
        .iter()
        .map(|(_, a)| {
            let mut reads = BTreeSet::new();
            read_set(&a.expr, &mut reads);
            reads.iter().filter_map(|s| by_target.get(s).copied()).collect()
        })
        .collect();
    let mut indegree: Vec<usize> = deps.iter().map(|d| d.len()).collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); assigns.len()];
    for (k, d) in deps.iter().enumerate() {
        for &dep in d {
            users[dep].push(k);
        }
    }
    let mut ready: BTreeSet<usize> = (0..assigns.len()).filter(|&k| indegree[k] == 0).collect();
    let mut order = Vec::with_capacity(assigns.len());
    while let Some(k) = ready.pop_first() {
        order.push(assigns[k].0);
        for &u in &users[k] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() != assigns.len() {
        let stuck: Vec<usize> = (0..assigns.len()).filter(|&k| indegree[k] > 0).collect();
        let names: Vec<&str> = stuck
            .iter()
            .map(|&k| design.signal(assigns[k].1.target).name.as_str())
            .collect();
        let first = &design.signals[assigns[stuck[0]].1.target.0].name;
        let pos = module
            .items
            .iter()
            .find_map(|it| match it {
                Item::Assign { target, pos, .. } if target == first => Some(*pos),
                _ => None,
            })
            .unwrap_or_default();
        return Err(HdlError::CombinationalLoop {
            pos,
            signals: names.join(", "),
        });
    }
    Ok(order)
}

/// Re-check structural invariants of a design that was edited in memory.
pub fn validate(design: &Design) -> Result<(), HdlError> {
    for (i, s) in design.statements.iter().enumerate() {
        if s.id.0 != i {
            return Err(semantic(Pos::default(), format!("statement ids not dense at {i}")));
        }
    }
    let mut seen = vec![false; design.statements.len()];
    let mut mark = |id: StatementId, kind: StatementKind| -> Result<(), HdlError> {
        let pos = Pos {
            line: design.statements.get(id.0).map_or(0, |s| s.source_line),
            col: 1,
        };
        match seen.get_mut(id.0) {
            Some(flag) if !*flag && design.statements[id.0].kind == kind => {
                *flag = true;
                Ok(())
            }
            _ => Err(semantic(pos, format!("statement {id} missing, duplicated or of the wrong kind"))),
        }
    };
    fn walk(
        design: &Design,
        body: &[Stmt],
        mark: &mut dyn FnMut(StatementId, StatementKind) -> Result<(), HdlError>,
    ) -> Result<(), HdlError> {
        for s in body {
            match s {
                Stmt::Assign {
                    id,
                    target,
                    expr,
                    blocking,
                } => {
                    let kind = if *blocking {
                        StatementKind::BlockingAssign
                    } else {
                        StatementKind::NonblockingAssign
                    };
                    mark(*id, kind)?;
                    let width = match target.bit {
                        Some(_) => 1,
                        None => design.signal(target.signal).width,
                    };
                    let pos = Pos {
                        line: design.statement(*id).source_line,
                        col: 1,
                    };
                    check_const_fits(expr, width, pos)?;
                }
                Stmt::If {
                    then_arm, else_arm, ..
                } => {
                    mark(then_arm.id, StatementKind::IfArm)?;
                    walk(design, &then_arm.body, mark)?;
                    if let Some(e) = else_arm {
                        mark(e.id, StatementKind::IfArm)?;
                        walk(design, &e.body, mark)?;
                    }
                }
                Stmt::Case {
                    subject,
                    arms,
                    default,
                } => {
                    for arm in arms {
                        mark(arm.arm.id, StatementKind::CaseArm)?;
                        for l in &arm.labels {
                            let v = l.as_const().unwrap_or(0);
                            if v & !width_mask(subject.width) != 0 {
                                return Err(HdlError::WidthMismatch {
                                    pos: Pos {
                                        line: design.statement(arm.arm.id).source_line,
                                        col: 1,
                                    },
                                    message: format!("case label {v} does not fit {}-bit subject", subject.width),
                                });
                            }
                        }
                        walk(design, &arm.arm.body, mark)?;
                    }
                    if let Some(d) = default {
                        mark(d.id, StatementKind::CaseArm)?;
                        walk(design, &d.body, mark)?;
                    }
                }
            }
        }
        Ok(())
    }
    for p in &design.processes {
        match p {
            Process::Assign(a) => {
                mark(a.id, StatementKind::ContinuousAssign)?;
                let pos = Pos {
                    line: design.statement(a.id).source_line,
                    col: 1,
                };
                check_const_fits(&a.expr, design.signal(a.target).width, pos)?;
            }
            Process::Clocked(b) => walk(design, &b.body, &mut mark)?,
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(semantic(Pos::default(), format!("statement s{i} not reachable")));
    }
    for s in &design.signals {
        if s.width == 0 || s.width > 64 {
            return Err(HdlError::WidthMismatch {
                pos: Pos::default(),
                message: format!("{} has width {}", s.name, s.width),
            });
        }
    }
    Ok(())
}
