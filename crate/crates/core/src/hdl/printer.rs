// SPDX-License-Identifier: Apache-2.0

//! Canonical pretty-printer; its output re-parses to the same coverpoint list.

use std::fmt::Write;

use super::*;

pub fn print_design(design: &Design) -> String {
    let mut out = String::new();
    let has_clock = design.processes.iter().any(|p| matches!(p, Process::Clocked(_)));
    let mut ports = Vec::new();
    if has_clock {
        ports.push("input clk".to_string());
    }
    for s in &design.signals {
        let decl = match s.role {
            SignalRole::Input => format!("input {}{}", range(s.width), s.name),
            SignalRole::Output => format!("output {}{}", range(s.width), s.name),
            SignalRole::Register if s.is_output => {
                format!("output reg {}{}{}", range(s.width), s.name, init(s))
            }
            _ => continue,
        };
        ports.push(decl);
    }
    let _ = writeln!(out, "module {}(", design.name);
    for (i, p) in ports.iter().enumerate() {
        let sep = if i + 1 < ports.len() { "," } else { "" };
        let _ = writeln!(out, "  {p}{sep}");
    }
    out.push_str(");\n");
    for s in &design.signals {
        match s.role {
            SignalRole::Register if !s.is_output => {
                let _ = writeln!(out, "  reg {}{}{};", range(s.width), s.name, init(s));
            }
            SignalRole::Wire => {
                let _ = writeln!(out, "  wire {}{};", range(s.width), s.name);
            }
            _ => {}
        }
    }
    for p in &design.localparams {
        let _ = writeln!(out, "  localparam {} = {};", p.name, literal(p.value, p.size, p.radix));
    }
    for p in &design.processes {
        match p {
            Process::Assign(a) => {
                let _ = writeln!(
                    out,
                    "  assign {} = {};",
                    design.signal(a.target).name,
                    expr(design, &a.expr)
                );
            }
            Process::Clocked(b) => {
                out.push_str("  always @(posedge clk) begin\n");
                for s in &b.body {
                    stmt(design, s, 2, &mut out);
                }
                out.push_str("  end\n");
            }
        }
    }
    out.push_str("endmodule\n");
    out
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

fn init(s: &SignalDecl) -> String {
    if s.reset_value == 0 {
        String::new()
    } else {
        format!(" = {}'d{}", s.width, s.reset_value)
    }
}

pub(crate) fn literal(value: u64, size: Option<u32>, radix: Radix) -> String {
    let prefix = size.map(|s| s.to_string()).unwrap_or_default();
    match (radix, size) {
        (Radix::Decimal, None) => value.to_string(),
        (Radix::Decimal, Some(_)) => format!("{prefix}'d{value}"),
        (Radix::Hex, _) => format!("{prefix}'h{value:X}"),
        (Radix::Binary, Some(s)) => format!("{prefix}'b{value:0width$b}", width = s as usize),
        (Radix::Binary, None) => format!("'b{value:b}"),
    }
}

pub(crate) fn expr(design: &Design, e: &Expr) -> String {
    match &e.kind {
        ExprKind::Const {
            value,
            size,
            radix,
            name,
        } => match name {
            Some(n) => n.clone(),
            None => literal(*value, *size, *radix),
        },
        ExprKind::Signal(id) => design.signal(*id).name.clone(),
        ExprKind::Bit { signal, index } => {
            format!("{}[{}]", design.signal(*signal).name, expr(design, index))
        }
        ExprKind::Unary(op, operand) => {
            let sym = match op {
                UnaryOp::Not => "~",
                UnaryOp::LogicalNot => "!",
            };
            match operand.kind {
                ExprKind::Binary(..) => format!("{sym}({})", expr(design, operand)),
                _ => format!("{sym}{}", expr(design, operand)),
            }
        }
        ExprKind::Binary(op, l, r) => {
            let wrap = |child: &Expr, right: bool| {
                let s = expr(design, child);
                match child.kind {
                    ExprKind::Binary(cop, ..)
                        if cop.precedence() < op.precedence()
                            || (right && cop.precedence() == op.precedence()) =>
                    {
                        format!("({s})")
                    }
                    _ => s,
                }
            };
            format!("{} {} {}", wrap(l, false), op.symbol(), wrap(r, true))
        }
    }
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn body(design: &Design, stmts: &[Stmt], depth: usize, out: &mut String) {
    out.push_str(" begin\n");
    for s in stmts {
        stmt(design, s, depth + 1, out);
    }
    indent(depth, out);
    out.push_str("end\n");
}

pub(crate) fn lvalue(design: &Design, lv: &LValue) -> String {
    match lv.bit {
        Some(b) => format!("{}[{b}]", design.signal(lv.signal).name),
        None => design.signal(lv.signal).name.clone(),
    }
}

fn stmt(design: &Design, s: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    match s {
        Stmt::Assign {
            target,
            expr: e,
            blocking,
            ..
        } => {
            let op = if *blocking { "=" } else { "<=" };
            let _ = writeln!(out, "{} {op} {};", lvalue(design, target), expr(design, e));
        }
        Stmt::If {
            cond,
            then_arm,
            else_arm,
        } => {
            let _ = write!(out, "if ({})", expr(design, cond));
            body(design, &then_arm.body, depth, out);
            if let Some(e) = else_arm {
                indent(depth, out);
                out.push_str("else");
                body(design, &e.body, depth, out);
            }
        }
        Stmt::Case {
            subject,
            arms,
            default,
        } => {
            let _ = writeln!(out, "case ({})", expr(design, subject));
            for arm in arms {
                indent(depth + 1, out);
                let labels: Vec<String> = arm.labels.iter().map(|l| expr(design, l)).collect();
                out.push_str(&labels.join(", "));
                out.push(':');
                body(design, &arm.arm.body, depth + 1, out);
            }
            if let Some(d) = default {
                indent(depth + 1, out);
                out.push_str("default:");
                body(design, &d.body, depth + 1, out);
            }
            indent(depth, out);
            out.push_str("endcase\n");
        }
    }
}

/// Single-line rendering of the statement behind a coverpoint, used when a
/// design is edited in memory and no source line exists for it.
pub(crate) fn render_statement(design: &Design, id: StatementId) -> Option<String> {
    fn find(design: &Design, stmts: &[Stmt], id: StatementId) -> Option<String> {
        for s in stmts {
            match s {
                Stmt::Assign {
                    id: sid,
                    target,
                    expr: e,
                    blocking,
                } => {
                    if *sid == id {
                        let op = if *blocking { "=" } else { "<=" };
                        return Some(format!("{} {op} {};", lvalue(design, target), expr(design, e)));
                    }
                }
                Stmt::If {
                    cond,
                    then_arm,
                    else_arm,
                } => {
                    if then_arm.id == id {
                        return Some(format!("if ({})", expr(design, cond)));
                    }
                    if let Some(r) = find(design, &then_arm.body, id) {
                        return Some(r);
                    }
                    if let Some(e) = else_arm {
                        if e.id == id {
                            return Some("else".into());
                        }
                        if let Some(r) = find(design, &e.body, id) {
                            return Some(r);
                        }
                    }
                }
                Stmt::Case { arms, default, .. } => {
                    for arm in arms {
                        if arm.arm.id == id {
                            let labels: Vec<String> = arm.labels.iter().map(|l| expr(design, l)).collect();
                            let inner = match arm.arm.body.as_slice() {
                                [Stmt::Assign { id: inner, .. }] => find(design, &arm.arm.body, *inner),
                                _ => None,
                            };
                            return Some(match inner {
                                Some(body) => format!("{}: {body}", labels.join(", ")),
                                None => format!("{}:", labels.join(", ")),
                            });
                        }
                        if let Some(r) = find(design, &arm.arm.body, id) {
                            return Some(r);
                        }
                    }
                    if let Some(d) = default {
                        if d.id == id {
                            return Some("default:".into());
                        }
                        if let Some(r) = find(design, &d.body, id) {
                            return Some(r);
                        }
                    }
                }
            }
        }
        None
    }
    for p in &design.processes {
        match p {
            Process::Assign(a) if a.id == id => {
                return Some(format!(
                    "assign {} = {};",
                    design.signal(a.target).name,
                    expr(design, &a.expr)
                ))
            }
            Process::Assign(_) => {}
            Process::Clocked(b) => {
                if let Some(r) = find(design, &b.body, id) {
                    return Some(r);
                }
            }
        }
    }
    None
}
