// SPDX-License-Identifier: Apache-2.0

//! Bug injection and suite evaluation (Top-n, mean average rank).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hdl::{
    self, parse_design, render_statement, validate, Design, Expr, ExprKind, HdlError, Process, Stmt, StatementId, StatementKind,
    UnaryOp,
};
use crate::metrics::DistanceWeights;
use crate::par::{self, Execution};
use crate::sim::TestCase;
use crate::witgen::{InputConstraints, SearchConfig, SearchMode, WitgenError};

pub const TOP_N: [usize; 4] = [1, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BugEdit {
    /// Exchange the bodies of two arms of the same case statement.
    SwapCaseArms { other_arm: StatementId },
    /// Nonblocking assignment of a constant (usually a state name) gets another constant.
    WrongNextStateConstant { value: u64 },
    WrongAssignConstant { value: u64 },
    NegateCondition,
    /// Add `delta` to the first constant of the statement (case label for case arms).
    OffByOneConstant { delta: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugSpec {
    pub name: String,
    pub target_statement: StatementId,
    pub edit: BugEdit,
}

#[derive(Debug, Clone)]
pub struct InjectedBug {
    pub design: Design,
    /// Statements carrying the bug; never empty.
    pub ground_truth: Vec<StatementId>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bug {bug}: {message}")]
    Inapplicable { bug: String, message: String },
    #[error("bug {bug}: edited design does not elaborate: {source}")]
    Elaboration { bug: String, source: HdlError },
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
    #[error("{path}: {source}")]
    Design { path: String, source: HdlError },
    #[error("at least one rng seed required")]
    NoSeeds,
}

fn walk_mut(body: &mut [Stmt], f: &mut dyn FnMut(&mut Stmt)) {
    for s in body {
        f(s);
        match s {
            Stmt::Assign { .. } => {}
            Stmt::If { then_arm, else_arm, .. } => {
                walk_mut(&mut then_arm.body, f);
                if let Some(e) = else_arm {
                    walk_mut(&mut e.body, f);
                }
            }
            Stmt::Case { arms, default, .. } => {
                for a in arms {
                    walk_mut(&mut a.arm.body, f);
                }
                if let Some(d) = default {
                    walk_mut(&mut d.body, f);
                }
            }
        }
    }
}

fn for_each_stmt_mut(design: &mut Design, f: &mut dyn FnMut(&mut Stmt)) {
    for p in &mut design.processes {
        if let Process::Clocked(b) = p {
            walk_mut(&mut b.body, f);
        }
    }
}

/// Ids in preorder.
fn collect_ids(body: &[Stmt], out: &mut Vec<StatementId>) {
    for s in body {
        match s {
            Stmt::Assign { id, .. } => out.push(*id),
            Stmt::If { then_arm, else_arm, .. } => {
                out.push(then_arm.id);
                collect_ids(&then_arm.body, out);
                if let Some(e) = else_arm {
                    out.push(e.id);
                    collect_ids(&e.body, out);
                }
            }
            Stmt::Case { arms, default, .. } => {
                for a in arms {
                    out.push(a.arm.id);
                    collect_ids(&a.arm.body, out);
                }
                if let Some(d) = default {
                    out.push(d.id);
                    collect_ids(&d.body, out);
                }
            }
        }
    }
}

fn relabel(body: &mut [Stmt], ids: &mut impl Iterator<Item = StatementId>) {
    for s in body {
        match s {
            Stmt::Assign { id, .. } => *id = ids.next().expect("id count checked"),
            Stmt::If { then_arm, else_arm, .. } => {
                then_arm.id = ids.next().expect("id count checked");
                relabel(&mut then_arm.body, ids);
                if let Some(e) = else_arm {
                    e.id = ids.next().expect("id count checked");
                    relabel(&mut e.body, ids);
                }
            }
            Stmt::Case { arms, default, .. } => {
                for a in arms.iter_mut() {
                    a.arm.id = ids.next().expect("id count checked");
                    relabel(&mut a.arm.body, ids);
                }
                if let Some(d) = default {
                    d.id = ids.next().expect("id count checked");
                    relabel(&mut d.body, ids);
                }
            }
        }
    }
}

fn kinds(design: &Design) -> Vec<(StatementId, StatementKind)> {
    fn walk(body: &[Stmt], out: &mut Vec<(StatementId, StatementKind)>) {
        for s in body {
            match s {
                Stmt::Assign { id, blocking, .. } => out.push((
                    *id,
                    if *blocking {
                        StatementKind::BlockingAssign
                    } else {
                        StatementKind::NonblockingAssign
                    },
                )),
                Stmt::If { then_arm, else_arm, .. } => {
                    out.push((then_arm.id, StatementKind::IfArm));
                    walk(&then_arm.body, out);
                    if let Some(e) = else_arm {
                        out.push((e.id, StatementKind::IfArm));
                        walk(&e.body, out);
                    }
                }
                Stmt::Case { arms, default, .. } => {
                    for a in arms {
                        out.push((a.arm.id, StatementKind::CaseArm));
                        walk(&a.arm.body, out);
                    }
                    if let Some(d) = default {
                        out.push((d.id, StatementKind::CaseArm));
                        walk(&d.body, out);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for p in &design.processes {
        match p {
            Process::Assign(a) => out.push((a.id, StatementKind::ContinuousAssign)),
            Process::Clocked(b) => walk(&b.body, &mut out),
        }
    }
    out
}

fn first_const_mut(e: &mut Expr) -> Option<&mut Expr> {
    if matches!(e.kind, ExprKind::Const { .. }) {
        return Some(e);
    }
    match &mut e.kind {
        ExprKind::Unary(_, x) => first_const_mut(x),
        ExprKind::Binary(_, l, r) => {
            if contains_const(l) {
                first_const_mut(l)
            } else {
                first_const_mut(r)
            }
        }
        ExprKind::Bit { index, .. } => first_const_mut(index),
        _ => None,
    }
}

fn contains_const(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Const { .. } => true,
        ExprKind::Signal(_) => false,
        ExprKind::Bit { index, .. } => contains_const(index),
        ExprKind::Unary(_, x) => contains_const(x),
        ExprKind::Binary(_, l, r) => contains_const(l) || contains_const(r),
    }
}

/// Replace the value of a constant expression in place; `named` keeps a
/// localparam name when one with the new value exists.
fn set_const(design: &Design, e: &mut Expr, value: u64, named: bool) {
    if let ExprKind::Const { size, radix, .. } = e.kind {
        let name = if named {
            design.localparam_named(value).map(|p| p.name.clone())
        } else {
            None
        };
        let width = e.width;
        *e = Expr::constant(value, size, radix, name);
        e.width = width;
    }
}

/// The expression an edit of `target` operates on, with whether the target
/// is an assignment and whether it is nonblocking.
enum Site<'a> {
    Assign { expr: &'a mut Expr, nonblocking: bool },
    IfThen { cond: &'a mut Expr },
    CaseArm { labels: &'a mut Vec<Expr> },
    Other,
}

fn with_site<R>(design: &mut Design, target: StatementId, f: impl FnOnce(Site<'_>) -> R) -> R {
    let mut f = Some(f);
    let mut result = None;
    for p in &mut design.processes {
        if let Process::Assign(a) = p {
            if a.id == target {
                let f = f.take().expect("single match");
                result = Some(f(Site::Assign {
                    expr: &mut a.expr,
                    nonblocking: false,
                }));
            }
        }
    }
    if result.is_none() {
        let mut run = |s: &mut Stmt| {
            if f.is_none() {
                return;
            }
            let site = match s {
                Stmt::Assign { id, expr, blocking, .. } if *id == target => Some(Site::Assign {
                    expr,
                    nonblocking: !*blocking,
                }),
                Stmt::If { cond, then_arm, .. } if then_arm.id == target => Some(Site::IfThen { cond }),
                Stmt::If { else_arm: Some(e), .. } if e.id == target => Some(Site::Other),
                Stmt::Case { arms, default, .. } => {
                    if let Some(a) = arms.iter_mut().find(|a| a.arm.id == target) {
                        Some(Site::CaseArm { labels: &mut a.labels })
                    } else if default.as_ref().is_some_and(|d| d.id == target) {
                        Some(Site::Other)
                    } else {
                        None
                    }
                }
                _ => None,
            };
            if let Some(site) = site {
                let g = f.take().expect("single match");
                result = Some(g(site));
            }
        };
        for_each_stmt_mut(design, &mut run);
    }
    match result {
        Some(r) => r,
        None => (f.take().expect("not yet called"))(Site::Other),
    }
}

fn swap_arms(design: &mut Design, a: StatementId, b: StatementId) -> Result<Vec<StatementId>, String> {
    if a == b {
        return Err("cannot swap an arm with itself".into());
    }
    let mut outcome: Option<Result<Vec<StatementId>, String>> = None;
    for_each_stmt_mut(design, &mut |s| {
        let Stmt::Case { arms, default, .. } = s else { return };
        let mut bodies: Vec<(StatementId, &mut Vec<Stmt>)> =
            arms.iter_mut().map(|x| (x.arm.id, &mut x.arm.body)).collect();
        if let Some(d) = default {
            bodies.push((d.id, &mut d.body));
        }
        let ia = bodies.iter().position(|(id, _)| *id == a);
        let ib = bodies.iter().position(|(id, _)| *id == b);
        let (ia, ib) = match (ia, ib) {
            (Some(x), Some(y)) => (x, y),
            (None, None) => return,
            _ => {
                outcome = Some(Err("arms belong to different case statements".into()));
                return;
            }
        };
        let mut ids_a = Vec::new();
        let mut ids_b = Vec::new();
        collect_ids(bodies[ia].1, &mut ids_a);
        collect_ids(bodies[ib].1, &mut ids_b);
        if ids_a.len() != ids_b.len() {
            outcome = Some(Err("arm bodies differ in statement count".into()));
            return;
        }
        let (lo, hi) = (ia.min(ib), ia.max(ib));
        let (left, right) = bodies.split_at_mut(hi);
        std::mem::swap(left[lo].1, right[0].1);
        relabel(bodies[ia].1, &mut ids_a.clone().into_iter());
        relabel(bodies[ib].1, &mut ids_b.clone().into_iter());
        // the arm entries themselves read differently after the swap
        let mut gt = vec![a, b];
        gt.extend(ids_a);
        gt.extend(ids_b);
        gt.sort();
        outcome = Some(Ok(gt));
    });
    outcome.unwrap_or_else(|| Err(format!("{a} and {b} are not case arms")))
}

/// Apply `spec` to a copy of `golden`.
///
/// Unedited statements keep their ids, source lines and text; edited ones
/// get their text re-rendered.
pub fn inject_bug(golden: &Design, spec: &BugSpec) -> Result<InjectedBug, BenchError> {
    let bug = || spec.name.clone();
    let fail = |message: String| BenchError::Inapplicable { bug: bug(), message };
    let target = spec.target_statement;
    if target.0 >= golden.statement_count() {
        return Err(fail(format!("no statement {target}")));
    }
    let mut design = golden.clone();
    let ground_truth = match &spec.edit {
        BugEdit::SwapCaseArms { other_arm } => swap_arms(&mut design, target, *other_arm).map_err(fail)?,
        edit => {
            let snapshot = golden.clone();
            with_site(&mut design, target, |site| -> Result<(), String> {
                match (edit, site) {
                    (BugEdit::WrongAssignConstant { value }, Site::Assign { expr, .. }) => {
                        match expr.as_const() {
                            Some(old) if old == *value => Err(format!("{target} already assigns {value}")),
                            Some(_) => {
                                set_const(&snapshot, expr, *value, false);
                                Ok(())
                            }
                            None => Err(format!("{target} does not assign a constant")),
                        }
                    }
                    (BugEdit::WrongNextStateConstant { value }, Site::Assign { expr, nonblocking: true }) => {
                        match expr.as_const() {
                            Some(old) if old == *value => Err(format!("{target} already assigns {value}")),
                            Some(_) => {
                                set_const(&snapshot, expr, *value, true);
                                Ok(())
                            }
                            None => Err(format!("{target} does not assign a constant")),
                        }
                    }
                    (BugEdit::NegateCondition, Site::IfThen { cond }) => {
                        let old = std::mem::replace(cond, Expr::constant(0, None, hdl::Radix::Decimal, None));
                        *cond = match old.kind {
                            ExprKind::Unary(UnaryOp::LogicalNot, inner) => *inner,
                            _ => Expr::unary(UnaryOp::LogicalNot, old),
                        };
                        Ok(())
                    }
                    (BugEdit::OffByOneConstant { delta }, site) => {
                        let c = match site {
                            Site::Assign { expr, .. } => first_const_mut(expr),
                            Site::IfThen { cond } => first_const_mut(cond),
                            Site::CaseArm { labels } => labels.first_mut(),
                            Site::Other => None,
                        }
                        .ok_or_else(|| format!("{target} has no constant to change"))?;
                        let old = c.as_const().expect("constant");
                        let new = i128::from(old) + i128::from(*delta);
                        let limit = hdl::width_mask(c.width);
                        if *delta == 0 || new < 0 || new as u128 > u128::from(limit) {
                            return Err(format!("{old} + {delta} is out of range"));
                        }
                        set_const(&snapshot, c, new as u64, false);
                        Ok(())
                    }
                    (edit, _) => Err(format!(
                        "{} does not apply to {target} ({:?})",
                        edit_name(edit),
                        snapshot.statement(target).kind
                    )),
                }
            })
            .map_err(fail)?;
            vec![target]
        }
    };

    for (id, kind) in kinds(&design) {
        design.statements[id.0].kind = kind;
    }
    for i in 0..design.statements.len() {
        let id = StatementId(i);
        let after = render_statement(&design, id);
        if after != render_statement(golden, id) {
            if let Some(text) = after {
                design.statements[i].text = text;
            }
        }
    }
    validate(&design).map_err(|source| BenchError::Elaboration { bug: bug(), source })?;
    // the printed form must parse back with the same coverpoints
    let reparsed = parse_design(&hdl::print_design(&design))
        .map_err(|source| BenchError::Elaboration { bug: bug(), source })?;
    if reparsed.statement_count() != design.statement_count() {
        return Err(fail("edited design changes the coverpoint count".into()));
    }
    Ok(InjectedBug { design, ground_truth })
}

fn edit_name(edit: &BugEdit) -> &'static str {
    match edit {
        BugEdit::SwapCaseArms { .. } => "swap-case-arms",
        BugEdit::WrongNextStateConstant { .. } => "wrong-next-state-constant",
        BugEdit::WrongAssignConstant { .. } => "wrong-assign-constant",
        BugEdit::NegateCondition => "negate-condition",
        BugEdit::OffByOneConstant { .. } => "off-by-one-constant",
    }
}

// ---------------------------------------------------------------------------
// suite manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub name: String,
    pub designs: Vec<DesignEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub name: String,
    /// Free-form grouping used for per-category result rows, e.g. "easy".
    pub category: String,
    pub file: String,
    pub bugs: Vec<BugEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugEntry {
    #[serde(flatten)]
    pub spec: BugSpec,
    pub testcase: String,
}

const BUILTIN_FILES: &[(&str, &str)] = &[
    ("manifest.json", include_str!("../suite/manifest.json")),
    ("decoder_3_to_8.mv", include_str!("../suite/decoder_3_to_8.mv")),
    ("alu.mv", include_str!("../suite/alu.mv")),
    ("counter.mv", include_str!("../suite/counter.mv")),
    ("led_controller.mv", include_str!("../suite/led_controller.mv")),
    ("fsm.mv", include_str!("../suite/fsm.mv")),
    ("i2c_ctrl.mv", include_str!("../suite/i2c_ctrl.mv")),
    ("decoder_arm3_const.csv", include_str!("../suite/decoder_arm3_const.csv")),
    ("decoder_swap_5_6.csv", include_str!("../suite/decoder_swap_5_6.csv")),
    ("decoder_label2.csv", include_str!("../suite/decoder_label2.csv")),
    ("decoder_disabled_const.csv", include_str!("../suite/decoder_disabled_const.csv")),
    ("decoder_arm7_const.csv", include_str!("../suite/decoder_arm7_const.csv")),
    ("alu_swap_add_sub.csv", include_str!("../suite/alu_swap_add_sub.csv")),
    ("alu_shl_amount.csv", include_str!("../suite/alu_shl_amount.csv")),
    ("alu_default_const.csv", include_str!("../suite/alu_default_const.csv")),
    ("alu_xor_label.csv", include_str!("../suite/alu_xor_label.csv")),
    ("counter_wrap_limit.csv", include_str!("../suite/counter_wrap_limit.csv")),
    ("counter_down_reload.csv", include_str!("../suite/counter_down_reload.csv")),
    ("counter_wrap_flag.csv", include_str!("../suite/counter_wrap_flag.csv")),
    ("led_on_const.csv", include_str!("../suite/led_on_const.csv")),
    ("led_chase_shift.csv", include_str!("../suite/led_chase_shift.csv")),
    ("led_chase_cond.csv", include_str!("../suite/led_chase_cond.csv")),
    ("fsm_s11_next.csv", include_str!("../suite/fsm_s11_next.csv")),
    ("fsm_s7_next.csv", include_str!("../suite/fsm_s7_next.csv")),
    ("fsm_s6_cond.csv", include_str!("../suite/fsm_s6_cond.csv")),
    ("i2c_start_scl.csv", include_str!("../suite/i2c_start_scl.csv")),
    ("i2c_bitcnt_limit.csv", include_str!("../suite/i2c_bitcnt_limit.csv")),
];

/// One prepared (golden, buggy, failing test) triple.
#[derive(Debug, Clone)]
pub struct SuiteBug {
    pub design: String,
    pub category: String,
    pub spec: BugSpec,
    pub golden: Design,
    pub buggy: Design,
    pub ground_truth: Vec<StatementId>,
    pub c_b: TestCase,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub bugs: Vec<SuiteBug>,
}

impl Suite {
    /// The suite shipped with the crate.
    pub fn builtin() -> Result<Suite, BenchError> {
        let read = |name: &str| {
            BUILTIN_FILES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| format!("no built-in file {name}"))
        };
        Suite::from_files("builtin", read)
    }

    /// Load a manifest and the files it names, relative to its directory.
    pub fn load(manifest: &Path) -> Result<Suite, BenchError> {
        let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let path = manifest.display().to_string();
        let text = std::fs::read_to_string(manifest).map_err(|e| BenchError::Manifest {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let parsed: SuiteManifest =
            serde_json::from_str(&text).map_err(|e| BenchError::Manifest { path, message: e.to_string() })?;
        let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| e.to_string());
        Suite::from_manifest(parsed, read, |name| dir.join(name).display().to_string())
    }

    fn from_files(label: &str, read: impl Fn(&str) -> Result<String, String>) -> Result<Suite, BenchError> {
        let text = read("manifest.json").map_err(|message| BenchError::Manifest {
            path: label.into(),
            message,
        })?;
        let parsed: SuiteManifest = serde_json::from_str(&text).map_err(|e| BenchError::Manifest {
            path: label.into(),
            message: e.to_string(),
        })?;
        Suite::from_manifest(parsed, read, |name| format!("{label}:{name}"))
    }

    fn from_manifest(
        manifest: SuiteManifest,
        read: impl Fn(&str) -> Result<String, String>,
        display: impl Fn(&str) -> String,
    ) -> Result<Suite, BenchError> {
        let mut bugs = Vec::new();
        let mut names = BTreeSet::new();
        for entry in &manifest.designs {
            let path = display(&entry.file);
            let source = read(&entry.file).map_err(|message| BenchError::Manifest {
                path: path.clone(),
                message,
            })?;
            let golden = parse_design(&source).map_err(|source| BenchError::Design {
                path: path.clone(),
                source,
            })?;
            for b in &entry.bugs {
                if !names.insert(b.spec.name.clone()) {
                    return Err(BenchError::Manifest {
                        path: display("manifest"),
                        message: format!("duplicate bug name {}", b.spec.name),
                    });
                }
                let injected = inject_bug(&golden, &b.spec)?;
                let tc_path = display(&b.testcase);
                let text = read(&b.testcase).map_err(|message| BenchError::Manifest {
                    path: tc_path.clone(),
                    message,
                })?;
                let c_b = TestCase::from_csv(&b.spec.name, &text)
                    .and_then(|tc| tc.check(&golden).map(|()| tc))
                    .map_err(|e| BenchError::Manifest {
                        path: tc_path,
                        message: e.to_string(),
                    })?;
                bugs.push(SuiteBug {
                    design: entry.name.clone(),
                    category: entry.category.clone(),
                    spec: b.spec.clone(),
                    golden: golden.clone(),
                    buggy: injected.design,
                    ground_truth: injected.ground_truth,
                    c_b,
                });
            }
        }
        Ok(Suite {
            name: manifest.name,
            bugs,
        })
    }

    pub fn filter(&self, keep: impl Fn(&SuiteBug) -> bool) -> Suite {
        Suite {
            name: self.name.clone(),
            bugs: self.bugs.iter().filter(|b| keep(b)).cloned().collect(),
        }
    }

    pub fn categories(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for b in &self.bugs {
            if !seen.contains(&b.category) {
                seen.push(b.category.clone());
            }
        }
        seen
    }
}

// ---------------------------------------------------------------------------
// evaluation

/// Optional fixed weights; `None` resolves per design to 1/z and 1/k.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightChoice {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl WeightChoice {
    pub fn resolve(&self, design: &Design) -> DistanceWeights {
        let auto = DistanceWeights::auto(design);
        DistanceWeights::new(self.alpha.unwrap_or(auto.alpha), self.beta.unwrap_or(auto.beta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub bug: String,
    pub seed: u64,
    pub rank: f64,
    pub degraded: bool,
    pub witnesses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub per_bug_rank: BTreeMap<String, f64>,
    pub top_n_counts: BTreeMap<usize, usize>,
    /// Bugs whose ground truth shares the top score, tie or not.
    pub tied_top1: usize,
    pub mar: f64,
    pub degraded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugFailure {
    pub bug: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mode: SearchMode,
    pub seeds: Vec<u64>,
    pub bug_count: usize,
    /// Mean over seeds.
    pub per_bug_rank: BTreeMap<String, f64>,
    pub top_n_counts: BTreeMap<usize, f64>,
    pub top_n_variance: BTreeMap<usize, f64>,
    pub tied_top1: f64,
    pub mar: f64,
    pub mar_variance: f64,
    pub per_seed: Vec<SeedResult>,
    /// Bugs left out of the ranking, e.g. because the test case passes.
    pub failures: Vec<BugFailure>,
}

enum Cell {
    Ranked { result: CellResult, tied_top1: bool },
    Failed(BugFailure),
}

fn run_cell(bug: &SuiteBug, cfg: &SearchConfig, weights: WeightChoice, seed: u64) -> Cell {
    let cfg = SearchConfig {
        weights: weights.resolve(&bug.buggy),
        rng_seed: seed,
        ..cfg.clone()
    };
    match crate::localize(&bug.golden, &bug.buggy, &bug.c_b, &cfg, &InputConstraints::default()) {
        Ok((set, report)) => {
            let rank = report
                .best_rank(&bug.ground_truth)
                .expect("ground truth ids exist in the design");
            // untouched statements score 0, touched ones strictly more
            let top = report.entries.first().map_or(0.0, |e| e.score);
            let tied_top1 = report
                .entries
                .iter()
                .any(|e| bug.ground_truth.contains(&e.statement_id) && e.score == top && top > 0.0);
            Cell::Ranked {
                result: CellResult {
                    bug: bug.spec.name.clone(),
                    seed,
                    rank,
                    degraded: set.degraded,
                    witnesses: set.witnesses.len(),
                },
                tied_top1,
            }
        }
        Err(e) => Cell::Failed(BugFailure {
            bug: bug.spec.name.clone(),
            message: match e {
                WitgenError::NotTriggering => e.to_string(),
                other => format!("localization failed: {other}"),
            },
        }),
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Localize every bug under every seed and aggregate Top-n and MAR.
///
/// `cfg.rng_seed` and `cfg.weights` are overridden per cell.
pub fn evaluate(
    suite: &Suite,
    cfg: &SearchConfig,
    weights: WeightChoice,
    seeds: &[u64],
    exec: Execution,
) -> Result<EvalResult, BenchError> {
    if seeds.is_empty() {
        return Err(BenchError::NoSeeds);
    }
    let grid: Vec<(usize, u64)> = (0..suite.bugs.len())
        .flat_map(|b| seeds.iter().map(move |&s| (b, s)))
        .collect();
    let cells = par::map(exec, &grid, |&(b, seed)| run_cell(&suite.bugs[b], cfg, weights, seed));

    let mut failures: Vec<BugFailure> = Vec::new();
    let mut per_seed: Vec<SeedResult> = seeds
        .iter()
        .map(|&seed| SeedResult {
            seed,
            per_bug_rank: BTreeMap::new(),
            top_n_counts: TOP_N.iter().map(|&n| (n, 0)).collect(),
            tied_top1: 0,
            mar: 0.0,
            degraded: 0,
        })
        .collect();
    for ((_, seed), cell) in grid.iter().zip(cells) {
        let slot = seeds.iter().position(|s| s == seed).expect("seed from grid");
        match cell {
            Cell::Ranked { result, tied_top1 } => {
                let s = &mut per_seed[slot];
                for n in TOP_N {
                    if result.rank <= n as f64 {
                        *s.top_n_counts.get_mut(&n).expect("preset") += 1;
                    }
                }
                s.tied_top1 += tied_top1 as usize;
                s.degraded += result.degraded as usize;
                s.per_bug_rank.insert(result.bug, result.rank);
            }
            Cell::Failed(f) => {
                if !failures.iter().any(|g| g.bug == f.bug) {
                    failures.push(f);
                }
            }
        }
    }
    // a bug that fails under any seed is dropped from every seed so the
    // per-seed numbers stay comparable
    for s in &mut per_seed {
        for f in &failures {
            if let Some(rank) = s.per_bug_rank.remove(&f.bug) {
                for n in TOP_N {
                    if rank <= n as f64 {
                        *s.top_n_counts.get_mut(&n).expect("preset") -= 1;
                    }
                }
            }
        }
        let ranks: Vec<f64> = s.per_bug_rank.values().copied().collect();
        s.mar = mean_var(&ranks).0;
    }
    let bug_count = per_seed[0].per_bug_rank.len();
    let mars: Vec<f64> = per_seed.iter().map(|s| s.mar).collect();
    let (mar, mar_variance) = mean_var(&mars);
    let mut top_n_counts = BTreeMap::new();
    let mut top_n_variance = BTreeMap::new();
    for n in TOP_N {
        let xs: Vec<f64> = per_seed.iter().map(|s| s.top_n_counts[&n] as f64).collect();
        let (m, v) = mean_var(&xs);
        top_n_counts.insert(n, m);
        top_n_variance.insert(n, v);
    }
    let per_bug_rank = per_seed[0]
        .per_bug_rank
        .keys()
        .map(|bug| {
            let xs: Vec<f64> = per_seed.iter().map(|s| s.per_bug_rank[bug]).collect();
            (bug.clone(), mean_var(&xs).0)
        })
        .collect();
    let tied: Vec<f64> = per_seed.iter().map(|s| s.tied_top1 as f64).collect();
    Ok(EvalResult {
        mode: cfg.mode,
        seeds: seeds.to_vec(),
        bug_count,
        per_bug_rank,
        top_n_counts,
        top_n_variance,
        tied_top1: mean_var(&tied).0,
        mar,
        mar_variance,
        per_seed,
        failures,
    })
}

/// Markdown table with one row per labelled result: mean Top-n counts and
/// MAR with their standard deviations over seeds.
pub fn markdown_table(rows: &[(String, &EvalResult)]) -> String {
    let mut out = String::new();
    out.push_str("| configuration | bugs | Top-1 | Top-5 | Top-10 | Top-20 | tied Top-1 | MAR |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for (label, r) in rows {
        let _ = write!(out, "| {label} | {} ", r.bug_count);
        for n in TOP_N {
            let _ = write!(out, "| {:.1} ± {:.1} ", r.top_n_counts[&n], r.top_n_variance[&n].sqrt());
        }
        let _ = writeln!(out, "| {:.1} | {:.2} ± {:.2} |", r.tied_top1, r.mar, r.mar_variance.sqrt());
    }
    out
}
