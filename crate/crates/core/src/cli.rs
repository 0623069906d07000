// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. [`run`] returns the process exit code:
//! 0 success, 1 input or usage error, 2 test case does not trigger the bug,
//! 3 no witnesses found (the report is still written).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, BugFailure, EvalResult, Suite, WeightChoice};
use crate::hdl::{parse_design, Design};
use crate::par::Execution;
use crate::sbfl::{self, SuspiciousnessReport};
use crate::sim::{simulate, ExecutionTrace, TestCase};
use crate::witgen::{InputConstraints, SearchConfig, SearchMode, WitgenError, WitnessExport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_TRIGGERING: i32 = 2;
pub const EXIT_DEGRADED: i32 = 3;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "rtl-witness", version, about = "Witness test generation and SBFL bug localization for small RTL designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank statements of a buggy design by suspiciousness.
    Localize(LocalizeArgs),
    /// Run a test case and print outputs, coverage and register transitions.
    Simulate(SimulateArgs),
    /// Generate witness test cases only.
    Witness(WitnessArgs),
    /// Evaluate localization over a bug suite.
    Bench(BenchArgs),
    /// Rank statements from a failing test case and given passing test cases.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

/// A distance weight flag: `auto` or a non-negative number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightArg(pub Option<f64>);

impl std::str::FromStr for WeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(WeightArg(None));
        }
        let v: f64 = s.parse().map_err(|_| format!("expected 'auto' or a number, got {s:?}"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err("weight must be finite and non-negative".into());
        }
        Ok(WeightArg(Some(v)))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long = "top-witnesses", default_value_t = 10)]
    pub top_witnesses: usize,
    /// Coverage weight, or `auto` for 1/z.
    #[arg(long, default_value = "auto")]
    pub alpha: WeightArg,
    /// State weight, or `auto` for 1/k (0 without registers).
    #[arg(long, default_value = "auto")]
    pub beta: WeightArg,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long = "mutation-prob", default_value_t = 0.5)]
    pub mutation_prob: f64,
    #[arg(long, default_value_t = 3)]
    pub positions: usize,
    #[arg(long = "max-restarts", default_value_t = 2)]
    pub max_restarts: usize,
    #[arg(long = "rng-seed", default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, value_enum, default_value_t = SearchMode::Full)]
    pub mode: SearchMode,
    /// JSON map from input name to {"values": [...]}.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
}

impl SearchArgs {
    fn weights(&self) -> WeightChoice {
        WeightChoice {
            alpha: self.alpha.0,
            beta: self.beta.0,
        }
    }

    /// Config for `design` before the ablation mode is folded in.
    fn config(&self, design: &Design) -> SearchConfig {
        SearchConfig {
            max_iterations: self.iters,
            top_n: self.top_witnesses,
            mutation_prob: self.mutation_prob,
            gamma: self.gamma,
            delta: self.delta,
            positions_per_mutation: self.positions,
            max_restarts: self.max_restarts,
            rng_seed: self.rng_seed,
            weights: self.weights().resolve(design),
            mode: self.mode,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock duration in the manifest (reports stop being byte-identical).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LocalizeArgs {
    /// Buggy design.
    #[arg(long)]
    pub design: PathBuf,
    /// Reference design.
    #[arg(long)]
    pub golden: PathBuf,
    /// Bug-triggering test case (CSV).
    #[arg(long)]
    pub testcase: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub inner: LocalizeArgs,
    /// Also write each witness as a CSV file into this directory.
    #[arg(long = "csv-dir")]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub testcase: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Failing test case.
    #[arg(long)]
    pub testcase: PathBuf,
    /// Passing test cases used as witnesses.
    #[arg(long, num_args = 0..)]
    pub witnesses: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Suite manifest, or `builtin`.
    #[arg(long)]
    pub suite: String,
    /// Comma-separated modes.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "full,rand")]
    pub modes: Vec<SearchMode>,
    /// Comma-separated seeds or a half-open range `a..b`.
    #[arg(long, default_value = "0..10")]
    pub seeds: String,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long = "top-witnesses", default_value_t = 10)]
    pub top_witnesses: usize,
    #[arg(long, default_value = "auto")]
    pub alpha: WeightArg,
    #[arg(long, default_value = "auto")]
    pub beta: WeightArg,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long = "mutation-prob", default_value_t = 0.5)]
    pub mutation_prob: f64,
    #[arg(long, default_value_t = 3)]
    pub positions: usize,
    #[arg(long = "max-restarts", default_value_t = 2)]
    pub max_restarts: usize,
    /// Run the bug x seed grid on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Also write the markdown table here.
    #[arg(long)]
    pub markdown: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Embedded at the top of every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub tool_version: &'static str,
    /// Resolved configuration. For bench the weights here are placeholders
    /// unless fixed on the command line; see `design_weights`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<SearchConfig>,
    pub alpha: String,
    pub beta: String,
    /// Weights resolved per design (bench only).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub design_weights: BTreeMap<String, crate::DistanceWeights>,
    pub inputs: BTreeMap<String, String>,
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunManifest {
    fn new(command: &'static str, output: &OutputArgs) -> Self {
        RunManifest {
            command,
            tool_version: VERSION,
            config: None,
            alpha: "auto".into(),
            beta: "auto".into(),
            design_weights: BTreeMap::new(),
            inputs: BTreeMap::new(),
            output: output.out.as_ref().map(|p| p.display().to_string()),
            wall_clock_seconds: None,
        }
    }

    fn input(mut self, key: &str, path: &Path) -> Self {
        self.inputs.insert(key.into(), path.display().to_string());
        self
    }

    fn weights(mut self, w: WeightChoice) -> Self {
        let show = |x: Option<f64>| x.map_or_else(|| "auto".to_string(), |v| v.to_string());
        self.alpha = show(w.alpha);
        self.beta = show(w.beta);
        self
    }
}

/// A failure that ends the command with an exit code and a message on stderr.
struct Failure {
    code: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_design(path: &Path) -> Result<Design, Failure> {
    let text = read(path)?;
    parse_design(&text).map_err(|e| input_error(e.diagnostic(&path.display().to_string())))
}

fn load_testcase(path: &Path, design: &Design) -> Result<TestCase, Failure> {
    let text = read(path)?;
    let id = path
        .file_stem()
        .map_or_else(|| "testcase".to_string(), |s| s.to_string_lossy().into_owned());
    let tc = TestCase::from_csv(id, &text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    tc.check(design)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(tc)
}

fn load_constraints(path: Option<&Path>) -> Result<InputConstraints, Failure> {
    match path {
        None => Ok(InputConstraints::default()),
        Some(p) => InputConstraints::from_json(&read(p)?).map_err(|e| input_error(format!("{}: {e}", p.display()))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Write the JSON report to `--out` (or stdout for `--format json`), and the
/// human table to stdout for `--format table`.
fn emit(output: &OutputArgs, json: &str, table: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    if let Some(path) = &output.out {
        std::fs::write(path, json).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }
    let text = match output.format {
        Format::Json if output.out.is_none() => json,
        Format::Json => "",
        Format::Table => table,
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| input_error(format!("stdout: {e}")))
}

fn witgen_failure(e: WitgenError) -> Failure {
    match e {
        WitgenError::NotTriggering => Failure {
            code: EXIT_NOT_TRIGGERING,
            message: e.to_string(),
        },
        other => input_error(other.to_string()),
    }
}

#[derive(Serialize)]
struct LocalizeReport<'a> {
    manifest: &'a RunManifest,
    degraded: bool,
    restarts: usize,
    witness_count: usize,
    report: &'a SuspiciousnessReport,
    statements: Vec<&'a str>,
}

fn elapsed(timing: bool, start: Instant) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64())
}

fn cmd_localize(args: &LocalizeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let buggy = load_design(&args.design)?;
    let golden = load_design(&args.golden)?;
    let c_b = load_testcase(&args.testcase, &buggy)?;
    let constraints = load_constraints(args.search.constraints.as_deref())?;
    let cfg = args.search.config(&buggy);
    let (set, report) = crate::localize(&golden, &buggy, &c_b, &cfg, &constraints).map_err(witgen_failure)?;

    let mut manifest = manifest_for("localize", args).weights(args.search.weights());
    manifest.config = Some(cfg.resolved());
    manifest.wall_clock_seconds = elapsed(args.output.timing, start);
    let statements = report
        .entries
        .iter()
        .map(|e| buggy.statement(e.statement_id).text.as_str())
        .collect();
    let json = to_json(&LocalizeReport {
        manifest: &manifest,
        degraded: set.degraded,
        restarts: set.restarts,
        witness_count: set.witnesses.len(),
        report: &report,
        statements,
    });
    let mut table = report.to_table(&buggy);
    if set.degraded {
        table.push_str("no witnesses found; every touched statement scores 1\n");
    }
    emit(&args.output, &json, &table, stdout)?;
    Ok(if set.degraded { EXIT_DEGRADED } else { EXIT_OK })
}

fn manifest_for(command: &'static str, args: &LocalizeArgs) -> RunManifest {
    let mut m = RunManifest::new(command, &args.output)
        .input("design", &args.design)
        .input("golden", &args.golden)
        .input("testcase", &args.testcase);
    if let Some(c) = &args.search.constraints {
        m = m.input("constraints", c);
    }
    m
}

#[derive(Serialize)]
struct WitnessReport<'a> {
    manifest: &'a RunManifest,
    degraded: bool,
    restarts: usize,
    witnesses: Vec<WitnessExport>,
}

fn cmd_witness(args: &WitnessArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let a = &args.inner;
    let buggy = load_design(&a.design)?;
    let golden = load_design(&a.golden)?;
    let c_b = load_testcase(&a.testcase, &buggy)?;
    let constraints = load_constraints(a.search.constraints.as_deref())?;
    let cfg = a.search.config(&buggy);
    let set = crate::witgen::generate_witnesses_constrained(&golden, &buggy, &c_b, &cfg, &constraints)
        .map_err(witgen_failure)?;
    let witnesses = set.export();
    if let Some(dir) = &args.csv_dir {
        std::fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
        for w in &witnesses {
            let path = dir.join(format!("{}.csv", w.case_id));
            std::fs::write(&path, &w.csv_payload).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        }
    }
    let mut manifest = manifest_for("witness", a).weights(a.search.weights());
    manifest.config = Some(cfg.resolved());
    manifest.wall_clock_seconds = elapsed(a.output.timing, start);
    let mut table = String::from("case     | fitness\n");
    for w in &witnesses {
        table.push_str(&format!("{:8} | {:.6}\n", w.case_id, w.fitness));
    }
    let json = to_json(&WitnessReport {
        manifest: &manifest,
        degraded: set.degraded,
        restarts: set.restarts,
        witnesses,
    });
    emit(&a.output, &json, &table, stdout)?;
    Ok(if set.degraded { EXIT_DEGRADED } else { EXIT_OK })
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    manifest: &'a RunManifest,
    outputs: Vec<&'a str>,
    trace: &'a ExecutionTrace,
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let design = load_design(&args.design)?;
    let tc = load_testcase(&args.testcase, &design)?;
    let trace = simulate(&design, &tc).map_err(|e| input_error(format!("{}: {e}", args.testcase.display())))?;
    let mut manifest = RunManifest::new("simulate", &args.output)
        .input("design", &args.design)
        .input("testcase", &args.testcase);
    manifest.wall_clock_seconds = elapsed(args.output.timing, start);
    let outputs = design.output_names();
    let mut table = format!("cycle | {}\n", outputs.join(" | "));
    for (cycle, row) in trace.outputs.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(u64::to_string).collect();
        table.push_str(&format!("{cycle:5} | {}\n", vals.join(" | ")));
    }
    let json = to_json(&SimulateReport {
        manifest: &manifest,
        outputs,
        trace: &trace,
    });
    emit(&args.output, &json, &table, stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RankReport<'a> {
    manifest: &'a RunManifest,
    report: &'a SuspiciousnessReport,
}

fn cmd_rank(args: &RankArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let design = load_design(&args.design)?;
    let failing = load_testcase(&args.testcase, &design)?;
    let sim = |tc: &TestCase, path: &Path| simulate(&design, tc).map_err(|e| input_error(format!("{}: {e}", path.display())));
    let failing_trace = sim(&failing, &args.testcase)?;
    let mut traces = Vec::new();
    let mut manifest = RunManifest::new("rank", &args.output)
        .input("design", &args.design)
        .input("testcase", &args.testcase);
    for (i, path) in args.witnesses.iter().enumerate() {
        let tc = load_testcase(path, &design)?;
        traces.push(sim(&tc, path)?);
        manifest = manifest.input(&format!("witness{i}"), path);
    }
    let scores = sbfl::suspiciousness(&failing_trace, &traces).expect("traces of one design");
    let report = sbfl::rank(&design, &scores);
    manifest.wall_clock_seconds = elapsed(args.output.timing, start);
    let json = to_json(&RankReport {
        manifest: &manifest,
        report: &report,
    });
    emit(&args.output, &json, &report.to_table(&design), stdout)?;
    Ok(EXIT_OK)
}

/// Seeds as `a,b,c` or `a..b`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("invalid seed range {text:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("invalid seed range {text:?}"))?;
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("invalid seed {s:?}")))
        .collect()
}

#[derive(Serialize)]
struct BenchRow<'a> {
    mode: SearchMode,
    category: &'a str,
    result: &'a EvalResult,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    manifest: &'a RunManifest,
    suite: &'a str,
    bugs: Vec<BenchBug<'a>>,
    results: Vec<BenchRow<'a>>,
    failures: Vec<BugFailure>,
}

#[derive(Serialize)]
struct BenchBug<'a> {
    name: &'a str,
    design: &'a str,
    category: &'a str,
    ground_truth: &'a [crate::hdl::StatementId],
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let suite = if args.suite == "builtin" {
        Suite::builtin()
    } else {
        Suite::load(Path::new(&args.suite))
    }
    .map_err(|e| input_error(e.to_string()))?;
    let seeds = parse_seeds(&args.seeds).map_err(input_error)?;
    if seeds.is_empty() {
        return Err(input_error(bench::BenchError::NoSeeds.to_string()));
    }
    let weights = WeightChoice {
        alpha: args.alpha.0,
        beta: args.beta.0,
    };
    let base = SearchConfig {
        max_iterations: args.iters,
        top_n: args.top_witnesses,
        mutation_prob: args.mutation_prob,
        gamma: args.gamma,
        delta: args.delta,
        positions_per_mutation: args.positions,
        max_restarts: args.max_restarts,
        rng_seed: seeds[0],
        weights: crate::DistanceWeights::new(args.alpha.0.unwrap_or(0.0), args.beta.0.unwrap_or(0.0)),
        mode: SearchMode::Full,
    };
    base.validate().map_err(|e| input_error(e.to_string()))?;
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    let categories = suite.categories();
    let mut results: Vec<(SearchMode, String, EvalResult)> = Vec::new();
    let mut failures: Vec<BugFailure> = Vec::new();
    for &mode in &args.modes {
        let cfg = base.clone().with_mode(mode);
        let all = bench::evaluate(&suite, &cfg, weights, &seeds, exec).map_err(|e| input_error(e.to_string()))?;
        for f in &all.failures {
            if !failures.contains(f) {
                failures.push(f.clone());
            }
        }
        results.push((mode, "all".into(), all));
        if categories.len() > 1 {
            for c in &categories {
                let part = suite.filter(|b| &b.category == c);
                let r = bench::evaluate(&part, &cfg, weights, &seeds, exec).map_err(|e| input_error(e.to_string()))?;
                results.push((mode, c.clone(), r));
            }
        }
    }

    let mut manifest = RunManifest::new("bench", &args.output)
        .input("suite", Path::new(&args.suite))
        .weights(weights);
    manifest.config = Some(base.clone());
    for b in &suite.bugs {
        manifest
            .design_weights
            .entry(b.design.clone())
            .or_insert_with(|| weights.resolve(&b.buggy));
    }
    manifest.wall_clock_seconds = elapsed(args.output.timing, start);
    let rows: Vec<(String, &EvalResult)> = results
        .iter()
        .map(|(m, c, r)| (format!("{} ({c})", m.name()), r))
        .collect();
    let table = bench::markdown_table(&rows);
    if let Some(path) = &args.markdown {
        std::fs::write(path, &table).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }
    let json = to_json(&BenchReport {
        manifest: &manifest,
        suite: &suite.name,
        bugs: suite
            .bugs
            .iter()
            .map(|b| BenchBug {
                name: &b.spec.name,
                design: &b.design,
                category: &b.category,
                ground_truth: &b.ground_truth,
            })
            .collect(),
        results: results
            .iter()
            .map(|(mode, category, result)| BenchRow {
                mode: *mode,
                category,
                result,
            })
            .collect(),
        failures,
    });
    emit(&args.output, &json, &table, stdout)?;
    Ok(EXIT_OK)
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Localize(a) => cmd_localize(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Witness(a) => cmd_witness(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Rank(a) => cmd_rank(a, stdout),
    };
    match result {
        Ok(code) => {
            if code == EXIT_DEGRADED {
                let _ = writeln!(stderr, "warning: no witnesses found, ranking uses the failing run only");
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
