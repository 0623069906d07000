// SPDX-License-Identifier: Apache-2.0

//! Heuristic witness generation.
//!
//! Starting from the bug-triggering case `C_b`, the search repeatedly picks a
//! seed (weighted by fitness, i.e. similarity to `C_b`), picks mutation
//! cycles (weighted by an EWMA priority that rewards positions whose
//! mutations land far from the existing seeds), re-draws inputs at those
//! cycles, and classifies the result against the golden design. Passing
//! candidates that are trace-distinct from every seed become witnesses;
//! failing ones are kept for a restart. The most fit witnesses are returned.

use std::collections::{BTreeMap, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hdl::Design;
use crate::metrics::{self, DistanceWeights, MetricsError};
use crate::oracle::{self, compare_outputs, OracleError, Status};
use crate::sim::{simulate, ExecutionTrace, SimError, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Similarity-weighted seeds, priority-weighted positions.
    #[default]
    Full,
    /// Uniform seeds and positions, witnesses drawn at random.
    Rand,
    /// Coverage distance disabled (alpha = 0).
    NoCov,
    /// State distance disabled (beta = 0).
    NoState,
    /// Uniform positions.
    NoDiv,
}

impl SearchMode {
    pub const ALL: [SearchMode; 5] = [
        SearchMode::Full,
        SearchMode::Rand,
        SearchMode::NoCov,
        SearchMode::NoState,
        SearchMode::NoDiv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SearchMode::Full => "full",
            SearchMode::Rand => "rand",
            SearchMode::NoCov => "no-cov",
            SearchMode::NoState => "no-state",
            SearchMode::NoDiv => "no-div",
        }
    }

    fn uniform_seeds(self) -> bool {
        self == SearchMode::Rand
    }

    fn uniform_positions(self) -> bool {
        matches!(self, SearchMode::Rand | SearchMode::NoDiv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub top_n: usize,
    pub mutation_prob: f64,
    pub gamma: f64,
    pub delta: f64,
    pub positions_per_mutation: usize,
    pub max_restarts: usize,
    pub rng_seed: u64,
    pub weights: DistanceWeights,
    pub mode: SearchMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iterations: 100,
            top_n: 10,
            mutation_prob: 0.5,
            gamma: 0.1,
            delta: 1.0,
            positions_per_mutation: 3,
            max_restarts: 2,
            rng_seed: 0,
            weights: DistanceWeights::new(1.0, 1.0),
            mode: SearchMode::Full,
        }
    }
}

impl SearchConfig {
    /// Defaults with alpha = 1/z and beta = 1/k for `design`.
    pub fn for_design(design: &Design) -> Self {
        SearchConfig {
            weights: DistanceWeights::auto(design),
            ..SearchConfig::default()
        }
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    /// Weights after applying the ablation mode.
    pub fn effective_weights(&self) -> DistanceWeights {
        let mut w = self.weights;
        match self.mode {
            SearchMode::NoCov => w.alpha = 0.0,
            SearchMode::NoState => w.beta = 0.0,
            _ => {}
        }
        w
    }

    /// The configuration with ablation-mode weights folded in.
    pub fn resolved(&self) -> SearchConfig {
        SearchConfig {
            weights: self.effective_weights(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), WitgenError> {
        let bad = |m: &str| Err(WitgenError::Config(m.to_string()));
        if self.top_n < 1 {
            return bad("top_n must be at least 1");
        }
        if self.positions_per_mutation < 1 {
            return bad("positions_per_mutation must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation probability must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !self.weights.is_valid() {
            return bad("distance weights must be finite and non-negative");
        }
        Ok(())
    }
}

/// Legal values per input signal; signals not listed use their full range.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputConstraints(pub BTreeMap<String, SignalConstraint>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalConstraint {
    pub values: Vec<u64>,
}

impl InputConstraints {
    pub fn from_json(text: &str) -> Result<Self, WitgenError> {
        serde_json::from_str(text).map_err(|e| WitgenError::Constraint(e.to_string()))
    }

    /// Per-input value tables in `design.inputs` order.
    fn tables(&self, design: &Design) -> Result<Vec<Option<Vec<u64>>>, WitgenError> {
        for name in self.0.keys() {
            if !design.input_names().contains(&name.as_str()) {
                return Err(WitgenError::Constraint(format!("{name} is not an input")));
            }
        }
        design
            .inputs
            .iter()
            .map(|&id| {
                let decl = design.signal(id);
                match self.0.get(&decl.name) {
                    None => Ok(None),
                    Some(c) if c.values.is_empty() => Err(WitgenError::Constraint(format!(
                        "{} has an empty value list",
                        decl.name
                    ))),
                    Some(c) => match c.values.iter().find(|&&v| v & !decl.mask() != 0) {
                        Some(v) => Err(WitgenError::Constraint(format!(
                            "value {v} does not fit {}-bit {}",
                            decl.width, decl.name
                        ))),
                        None => Ok(Some(c.values.clone())),
                    },
                }
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WitgenError {
    #[error("test case does not trigger the bug")]
    NotTriggering,
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("invalid input constraints: {0}")]
    Constraint(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// 1 / (1 + Distance(C, C_b))
pub fn fitness(case_trace: &ExecutionTrace, bug_trace: &ExecutionTrace, w: DistanceWeights) -> Result<f64, MetricsError> {
    Ok(fitness_from_distance(metrics::distance(case_trace, bug_trace, w)?))
}

pub fn fitness_from_distance(distance: f64) -> f64 {
    1.0 / (1.0 + distance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedOrigin {
    /// `C_b` itself.
    BugTrigger,
    /// A failing case promoted to seed on restart.
    Restart,
    /// A passing case accepted by the search.
    Witness,
}

#[derive(Debug, Clone)]
pub struct SeedEntry {
    pub case: TestCase,
    pub trace: usize,
    pub fitness: f64,
    pub origin: SeedOrigin,
}

#[derive(Debug, Clone)]
pub struct FailingEntry {
    pub case: TestCase,
    pub trace: usize,
}

/// Mutable state of one search session.
pub struct SearchState {
    pub seeds: Vec<SeedEntry>,
    pub failing: Vec<FailingEntry>,
    /// One positive priority per cycle of `C_b`.
    pub priorities: Vec<f64>,
    pub iter: usize,
    pub rng: ChaCha8Rng,
    pub mode: SearchMode,
    pub weights: DistanceWeights,
    traces: Vec<ExecutionTrace>,
    memo: HashMap<(usize, usize), f64>,
    bug_trace: usize,
}

impl SearchState {
    /// Fresh state holding only `C_b`.
    pub fn new(c_b: TestCase, bug_trace: ExecutionTrace, cfg: &SearchConfig) -> Self {
        let t = c_b.len();
        let mut state = SearchState {
            seeds: Vec::new(),
            failing: Vec::new(),
            priorities: vec![cfg.delta; t],
            iter: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            mode: cfg.mode,
            weights: cfg.effective_weights(),
            traces: vec![bug_trace],
            memo: HashMap::new(),
            bug_trace: 0,
        };
        state.seeds.push(SeedEntry {
            case: c_b,
            trace: 0,
            fitness: 1.0,
            origin: SeedOrigin::BugTrigger,
        });
        state
    }

    pub fn trace(&self, id: usize) -> &ExecutionTrace {
        &self.traces[id]
    }

    pub fn bug_trace(&self) -> &ExecutionTrace {
        &self.traces[self.bug_trace]
    }

    fn add_trace(&mut self, trace: ExecutionTrace) -> usize {
        self.traces.push(trace);
        self.traces.len() - 1
    }

    /// Memoized distance between two stored traces.
    pub fn distance(&mut self, a: usize, b: usize) -> Result<f64, MetricsError> {
        if a == b {
            return Ok(0.0);
        }
        let key = (a.min(b), a.max(b));
        if let Some(&d) = self.memo.get(&key) {
            return Ok(d);
        }
        let d = metrics::distance(&self.traces[a], &self.traces[b], self.weights)?;
        self.memo.insert(key, d);
        Ok(d)
    }

    /// p_s over the current seeds.
    pub fn seed_probabilities(&self) -> Vec<f64> {
        let m = self.seeds.len();
        if self.mode.uniform_seeds() {
            return vec![1.0 / m as f64; m];
        }
        let total: f64 = self.seeds.iter().map(|s| s.fitness).sum();
        self.seeds.iter().map(|s| s.fitness / total).collect()
    }

    /// p_m over all cycle positions.
    pub fn position_probabilities(&self) -> Vec<f64> {
        let t = self.priorities.len();
        if self.mode.uniform_positions() {
            return vec![1.0 / t as f64; t];
        }
        let total: f64 = self.priorities.iter().sum();
        self.priorities.iter().map(|p| p / total).collect()
    }
}

/// Draw a seed index with probability proportional to fitness.
pub fn select_seed(state: &mut SearchState) -> usize {
    if state.seeds.len() == 1 {
        return 0;
    }
    if state.mode.uniform_seeds() {
        return state.rng.gen_range(0..state.seeds.len());
    }
    let dist = WeightedIndex::new(state.seeds.iter().map(|s| s.fitness))
        .expect("fitness values lie in (0, 1]");
    dist.sample(&mut state.rng)
}

/// Draw `count` distinct cycles; each draw is proportional to priority over
/// the cycles not yet drawn. Returned in ascending order.
pub fn select_positions(state: &mut SearchState, count: usize) -> Vec<usize> {
    let t = state.priorities.len();
    let count = count.min(t);
    let picked = if state.mode.uniform_positions() {
        index::sample(&mut state.rng, t, count)
    } else {
        let priorities = &state.priorities;
        index::sample_weighted(&mut state.rng, t, |i| priorities[i], count)
            .expect("priorities are finite and positive")
    };
    let mut positions = picked.into_vec();
    positions.sort_unstable();
    positions
}

/// Re-draw each input value at the chosen cycles with probability `p`.
///
/// `tables` optionally restricts the draw per input (in `design.inputs`
/// order) to an enumerated set of legal values.
pub fn mutate<R: Rng>(
    case: &TestCase,
    positions: &[usize],
    p: f64,
    design: &Design,
    tables: &[Option<Vec<u64>>],
    rng: &mut R,
) -> TestCase {
    let mut out = case.clone();
    for &j in positions {
        for (i, &input) in design.inputs.iter().enumerate() {
            if rng.gen_bool(p) {
                let value = match tables.get(i).and_then(Option::as_ref) {
                    Some(values) => values[rng.gen_range(0..values.len())],
                    None => rng.gen_range(0..=design.signal(input).mask()),
                };
                out.cycles[j][i] = value;
            }
        }
    }
    out
}

/// Mean distance from a candidate trace to every seed.
pub fn score(state: &mut SearchState, candidate: usize) -> Result<f64, MetricsError> {
    let seeds: Vec<usize> = state.seeds.iter().map(|s| s.trace).collect();
    let mut total = 0.0;
    for &s in &seeds {
        total += state.distance(candidate, s)?;
    }
    Ok(total / seeds.len() as f64)
}

/// EWMA update of the mutated positions.
pub fn update_priority(priorities: &mut [f64], positions: &[usize], score: f64, gamma: f64) {
    for &i in positions {
        priorities[i] = (1.0 - gamma) * priorities[i] + gamma * score;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Passing and trace-distinct: joined the seed set.
    Accepted,
    /// Passing but at distance 0 from some seed.
    Duplicate,
    /// Failing: joined the failing set.
    Failing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub round: usize,
    pub iter: usize,
    pub seed_index: usize,
    pub seed_prob_sum: f64,
    pub position_prob_sum: f64,
    pub positions: Vec<usize>,
    pub outcome: Outcome,
    pub score: f64,
    pub priorities: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SeedRecord {
    pub case: TestCase,
    pub origin: SeedOrigin,
    pub fitness: f64,
}

/// Seed and failing sets as they stood at the end of a round.
#[derive(Debug, Clone)]
pub struct RoundSummary {
    pub seeds: Vec<SeedRecord>,
    pub failing: Vec<TestCase>,
    /// `None` when the seed set has a single member.
    pub min_pairwise_seed_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub case: TestCase,
    pub trace: ExecutionTrace,
    pub fitness: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SearchDiagnostics {
    pub iterations: Vec<IterationRecord>,
    pub rounds: Vec<RoundSummary>,
}

#[derive(Debug, Clone)]
pub struct WitnessSet {
    pub witnesses: Vec<Witness>,
    /// No witness found within the restart budget.
    pub degraded: bool,
    pub restarts: usize,
    pub bug_trace: ExecutionTrace,
    pub config: SearchConfig,
    pub diagnostics: SearchDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessExport {
    pub case_id: String,
    pub fitness: f64,
    pub csv_payload: String,
}

impl WitnessSet {
    pub fn traces(&self) -> impl Iterator<Item = &ExecutionTrace> {
        self.witnesses.iter().map(|w| &w.trace)
    }

    pub fn export(&self) -> Vec<WitnessExport> {
        self.witnesses
            .iter()
            .map(|w| WitnessExport {
                case_id: w.case.id.clone(),
                fitness: w.fitness,
                csv_payload: w.case.to_csv(),
            })
            .collect()
    }
}

struct Session<'a> {
    golden: &'a Design,
    buggy: &'a Design,
    cfg: SearchConfig,
    tables: Vec<Option<Vec<u64>>>,
    state: SearchState,
    diagnostics: SearchDiagnostics,
    round: usize,
    next_case: usize,
}

impl Session<'_> {
    fn step(&mut self) -> Result<(), WitgenError> {
        let seed_prob_sum: f64 = self.state.seed_probabilities().iter().sum();
        let position_prob_sum: f64 = self.state.position_probabilities().iter().sum();

        let seed_index = select_seed(&mut self.state);
        let positions = select_positions(&mut self.state, self.cfg.positions_per_mutation);
        let mut candidate = mutate(
            &self.state.seeds[seed_index].case,
            &positions,
            self.cfg.mutation_prob,
            self.buggy,
            &self.tables,
            &mut self.state.rng,
        );
        self.next_case += 1;
        candidate.id = format!("w{}", self.next_case);

        let golden_trace = simulate(self.golden, &candidate)?;
        let buggy_trace = simulate(self.buggy, &candidate)?;
        let verdict = compare_outputs(&golden_trace, &buggy_trace);
        let id = self.state.add_trace(buggy_trace);

        let outcome = match verdict.status {
            Status::Pass => {
                let mut distinct = true;
                for k in 0..self.state.seeds.len() {
                    let seed = self.state.seeds[k].trace;
                    if self.state.distance(id, seed)? == 0.0 {
                        distinct = false;
                        break;
                    }
                }
                if distinct {
                    let bug = self.state.bug_trace;
                    let fitness = fitness_from_distance(self.state.distance(id, bug)?);
                    self.state.seeds.push(SeedEntry {
                        case: candidate,
                        trace: id,
                        fitness,
                        origin: SeedOrigin::Witness,
                    });
                    Outcome::Accepted
                } else {
                    Outcome::Duplicate
                }
            }
            Status::Fail => {
                self.state.failing.push(FailingEntry {
                    case: candidate,
                    trace: id,
                });
                Outcome::Failing
            }
        };

        let s = score(&mut self.state, id)?;
        update_priority(&mut self.state.priorities, &positions, s, self.cfg.gamma);
        self.diagnostics.iterations.push(IterationRecord {
            round: self.round,
            iter: self.state.iter,
            seed_index,
            seed_prob_sum,
            position_prob_sum,
            positions,
            outcome,
            score: s,
            priorities: self.state.priorities.clone(),
        });
        self.state.iter += 1;
        Ok(())
    }

    fn has_witness(&self) -> bool {
        self.state.seeds.iter().any(|s| s.origin == SeedOrigin::Witness)
    }

    fn summarize(&mut self) -> Result<(), WitgenError> {
        let traces: Vec<usize> = self.state.seeds.iter().map(|s| s.trace).collect();
        let mut min: Option<f64> = None;
        for (i, &a) in traces.iter().enumerate() {
            for &b in &traces[i + 1..] {
                let d = self.state.distance(a, b)?;
                min = Some(min.map_or(d, |m| m.min(d)));
            }
        }
        self.diagnostics.rounds.push(RoundSummary {
            seeds: self
                .state
                .seeds
                .iter()
                .map(|s| SeedRecord {
                    case: s.case.clone(),
                    origin: s.origin,
                    fitness: s.fitness,
                })
                .collect(),
            failing: self.state.failing.iter().map(|f| f.case.clone()).collect(),
            min_pairwise_seed_distance: min,
        });
        Ok(())
    }

    /// Seed set <- failing set, keeping one member per zero-distance class.
    fn restart(&mut self) -> Result<(), WitgenError> {
        let failing = std::mem::take(&mut self.state.failing);
        let mut seeds: Vec<SeedEntry> = Vec::new();
        for f in failing {
            let mut distinct = true;
            for s in &seeds {
                if self.state.distance(f.trace, s.trace)? == 0.0 {
                    distinct = false;
                    break;
                }
            }
            if distinct {
                let bug = self.state.bug_trace;
                let fitness = fitness_from_distance(self.state.distance(f.trace, bug)?);
                seeds.push(SeedEntry {
                    case: f.case,
                    trace: f.trace,
                    fitness,
                    origin: SeedOrigin::Restart,
                });
            }
        }
        if !seeds.is_empty() {
            self.state.seeds = seeds;
        }
        self.state.iter = 0;
        self.round += 1;
        Ok(())
    }

    fn top_witnesses(&mut self) -> Vec<Witness> {
        let mut pool: Vec<&SeedEntry> = self
            .state
            .seeds
            .iter()
            .filter(|s| s.origin == SeedOrigin::Witness)
            .collect();
        let n = self.cfg.top_n.min(pool.len());
        if self.cfg.mode == SearchMode::Rand {
            let mut picked = index::sample(&mut self.state.rng, pool.len(), n).into_vec();
            picked.sort_unstable();
            pool = picked.into_iter().map(|i| pool[i]).collect();
        } else {
            // stable: equal fitness keeps insertion order
            pool.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
            pool.truncate(n);
        }
        pool.into_iter()
            .map(|s| Witness {
                case: s.case.clone(),
                trace: self.state.traces[s.trace].clone(),
                fitness: s.fitness,
            })
            .collect()
    }
}

/// Run the witness search. `c_b` must fail on `buggy`.
pub fn generate_witnesses(
    golden: &Design,
    buggy: &Design,
    c_b: &TestCase,
    cfg: &SearchConfig,
) -> Result<WitnessSet, WitgenError> {
    generate_witnesses_constrained(golden, buggy, c_b, cfg, &InputConstraints::default())
}

pub fn generate_witnesses_constrained(
    golden: &Design,
    buggy: &Design,
    c_b: &TestCase,
    cfg: &SearchConfig,
    constraints: &InputConstraints,
) -> Result<WitnessSet, WitgenError> {
    cfg.validate()?;
    oracle::check_interfaces(golden, buggy)?;
    let tables = constraints.tables(buggy)?;
    let golden_trace = simulate(golden, c_b)?;
    let bug_trace = simulate(buggy, c_b)?;
    if compare_outputs(&golden_trace, &bug_trace).passed() {
        return Err(WitgenError::NotTriggering);
    }

    let resolved = cfg.resolved();
    let mut session = Session {
        golden,
        buggy,
        state: SearchState::new(c_b.clone(), bug_trace, &resolved),
        cfg: resolved,
        tables,
        diagnostics: SearchDiagnostics::default(),
        round: 0,
        next_case: 0,
    };

    let mut restarts = 0;
    loop {
        while session.state.iter < session.cfg.max_iterations {
            session.step()?;
        }
        session.summarize()?;
        if session.has_witness() || restarts == session.cfg.max_restarts {
            break;
        }
        restarts += 1;
        session.restart()?;
    }

    let degraded = !session.has_witness();
    let witnesses = session.top_witnesses();
    Ok(WitnessSet {
        witnesses,
        degraded,
        restarts,
        bug_trace: session.state.bug_trace().clone(),
        config: session.cfg,
        diagnostics: session.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parse_design;
    use approx::assert_relative_eq;

    const ALU: &str = "module alu(input [3:0] opcode, input [3:0] a, input [3:0] b, output reg [3:0] y);
  always @(posedge clk)
    case (opcode)
      4'b0000: y = a + b;
      4'b0001: y = a - b;
      4'b0010: y = a & b;
      4'b0011: y = a | b;
      default: y = 0;
    endcase
endmodule";

    fn alu_pair() -> (Design, Design) {
        let golden = parse_design(ALU).unwrap();
        let buggy = parse_design(
            &ALU.replace("4'b0000: y = a + b", "4'b0000: y = a - b")
                .replace("4'b0001: y = a - b", "4'b0001: y = a + b"),
        )
        .unwrap();
        (golden, buggy)
    }

    fn alu_case(rows: &[[u64; 3]]) -> TestCase {
        TestCase::new(
            "cb",
            vec!["opcode".into(), "a".into(), "b".into()],
            rows.iter().map(|r| r.to_vec()).collect(),
        )
    }

    fn state_with_fitness(fitness: &[f64], t: usize, mode: SearchMode) -> SearchState {
        let cfg = SearchConfig {
            mode,
            rng_seed: 7,
            ..SearchConfig::default()
        };
        let tr = ExecutionTrace {
            coverage: vec![0],
            transitions: vec![],
            outputs: vec![],
        };
        let case = TestCase::new("c", vec!["x".into()], vec![vec![0]; t]);
        let mut st = SearchState::new(case.clone(), tr, &cfg);
        st.seeds.clear();
        for &f in fitness {
            st.seeds.push(SeedEntry {
                case: case.clone(),
                trace: 0,
                fitness: f,
                origin: SeedOrigin::Witness,
            });
        }
        st
    }

    #[test]
    fn fitness_examples() {
        assert_eq!(fitness_from_distance(0.0), 1.0);
        assert_eq!(fitness_from_distance(3.0), 0.25);
        assert!(fitness_from_distance(1e12) < 1e-11);
        assert!(fitness_from_distance(2.0) < fitness_from_distance(1.0));
    }

    #[test]
    fn seed_selection_follows_fitness() {
        let mut st = state_with_fitness(&[1.0], 1, SearchMode::Full);
        assert!((0..100).all(|_| select_seed(&mut st) == 0));

        let mut st = state_with_fitness(&[1.0, 3.0], 1, SearchMode::Full);
        assert_eq!(st.seed_probabilities(), vec![0.25, 0.75]);
        let draws = 100_000;
        let ones = (0..draws).filter(|_| select_seed(&mut st) == 1).count();
        assert!((ones as f64 / draws as f64 - 0.75).abs() < 0.01);

        let st = state_with_fitness(&[0.2, 0.2, 0.2, 0.2], 1, SearchMode::Full);
        assert!(st.seed_probabilities().iter().all(|&p| p == 0.25));
        let st = state_with_fitness(&[1.0, 3.0], 1, SearchMode::Rand);
        assert_eq!(st.seed_probabilities(), vec![0.5, 0.5]);
    }

    #[test]
    fn position_selection_follows_priority() {
        let mut st = state_with_fitness(&[1.0], 2, SearchMode::Full);
        st.priorities = vec![1.0, 3.0];
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| select_positions(&mut st, 1) == vec![1])
            .count();
        assert!((ones as f64 / draws as f64 - 0.75).abs() < 0.01);

        let mut st = state_with_fitness(&[1.0], 5, SearchMode::Full);
        assert_eq!(select_positions(&mut st, 5), vec![0, 1, 2, 3, 4]);
        assert_eq!(select_positions(&mut st, 9), vec![0, 1, 2, 3, 4]);

        let mut st = state_with_fitness(&[1.0], 2, SearchMode::NoDiv);
        st.priorities = vec![1.0, 3.0];
        assert_eq!(st.position_probabilities(), vec![0.5, 0.5]);
        let ones = (0..draws)
            .filter(|_| select_positions(&mut st, 1) == vec![1])
            .count();
        assert!((ones as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn mutate_respects_positions_and_probability() {
        let (_, buggy) = alu_pair();
        let case = alu_case(&[[1, 2, 3], [4, 5, 6], [7, 8, 9]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(mutate(&case, &[0, 1, 2], 0.0, &buggy, &[], &mut rng), case);
        for _ in 0..50 {
            let m = mutate(&case, &[1], 1.0, &buggy, &[], &mut rng);
            assert_eq!(m.cycles[0], case.cycles[0]);
            assert_eq!(m.cycles[2], case.cycles[2]);
            assert!(m.cycles[1].iter().all(|&v| v < 16));
        }
        // constrained draws stay inside the table
        let tables = vec![Some(vec![2, 3]), None, Some(vec![0])];
        for _ in 0..50 {
            let m = mutate(&case, &[0], 1.0, &buggy, &tables, &mut rng);
            assert!([2, 3].contains(&m.cycles[0][0]));
            assert_eq!(m.cycles[0][2], 0);
        }
    }

    #[test]
    fn mutate_single_bit_replays_seeded_stream() {
        let d = parse_design("module m(input x, output reg y);\nalways @(posedge clk) y <= x;\nendmodule").unwrap();
        let case = TestCase::new("c", vec!["x".into()], vec![vec![0]]);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            mutate(&case, &[0], 1.0, &d, &[], &mut rng).cycles[0][0]
        };
        // frozen from ChaCha8 seeded with 1: gen_bool(1.0) then gen_range(0..=1)
        let mut replay = ChaCha8Rng::seed_from_u64(1);
        assert!(replay.gen_bool(1.0));
        let expected: u64 = replay.gen_range(0..=1);
        assert_eq!(run(1), expected);
    }

    #[test]
    fn priority_update_is_ewma() {
        let mut p = vec![1.0, 1.0, 1.0];
        update_priority(&mut p, &[1], 2.0, 0.1);
        assert_relative_eq!(p[1], 1.1, epsilon = 1e-12);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[2], 1.0);
        update_priority(&mut p, &[0], 0.37, 1.0);
        assert_eq!(p[0], 0.37);
    }

    #[test]
    fn score_is_mean_seed_distance() {
        let cfg = SearchConfig {
            weights: DistanceWeights::new(1.0, 0.0),
            ..SearchConfig::default()
        };
        let tr = |c: Vec<u64>| ExecutionTrace {
            coverage: c,
            transitions: vec![],
            outputs: vec![],
        };
        let case = TestCase::new("c", vec!["x".into()], vec![vec![0]]);
        let mut st = SearchState::new(case.clone(), tr(vec![0, 0]), &cfg);
        let cand = st.add_trace(tr(vec![2, 0]));
        assert_eq!(score(&mut st, cand).unwrap(), 2.0);
        let other = st.add_trace(tr(vec![2, 4]));
        st.seeds.push(SeedEntry {
            case,
            trace: other,
            fitness: 0.5,
            origin: SeedOrigin::Witness,
        });
        // distances 2 and 4
        assert_eq!(score(&mut st, cand).unwrap(), 3.0);
        let same = st.add_trace(tr(vec![0, 0]));
        st.seeds.truncate(1);
        assert_eq!(score(&mut st, same).unwrap(), 0.0);
    }

    #[test]
    fn passing_bug_trigger_is_rejected() {
        let (golden, buggy) = alu_pair();
        let cfg = SearchConfig::for_design(&buggy);
        let err = generate_witnesses(&golden, &buggy, &alu_case(&[[2, 1, 1]]), &cfg).unwrap_err();
        assert!(matches!(err, WitgenError::NotTriggering));
    }

    #[test]
    fn alu_search_finds_witnesses() {
        let (golden, buggy) = alu_pair();
        let cfg = SearchConfig::for_design(&buggy).with_seed(1);
        let set = generate_witnesses(&golden, &buggy, &alu_case(&[[0, 1, 1]]), &cfg).unwrap();
        assert!(!set.degraded);
        assert!(!set.witnesses.is_empty() && set.witnesses.len() <= 10);
        for w in &set.witnesses {
            assert!(oracle::classify(&golden, &buggy, &w.case).unwrap().passed());
        }
        let f: Vec<f64> = set.witnesses.iter().map(|w| w.fitness).collect();
        assert!(f.windows(2).all(|p| p[0] >= p[1]));
        assert_eq!(set.diagnostics.iterations.len(), 100);
    }

    #[test]
    fn search_is_deterministic() {
        let (golden, buggy) = alu_pair();
        let case = alu_case(&[[2, 3, 1], [0, 1, 1], [3, 5, 2]]);
        for mode in SearchMode::ALL {
            let cfg = SearchConfig::for_design(&buggy).with_seed(99).with_mode(mode);
            let a = generate_witnesses(&golden, &buggy, &case, &cfg).unwrap();
            let b = generate_witnesses(&golden, &buggy, &case, &cfg).unwrap();
            assert_eq!(a.witnesses, b.witnesses);
            assert_eq!(a.diagnostics.iterations, b.diagnostics.iterations);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (golden, buggy) = alu_pair();
        let case = alu_case(&[[0, 1, 1]]);
        for cfg in [
            SearchConfig { top_n: 0, ..SearchConfig::default() },
            SearchConfig { gamma: 0.0, ..SearchConfig::default() },
            SearchConfig { delta: 0.0, ..SearchConfig::default() },
            SearchConfig { mutation_prob: 1.5, ..SearchConfig::default() },
            SearchConfig { positions_per_mutation: 0, ..SearchConfig::default() },
        ] {
            assert!(matches!(
                generate_witnesses(&golden, &buggy, &case, &cfg),
                Err(WitgenError::Config(_))
            ));
        }
    }

    #[test]
    fn constraint_sidecar_parses_and_checks() {
        let (_, buggy) = alu_pair();
        let c = InputConstraints::from_json(r#"{"opcode": {"values": [0, 1, 2]}}"#).unwrap();
        let t = c.tables(&buggy).unwrap();
        assert_eq!(t[0], Some(vec![0, 1, 2]));
        assert_eq!(t[1], None);
        let bad = InputConstraints::from_json(r#"{"opcode": {"values": [16]}}"#).unwrap();
        assert!(bad.tables(&buggy).is_err());
        let unknown = InputConstraints::from_json(r#"{"nope": {"values": [1]}}"#).unwrap();
        assert!(unknown.tables(&buggy).is_err());
    }
}
