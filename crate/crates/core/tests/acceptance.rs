// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Runs without the libtest harness so each
//! criterion reports exactly one PASS or FAIL line.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtl_witness::bench::{evaluate, EvalResult, Suite, SuiteBug, WeightChoice};
use rtl_witness::metrics::{distance, dtw};
use rtl_witness::par::Execution;
use rtl_witness::sbfl::{ochiai, single_failure_score, suspiciousness};
use rtl_witness::sim::Transition;
use rtl_witness::witgen::{select_seed, SearchState, SeedEntry, SeedOrigin};
use rtl_witness::{
    classify, generate_witnesses, parse_design, simulate, DistanceWeights, ExecutionTrace, SearchConfig,
    SearchMode, TestCase,
};

type Check = Result<String, String>;

const SEEDS: std::ops::Range<u64> = 0..10;

fn seeds() -> Vec<u64> {
    SEEDS.collect()
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Check {
    if elapsed < limit {
        Ok(format!("{detail}, {:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}, took {:.2}s (limit {:?})", elapsed.as_secs_f64(), limit))
    }
}

fn ochiai_identity() -> Check {
    let start = Instant::now();
    // statement i is covered by witnesses 0..i, so e_p(i) = i
    let n = 1001;
    let failing = ExecutionTrace {
        coverage: vec![1; n],
        transitions: Vec::new(),
        outputs: Vec::new(),
    };
    let witnesses: Vec<ExecutionTrace> = (0..n - 1)
        .map(|j| ExecutionTrace {
            coverage: (0..n).map(|i| u64::from(i > j)).collect(),
            transitions: Vec::new(),
            outputs: Vec::new(),
        })
        .collect();
    let scores = suspiciousness(&failing, witnesses.iter()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for e_p in 0..=1000u64 {
        let expected = 1.0 / (1.0 + e_p as f64).sqrt();
        for got in [ochiai(1, 0, e_p), single_failure_score(e_p), scores[e_p as usize].score] {
            worst = worst.max((got - expected).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation {worst:e}"));
    }
    within(start.elapsed(), Duration::from_secs(1), format!("max deviation {worst:e}"))
}

fn dtw_brute(a: &[u64], b: &[u64]) -> u64 {
    fn go(a: &[u64], b: &[u64], i: usize, j: usize) -> u64 {
        if i == 0 && j == 0 {
            return 0;
        }
        let here = if i == 0 || j == 0 { 1 } else { u64::from(a[i - 1] != b[j - 1]) };
        let mut best = u64::MAX;
        if i > 0 {
            best = best.min(go(a, b, i - 1, j));
        }
        if j > 0 {
            best = best.min(go(a, b, i, j - 1));
        }
        if i > 0 && j > 0 {
            best = best.min(go(a, b, i - 1, j - 1));
        }
        here + best
    }
    go(a, b, a.len(), b.len())
}

fn dtw_oracle() -> Check {
    let start = Instant::now();
    let mut seqs: Vec<Vec<u64>> = vec![Vec::new()];
    let mut frontier = seqs.clone();
    for _ in 0..4 {
        frontier = frontier
            .iter()
            .flat_map(|s| (0..3).map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        seqs.extend(frontier.iter().cloned());
    }
    let mut pairs = 0;
    for a in &seqs {
        for b in &seqs {
            let (got, want) = (dtw(a, b), dtw_brute(a, b));
            if got != want {
                return Err(format!("dtw({a:?}, {b:?}) = {got}, brute force {want}"));
            }
            pairs += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(5), format!("{pairs} pairs exact"))
}

fn same_state(x: &ExecutionTrace, y: &ExecutionTrace) -> bool {
    let values = |t: &ExecutionTrace| -> Vec<Vec<u64>> {
        t.transitions.iter().map(|s| s.iter().map(|v: &Transition| v.value).collect()).collect()
    };
    x.coverage == y.coverage && values(x) == values(y)
}

fn distance_semimetric() -> Check {
    let mut zero_pairs = 0;
    for (i, (name, source)) in common::BUILTIN_DESIGNS.iter().enumerate() {
        let design = parse_design(source).map_err(|e| format!("{name}: {e}"))?;
        let w = DistanceWeights::auto(&design);
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        for pair in 0..200 {
            let t = rng.gen_range(1..=12);
            let a = common::random_case(&design, t, &mut rng);
            // every fourth pair differs in at most one cycle, so some traces coincide
            let b = if pair % 4 == 0 {
                let mut b = a.clone();
                let (c, s) = (rng.gen_range(0..t), rng.gen_range(0..design.inputs.len()));
                b.cycles[c][s] = rng.gen_range(0..2);
                b
            } else {
                common::random_case(&design, rng.gen_range(1..=12), &mut rng)
            };
            let (x, y) = (simulate(&design, &a), simulate(&design, &b));
            let (x, y) = (x.map_err(|e| e.to_string())?, y.map_err(|e| e.to_string())?);
            let d_xy = distance(&x, &y, w).map_err(|e| e.to_string())?;
            let d_yx = distance(&y, &x, w).map_err(|e| e.to_string())?;
            let d_xx = distance(&x, &x, w).map_err(|e| e.to_string())?;
            if d_xy != d_yx || d_xy < 0.0 || d_xx != 0.0 {
                return Err(format!("{name} pair {pair}: d(x,y)={d_xy} d(y,x)={d_yx} d(x,x)={d_xx}"));
            }
            if (d_xy == 0.0) != same_state(&x, &y) {
                return Err(format!("{name} pair {pair}: d = {d_xy} disagrees with trace equality"));
            }
            zero_pairs += usize::from(d_xy == 0.0);
        }
    }
    Ok(format!(
        "{} pairs over {} designs, {zero_pairs} at distance 0",
        200 * common::BUILTIN_DESIGNS.len(),
        common::BUILTIN_DESIGNS.len()
    ))
}

fn probability_normalization(suite: &Suite) -> Check {
    let mut records = 0;
    'outer: for seed in 0..5 {
        for bug in &suite.bugs {
            let cfg = SearchConfig::for_design(&bug.buggy).with_seed(seed);
            let set = generate_witnesses(&bug.golden, &bug.buggy, &bug.c_b, &cfg).map_err(|e| e.to_string())?;
            for r in &set.diagnostics.iterations {
                if (r.seed_prob_sum - 1.0).abs() > 1e-9 || (r.position_prob_sum - 1.0).abs() > 1e-9 {
                    return Err(format!(
                        "{} iter {}: p_s sums to {}, p_m to {}",
                        bug.spec.name, r.iter, r.seed_prob_sum, r.position_prob_sum
                    ));
                }
                records += 1;
                if records == 1000 {
                    break 'outer;
                }
            }
        }
    }
    if records < 1000 {
        return Err(format!("only {records} iterations recorded"));
    }

    let case = TestCase::new("c", vec!["a".into()], vec![vec![0]]);
    let trace = ExecutionTrace {
        coverage: vec![1],
        transitions: Vec::new(),
        outputs: vec![vec![0]],
    };
    let mut state = SearchState::new(case.clone(), trace, &SearchConfig::default().with_seed(99));
    state.seeds.push(SeedEntry {
        case,
        trace: 0,
        fitness: 3.0,
        origin: SeedOrigin::Witness,
    });
    let draws = 100_000;
    let mut counts = [0usize; 2];
    for _ in 0..draws {
        counts[select_seed(&mut state)] += 1;
    }
    let freq = [counts[0] as f64 / draws as f64, counts[1] as f64 / draws as f64];
    if (freq[0] - 0.25).abs() > 0.01 || (freq[1] - 0.75).abs() > 0.01 {
        return Err(format!("selection frequencies {freq:?}"));
    }
    Ok(format!("{records} iterations normalized, frequencies {:.4}/{:.4}", freq[0], freq[1]))
}

fn run_mode(suite: &Suite, mode: SearchMode) -> Result<EvalResult, String> {
    let cfg = SearchConfig::default().with_mode(mode);
    let r = evaluate(suite, &cfg, WeightChoice::default(), &seeds(), Execution::Parallel).map_err(|e| e.to_string())?;
    if let Some(f) = r.failures.first() {
        return Err(format!("{}: {}", f.bug, f.message));
    }
    Ok(r)
}

fn easy_rate(suite: &Suite) -> Check {
    let easy = suite.filter(|b| b.category == "easy");
    if easy.bugs.len() < 8 {
        return Err(format!("easy suite has {} bugs", easy.bugs.len()));
    }
    let start = Instant::now();
    let r = run_mode(&easy, SearchMode::Full)?;
    let elapsed = start.elapsed();
    let cells = (easy.bugs.len() * r.seeds.len()) as f64;
    let hits: usize = r.per_seed.iter().map(|s| s.tied_top1).sum();
    let rate = hits as f64 / cells;
    let detail = format!("tied Top-1 in {hits}/{cells} cells ({:.1}%)", 100.0 * rate);
    if rate < 0.70 {
        return Err(detail);
    }
    within(elapsed, Duration::from_secs(120), detail)
}

fn fsm_rank(suite: &Suite) -> Check {
    let one = suite.filter(|b| b.spec.name == "fsm_s11_next");
    if one.bugs.len() != 1 {
        return Err("fsm_s11_next missing from the suite".into());
    }
    let r = run_mode(&one, SearchMode::Full)?;
    let ranks: Vec<f64> = r.per_seed.iter().map(|s| s.per_bug_rank["fsm_s11_next"]).collect();
    let good = ranks.iter().filter(|&&x| x <= 5.0).count();
    let detail = format!("rank <= 5 in {good}/10 seeds, ranks {ranks:?}");
    if good >= 8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn full_beats_rand(full: &EvalResult, rand: &EvalResult) -> Check {
    let detail = format!("MAR full {:.3}, rand {:.3}", full.mar, rand.mar);
    if full.mar <= rand.mar {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ablation(full: &EvalResult, no_cov: &EvalResult) -> Check {
    let strict = |r: &EvalResult| r.top_n_counts[&1];
    let detail = format!(
        "Top-1 full {:.1}, no-cov {:.1}; tied Top-1 full {:.1}, no-cov {:.1}",
        strict(full),
        strict(no_cov),
        full.tied_top1,
        no_cov.tied_top1
    );
    if strict(full) >= strict(no_cov) && full.tied_top1 >= no_cov.tied_top1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_invariants(bug: &SuiteBug, seed: u64, mode: SearchMode) -> Result<usize, String> {
    let cfg = SearchConfig::for_design(&bug.buggy).with_seed(seed).with_mode(mode);
    let set = generate_witnesses(&bug.golden, &bug.buggy, &bug.c_b, &cfg).map_err(|e| e.to_string())?;
    let tag = format!("{} seed {seed} {}", bug.spec.name, mode.name());
    let verdict = |case: &TestCase| classify(&bug.golden, &bug.buggy, case).map_err(|e| e.to_string());
    let mut checked = 0;
    for round in &set.diagnostics.rounds {
        if let Some(d) = round.min_pairwise_seed_distance {
            if d <= 0.0 {
                return Err(format!("{tag}: two seeds at distance {d}"));
            }
        }
        for s in round.seeds.iter().filter(|s| s.origin == SeedOrigin::Witness) {
            if !verdict(&s.case)?.passed() {
                return Err(format!("{tag}: seed {} fails", s.case.id));
            }
            checked += 1;
        }
        for f in &round.failing {
            if !verdict(f)?.failed() {
                return Err(format!("{tag}: failing-set member {} passes", f.id));
            }
            checked += 1;
        }
    }
    if let Some(r) = set.diagnostics.iterations.iter().find(|r| r.priorities.iter().any(|&p| p <= 0.0)) {
        return Err(format!("{tag}: non-positive priority at iter {}", r.iter));
    }
    if set.witnesses.len() > cfg.top_n {
        return Err(format!("{tag}: {} witnesses", set.witnesses.len()));
    }
    for w in &set.witnesses {
        if !verdict(&w.case)?.passed() {
            return Err(format!("{tag}: witness {} fails", w.case.id));
        }
    }
    Ok(checked)
}

fn invariants(suite: &Suite) -> Check {
    let mut checked = 0;
    let mut runs = 0;
    for bug in &suite.bugs {
        for seed in 0..3 {
            for mode in [SearchMode::Full, SearchMode::Rand, SearchMode::NoDiv] {
                checked += check_invariants(bug, seed, mode)?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs, {checked} set members validated"))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rtl-witness").chain(args.iter().copied());
    match rtl_witness::cli::run(argv, &mut out, &mut err) {
        0 => Ok(()),
        code => Err(format!("exit {code}: {}", String::from_utf8_lossy(&err))),
    }
}

fn determinism_and_speed(suite: &Suite, dir: &Path) -> Check {
    let bug = suite
        .bugs
        .iter()
        .filter(|b| b.golden.statements.len() <= 200 && b.c_b.len() <= 20)
        .max_by_key(|b| (b.golden.statements.len(), b.c_b.len()))
        .ok_or("no suitable design")?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map(|_| p.display().to_string()).map_err(|e| e.to_string())
    };
    let golden = write("golden.mv", rtl_witness::hdl::print_design(&bug.golden))?;
    let buggy = write("buggy.mv", rtl_witness::hdl::print_design(&bug.buggy))?;
    let case = write("c_b.csv", bug.c_b.to_csv())?;
    let out = dir.join("report.json").display().to_string();
    let args = [
        "localize", "--design", &buggy, "--golden", &golden, "--testcase", &case, "--rng-seed", "5", "--iters",
        "100", "--out", &out,
    ];
    let start = Instant::now();
    cli(&args)?;
    let elapsed = start.elapsed();
    let first = std::fs::read(&out).map_err(|e| e.to_string())?;
    cli(&args)?;
    let second = std::fs::read(&out).map_err(|e| e.to_string())?;
    if first != second {
        return Err("reports differ between identical runs".into());
    }
    let detail = format!(
        "{} ({} statements, t = {}) byte-identical",
        bug.spec.name,
        bug.golden.statements.len(),
        bug.c_b.len()
    );
    within(elapsed, Duration::from_secs(10), detail)
}

fn main() -> ExitCode {
    let suite = match Suite::builtin() {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL loading built-in suite: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = tempfile::tempdir().expect("temp dir");
    let modes = (|| -> Result<_, String> {
        Ok((
            run_mode(&suite, SearchMode::Full)?,
            run_mode(&suite, SearchMode::Rand)?,
            run_mode(&suite, SearchMode::NoCov)?,
        ))
    })();

    let mut results: Vec<(&str, Check)> = vec![
        ("simplified Ochiai identity", ochiai_identity()),
        ("DTW equals path enumeration", dtw_oracle()),
        ("distance semimetric", distance_semimetric()),
        ("probability normalization", probability_normalization(&suite)),
        ("easy-suite Top-1 rate", easy_rate(&suite)),
        ("FSM wrong-next-state rank", fsm_rank(&suite)),
    ];
    match &modes {
        Ok((full, rand, no_cov)) => {
            results.push(("full MAR <= rand MAR", full_beats_rand(full, rand)));
            results.push(("full Top-1 >= no-cov Top-1", ablation(full, no_cov)));
        }
        Err(e) => {
            results.push(("full MAR <= rand MAR", Err(e.clone())));
            results.push(("full Top-1 >= no-cov Top-1", Err(e.clone())));
        }
    }
    results.push(("search invariants", invariants(&suite)));
    results.push(("determinism and speed", determinism_and_speed(&suite, dir.path())));

    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
