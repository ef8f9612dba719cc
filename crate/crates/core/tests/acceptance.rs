//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1-6 each return a deterministic transcript besides the verdict;
//! criterion 8 re-runs them and compares the transcripts byte for byte.
//! Tolerances are the `const`s below.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use petricov::audit;
use petricov::cli::report::{decide, Algorithm};
use petricov::covercheck::{backward_cover, backward_cover_q, Config, RunStats, Verdict};
use petricov::fo::{build_cover_query, build_fs_formula, build_reach_formula, solve, Direction, SolveResult, Var, VarKind};
use petricov::fo::encode::marking_vars;
use petricov::gen::{generate, GenParams};
use petricov::instance::{Format, Instance};
use petricov::net::Degree;
use petricov::oracle::{forward_cover_bounded, q_reachable_bruteforce, Answer, Budget};
use petricov::qreach::{drain_augmented, q_coverable, q_reachable};
use petricov::ratlp::PivotRule;
use petricov::structural::{trap_safety_check, TrapVerdict};
use petricov::{int, rat, DiscreteMarking, Rat, RationalMarking};

const FORK_BUDGET: Duration = Duration::from_secs(1);
const COVER_INSTANCES: u64 = 500;
const COVER_RUNTIME: Duration = Duration::from_secs(600);
const CONTINUOUS_INSTANCES: u64 = 500;
const LINEAR_SIZES: [usize; 7] = [10, 20, 50, 100, 250, 500, 1000];
/// Bound on node count / (|P| + |T| + nnz).
const LINEAR_K: f64 = 8.0;
/// Doubling the net may at most multiply construction time by 2 · 2.
const DOUBLING_SLACK: f64 = 2.0;
const PRUNING_INSTANCES: u64 = 200;
const PERF_BUDGET: Duration = Duration::from_secs(120);

const FORK: &str = "# name: fork
vars
    p0 p1
rules
    p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;
    p0 >= 1 -> p0' = p0 - 1;
init
    p0 = 1, p1 = 0
target
    p1 >= 1
";

struct Outcome {
    pass: bool,
    detail: String,
    transcript: String,
}

fn line(n: usize, o: &Outcome) -> String {
    format!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail)
}

fn fork() -> Instance {
    Instance::parse(FORK, Format::Mist).unwrap()
}

fn rm(v: &[u64]) -> RationalMarking {
    DiscreteMarking(v.to_vec()).to_rational()
}

fn c1_fork() -> Outcome {
    let inst = fork();
    let cfg = Config::default();
    let start = Instant::now();
    let mut reports = Vec::new();
    for algo in [Algorithm::Backward, Algorithm::Qcover, Algorithm::Trapcegar] {
        let mut r = decide(&inst, algo, &cfg);
        r.strip_timings();
        reports.push(r);
    }
    let reach = q_reachable(&inst.net, &rm(&[1, 0]), &rm(&[0, 1])).unwrap();
    let cover = q_coverable(&inst.net, &rm(&[1, 0]), &rm(&[0, 1])).unwrap();
    let elapsed = start.elapsed();
    let pass = reports[0].verdict == Verdict::Safe
        && reports[1].verdict == Verdict::Safe
        && reports[1].iterations() == 0
        && reports[1].stats.as_ref().is_some_and(|s| s.rejected_upfront)
        && matches!(reports[2].verdict, Verdict::Unknown(_))
        && !reach.reachable
        && !cover.reachable
        && elapsed <= FORK_BUDGET;
    let transcript: String = reports.iter().map(|r| r.to_json()).collect::<String>()
        + &format!("reach={} cover={}\n", reach.reachable, cover.reachable);
    Outcome {
        pass,
        detail: format!(
            "backward={} qcover={} ({} iterations) trapcegar={} q-reach={} q-cover={} in {elapsed:?} (limit {FORK_BUDGET:?})",
            reports[0].verdict,
            reports[1].verdict,
            reports[1].iterations(),
            reports[2].verdict,
            reach.reachable,
            cover.reachable
        ),
        transcript,
    }
}

fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let params = GenParams {
        places: rng.gen_range(1..=6),
        transitions: rng.gen_range(1..=8),
        min_weight: 1,
        max_weight: 2,
        max_tokens: 3,
        density: rng.gen_range(0.15..0.5),
        seed,
    };
    generate(&params).unwrap()
}

fn c2_cover_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default();
    let (mut disagree, mut oracle_checked, mut oracle_disagree) = (0, 0, 0);
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    let mut transcript = String::new();
    for seed in 0..COVER_INSTANCES {
        let inst = small_instance(seed);
        let target = &inst.targets[0];
        let (a, _) = backward_cover(&inst.net, &inst.initial, target, &cfg);
        let (b, sb) = backward_cover_q(&inst.net, &inst.initial, target, &cfg);
        if a != b {
            disagree += 1;
        }
        let o = forward_cover_bounded(&inst.net, &inst.initial, target, Budget::default());
        if o.is_definitive() {
            oracle_checked += 1;
            let want = if o == Answer::True { Verdict::Unsafe } else { Verdict::Safe };
            if a != want {
                oracle_disagree += 1;
            }
        }
        *tally.entry(a.to_string()).or_default() += 1;
        writeln!(transcript, "{seed},{a},{b},{},{}", sb.iterations, sb.pruned_total()).unwrap();
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: disagree == 0 && oracle_disagree == 0 && elapsed <= COVER_RUNTIME,
        detail: format!(
            "{COVER_INSTANCES} instances {tally:?}: backward/qcover disagreements {disagree}, \
             oracle-definitive {oracle_checked} with {oracle_disagree} disagreements, {elapsed:?} (limit {COVER_RUNTIME:?})"
        ),
        transcript,
    }
}

fn bindings(kind: VarKind, m: &RationalMarking) -> impl Iterator<Item = (Var, Rat)> + '_ {
    m.0.iter().enumerate().map(move |(p, v)| (Var::new(kind, p), v.clone()))
}

fn smt_sat(r: SolveResult) -> bool {
    match r {
        SolveResult::Sat(_) => true,
        SolveResult::Unsat => false,
        SolveResult::Unknown => panic!("no deadline was set"),
    }
}

/// A target reached by a few random continuous firings, or a random one.
fn continuous_target(inst: &Instance, rng: &mut ChaCha8Rng) -> RationalMarking {
    let net = &inst.net;
    if rng.gen_bool(0.5) {
        let mut m = inst.initial.to_rational();
        for _ in 0..rng.gen_range(0..4) {
            let t = petricov::Transition(rng.gen_range(0..net.num_transitions()));
            let q = match net.enabling_degree(&m, t).unwrap() {
                Degree::Finite(d) => d * rat(rng.gen_range(1..=2), 2),
                Degree::Infinite => int(1),
            };
            m = net.fire_continuous(&m, t, &q).unwrap();
        }
        m
    } else {
        RationalMarking(
            (0..net.num_places())
                .map(|_| rat(rng.gen_range(0..=6), rng.gen_range(1..=2)))
                .collect(),
        )
    }
}

fn continuous_instance(seed: u64) -> (Instance, RationalMarking, DiscreteMarking) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0417);
    let inst = generate(&GenParams {
        places: rng.gen_range(1..=4),
        transitions: rng.gen_range(1..=6),
        min_weight: 1,
        max_weight: 2,
        max_tokens: 2,
        density: rng.gen_range(0.2..0.6),
        seed,
    })
    .unwrap();
    let target = continuous_target(&inst, &mut rng);
    let cover = inst.targets[0].clone();
    (inst, target, cover)
}

struct ContinuousRow {
    reach: bool,
    cover: bool,
    trap_reach: TrapVerdict,
    trap_cover: TrapVerdict,
}

fn c3_continuous(rows: &mut Vec<ContinuousRow>) -> Outcome {
    let mut mismatches = Vec::new();
    let mut transcript = String::new();
    let (mut reach_true, mut cover_true) = (0, 0);
    for seed in 0..CONTINUOUS_INSTANCES {
        let (inst, target, cover) = continuous_instance(seed);
        let net = &inst.net;
        let m0 = inst.initial.to_rational();

        let alg = q_reachable(net, &m0, &target).unwrap().reachable;
        let brute = q_reachable_bruteforce(net, &m0, &target).unwrap();
        let phi: BTreeMap<Var, Rat> = bindings(VarKind::Initial, &m0)
            .chain(bindings(VarKind::Final, &target))
            .collect();
        let smt = smt_sat(solve(&build_reach_formula(net), &phi).unwrap());
        if !(alg == brute && brute == smt) {
            mismatches.push(format!("reach seed {seed}: alg {alg} brute {brute} smt {smt}"));
        }

        let c = cover.to_rational();
        let alg_c = q_coverable(net, &m0, &c).unwrap().reachable;
        let brute_c = q_reachable_bruteforce(&drain_augmented(net), &m0, &c).unwrap();
        let q = build_cover_query(net, &inst.initial);
        let smt_c = smt_sat(solve(&q.formula, &bindings(VarKind::Final, &c).collect()).unwrap());
        if !(alg_c == brute_c && brute_c == smt_c) {
            mismatches.push(format!("cover seed {seed}: alg {alg_c} brute {brute_c} smt {smt_c}"));
        }
        reach_true += alg as usize;
        cover_true += alg_c as usize;

        // Reachability targets with fractional entries have no discrete
        // counterpart for the trap check; round them up instead.
        let discrete_target = DiscreteMarking(
            target.0.iter().map(|v| v.ceil().to_integer().try_into().unwrap()).collect(),
        );
        let exact = discrete_target.to_rational() == target;
        let trap_reach = if exact {
            trap_safety_check(net, &inst.initial, &discrete_target).verdict
        } else {
            TrapVerdict::Inconclusive
        };
        let trap_cover = trap_safety_check(&drain_augmented(net), &inst.initial, &cover).verdict;
        rows.push(ContinuousRow {
            reach: smt,
            cover: smt_c,
            trap_reach,
            trap_cover,
        });
        writeln!(transcript, "{seed},{alg},{alg_c},{trap_reach:?},{trap_cover:?}").unwrap();
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{CONTINUOUS_INSTANCES} instances ({reach_true} Q-reachable, {cover_true} Q-coverable): {} mismatches {:?}",
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
        transcript,
    }
}

fn c4_subsumption(rows: &[ContinuousRow]) -> Outcome {
    let violations = rows
        .iter()
        .filter(|r| {
            (r.trap_reach == TrapVerdict::Safe && r.reach) || (r.trap_cover == TrapVerdict::Safe && r.cover)
        })
        .count();
    let trap_safe = rows
        .iter()
        .map(|r| (r.trap_reach == TrapVerdict::Safe) as usize + (r.trap_cover == TrapVerdict::Safe) as usize)
        .sum::<usize>();
    let inst = fork();
    let drained = drain_augmented(&inst.net);
    let trap = trap_safety_check(&drained, &inst.initial, &inst.targets[0]);
    let q = build_cover_query(&inst.net, &inst.initial);
    let phi = smt_sat(solve(&q.formula, &bindings(VarKind::Final, &rm(&[0, 1])).collect()).unwrap());
    let witness = trap.verdict == TrapVerdict::Inconclusive && !phi;
    Outcome {
        pass: violations == 0 && witness,
        detail: format!(
            "{} checks, {trap_safe} trap-safe, {violations} trap-safe-but-SAT; fork trap={:?} after {} rounds, formula sat={phi}",
            rows.len() * 2,
            trap.verdict,
            trap.rounds
        ),
        transcript: format!("{violations},{trap_safe},{:?},{phi}\n", trap.verdict),
    }
}

fn c5_linear() -> Outcome {
    let mut ratios = Vec::new();
    let mut times = Vec::new();
    let mut transcript = String::new();
    for &n in &LINEAR_SIZES {
        let inst = generate(&GenParams {
            places: n,
            transitions: n,
            min_weight: 1,
            max_weight: 3,
            max_tokens: 2,
            density: 3.0 / n as f64,
            seed: n as u64,
        })
        .unwrap();
        let net = &inst.net;
        let build = || {
            let w = marking_vars(net, VarKind::Initial);
            build_fs_formula(net, &w, Direction::Forward)
        };
        let f = build();
        let size = (net.num_places() + net.num_transitions() + net.arc_count()) as f64;
        ratios.push(f.node_count() as f64 / size);
        let reach = build_reach_formula(net).node_count() as f64 / size;
        let fastest = (0..15)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(build());
                t.elapsed()
            })
            .min()
            .unwrap();
        times.push(fastest);
        writeln!(transcript, "{n},{},{},{:.4},{reach:.4}", f.node_count(), net.arc_count(), ratios.last().unwrap()).unwrap();
    }
    let k = ratios.iter().cloned().fold(0.0, f64::max);
    // Only the doublings among the largest sizes are timed; smaller ones
    // are dominated by noise.
    let doublings: Vec<f64> = [(250usize, 500usize), (500, 1000)]
        .iter()
        .map(|(a, b)| {
            let ia = LINEAR_SIZES.iter().position(|x| x == a).unwrap();
            let ib = LINEAR_SIZES.iter().position(|x| x == b).unwrap();
            times[ib].as_secs_f64() / times[ia].as_secs_f64().max(1e-9)
        })
        .collect();
    let slow = doublings.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: k <= LINEAR_K && slow <= 2.0 * DOUBLING_SLACK,
        detail: format!(
            "max nodes/(|P|+|T|+nnz) = {k:.3} (K = {LINEAR_K}) over {:?} transitions; time ratio on doubling {:.2?} (limit {})",
            LINEAR_SIZES,
            doublings,
            2.0 * DOUBLING_SLACK
        ),
        transcript,
    }
}

fn pruning_instance(seed: u64) -> Instance {
    generate(&GenParams {
        places: 5,
        transitions: 6,
        min_weight: 2,
        max_weight: 2,
        max_tokens: 1,
        density: 0.45,
        seed,
    })
    .unwrap()
}

fn c6_pruning() -> Outcome {
    let cfg = Config::default();
    let (mut safe, mut searched, mut pruned, mut larger) = (0, 0, 0, 0);
    let mut transcript = String::new();
    let mut pcts = Vec::new();
    for seed in 0..PRUNING_INSTANCES {
        let inst = pruning_instance(seed);
        let t = &inst.targets[0];
        let (a, sa) = backward_cover(&inst.net, &inst.initial, t, &cfg);
        let (b, sb) = backward_cover_q(&inst.net, &inst.initial, t, &cfg);
        assert_eq!(a, b, "seed {seed}");
        if exceeds(&sb, &sa) {
            larger += 1;
        }
        if b == Verdict::Safe {
            safe += 1;
            if sb.candidates_total() > 0 {
                searched += 1;
                pcts.push(sb.pruned_pct());
                if sb.pruned_pct() > 0.0 {
                    pruned += 1;
                }
            }
        }
        let sizes: Vec<usize> = sb.per_iteration.iter().map(|i| i.basis).collect();
        writeln!(transcript, "{seed},{b},{:.2},{sizes:?}", sb.pruned_pct()).unwrap();
    }
    let mean = if pcts.is_empty() { 0.0 } else { pcts.iter().sum::<f64>() / pcts.len() as f64 };
    Outcome {
        pass: searched > 0 && 2 * pruned >= searched && larger == 0,
        detail: format!(
            "{PRUNING_INSTANCES} instances, {safe} safe of which {} rejected before the search and {searched} searched; \
             pruned_pct > 0 on {pruned}/{searched} searched (mean {mean:.1}%); per-iteration |M| larger than backward: {larger}",
            safe - searched
        ),
        transcript,
    }
}

/// Whether the pruned run ever holds a larger basis than the plain run at
/// the same iteration (or at the plain run's last one, if it stopped).
fn exceeds(q: &RunStats, plain: &RunStats) -> bool {
    q.per_iteration.iter().enumerate().any(|(i, it)| {
        plain
            .per_iteration
            .get(i)
            .or(plain.per_iteration.last())
            .is_some_and(|p| it.basis > p.basis)
    })
}

fn c9_performance() -> Outcome {
    let params = GenParams {
        places: 50,
        transitions: 50,
        min_weight: 1,
        max_weight: 2,
        max_tokens: 3,
        density: 0.3,
        seed: 0,
    };
    let inst = generate(&params).unwrap();
    let cfg = Config {
        timeout: Some(PERF_BUDGET),
        pivot: PivotRule::Sparse,
        ..Config::default()
    };
    let start = Instant::now();
    let r = decide(&inst, Algorithm::Qcover, &cfg);
    let elapsed = start.elapsed();
    Outcome {
        pass: r.verdict == Verdict::Safe && elapsed <= PERF_BUDGET,
        detail: format!(
            "{} ({} places, {} transitions, {} arcs): {} in {elapsed:?} (limit {PERF_BUDGET:?}), {} iterations, rejected before the search: {}",
            inst.name,
            inst.net.num_places(),
            inst.net.num_transitions(),
            inst.net.arc_count(),
            r.verdict,
            r.iterations(),
            r.stats.as_ref().is_some_and(|s| s.rejected_upfront)
        ),
        transcript: String::new(),
    }
}

fn run_1_to_6() -> Vec<Outcome> {
    let mut rows = Vec::new();
    let c1 = c1_fork();
    let c2 = c2_cover_equivalence();
    let c3 = c3_continuous(&mut rows);
    let c4 = c4_subsumption(&rows);
    let c5 = c5_linear();
    let c6 = c6_pruning();
    vec![c1, c2, c3, c4, c5, c6]
}

#[test]
fn acceptance() {
    let before = audit::snapshot();
    let first = run_1_to_6();
    let after = audit::snapshot();
    let checks = after.checks - before.checks;
    let failures = after.failures - before.failures;
    let c7 = Outcome {
        pass: failures == 0 && checks > 0,
        detail: format!("{checks} witnesses and certificates re-checked, {failures} failures"),
        transcript: String::new(),
    };

    let second = run_1_to_6();
    // Criterion 5's transcript holds sizes only; its timings never enter.
    let differing: Vec<usize> = first
        .iter()
        .zip(&second)
        .enumerate()
        .filter(|(_, (a, b))| a.transcript != b.transcript)
        .map(|(i, _)| i + 1)
        .collect();
    let bytes: usize = first.iter().map(|o| o.transcript.len()).sum();
    let c8 = Outcome {
        pass: differing.is_empty(),
        detail: format!("two runs of criteria 1-6, {bytes} transcript bytes each; differing criteria: {differing:?}"),
        transcript: String::new(),
    };
    let c9 = c9_performance();

    let mut all = first;
    all.push(c7);
    all.push(c8);
    all.push(c9);
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for (i, o) in all.iter().enumerate() {
        writeln!(err, "{}", line(i + 1, o)).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
