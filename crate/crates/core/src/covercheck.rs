//! Backward coverability, plain and modulo continuous reachability.
//!
//! Both procedures saturate an upward-closed set of markings from which the
//! target can be covered, represented by its minimal basis `M`. The pruned
//! variant first asks whether the target is coverable at all in the
//! continuous semantics, and then drops every new basis element that is not
//! continuously coverable from the initial marking: such elements can never
//! lead back to the initial marking, and removing them keeps the basis small.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::fo::{build_cover_query, SolveContext, SolveResult, SolveStats, Var, VarKind};
use crate::net::{DiscreteMarking, PetriNet};
use crate::qreach;
use crate::ratlp::PivotRule;
use crate::upward::{pre_basis, Antichain};
use crate::{int, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    #[default]
    Floor,
    Ceil,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub use_minbottle: bool,
    pub c: usize,
    pub k: usize,
    pub rounding: Rounding,
    pub max_iterations: Option<usize>,
    pub timeout: Option<Duration>,
    pub pivot: PivotRule,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            use_minbottle: true,
            c: 10,
            k: 5,
            rounding: Rounding::Floor,
            max_iterations: None,
            timeout: None,
            pivot: PivotRule::Bland,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownReason {
    Timeout,
    IterationCap,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The target is not coverable.
    Safe,
    /// The target is coverable.
    Unsafe,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Safe => 0,
            Verdict::Unsafe => 2,
            Verdict::Unknown(_) => 3,
        }
    }

    /// Verdict for a disjunction of targets.
    pub fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Unsafe, _) | (_, Verdict::Unsafe) => Verdict::Unsafe,
            (Verdict::Unknown(r), _) | (_, Verdict::Unknown(r)) => Verdict::Unknown(r),
            _ => Verdict::Safe,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IterationStats {
    /// New basis candidates `B`, before pruning.
    pub candidates: usize,
    /// Candidates shown not to be continuously coverable.
    pub pruned: usize,
    /// Survivors held back by the bottleneck for a later iteration.
    pub deferred: usize,
    /// `|M|` after the update.
    pub basis: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub verdict: Verdict,
    pub iterations: usize,
    /// Decided by the initial continuous coverability check.
    pub rejected_upfront: bool,
    pub per_iteration: Vec<IterationStats>,
    pub solver: SolveStats,
    pub solver_ms: u64,
    pub wall_ms: u64,
}

impl RunStats {
    fn new() -> Self {
        RunStats {
            verdict: Verdict::Unknown(UnknownReason::Inconclusive),
            iterations: 0,
            rejected_upfront: false,
            per_iteration: Vec::new(),
            solver: SolveStats::default(),
            solver_ms: 0,
            wall_ms: 0,
        }
    }

    pub fn pruned_total(&self) -> usize {
        self.per_iteration.iter().map(|i| i.pruned).sum()
    }

    pub fn candidates_total(&self) -> usize {
        self.per_iteration.iter().map(|i| i.candidates).sum()
    }

    /// `100·Σ|D| / Σ|B|`, zero when nothing was generated.
    pub fn pruned_pct(&self) -> f64 {
        let b = self.candidates_total();
        if b == 0 {
            0.0
        } else {
            100.0 * self.pruned_total() as f64 / b as f64
        }
    }

    /// Accumulates the statistics of another target's run.
    pub fn absorb(&mut self, other: &RunStats) {
        self.verdict = self.verdict.combine(other.verdict);
        self.iterations += other.iterations;
        self.rejected_upfront &= other.rejected_upfront;
        self.per_iteration.extend_from_slice(&other.per_iteration);
        let s = &mut self.solver;
        let o = &other.solver;
        s.queries += o.queries;
        s.sat += o.sat;
        s.unsat += o.unsat;
        s.unknown += o.unknown;
        s.blocked += o.blocked;
        s.relaxed += o.relaxed;
        s.decisions += o.decisions;
        s.conflicts += o.conflicts;
        s.pivots += o.pivots;
        s.time += o.time;
        self.solver_ms += other.solver_ms;
        self.wall_ms += other.wall_ms;
    }

    /// Statistics of a run over several targets, starting from none.
    pub fn empty_for_targets() -> Self {
        let mut s = RunStats::new();
        s.verdict = Verdict::Safe;
        s.rejected_upfront = true;
        s
    }
}

/// Keeps the `max(1, min(|B|, c + |B|/k))` elements of smallest token sum,
/// ties broken lexicographically; returns `(kept, deferred)`.
pub fn minbottle(
    b: &BTreeSet<DiscreteMarking>,
    c: usize,
    k: usize,
    rounding: Rounding,
) -> (Vec<DiscreteMarking>, Vec<DiscreteMarking>) {
    assert!(k >= 1, "k must be positive");
    let share = match rounding {
        Rounding::Floor => b.len() / k,
        Rounding::Ceil => b.len().div_ceil(k),
    };
    let n = (c + share).max(1).min(b.len());
    let mut sorted: Vec<DiscreteMarking> = b.iter().cloned().collect();
    sorted.sort_by(|x, y| x.sum().cmp(&y.sum()).then_with(|| x.cmp(y)));
    let deferred = sorted.split_off(n);
    (sorted, deferred)
}

/// Backward coverability without pruning.
pub fn backward_cover(
    net: &PetriNet,
    m0: &DiscreteMarking,
    target: &DiscreteMarking,
    cfg: &Config,
) -> (Verdict, RunStats) {
    let mut run = Run::new(net, m0, target, cfg);
    let v = run.saturate(&mut None, false);
    run.finish(v)
}

/// Backward coverability modulo continuous reachability.
pub fn backward_cover_q(
    net: &PetriNet,
    m0: &DiscreteMarking,
    target: &DiscreteMarking,
    cfg: &Config,
) -> (Verdict, RunStats) {
    let mut run = Run::new(net, m0, target, cfg);
    let t = Instant::now();
    let upfront = qreach::q_coverable_with(net, &m0.to_rational(), &target.to_rational(), cfg.pivot)
        .expect("dimensions were checked by the instance");
    run.solver_time += t.elapsed();
    if !upfront.reachable {
        run.stats.rejected_upfront = true;
        return run.finish(Verdict::Safe);
    }
    let query = build_cover_query(net, m0);
    let mut ctx = SolveContext::new(query.formula)
        .with_relaxation(query.relaxation)
        .with_pivot_rule(cfg.pivot);
    ctx.set_deadline(run.deadline);
    let mut ctx = Some(ctx);
    let v = run.saturate(&mut ctx, cfg.use_minbottle);
    if let Some(c) = &ctx {
        run.stats.solver = c.stats;
        run.solver_time += c.stats.time;
    }
    run.finish(v)
}

struct Run<'a> {
    net: &'a PetriNet,
    m0: &'a DiscreteMarking,
    target: &'a DiscreteMarking,
    cfg: &'a Config,
    start: Instant,
    deadline: Option<Instant>,
    solver_time: Duration,
    stats: RunStats,
}

impl<'a> Run<'a> {
    fn new(
        net: &'a PetriNet,
        m0: &'a DiscreteMarking,
        target: &'a DiscreteMarking,
        cfg: &'a Config,
    ) -> Self {
        assert_eq!(m0.len(), net.num_places(), "initial marking dimension");
        assert_eq!(target.len(), net.num_places(), "target dimension");
        let start = Instant::now();
        Run {
            net,
            m0,
            target,
            cfg,
            start,
            deadline: cfg.timeout.map(|d| start + d),
            solver_time: Duration::ZERO,
            stats: RunStats::new(),
        }
    }

    fn finish(mut self, v: Verdict) -> (Verdict, RunStats) {
        self.stats.verdict = v;
        self.stats.wall_ms = self.start.elapsed().as_millis() as u64;
        self.stats.solver_ms = self.solver_time.as_millis() as u64;
        (v, self.stats)
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// The shared saturation loop. With a solver context, candidates that
    /// are not continuously coverable are dropped and blocked.
    fn saturate(&mut self, ctx: &mut Option<SolveContext>, bottleneck: bool) -> Verdict {
        let mut basis = Antichain::new();
        basis.insert(self.target.clone()).expect("dimension checked");
        let mut fresh: Vec<DiscreteMarking> = vec![self.target.clone()];
        let mut pool: Vec<DiscreteMarking> = Vec::new();
        loop {
            if self.timed_out() {
                return Verdict::Unknown(UnknownReason::Timeout);
            }
            if basis.covers(self.m0) {
                return Verdict::Unsafe;
            }
            if self
                .cfg
                .max_iterations
                .is_some_and(|cap| self.stats.iterations >= cap)
            {
                return Verdict::Unknown(UnknownReason::IterationCap);
            }
            self.stats.iterations += 1;
            let mut preds: Vec<DiscreteMarking> = pre_basis(self.net, fresh.iter()).into_iter().collect();
            preds.append(&mut pool);
            preds.sort_by(|a, b| a.sum().cmp(&b.sum()).then_with(|| a.cmp(b)));
            let mut cands = Antichain::new();
            for (i, v) in preds.into_iter().enumerate() {
                if i % 1024 == 1023 && self.timed_out() {
                    return Verdict::Unknown(UnknownReason::Timeout);
                }
                cands.insert(v).expect("dimension checked");
            }
            let mut b = BTreeSet::new();
            for (i, v) in cands.iter().enumerate() {
                if i % 1024 == 1023 && self.timed_out() {
                    return Verdict::Unknown(UnknownReason::Timeout);
                }
                if !basis.covers(v) {
                    b.insert(v.clone());
                }
            }
            let mut it = IterationStats {
                candidates: b.len(),
                ..Default::default()
            };
            let survivors: BTreeSet<DiscreteMarking> = match ctx {
                None => b,
                Some(ctx) => {
                    let mut keep = BTreeSet::new();
                    let mut dropped = Vec::new();
                    for v in b {
                        match ctx.solve(&bindings(&v)).expect("cover query bindings") {
                            SolveResult::Unsat => dropped.push(v),
                            SolveResult::Sat(_) => {
                                keep.insert(v);
                            }
                            SolveResult::Unknown => {
                                return Verdict::Unknown(UnknownReason::Timeout);
                            }
                        }
                    }
                    if cfg!(debug_assertions) {
                        for v in dropped.iter().take(2) {
                            let q = qreach::q_coverable(self.net, &self.m0.to_rational(), &v.to_rational())
                                .expect("dimension checked");
                            debug_assert!(!q.reachable, "pruned {v} is continuously coverable");
                        }
                    }
                    it.pruned = dropped.len();
                    for v in &dropped {
                        ctx.add_blocking(v);
                    }
                    keep
                }
            };
            if survivors.is_empty() {
                it.basis = basis.len();
                self.stats.per_iteration.push(it);
                return Verdict::Safe;
            }
            let (selected, deferred) = if bottleneck {
                minbottle(&survivors, self.cfg.c, self.cfg.k, self.cfg.rounding)
            } else {
                (survivors.into_iter().collect(), Vec::new())
            };
            it.deferred = deferred.len();
            pool = deferred;
            fresh.clear();
            for (i, v) in selected.into_iter().enumerate() {
                if i % 1024 == 1023 && self.timed_out() {
                    return Verdict::Unknown(UnknownReason::Timeout);
                }
                if basis.insert(v.clone()).expect("dimension checked") {
                    fresh.push(v);
                }
            }
            it.basis = basis.len();
            self.stats.per_iteration.push(it);
        }
    }
}

fn bindings(v: &DiscreteMarking) -> std::collections::BTreeMap<Var, Rat> {
    v.0.iter()
        .enumerate()
        .map(|(p, &k)| (Var::new(VarKind::Final, p), int(k as i64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::tests::{net_f, net_g};

    fn dm(v: &[u64]) -> DiscreteMarking {
        DiscreteMarking(v.to_vec())
    }

    #[test]
    fn plain_backward_examples() {
        let cfg = Config::default();
        let (f, m0) = net_f();
        let (v, s) = backward_cover(&f, &m0, &dm(&[0, 1]), &cfg);
        assert_eq!(v, Verdict::Safe);
        assert_eq!(s.iterations, 2);
        assert_eq!(s.per_iteration.last().unwrap().basis, 2);
        let (v, s) = backward_cover(&f, &m0, &dm(&[1, 0]), &cfg);
        assert_eq!((v, s.iterations), (Verdict::Unsafe, 0));
        let (g, m0) = net_g();
        let (v, s) = backward_cover(&g, &m0, &dm(&[5]), &cfg);
        assert_eq!((v, s.iterations), (Verdict::Unsafe, 5));
        assert!(s.per_iteration.iter().all(|i| i.basis == 1));
    }

    #[test]
    fn pruned_backward_examples() {
        let cfg = Config::default();
        let (f, m0) = net_f();
        let (v, s) = backward_cover_q(&f, &m0, &dm(&[0, 1]), &cfg);
        assert_eq!((v, s.iterations), (Verdict::Safe, 0));
        assert!(s.rejected_upfront);
        let (v, _) = backward_cover_q(&f, &m0, &dm(&[1, 0]), &cfg);
        assert_eq!(v, Verdict::Unsafe);
        let (g, m0) = net_g();
        let (v, s) = backward_cover_q(&g, &m0, &dm(&[5]), &cfg);
        assert_eq!(v, Verdict::Unsafe);
        assert_eq!(s.pruned_total(), 0);
    }

    #[test]
    fn minbottle_examples() {
        let twenty: BTreeSet<DiscreteMarking> = (0..20).map(|i| dm(&[i, 20 - i])).collect();
        assert_eq!(minbottle(&twenty, 10, 5, Rounding::Floor).0.len(), 14);
        let five: BTreeSet<DiscreteMarking> = (0..5).map(|i| dm(&[i])).collect();
        let (kept, deferred) = minbottle(&five, 10, 5, Rounding::Floor);
        assert_eq!(kept.len(), 5);
        assert!(deferred.is_empty());
        let b: BTreeSet<DiscreteMarking> = [dm(&[0, 3]), dm(&[1, 1]), dm(&[2, 2])].into();
        assert_eq!(minbottle(&b, 0, 3, Rounding::Floor).0, vec![dm(&[1, 1])]);
        assert_eq!(minbottle(&b, 0, 2, Rounding::Ceil).0.len(), 2);
        // Ties on the sum are broken lexicographically.
        let tie: BTreeSet<DiscreteMarking> = [dm(&[1, 0]), dm(&[0, 1])].into();
        assert_eq!(minbottle(&tie, 0, 5, Rounding::Floor).0, vec![dm(&[0, 1])]);
    }

    #[test]
    fn caps_yield_unknown() {
        let (g, m0) = net_g();
        let cfg = Config {
            max_iterations: Some(2),
            ..Config::default()
        };
        let (v, _) = backward_cover(&g, &m0, &dm(&[5]), &cfg);
        assert_eq!(v, Verdict::Unknown(UnknownReason::IterationCap));
        let cfg = Config {
            timeout: Some(Duration::ZERO),
            ..Config::default()
        };
        let (v, _) = backward_cover_q(&g, &m0, &dm(&[5]), &cfg);
        assert_eq!(v, Verdict::Unknown(UnknownReason::Timeout));
    }
}
