use std::time::{Duration, Instant};

use serde::Serialize;

use crate::covercheck::{self, Config, RunStats, UnknownReason, Verdict};
use crate::instance::Instance;
use crate::qreach;
use crate::structural::{self, TrapReport, TrapVerdict};

pub const SCHEMA: &str = "petricov-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Plain backward coverability.
    Backward,
    /// Backward coverability with continuous-reachability pruning.
    Qcover,
    /// State equation refined by trap constraints (semi-decision).
    Trapcegar,
    /// Continuous coverability only (semi-decision).
    QreachOnly,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Backward => "backward",
            Algorithm::Qcover => "qcover",
            Algorithm::Trapcegar => "trapcegar",
            Algorithm::QreachOnly => "qreach-only",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub instance: String,
    pub algorithm: Algorithm,
    pub verdict: Verdict,
    pub wall_ms: u64,
    pub solver_ms: u64,
    pub stats: Option<RunStats>,
    pub traps: Vec<TrapReport>,
    pub lp_queries: usize,
}

impl Report {
    /// Zeroes every timing so that reports of repeated runs compare equal.
    pub fn strip_timings(&mut self) {
        self.wall_ms = 0;
        self.solver_ms = 0;
        if let Some(s) = &mut self.stats {
            s.wall_ms = 0;
            s.solver_ms = 0;
            s.solver.time = Duration::ZERO;
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn iterations(&self) -> usize {
        self.stats.as_ref().map_or(0, |s| s.iterations)
    }

    pub fn pruned_total(&self) -> usize {
        self.stats.as_ref().map_or(0, |s| s.pruned_total())
    }

    pub fn pruned_pct(&self) -> f64 {
        self.stats.as_ref().map_or(0.0, |s| s.pruned_pct())
    }
}

/// Runs `algo` on every target of `inst`; the instance is unsafe as soon as
/// one target is coverable.
pub fn decide(inst: &Instance, algo: Algorithm, cfg: &Config) -> Report {
    let start = Instant::now();
    let mut report = Report {
        schema: SCHEMA,
        version: crate::VERSION,
        instance: inst.name.clone(),
        algorithm: algo,
        verdict: Verdict::Safe,
        wall_ms: 0,
        solver_ms: 0,
        stats: None,
        traps: Vec::new(),
        lp_queries: 0,
    };
    match algo {
        Algorithm::Backward | Algorithm::Qcover => {
            let mut total = RunStats::empty_for_targets();
            for target in &inst.targets {
                let (_, s) = if algo == Algorithm::Backward {
                    covercheck::backward_cover(&inst.net, &inst.initial, target, cfg)
                } else {
                    covercheck::backward_cover_q(&inst.net, &inst.initial, target, cfg)
                };
                total.absorb(&s);
                if total.verdict == Verdict::Unsafe {
                    break;
                }
            }
            report.verdict = total.verdict;
            report.solver_ms = total.solver_ms;
            report.stats = Some(total);
        }
        Algorithm::Trapcegar => {
            let drained = qreach::drain_augmented(&inst.net);
            for target in &inst.targets {
                let r = structural::trap_safety_check(&drained, &inst.initial, target);
                if r.verdict == TrapVerdict::Inconclusive {
                    report.verdict = Verdict::Unknown(UnknownReason::Inconclusive);
                }
                report.traps.push(r);
            }
        }
        Algorithm::QreachOnly => {
            for target in &inst.targets {
                let q = qreach::q_coverable_with(&inst.net, &inst.initial.to_rational(), &target.to_rational(), cfg.pivot)
                    .expect("instance markings match the net");
                report.lp_queries += q.lp_queries;
                if q.reachable {
                    report.verdict = Verdict::Unknown(UnknownReason::Inconclusive);
                }
            }
        }
    }
    report.wall_ms = start.elapsed().as_millis() as u64;
    report
}
