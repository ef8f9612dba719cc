//! Brute-force reference procedures for cross-checking. Not used by the
//! decision procedures themselves.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_traits::Zero;
use thiserror::Error;

use crate::net::{DiscreteMarking, PetriNet, RationalMarking, Transition};
use crate::ratlp::{self, LinearSystem, Relation};
use crate::{int, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_markings_explored: usize,
    /// Markings whose token sum exceeds this are not expanded.
    pub max_token_sum: u64,
}

impl Budget {
    pub fn new(max_markings_explored: usize, max_token_sum: u64) -> Self {
        assert!(max_markings_explored > 0 && max_token_sum > 0, "budget must be positive");
        Budget {
            max_markings_explored,
            max_token_sum,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(10_000, 64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    True,
    False,
    Unknown,
}

impl Answer {
    pub fn is_definitive(self) -> bool {
        self != Answer::Unknown
    }
}

/// Breadth-first forward search. `False` only when the whole reachability
/// set was explored without any cutoff.
pub fn forward_cover_bounded(
    net: &PetriNet,
    m0: &DiscreteMarking,
    target: &DiscreteMarking,
    budget: Budget,
) -> Answer {
    if target.le(m0) {
        return Answer::True;
    }
    let mut seen: HashSet<DiscreteMarking> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(m0.clone());
    queue.push_back(m0.clone());
    let mut truncated = false;
    while let Some(m) = queue.pop_front() {
        if m.sum() > budget.max_token_sum {
            truncated = true;
            continue;
        }
        for t in net.transitions() {
            if let Ok(next) = net.fire_discrete(&m, t) {
                if target.le(&next) {
                    return Answer::True;
                }
                if seen.contains(&next) {
                    continue;
                }
                if seen.len() >= budget.max_markings_explored {
                    return Answer::Unknown;
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    if truncated {
        Answer::Unknown
    } else {
        Answer::False
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} transitions exceed the enumeration guard of 20")]
    TooManyTransitions(usize),
    #[error("marking has {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Can every transition of `set` be fired, one after another, starting
/// from a marking whose support is `marked`? `forward = false` reads the
/// arcs backwards.
fn fires_all(net: &PetriNet, marked: &[bool], set: &BTreeSet<Transition>, forward: bool) -> bool {
    let mut marked = marked.to_vec();
    let mut done: BTreeSet<Transition> = BTreeSet::new();
    loop {
        let mut progress = false;
        for &t in set {
            if done.contains(&t) {
                continue;
            }
            let (input, output) = if forward {
                (net.pre_column(t), net.post_column(t))
            } else {
                (net.post_column(t), net.pre_column(t))
            };
            if input.iter().all(|&(p, _)| marked[p]) {
                for &(p, _) in output {
                    marked[p] = true;
                }
                done.insert(t);
                progress = true;
            }
        }
        if !progress {
            return done.len() == set.len();
        }
    }
}

/// Continuous reachability by enumerating every candidate support.
pub fn q_reachable_bruteforce(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
) -> Result<bool, OracleError> {
    let nt = net.num_transitions();
    if nt > 20 {
        return Err(OracleError::TooManyTransitions(nt));
    }
    for v in [m0, m] {
        if v.len() != net.num_places() {
            return Err(OracleError::Dimension {
                expected: net.num_places(),
                found: v.len(),
            });
        }
    }
    let from: Vec<bool> = m0.0.iter().map(|q| !q.is_zero()).collect();
    let to: Vec<bool> = m.0.iter().map(|q| !q.is_zero()).collect();
    for bits in 0u32..(1 << nt) {
        let set: BTreeSet<Transition> = (0..nt)
            .filter(|t| bits >> t & 1 == 1)
            .map(Transition)
            .collect();
        if !fires_all(net, &from, &set, true) || !fires_all(net, &to, &set, false) {
            continue;
        }
        let cols: Vec<Transition> = set.iter().copied().collect();
        let mut sys = LinearSystem::new(cols.len());
        for p in net.places() {
            let coeffs: Vec<(usize, Rat)> = cols
                .iter()
                .enumerate()
                .filter_map(|(j, &t)| {
                    let c = net.effect(p, t);
                    (c != 0).then(|| (j, int(c)))
                })
                .collect();
            sys.push(coeffs, Relation::Eq, &m.0[p.0] - &m0.0[p.0]);
        }
        for j in 0..cols.len() {
            sys.push(vec![(j, int(1))], Relation::Gt, Rat::zero());
        }
        if ratlp::feasible(&sys).is_sat() {
            return Ok(true);
        }
    }
    Ok(false)
}
