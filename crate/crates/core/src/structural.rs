//! Traps, siphons and the state-equation-plus-traps safety check.
//!
//! A trap is a set of places that, once marked, stays marked; a siphon is a
//! set that, once empty, stays empty. The safety check refines the state
//! equation with one trap constraint per round. It is a semi-decision
//! procedure kept here as a comparison baseline.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::net::{DiscreteMarking, PetriNet, Place, Transition};
use crate::ratlp::{self, LinearSystem, Relation};
use crate::{int, Rat};

pub type PlaceSet = BTreeSet<Place>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuralError {
    #[error("the place set is empty")]
    EmptySet,
    #[error("place {0} is not in the net")]
    UnknownPlace(usize),
}

/// `•Q`: transitions with an output place in `q`.
pub fn producers_of(net: &PetriNet, q: &PlaceSet) -> BTreeSet<Transition> {
    q.iter().flat_map(|&p| net.producers(p)).collect()
}

/// `Q•`: transitions with an input place in `q`.
pub fn consumers_of(net: &PetriNet, q: &PlaceSet) -> BTreeSet<Transition> {
    q.iter().flat_map(|&p| net.consumers(p)).collect()
}

/// `(is_trap, is_siphon)` of a non-empty place set.
pub fn classify(net: &PetriNet, q: &PlaceSet) -> Result<(bool, bool), StructuralError> {
    if q.is_empty() {
        return Err(StructuralError::EmptySet);
    }
    if let Some(p) = q.iter().find(|p| p.0 >= net.num_places()) {
        return Err(StructuralError::UnknownPlace(p.0));
    }
    let pre = producers_of(net, q);
    let post = consumers_of(net, q);
    Ok((post.is_subset(&pre), pre.is_subset(&post)))
}

pub fn marked(q: &PlaceSet, m: &DiscreteMarking) -> bool {
    q.iter().any(|p| m.0[p.0] > 0)
}

/// The largest trap contained in `r`, possibly empty.
pub fn max_trap_within(net: &PetriNet, r: &PlaceSet) -> PlaceSet {
    let mut q: PlaceSet = r.iter().copied().filter(|p| p.0 < net.num_places()).collect();
    loop {
        let escaping: Vec<Place> = q
            .iter()
            .copied()
            .filter(|&p| {
                net.consumers(p)
                    .any(|t| !net.postset(t).any(|o| q.contains(&o)))
            })
            .collect();
        if escaping.is_empty() {
            return q;
        }
        for p in escaping {
            q.remove(&p);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrapVerdict {
    Safe,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrapReport {
    pub verdict: TrapVerdict,
    pub rounds: usize,
    /// Trap constraints added, in order.
    pub traps: Vec<Vec<usize>>,
}

pub const DEFAULT_ROUND_CAP: usize = 64;

/// Refutes reachability of `m` from `m0` with the state equation and trap
/// constraints: every trap marked at `m0` must stay marked.
pub fn trap_safety_check(net: &PetriNet, m0: &DiscreteMarking, m: &DiscreteMarking) -> TrapReport {
    trap_safety_check_capped(net, m0, m, DEFAULT_ROUND_CAP)
}

pub fn trap_safety_check_capped(
    net: &PetriNet,
    m0: &DiscreteMarking,
    m: &DiscreteMarking,
    cap: usize,
) -> TrapReport {
    let nt = net.num_transitions();
    // Final marking as an affine expression of x: m0(p) + Σ C(p,t) x(t).
    let final_expr = |p: Place| -> Vec<(usize, Rat)> {
        net.transitions()
            .filter_map(|t| {
                let c = net.effect(p, t);
                (c != 0).then(|| (t.0, int(c)))
            })
            .collect()
    };
    let mut sys = LinearSystem::new(nt);
    for p in net.places() {
        sys.push(
            final_expr(p),
            Relation::Eq,
            int(m.0[p.0] as i64) - int(m0.0[p.0] as i64),
        );
    }
    let mut traps: Vec<Vec<usize>> = Vec::new();
    for round in 1..=cap {
        let f = ratlp::feasible(&sys);
        let Some(x) = f.witness() else {
            return TrapReport {
                verdict: TrapVerdict::Safe,
                rounds: round,
                traps,
            };
        };
        let candidate: Vec<Rat> = net
            .places()
            .map(|p| {
                let mut v = int(m0.0[p.0] as i64);
                for (t, c) in final_expr(p) {
                    v += c * &x[t];
                }
                v
            })
            .collect();
        let empty: PlaceSet = net.places().filter(|p| candidate[p.0].is_zero()).collect();
        let q = max_trap_within(net, &empty);
        let ids: Vec<usize> = q.iter().map(|p| p.0).collect();
        if q.is_empty() || !marked(&q, m0) || traps.contains(&ids) {
            return TrapReport {
                verdict: TrapVerdict::Inconclusive,
                rounds: round,
                traps,
            };
        }
        // Σ_{p∈Q} m'(p) ≥ 1
        let mut coeffs: Vec<(usize, Rat)> = Vec::new();
        let mut base = Rat::zero();
        for &p in &q {
            base += int(m0.0[p.0] as i64);
            coeffs.extend(final_expr(p));
        }
        sys.push(coeffs, Relation::Ge, int(1) - base);
        traps.push(ids);
    }
    TrapReport {
        verdict: TrapVerdict::Inconclusive,
        rounds: cap,
        traps,
    }
}
