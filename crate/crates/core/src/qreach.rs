//! Reachability and coverability under the continuous semantics.
//!
//! A rational marking `m` is reachable from `m0` iff some `x ≥ 0` satisfies
//! the state equation `m = m0 + C·x` while its support is a firing set both
//! of the net from `m0` and of the reverse net from `m`. [`q_reachable`]
//! decides this in polynomial time by shrinking a candidate support until it
//! is stable under both conditions.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::net::{support, NetBuilder, NetError, PetriNet, RationalMarking, Transition};
use crate::ratlp::{self, LinearSystem, PivotRule, Relation};
use crate::{Place, Rat};

/// Least fixed point of the firing-set saturation, with its round count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Saturation {
    pub transitions: BTreeSet<Transition>,
    /// Rounds that added at least one transition; never exceeds `|T|`.
    pub rounds: usize,
}

/// Saturates `S := S ∪ {t : •t ⊆ ⟦m⟧ ∪ S•}` from the empty set.
///
/// The result is the largest set of transitions that some continuous firing
/// sequence from `m` can use.
pub fn saturate_firing(net: &PetriNet, m: &RationalMarking) -> Saturation {
    let mut marked: Vec<bool> = m.0.iter().map(|v| !v.is_zero()).collect();
    let mut fired = vec![false; net.num_transitions()];
    let mut transitions = BTreeSet::new();
    let mut rounds = 0;
    loop {
        let ready: Vec<Transition> = net
            .transitions()
            .filter(|t| !fired[t.0] && net.preset(*t).all(|p| marked[p.0]))
            .collect();
        if ready.is_empty() {
            break;
        }
        rounds += 1;
        for t in ready {
            fired[t.0] = true;
            transitions.insert(t);
            for p in net.postset(t) {
                marked[p.0] = true;
            }
        }
    }
    Saturation {
        transitions,
        rounds,
    }
}

/// Whether `set` is the support of some continuous firing sequence from `m`.
pub fn in_firing_set(
    net: &PetriNet,
    m: &RationalMarking,
    set: &BTreeSet<Transition>,
) -> Result<bool, NetError> {
    let sub = net.subnet(set)?;
    if m.len() != net.num_places() {
        return Err(NetError::DimensionMismatch {
            expected: net.num_places(),
            found: m.len(),
        });
    }
    let sat = saturate_firing(&sub.net, &sub.restrict(m));
    Ok(sat.transitions.len() == set.len())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QWitness {
    /// Parikh vector over the transitions of the queried net.
    #[serde(serialize_with = "crate::ser_rats")]
    pub parikh: Vec<Rat>,
    pub support: BTreeSet<Transition>,
}

/// One round of the candidate-support refinement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QIteration {
    pub candidates: BTreeSet<Transition>,
    /// Union of the supports of the state-equation solutions found.
    pub support: BTreeSet<Transition>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QVerdict {
    pub reachable: bool,
    pub witness: Option<QWitness>,
    pub trace: Vec<QIteration>,
    pub lp_queries: usize,
}

fn check_dims(net: &PetriNet, m: &RationalMarking) -> Result<(), NetError> {
    if m.len() == net.num_places() {
        Ok(())
    } else {
        Err(NetError::DimensionMismatch {
            expected: net.num_places(),
            found: m.len(),
        })
    }
}

/// `C_{P×T'}·x = m - m0`, `x ≥ 0`, and `x(t) > 0` for each `t` in `positive`.
///
/// Variable `i` of the system is the `i`-th element of `columns`.
pub fn state_equation(
    net: &PetriNet,
    columns: &[Transition],
    m0: &RationalMarking,
    m: &RationalMarking,
    positive: &[usize],
) -> LinearSystem {
    let mut rows: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); net.num_places()];
    for (i, &t) in columns.iter().enumerate() {
        for (p, c) in net.effect_column(t) {
            rows[p].push((i, Rat::from_integer(c.into())));
        }
    }
    let mut sys = LinearSystem::new(columns.len());
    for (p, coeffs) in rows.into_iter().enumerate() {
        sys.push(coeffs, Relation::Eq, &m.0[p] - &m0.0[p]);
    }
    for &i in positive {
        sys.push(vec![(i, Rat::one())], Relation::Gt, Rat::zero());
    }
    sys
}

/// Decides whether `m` is reachable from `m0` under the continuous semantics.
pub fn q_reachable(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
) -> Result<QVerdict, NetError> {
    q_reachable_with(net, m0, m, PivotRule::Bland)
}

pub fn q_reachable_with(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
    rule: PivotRule,
) -> Result<QVerdict, NetError> {
    check_dims(net, m0)?;
    check_dims(net, m)?;
    let mut verdict = QVerdict {
        reachable: false,
        witness: None,
        trace: Vec::new(),
        lp_queries: 0,
    };
    if m == m0 {
        verdict.reachable = true;
        verdict.witness = Some(QWitness {
            parikh: vec![Rat::zero(); net.num_transitions()],
            support: BTreeSet::new(),
        });
        return Ok(verdict);
    }
    let mut candidates: BTreeSet<Transition> = net.transitions().collect();
    while !candidates.is_empty() {
        let columns: Vec<Transition> = candidates.iter().copied().collect();
        // The largest support of a solution: keep asking for a solution
        // that uses some transition outside the support found so far.
        let mut found = BTreeSet::new();
        loop {
            let unused: Vec<(usize, Rat)> = (0..columns.len())
                .filter(|i| !found.contains(&columns[*i]))
                .map(|i| (i, Rat::one()))
                .collect();
            if unused.is_empty() {
                break;
            }
            verdict.lp_queries += 1;
            let mut sys = state_equation(net, &columns, m0, m, &[]);
            sys.push(unused, Relation::Gt, Rat::zero());
            match ratlp::feasible_with(&sys, rule) {
                ratlp::Feasibility::Witness(x) => {
                    found.extend(support(&x).into_iter().map(|j| columns[j.0]));
                }
                ratlp::Feasibility::Certificate(_) => break,
            }
        }
        verdict.trace.push(QIteration {
            candidates: candidates.clone(),
            support: found.clone(),
        });
        if found.is_empty() {
            return Ok(verdict);
        }
        let sub = net.subnet(&found)?;
        let forward = saturate_firing(&sub.net, &sub.restrict(m0)).transitions;
        let backward = saturate_firing(&sub.net.reverse(), &sub.restrict(m)).transitions;
        candidates = sub
            .lift_transitions(forward.intersection(&backward).copied())
            .collect();
        if candidates == found {
            verdict.reachable = true;
            verdict.witness = Some(witness(net, &columns_of(&found), m0, m, rule, &mut verdict.lp_queries));
            return Ok(verdict);
        }
    }
    Ok(verdict)
}

fn columns_of(set: &BTreeSet<Transition>) -> Vec<Transition> {
    set.iter().copied().collect()
}

/// A solution of the state equation whose support is exactly `columns`.
fn witness(
    net: &PetriNet,
    columns: &[Transition],
    m0: &RationalMarking,
    m: &RationalMarking,
    rule: PivotRule,
    queries: &mut usize,
) -> QWitness {
    let all: Vec<usize> = (0..columns.len()).collect();
    *queries += 1;
    let sys = state_equation(net, columns, m0, m, &all);
    let x = match ratlp::feasible_with(&sys, rule) {
        ratlp::Feasibility::Witness(x) => x,
        // Every column has a solution positive on it; their average is
        // positive everywhere, so this system is feasible.
        ratlp::Feasibility::Certificate(_) => unreachable!("support solutions are convex-closed"),
    };
    let mut parikh = vec![Rat::zero(); net.num_transitions()];
    for (i, t) in columns.iter().enumerate() {
        parikh[t.0] = x[i].clone();
    }
    QWitness {
        support: support(&parikh),
        parikh,
    }
}

/// Re-checks the three reachability conditions for a Parikh vector `x`.
pub fn check_witness(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
    x: &[Rat],
) -> Result<bool, NetError> {
    if x.len() != net.num_transitions() || x.iter().any(|v| v < &Rat::zero()) {
        return Ok(false);
    }
    if &net.apply_parikh(m0, x) != m {
        return Ok(false);
    }
    let s = support(x);
    Ok(in_firing_set(net, m0, &s)? && in_firing_set(&net.reverse(), m, &s)?)
}

/// The net extended with one transition per place that removes a single
/// token from it. Drain transitions follow the original ones.
pub fn drain_augmented(net: &PetriNet) -> PetriNet {
    let mut b = NetBuilder::new();
    for name in net.place_names() {
        b.add_place(name.clone());
    }
    for t in net.transitions() {
        let nt = b.add_transition(net.transition_name(t));
        for &(p, w) in net.pre_column(t) {
            b.set_pre(Place(p), nt, w);
        }
        for &(p, w) in net.post_column(t) {
            b.set_post(Place(p), nt, w);
        }
    }
    let mut taken: BTreeSet<String> = net
        .place_names()
        .iter()
        .chain(net.transition_names())
        .cloned()
        .collect();
    for p in net.places() {
        let mut name = format!("drain_{}", net.place_name(p));
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        let t = b.add_transition(name);
        b.set_pre(p, t, 1);
    }
    b.build().expect("drain names are fresh")
}

/// Decides whether some marking `≥ m` is reachable from `m0` under the
/// continuous semantics. The verdict's witness ranges over the transitions
/// of [`drain_augmented`].
pub fn q_coverable(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
) -> Result<QVerdict, NetError> {
    q_coverable_with(net, m0, m, PivotRule::Bland)
}

pub fn q_coverable_with(
    net: &PetriNet,
    m0: &RationalMarking,
    m: &RationalMarking,
    rule: PivotRule,
) -> Result<QVerdict, NetError> {
    check_dims(net, m0)?;
    q_reachable_with(&drain_augmented(net), m0, m, rule)
}
