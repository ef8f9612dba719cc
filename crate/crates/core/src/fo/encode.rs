//! Existential linear-arithmetic encodings of continuous reachability.
//!
//! A marking `m'` is reachable from `m` in the continuous semantics iff some
//! Parikh vector `y` solves the state equation `m' = m + C·y`, every
//! transition in the support of `y` can be fired eventually from `m`, and
//! every transition in the support can be fired eventually backwards from
//! `m'`. The "fired eventually" part is the firing-set condition, which is
//! expressed here by an ordering `z` on places and transitions: a transition
//! in the support gets a rank no smaller than that of its input places, and a
//! place with a positive rank is either initially marked or fed by a
//! supported transition of smaller rank.

use num_traits::Zero;

use super::formula::{Atom, Cmp, Formula, Var, VarKind};
use crate::net::{DiscreteMarking, PetriNet};
use crate::{int, Rat};

/// The value a marking takes at a place: a variable or a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkRef {
    Var(Var),
    Const(Rat),
}

impl MarkRef {
    fn positive(&self) -> Formula {
        match self {
            MarkRef::Var(v) => Formula::atom(Atom::var(*v, Cmp::Gt, int(0))),
            MarkRef::Const(c) => {
                if c > &Rat::zero() {
                    Formula::True
                } else {
                    Formula::False
                }
            }
        }
    }
}

/// Which of the two firing-set conditions a formula encodes; picks the
/// family of order variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn order_kind(self) -> VarKind {
        match self {
            Direction::Forward => VarKind::OrderForward,
            Direction::Backward => VarKind::OrderBackward,
        }
    }
}

/// Marking variables of the given kind, one per place.
pub fn marking_vars(net: &PetriNet, kind: VarKind) -> Vec<MarkRef> {
    (0..net.num_places())
        .map(|p| MarkRef::Var(Var::new(kind, p)))
        .collect()
}

pub fn marking_consts(m: &DiscreteMarking) -> Vec<MarkRef> {
    m.0.iter().map(|&k| MarkRef::Const(int(k as i64))).collect()
}

fn parikh(t: usize) -> Var {
    Var::new(VarKind::Parikh, t)
}

/// The firing-set condition: the support of `y` is a set of transitions that
/// can all be fired, in some order, starting from a marking whose support is
/// that of `w`. Pass the reverse net with [`Direction::Backward`] for the
/// backward condition.
pub fn build_fs_formula(net: &PetriNet, w: &[MarkRef], dir: Direction) -> Formula {
    assert_eq!(w.len(), net.num_places(), "marking has wrong dimension");
    let np = net.num_places();
    let kind = dir.order_kind();
    let zp = |p: usize| Var::new(kind, p);
    let zt = |t: usize| Var::new(kind, np + t);
    let fired = |t: usize| Formula::atom(Atom::var(parikh(t), Cmp::Gt, int(0)));

    let mut parts = Vec::new();
    for t in net.transitions() {
        let inputs = net.preset(t).map(|p| {
            Formula::and([
                Formula::atom(Atom::var(zp(p.0), Cmp::Gt, int(0))),
                Formula::atom(Atom::new(
                    [(zp(p.0), int(1)), (zt(t.0), int(-1))],
                    Cmp::Le,
                    int(0),
                )),
            ])
        });
        parts.push(Formula::implies(fired(t.0), Formula::and(inputs.collect::<Vec<_>>())));
    }
    for p in net.places() {
        let feeders = net.producers(p).map(|t| {
            Formula::and([
                fired(t.0),
                Formula::atom(Atom::new(
                    [(zt(t.0), int(1)), (zp(p.0), int(-1))],
                    Cmp::Lt,
                    int(0),
                )),
            ])
        });
        let justified = Formula::or(std::iter::once(w[p.0].positive()).chain(feeders));
        parts.push(Formula::implies(
            Formula::atom(Atom::var(zp(p.0), Cmp::Gt, int(0))),
            justified,
        ));
    }
    let order: Vec<Var> = (0..np + net.num_transitions())
        .map(|i| Var::new(kind, i))
        .collect();
    Formula::exists(order, Formula::and(parts))
}

/// `x = w + C·y`, one equation per place.
pub fn build_state_equation(net: &PetriNet, w: &[MarkRef], x: &[MarkRef]) -> Formula {
    let mut rows = Vec::new();
    for p in net.places() {
        let mut terms: Vec<(Var, Rat)> = Vec::new();
        let mut rhs = Rat::zero();
        match &x[p.0] {
            MarkRef::Var(v) => terms.push((*v, int(1))),
            MarkRef::Const(c) => rhs -= c,
        }
        match &w[p.0] {
            MarkRef::Var(v) => terms.push((*v, int(-1))),
            MarkRef::Const(c) => rhs += c,
        }
        for t in net.consumers(p).chain(net.producers(p)) {
            let c = net.effect(p, t);
            if c != 0 && !terms.iter().any(|(v, _)| *v == parikh(t.0)) {
                terms.push((parikh(t.0), int(-c)));
            }
        }
        rows.push(Formula::atom(Atom::new(terms, Cmp::Eq, rhs)));
    }
    Formula::and(rows)
}

/// Continuous reachability between `w` and `x`: the state equation plus the
/// forward and backward firing-set conditions, sharing one Parikh vector.
pub fn build_reach_between(net: &PetriNet, w: &[MarkRef], x: &[MarkRef]) -> Formula {
    let y: Vec<Var> = (0..net.num_transitions()).map(parikh).collect();
    Formula::exists(
        y,
        Formula::and([
            build_state_equation(net, w, x),
            build_fs_formula(net, w, Direction::Forward),
            build_fs_formula(&net.reverse(), x, Direction::Backward),
        ]),
    )
}

/// Continuous reachability with both markings free (`w_p` and `x_p`).
pub fn build_reach_formula(net: &PetriNet) -> Formula {
    build_reach_between(
        net,
        &marking_vars(net, VarKind::Initial),
        &marking_vars(net, VarKind::Final),
    )
}

/// A cover query: the formula in the free variables `x_p` stating that some
/// marking `r ≥ x` is continuously reachable from `m0`.
#[derive(Clone, Debug)]
pub struct CoverQuery {
    pub formula: Formula,
    /// A linear necessary condition (state equation and `r ≥ x`), cheap to
    /// check on its own.
    pub relaxation: Formula,
}

pub fn build_cover_query(net: &PetriNet, m0: &DiscreteMarking) -> CoverQuery {
    let w = marking_consts(m0);
    let r = marking_vars(net, VarKind::Reached);
    let dominates = || {
        Formula::and(net.places().map(|p| {
            Formula::atom(Atom::new(
                [
                    (Var::new(VarKind::Reached, p.0), int(1)),
                    (Var::new(VarKind::Final, p.0), int(-1)),
                ],
                Cmp::Ge,
                int(0),
            ))
        }))
    };
    let reached: Vec<Var> = (0..net.num_places())
        .map(|p| Var::new(VarKind::Reached, p))
        .collect();
    let formula = Formula::exists(
        reached.clone(),
        Formula::and([build_reach_between(net, &w, &r), dominates()]),
    );
    let y: Vec<Var> = (0..net.num_transitions()).map(parikh).collect();
    let relaxation = Formula::exists(
        reached.into_iter().chain(y).collect(),
        Formula::and([build_state_equation(net, &w, &r), dominates()]),
    );
    CoverQuery {
        formula,
        relaxation,
    }
}
