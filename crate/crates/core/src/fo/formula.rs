use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::net::PetriNet;
use crate::Rat;

/// Role of a first-order variable. Every variable ranges over `Q≥0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    /// Initial marking `w`, indexed by place.
    Initial,
    /// Final marking `x`, indexed by place. In a cover query this is the
    /// marking to be covered.
    Final,
    /// Marking actually reached in a cover query, indexed by place.
    Reached,
    /// Parikh image `y`, indexed by transition.
    Parikh,
    /// Firing order for the forward firing-set condition, indexed by place
    /// (`0..|P|`) then transition (`|P|..`).
    OrderForward,
    /// Firing order for the backward firing-set condition.
    OrderBackward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

impl Var {
    pub fn new(kind: VarKind, index: usize) -> Self {
        Var { kind, index }
    }

    /// SMT-LIB style name: `w_p`, `x_p`, `r_p`, `y_t`, `zf_n`, `zb_n`.
    pub fn name(&self, net: &PetriNet) -> String {
        let np = net.num_places();
        let node = |i: usize| {
            if i < np {
                net.place_names()[i].clone()
            } else {
                net.transition_names()[i - np].clone()
            }
        };
        match self.kind {
            VarKind::Initial => format!("w_{}", net.place_names()[self.index]),
            VarKind::Final => format!("x_{}", net.place_names()[self.index]),
            VarKind::Reached => format!("r_{}", net.place_names()[self.index]),
            VarKind::Parikh => format!("y_{}", net.transition_names()[self.index]),
            VarKind::OrderForward => format!("zf_{}", node(self.index)),
            VarKind::OrderBackward => format!("zb_{}", node(self.index)),
        }
    }

    pub fn is_order(&self) -> bool {
        matches!(self.kind, VarKind::OrderForward | VarKind::OrderBackward)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmp {
    Eq,
    Ge,
    Gt,
    Le,
    Lt,
}

impl Cmp {
    pub fn holds(&self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Lt => lhs < rhs,
        }
    }

    /// Relation after multiplying both sides by a negative number.
    pub fn flipped(&self) -> Cmp {
        match self {
            Cmp::Eq => Cmp::Eq,
            Cmp::Ge => Cmp::Le,
            Cmp::Gt => Cmp::Lt,
            Cmp::Le => Cmp::Ge,
            Cmp::Lt => Cmp::Gt,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
        }
    }
}

/// `Σ coeff·var  cmp  rhs`, with terms sorted by variable and no zero
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub terms: Vec<(Var, Rat)>,
    pub cmp: Cmp,
    pub rhs: Rat,
}

impl Atom {
    pub fn new(terms: impl IntoIterator<Item = (Var, Rat)>, cmp: Cmp, rhs: Rat) -> Atom {
        let mut acc: BTreeMap<Var, Rat> = BTreeMap::new();
        for (v, c) in terms {
            *acc.entry(v).or_insert_with(Rat::zero) += c;
        }
        Atom {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            cmp,
            rhs,
        }
    }

    /// `v cmp rhs`
    pub fn var(v: Var, cmp: Cmp, rhs: Rat) -> Atom {
        Atom::new([(v, Rat::from_integer(1.into()))], cmp, rhs)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.iter().map(|(v, _)| *v)
    }

    pub fn eval_lhs(&self, model: &dyn Fn(Var) -> Option<Rat>) -> Result<Rat, Var> {
        let mut s = Rat::zero();
        for (v, c) in &self.terms {
            s += c * model(*v).ok_or(*v)?;
        }
        Ok(s)
    }

    pub fn eval(&self, model: &dyn Fn(Var) -> Option<Rat>) -> Result<bool, Var> {
        Ok(self.cmp.holds(&self.eval_lhs(model)?, &self.rhs))
    }

    /// Moves bound variables to the constant side.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Rat>) -> Atom {
        let mut rhs = self.rhs.clone();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (v, c) in &self.terms {
            match bindings.get(v) {
                Some(val) => rhs -= c * val,
                None => terms.push((*v, c.clone())),
            }
        }
        Atom {
            terms,
            cmp: self.cmp,
            rhs,
        }
    }

    /// The logical negation, as a disjunction of atoms.
    pub fn negated(&self) -> Vec<Atom> {
        let with = |cmp| Atom {
            terms: self.terms.clone(),
            cmp,
            rhs: self.rhs.clone(),
        };
        match self.cmp {
            Cmp::Eq => vec![with(Cmp::Lt), with(Cmp::Gt)],
            Cmp::Ge => vec![with(Cmp::Lt)],
            Cmp::Gt => vec![with(Cmp::Le)],
            Cmp::Le => vec![with(Cmp::Gt)],
            Cmp::Lt => vec![with(Cmp::Ge)],
        }
    }

    /// Truth value when no variable is left.
    pub fn constant_value(&self) -> Option<bool> {
        self.terms
            .is_empty()
            .then(|| self.cmp.holds(&Rat::zero(), &self.rhs))
    }

    /// Truth value when every variable is pinned to zero is not implied, but
    /// an atom over non-negative variables may still be decided by signs.
    fn trivially(&self) -> Option<bool> {
        if let Some(b) = self.constant_value() {
            return Some(b);
        }
        let all_pos = self.terms.iter().all(|(_, c)| c.is_positive());
        // Σ c·v with every c > 0 and v ≥ 0 is ≥ 0.
        if all_pos && !self.rhs.is_positive() {
            match self.cmp {
                Cmp::Ge if self.rhs.is_negative() || self.rhs.is_zero() => return Some(true),
                Cmp::Gt if self.rhs.is_negative() => return Some(true),
                Cmp::Le | Cmp::Eq | Cmp::Lt if self.rhs.is_negative() => return Some(false),
                Cmp::Lt if self.rhs.is_zero() => return Some(false),
                _ => {}
            }
        }
        None
    }
}

/// A quantifier-free-up-to-existentials formula of linear arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
}

impl Formula {
    /// An atom, folded to a constant when its truth does not depend on the
    /// (non-negative) variables.
    pub fn atom(a: Atom) -> Formula {
        match a.trivially() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(a),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        match (lhs, rhs) {
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (Formula::True, r) => r,
            (l, Formula::False) => l.negate(),
            (l, r) => Formula::Implies(Box::new(l), Box::new(r)),
        }
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        match body {
            Formula::True | Formula::False => body,
            b if vars.is_empty() => b,
            b => Formula::Exists(vars, Box::new(b)),
        }
    }

    /// Negation pushed down to the atoms. Existentials must not occur.
    pub fn negate(self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => Formula::or(a.negated().into_iter().map(Formula::atom)),
            Formula::And(ps) => Formula::or(ps.into_iter().map(Formula::negate)),
            Formula::Or(ps) => Formula::and(ps.into_iter().map(Formula::negate)),
            Formula::Implies(l, r) => Formula::and([*l, r.negate()]),
            Formula::Exists(..) => panic!("negation of an existential is not existential"),
        }
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::And(ps) | Formula::Or(ps) => 1 + ps.iter().map(Formula::node_count).sum::<usize>(),
            Formula::Implies(l, r) => 1 + l.node_count() + r.node_count(),
            Formula::Exists(_, b) => 1 + b.node_count(),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| out.push(a));
        out
    }

    fn visit_atoms<'a>(&'a self, f: &mut dyn FnMut(&'a Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.visit_atoms(f)),
            Formula::Implies(l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
            Formula::Exists(_, b) => b.visit_atoms(f),
        }
    }

    /// Variables occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| out.extend(a.vars()));
        if let Formula::Exists(vs, _) = self {
            out.extend(vs.iter().copied());
        }
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Exists(vs, b) => {
                out.extend(vs.iter().copied());
                b.collect_bound(out);
            }
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.collect_bound(out)),
            Formula::Implies(l, r) => {
                l.collect_bound(out);
                r.collect_bound(out);
            }
            _ => {}
        }
    }

    /// Variables not captured by an existential.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut bound = BTreeSet::new();
        self.collect_bound(&mut bound);
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| out.extend(a.vars().filter(|v| !bound.contains(v))));
        out
    }

    /// Evaluates under a total assignment (existentials read from the model).
    pub fn eval(&self, model: &dyn Fn(Var) -> Option<Rat>) -> Result<bool, Var> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(model)?,
            Formula::And(ps) => {
                for p in ps {
                    if !p.eval(model)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(ps) => {
                for p in ps {
                    if p.eval(model)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(l, r) => !l.eval(model)? || r.eval(model)?,
            Formula::Exists(_, b) => b.eval(model)?,
        })
    }

    /// Replaces bound free variables by constants and folds.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Rat>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::atom(a.substitute(bindings)),
            Formula::And(ps) => Formula::and(ps.iter().map(|p| p.substitute(bindings))),
            Formula::Or(ps) => Formula::or(ps.iter().map(|p| p.substitute(bindings))),
            Formula::Implies(l, r) => Formula::implies(l.substitute(bindings), r.substitute(bindings)),
            Formula::Exists(vs, b) => Formula::exists(vs.clone(), b.substitute(bindings)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{:?}{}", v.kind, v.index)?;
        }
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        write!(f, " {} {}", self.cmp.symbol(), self.rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{int, rat};

    fn y(i: usize) -> Var {
        Var::new(VarKind::Parikh, i)
    }

    #[test]
    fn smart_constructors_fold_constants() {
        assert_eq!(Formula::atom(Atom::var(y(0), Cmp::Ge, int(0))), Formula::True);
        assert_eq!(Formula::atom(Atom::var(y(0), Cmp::Lt, int(0))), Formula::False);
        assert_eq!(Formula::atom(Atom::new([], Cmp::Gt, int(-1))), Formula::True);
        let a = Formula::atom(Atom::var(y(0), Cmp::Gt, int(0)));
        assert_eq!(Formula::and([Formula::True, a.clone()]), a);
        assert_eq!(Formula::or([Formula::True, a.clone()]), Formula::True);
        assert_eq!(Formula::implies(a.clone(), Formula::True), Formula::True);
        assert_eq!(
            Formula::implies(a.clone(), Formula::False),
            Formula::atom(Atom::var(y(0), Cmp::Le, int(0)))
        );
    }

    #[test]
    fn substitution_and_evaluation() {
        let a = Atom::new([(y(0), int(2)), (y(1), int(-1))], Cmp::Eq, int(1));
        let b: BTreeMap<Var, Rat> = [(y(0), rat(1, 2))].into();
        let s = a.substitute(&b);
        assert_eq!(s.terms, vec![(y(1), int(-1))]);
        assert_eq!(s.rhs, int(0));
        let model = |v: Var| Some(if v == y(0) { int(1) } else { int(1) });
        assert!(Formula::Atom(a.clone()).eval(&model).unwrap());
        let negated = Formula::Atom(a).negate();
        assert!(!negated.eval(&model).unwrap());
    }

    #[test]
    fn free_and_bound_vars() {
        let f = Formula::exists(
            vec![y(1)],
            Formula::and([
                Formula::atom(Atom::var(y(0), Cmp::Gt, int(0))),
                Formula::atom(Atom::var(y(1), Cmp::Gt, int(0))),
            ]),
        );
        assert_eq!(f.free_vars(), [y(0)].into());
        assert_eq!(f.all_vars(), [y(0), y(1)].into());
        assert_eq!(f.node_count(), 4);
    }
}
