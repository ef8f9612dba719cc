use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use super::formula::{Atom, Cmp, Formula, Var, VarKind};
use super::sat::{Lit, SatResult, Solver, Theory};
use crate::audit;
use crate::net::DiscreteMarking;
use crate::ratlp::{self, BoundKind, DeltaRational, Explanation, Feasibility, LinearSystem, PivotRule, Relation, Simplex};
use crate::{int, Rat};

const NONNEG: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("free variable {0:?} has no binding")]
    Unbound(Var),
    #[error("{0:?} is not a free variable of the formula")]
    NotFree(Var),
    #[error("model failed verification")]
    BadModel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    /// A model over every variable of the formula, verified by substitution.
    Sat(BTreeMap<Var, Rat>),
    Unsat,
    /// The deadline passed.
    Unknown,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub queries: u64,
    pub sat: u64,
    pub unsat: u64,
    pub unknown: u64,
    /// Queries answered by a blocking clause alone.
    pub blocked: u64,
    /// Queries refuted by the linear relaxation alone.
    pub relaxed: u64,
    pub decisions: u64,
    pub conflicts: u64,
    pub pivots: u64,
    #[serde(skip)]
    pub time: Duration,
}

struct TheoryAtom {
    var: usize,
    // The atom's left-hand side over structural simplex columns.
    expr: Vec<(usize, Rat)>,
    bounds: Vec<(BoundKind, DeltaRational)>,
}

/// Linear real arithmetic over the simplex; boolean variable `b` of the SAT
/// solver is tied to `atoms[b]` when that is set.
#[derive(Default)]
struct Lra {
    simplex: Simplex,
    cols: BTreeMap<Var, usize>,
    slacks: HashMap<Vec<(usize, Rat)>, usize>,
    atoms: Vec<Option<TheoryAtom>>,
}

impl Lra {
    fn col(&mut self, v: Var) -> usize {
        if let Some(&c) = self.cols.get(&v) {
            return c;
        }
        let c = self.simplex.add_var();
        self.simplex
            .assert_lower(c, DeltaRational::zero(), NONNEG)
            .expect("fresh column");
        self.cols.insert(v, c);
        c
    }

    /// Ties boolean variable `b` to `atom`. Only called at the root scope.
    fn register(&mut self, b: usize, atom: &Atom) {
        assert!(!atom.terms.is_empty(), "constant atoms are folded away");
        let expr: Vec<(usize, Rat)> = atom
            .terms
            .iter()
            .map(|(v, c)| (self.col(*v), c.clone()))
            .collect();
        let lead = expr[0].1.clone();
        let cmp = if lead < Rat::zero() {
            atom.cmp.flipped()
        } else {
            atom.cmp
        };
        let rhs = &atom.rhs / &lead;
        let var = if expr.len() == 1 {
            expr[0].0
        } else {
            let mut key: Vec<(usize, Rat)> = expr.iter().map(|(c, k)| (*c, k / &lead)).collect();
            key.sort();
            match self.slacks.get(&key) {
                Some(&s) => s,
                None => {
                    let s = self.simplex.add_row(&key);
                    self.slacks.insert(key, s);
                    s
                }
            }
        };
        let norm: Vec<(usize, Rat)> = expr.iter().map(|(c, k)| (*c, k / &lead)).collect();
        let eq = || DeltaRational::from_rat(rhs.clone());
        let bounds = match cmp {
            Cmp::Ge => vec![(BoundKind::Lower, eq())],
            Cmp::Gt => vec![(BoundKind::Lower, DeltaRational::new(rhs.clone(), Rat::one()))],
            Cmp::Le => vec![(BoundKind::Upper, eq())],
            Cmp::Lt => vec![(BoundKind::Upper, DeltaRational::new(rhs.clone(), -Rat::one()))],
            Cmp::Eq => vec![(BoundKind::Lower, eq()), (BoundKind::Upper, eq())],
        };
        if self.atoms.len() <= b {
            self.atoms.resize_with(b + 1, || None);
        }
        self.atoms[b] = Some(TheoryAtom {
            var,
            expr: norm,
            bounds,
        });
    }

    /// Turns a simplex explanation into a conflict clause, after checking
    /// that it is a genuine Farkas refutation of the atoms involved.
    fn conflict(&self, expl: Explanation) -> Vec<Lit> {
        let n = self.simplex.num_vars();
        let mut sys = LinearSystem::new(n);
        let mut mult = Vec::new();
        for (reason, kind, c) in &expl.entries {
            if *reason == NONNEG {
                continue;
            }
            let atom = self.atoms[*reason].as_ref().expect("reason is an atom");
            let bound = &atom
                .bounds
                .iter()
                .find(|(k, _)| k == kind)
                .expect("explained bound exists")
                .1;
            let (coeffs, rel, rhs) = match kind {
                BoundKind::Lower => (
                    atom.expr.clone(),
                    if bound.infinitesimal > Rat::zero() { Relation::Gt } else { Relation::Ge },
                    bound.standard.clone(),
                ),
                BoundKind::Upper => (
                    atom.expr.iter().map(|(j, k)| (*j, -k)).collect(),
                    if bound.infinitesimal < Rat::zero() { Relation::Gt } else { Relation::Ge },
                    -bound.standard.clone(),
                ),
            };
            sys.push(coeffs, rel, rhs);
            mult.push(c.clone());
        }
        let ok = ratlp::check_certificate(&sys, &Feasibility::Certificate(mult)).unwrap_or(false);
        audit::record(ok);
        debug_assert!(ok, "theory conflict is not a refutation: {expl:?}");
        let mut lits: Vec<Lit> = expl
            .reasons()
            .filter(|&r| r != NONNEG)
            .map(|r| Lit::new(r, false))
            .collect();
        lits.sort();
        lits.dedup();
        lits
    }

    fn model(&self) -> BTreeMap<Var, Rat> {
        let delta = self.simplex.concrete_delta();
        self.cols
            .iter()
            .map(|(v, &c)| (*v, self.simplex.value(c).concretize(&delta)))
            .collect()
    }
}

impl Theory for Lra {
    fn assign(&mut self, lit: Lit) -> Result<(), Vec<Lit>> {
        if !lit.is_positive() {
            return Ok(());
        }
        let b = lit.var();
        let Some(Some(atom)) = self.atoms.get(b) else {
            return Ok(());
        };
        let var = atom.var;
        let bounds = atom.bounds.clone();
        for (kind, value) in bounds {
            let r = match kind {
                BoundKind::Lower => self.simplex.assert_lower(var, value, b),
                BoundKind::Upper => self.simplex.assert_upper(var, value, b),
            };
            if let Err(e) = r {
                return Err(self.conflict(e));
            }
        }
        Ok(())
    }

    fn check(&mut self) -> Result<(), Vec<Lit>> {
        self.simplex.check().map_err(|e| self.conflict(e))
    }

    fn push(&mut self) {
        self.simplex.push_scope();
    }

    fn pop(&mut self, levels: usize) {
        for _ in 0..levels {
            self.simplex.pop_scope();
        }
    }
}

/// An incremental solver for one formula queried under many bindings of its
/// free variables. Learned clauses carry over between queries.
pub struct SolveContext {
    formula: Formula,
    relaxation: Option<Formula>,
    free: BTreeSet<Var>,
    sat: Solver,
    lra: Lra,
    atom_lits: HashMap<Atom, usize>,
    true_var: usize,
    blocking: Vec<DiscreteMarking>,
    scopes: Vec<usize>,
    deadline: Option<Instant>,
    pivot: PivotRule,
    pub stats: SolveStats,
}

impl SolveContext {
    pub fn new(formula: Formula) -> Self {
        let free = formula.free_vars();
        let mut sat = Solver::new();
        let true_var = sat.new_var();
        sat.add_clause(&[Lit::new(true_var, true)]);
        let mut ctx = SolveContext {
            formula: formula.clone(),
            relaxation: None,
            free,
            sat,
            lra: Lra::default(),
            atom_lits: HashMap::new(),
            true_var,
            blocking: Vec::new(),
            scopes: Vec::new(),
            deadline: None,
            pivot: PivotRule::Bland,
            stats: SolveStats::default(),
        };
        let body = nnf(&formula);
        let root = ctx.encode(&body);
        ctx.sat.add_clause(&[root]);
        ctx
    }

    /// A conjunction of atoms implied by the formula, refuted first by a
    /// plain linear-programming check.
    pub fn with_relaxation(mut self, relaxation: Formula) -> Self {
        self.relaxation = Some(relaxation);
        self
    }

    pub fn with_pivot_rule(mut self, rule: PivotRule) -> Self {
        self.pivot = rule;
        self.lra.simplex.set_rule(rule);
        self
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn free_vars(&self) -> &BTreeSet<Var> {
        &self.free
    }

    fn atom_lit(&mut self, a: &Atom) -> Lit {
        if let Some(&b) = self.atom_lits.get(a) {
            return Lit::new(b, true);
        }
        let b = self.sat.new_var();
        self.lra.register(b, a);
        self.atom_lits.insert(a.clone(), b);
        Lit::new(b, true)
    }

    fn encode(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::True => Lit::new(self.true_var, true),
            Formula::False => Lit::new(self.true_var, false),
            Formula::Atom(a) => self.atom_lit(a),
            Formula::And(ps) => {
                let kids: Vec<Lit> = ps.iter().map(|p| self.encode(p)).collect();
                let g = Lit::new(self.sat.new_var(), true);
                for k in kids {
                    self.sat.add_clause(&[!g, k]);
                }
                g
            }
            Formula::Or(ps) => {
                let mut clause: Vec<Lit> = ps.iter().map(|p| self.encode(p)).collect();
                let g = Lit::new(self.sat.new_var(), true);
                clause.push(!g);
                self.sat.add_clause(&clause);
                g
            }
            Formula::Implies(..) | Formula::Exists(..) => unreachable!("input is in negation normal form"),
        }
    }

    /// Permanently excludes bindings of the final-marking variables that
    /// dominate `v`.
    pub fn add_blocking(&mut self, v: &DiscreteMarking) {
        self.blocking.push(v.clone());
    }

    pub fn push(&mut self) {
        self.scopes.push(self.blocking.len());
    }

    pub fn pop(&mut self) {
        if let Some(n) = self.scopes.pop() {
            self.blocking.truncate(n);
        }
    }

    fn is_blocked(&self, bindings: &BTreeMap<Var, Rat>) -> bool {
        self.blocking.iter().any(|v| {
            v.0.iter().enumerate().all(|(p, &k)| {
                bindings
                    .get(&Var::new(VarKind::Final, p))
                    .map_or(k == 0, |x| x >= &int(k as i64))
            })
        })
    }

    pub fn solve(&mut self, bindings: &BTreeMap<Var, Rat>) -> Result<SolveResult, SolveError> {
        for v in bindings.keys() {
            if !self.free.contains(v) {
                return Err(SolveError::NotFree(*v));
            }
        }
        if let Some(v) = self.free.iter().find(|v| !bindings.contains_key(v)) {
            return Err(SolveError::Unbound(*v));
        }
        let start = Instant::now();
        self.stats.queries += 1;
        let r = self.solve_inner(bindings);
        self.stats.time += start.elapsed();
        match &r {
            Ok(SolveResult::Sat(_)) => self.stats.sat += 1,
            Ok(SolveResult::Unsat) => self.stats.unsat += 1,
            Ok(SolveResult::Unknown) => self.stats.unknown += 1,
            Err(_) => {}
        }
        r
    }

    fn solve_inner(&mut self, bindings: &BTreeMap<Var, Rat>) -> Result<SolveResult, SolveError> {
        if self.is_blocked(bindings) {
            self.stats.blocked += 1;
            return Ok(SolveResult::Unsat);
        }
        if let Some(relax) = &self.relaxation {
            if !linear_feasible(&relax.substitute(bindings), self.pivot) {
                self.stats.relaxed += 1;
                return Ok(SolveResult::Unsat);
            }
        }
        self.sat.reset(&mut self.lra);
        let assumptions: Vec<Lit> = bindings
            .iter()
            .map(|(v, c)| {
                let a = Atom::var(*v, Cmp::Eq, c.clone());
                self.atom_lit(&a)
            })
            .collect();
        let deadline = self.deadline;
        let stop = move || deadline.is_some_and(|d| Instant::now() >= d);
        let before = self.sat.stats;
        let pivots = self.lra.simplex.pivots();
        let outcome = self.sat.solve(&assumptions, &mut self.lra, &stop);
        self.stats.decisions += self.sat.stats.decisions - before.decisions;
        self.stats.conflicts += self.sat.stats.conflicts - before.conflicts;
        self.stats.pivots += self.lra.simplex.pivots() - pivots;
        let result = match outcome {
            SatResult::Unsat => Ok(SolveResult::Unsat),
            SatResult::Interrupted => Ok(SolveResult::Unknown),
            SatResult::Sat => {
                let mut model = self.lra.model();
                for v in self.formula.all_vars() {
                    model.entry(v).or_insert_with(Rat::zero);
                }
                for (v, c) in bindings {
                    model.insert(*v, c.clone());
                }
                let ranked = normalize_orders(&model);
                let holds = |m: &BTreeMap<Var, Rat>| {
                    self.formula
                        .eval(&|v| m.get(&v).cloned())
                        .unwrap_or(false)
                };
                if holds(&ranked) {
                    audit::record(true);
                    Ok(SolveResult::Sat(ranked))
                } else if holds(&model) {
                    audit::record(true);
                    Ok(SolveResult::Sat(model))
                } else {
                    audit::record(false);
                    Err(SolveError::BadModel)
                }
            }
        };
        self.sat.reset(&mut self.lra);
        result
    }
}

/// One-shot convenience wrapper.
pub fn solve(f: &Formula, bindings: &BTreeMap<Var, Rat>) -> Result<SolveResult, SolveError> {
    SolveContext::new(f.clone()).solve(bindings)
}

/// Replaces each family of order variables by dense integer ranks, keeping
/// zeros and the relative order of positive values.
pub fn normalize_orders(model: &BTreeMap<Var, Rat>) -> BTreeMap<Var, Rat> {
    let mut out = model.clone();
    for kind in [VarKind::OrderForward, VarKind::OrderBackward] {
        let positive: BTreeSet<Rat> = model
            .iter()
            .filter(|(v, c)| v.kind == kind && **c > Rat::zero())
            .map(|(_, c)| c.clone())
            .collect();
        let rank: BTreeMap<Rat, Rat> = positive
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c, int(i as i64 + 1)))
            .collect();
        for (v, c) in out.iter_mut() {
            if v.kind == kind && *c > Rat::zero() {
                *c = rank[c].clone();
            }
        }
    }
    out
}

/// Feasibility of a conjunction of atoms (under existentials) over
/// non-negative reals.
fn linear_feasible(f: &Formula, rule: PivotRule) -> bool {
    let mut atoms = Vec::new();
    match f {
        Formula::False => return false,
        Formula::True => return true,
        _ => {}
    }
    collect_conjuncts(f, &mut atoms);
    let vars: BTreeSet<Var> = atoms.iter().flat_map(|a| a.vars()).collect();
    let index: BTreeMap<Var, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut sys = LinearSystem::new(vars.len());
    for a in atoms {
        let coeffs: Vec<(usize, Rat)> = a.terms.iter().map(|(v, c)| (index[v], c.clone())).collect();
        let neg = || coeffs.iter().map(|(j, c)| (*j, -c)).collect::<Vec<_>>();
        match a.cmp {
            Cmp::Eq => sys.push(coeffs.clone(), Relation::Eq, a.rhs.clone()),
            Cmp::Ge => sys.push(coeffs.clone(), Relation::Ge, a.rhs.clone()),
            Cmp::Gt => sys.push(coeffs.clone(), Relation::Gt, a.rhs.clone()),
            Cmp::Le => sys.push(neg(), Relation::Ge, -a.rhs.clone()),
            Cmp::Lt => sys.push(neg(), Relation::Gt, -a.rhs.clone()),
        }
    }
    ratlp::feasible_with(&sys, rule).is_sat()
}

fn collect_conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
    match f {
        Formula::Atom(a) => out.push(a),
        Formula::And(ps) => ps.iter().for_each(|p| collect_conjuncts(p, out)),
        Formula::Exists(_, b) => collect_conjuncts(b, out),
        Formula::True => {}
        other => panic!("relaxation must be a conjunction of atoms, found {other:?}"),
    }
}

/// Negation normal form without implications or existentials.
fn nnf(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::And(ps) => Formula::and(ps.iter().map(nnf)),
        Formula::Or(ps) => Formula::or(ps.iter().map(nnf)),
        Formula::Implies(l, r) => Formula::or([nnf(&strip(l)).negate(), nnf(r)]),
        Formula::Exists(_, b) => nnf(b),
    }
}

fn strip(f: &Formula) -> Formula {
    match f {
        Formula::Exists(_, b) => strip(b),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::encode::{build_cover_query, build_reach_formula};
    use crate::net::tests::{net_f, net_g};
    use crate::rat;

    fn v(kind: VarKind, i: usize) -> Var {
        Var::new(kind, i)
    }

    fn bind(kind: VarKind, m: &[i64]) -> BTreeMap<Var, Rat> {
        m.iter().enumerate().map(|(i, &k)| (v(kind, i), int(k))).collect()
    }

    #[test]
    fn strict_inequalities_and_disjunctions() {
        let y0 = v(VarKind::Parikh, 0);
        let y1 = v(VarKind::Parikh, 1);
        let f = Formula::and([
            Formula::atom(Atom::new([(y0, int(1)), (y1, int(1))], Cmp::Lt, int(1))),
            Formula::or([
                Formula::atom(Atom::var(y0, Cmp::Gt, rat(9, 10))),
                Formula::atom(Atom::var(y1, Cmp::Ge, int(2))),
            ]),
            Formula::atom(Atom::var(y1, Cmp::Gt, int(0))),
        ]);
        let f = Formula::exists(vec![y0, y1], f);
        match solve(&f, &BTreeMap::new()).unwrap() {
            SolveResult::Sat(m) => {
                assert!(m[&y0] > rat(9, 10));
                assert!(&m[&y0] + &m[&y1] < int(1));
                assert!(m[&y1] > int(0));
            }
            other => panic!("{other:?}"),
        }
        let g = Formula::exists(
            vec![y0, y1],
            Formula::and([f, Formula::atom(Atom::var(y1, Cmp::Ge, rat(1, 10)))]),
        );
        assert_eq!(solve(&g, &BTreeMap::new()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn implication_and_negated_equality() {
        let y0 = v(VarKind::Parikh, 0);
        let f = Formula::and([
            Formula::implies(
                Formula::atom(Atom::var(y0, Cmp::Eq, int(1))),
                Formula::False,
            ),
            Formula::atom(Atom::var(y0, Cmp::Ge, int(1))),
            Formula::atom(Atom::var(y0, Cmp::Le, int(1))),
        ]);
        let f = Formula::exists(vec![y0], f);
        assert_eq!(solve(&f, &BTreeMap::new()).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn reachability_formula_on_net_f() {
        let (net, _) = net_f();
        let mut ctx = SolveContext::new(build_reach_formula(&net));
        let mut q = |w: &[i64], x: &[i64]| {
            let mut b = bind(VarKind::Initial, w);
            b.extend(bind(VarKind::Final, x));
            ctx.solve(&b).unwrap()
        };
        // (1,0) reaches (0, 1/2) continuously but not (0,1).
        assert!(q(&[1, 0], &[0, 0]).is_sat());
        assert!(q(&[1, 0], &[1, 0]).is_sat());
        assert!(q(&[1, 0], &[0, 1]).is_unsat());
        assert!(q(&[2, 0], &[1, 1]).is_sat());
        assert!(q(&[0, 1], &[0, 0]).is_unsat());
    }

    #[test]
    fn cover_query_on_net_g_and_blocking() {
        // Net G creates tokens from nothing, so every bound is coverable.
        let (net, m0) = net_g();
        let q = build_cover_query(&net, &m0);
        let mut ctx = SolveContext::new(q.formula.clone()).with_relaxation(q.relaxation.clone());
        let x = bind(VarKind::Final, &vec![0; net.num_places()]);
        assert!(ctx.solve(&x).unwrap().is_sat());
        ctx.push();
        ctx.add_blocking(&DiscreteMarking(vec![0; net.num_places()]));
        assert!(ctx.solve(&x).unwrap().is_unsat());
        assert_eq!(ctx.stats.blocked, 1);
        ctx.pop();
        assert!(ctx.solve(&x).unwrap().is_sat());
    }

    #[test]
    fn binding_errors() {
        let (net, _) = net_f();
        let mut ctx = SolveContext::new(build_reach_formula(&net));
        let b = bind(VarKind::Initial, &[1, 0]);
        assert!(matches!(ctx.solve(&b), Err(SolveError::Unbound(_))));
        let mut c = b.clone();
        c.extend(bind(VarKind::Final, &[0, 0]));
        c.insert(v(VarKind::Parikh, 0), int(1));
        assert!(matches!(ctx.solve(&c), Err(SolveError::NotFree(_))));
    }

    #[test]
    fn orders_become_ranks() {
        let m: BTreeMap<Var, Rat> = [
            (v(VarKind::OrderForward, 0), rat(1, 3)),
            (v(VarKind::OrderForward, 1), rat(1, 2)),
            (v(VarKind::OrderForward, 2), rat(1, 3)),
            (v(VarKind::OrderForward, 3), int(0)),
            (v(VarKind::Parikh, 0), rat(1, 3)),
        ]
        .into();
        let r = normalize_orders(&m);
        assert_eq!(r[&v(VarKind::OrderForward, 0)], int(1));
        assert_eq!(r[&v(VarKind::OrderForward, 1)], int(2));
        assert_eq!(r[&v(VarKind::OrderForward, 2)], int(1));
        assert_eq!(r[&v(VarKind::OrderForward, 3)], int(0));
        assert_eq!(r[&v(VarKind::Parikh, 0)], rat(1, 3));
    }
}
