//! Incremental bounded-variable simplex over delta-rationals.
//!
//! Every constraint is a bound on a variable; linear constraints get a
//! slack variable defined by a tableau row. Bounds carry an opaque reason id
//! so that an infeasible row can be turned into a list of the bounds that
//! caused it, together with the non-negative multipliers of a Farkas
//! combination. Pivoting follows Bland's rule (smallest index first), which
//! guarantees termination; [`PivotRule::Sparse`] first tries pivots that
//! keep the tableau sparse and falls back to Bland's rule if that stalls.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::delta::DeltaRational;
use crate::Rat;

pub type ReasonId = usize;

// Pivots per check before the sparse rule gives up and uses Bland's.
const HEURISTIC_PIVOTS: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PivotRule {
    #[default]
    Bland,
    /// Enter on the eligible variable with the fewest row occurrences.
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Debug)]
struct Bound {
    value: DeltaRational,
    reason: ReasonId,
}

/// Bounds whose Farkas combination `Σ coeff·(bound)` reads `0 ≥ positive`.
///
/// A lower bound `x ≥ l` contributes `coeff·(x ≥ l)`, an upper bound
/// `x ≤ u` contributes `coeff·(-x ≥ -u)`; every coefficient is positive.
#[derive(Clone, Debug, Default)]
pub struct Explanation {
    pub entries: Vec<(ReasonId, BoundKind, Rat)>,
}

impl Explanation {
    pub fn reasons(&self) -> impl Iterator<Item = ReasonId> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

struct TrailEntry {
    var: usize,
    kind: BoundKind,
    old: Option<Bound>,
}

#[derive(Default)]
pub struct Simplex {
    values: Vec<DeltaRational>,
    lower: Vec<Option<Bound>>,
    upper: Vec<Option<Bound>>,
    // rows[b] is Some for basic b: b = Σ coeff·x over non-basic x.
    rows: Vec<Option<BTreeMap<usize, Rat>>>,
    // cols[x] lists the basic variables whose row mentions non-basic x.
    cols: Vec<BTreeSet<usize>>,
    trail: Vec<TrailEntry>,
    scopes: Vec<usize>,
    pivots: u64,
    rule: PivotRule,
}

impl Simplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rule(rule: PivotRule) -> Self {
        Simplex {
            rule,
            ..Self::default()
        }
    }

    pub fn set_rule(&mut self, rule: PivotRule) {
        self.rule = rule;
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn pivots(&self) -> u64 {
        self.pivots
    }

    /// Adds an unbounded variable with value zero.
    pub fn add_var(&mut self) -> usize {
        self.values.push(DeltaRational::zero());
        self.lower.push(None);
        self.upper.push(None);
        self.rows.push(None);
        self.cols.push(BTreeSet::new());
        self.values.len() - 1
    }

    /// Adds a slack variable `s = Σ coeff·x` and returns it.
    pub fn add_row(&mut self, expr: &[(usize, Rat)]) -> usize {
        let mut row: BTreeMap<usize, Rat> = BTreeMap::new();
        for (x, a) in expr {
            if a.is_zero() {
                continue;
            }
            match &self.rows[*x] {
                Some(def) => {
                    for (y, b) in def {
                        *row.entry(*y).or_insert_with(Rat::zero) += a * b;
                    }
                }
                None => *row.entry(*x).or_insert_with(Rat::zero) += a,
            }
        }
        row.retain(|_, a| !a.is_zero());
        let s = self.add_var();
        let mut value = DeltaRational::zero();
        for (x, a) in &row {
            value += &self.values[*x].scale(a);
            self.cols[*x].insert(s);
        }
        self.values[s] = value;
        self.rows[s] = Some(row);
        s
    }

    pub fn value(&self, x: usize) -> &DeltaRational {
        &self.values[x]
    }

    pub fn push_scope(&mut self) {
        self.scopes.push(self.trail.len());
    }

    pub fn pop_scope(&mut self) {
        let mark = self.scopes.pop().expect("pop_scope without push_scope");
        while self.trail.len() > mark {
            let e = self.trail.pop().unwrap();
            match e.kind {
                BoundKind::Lower => self.lower[e.var] = e.old,
                BoundKind::Upper => self.upper[e.var] = e.old,
            }
        }
    }

    pub fn scope_depth(&self) -> usize {
        self.scopes.len()
    }

    /// Asserts `x ≥ value`.
    pub fn assert_lower(
        &mut self,
        x: usize,
        value: DeltaRational,
        reason: ReasonId,
    ) -> Result<(), Explanation> {
        if let Some(u) = &self.upper[x] {
            if value > u.value {
                return Err(Explanation {
                    entries: vec![
                        (reason, BoundKind::Lower, Rat::one()),
                        (u.reason, BoundKind::Upper, Rat::one()),
                    ],
                });
            }
        }
        if matches!(&self.lower[x], Some(l) if value <= l.value) {
            return Ok(());
        }
        let old = self.lower[x].replace(Bound {
            value: value.clone(),
            reason,
        });
        self.trail.push(TrailEntry {
            var: x,
            kind: BoundKind::Lower,
            old,
        });
        if self.rows[x].is_none() && self.values[x] < value {
            self.update(x, value);
        }
        Ok(())
    }

    /// Asserts `x ≤ value`.
    pub fn assert_upper(
        &mut self,
        x: usize,
        value: DeltaRational,
        reason: ReasonId,
    ) -> Result<(), Explanation> {
        if let Some(l) = &self.lower[x] {
            if value < l.value {
                return Err(Explanation {
                    entries: vec![
                        (reason, BoundKind::Upper, Rat::one()),
                        (l.reason, BoundKind::Lower, Rat::one()),
                    ],
                });
            }
        }
        if matches!(&self.upper[x], Some(u) if value >= u.value) {
            return Ok(());
        }
        let old = self.upper[x].replace(Bound {
            value: value.clone(),
            reason,
        });
        self.trail.push(TrailEntry {
            var: x,
            kind: BoundKind::Upper,
            old,
        });
        if self.rows[x].is_none() && self.values[x] > value {
            self.update(x, value);
        }
        Ok(())
    }

    fn update(&mut self, x: usize, value: DeltaRational) {
        let diff = &value - &self.values[x];
        for &b in &self.cols[x] {
            let a = &self.rows[b].as_ref().unwrap()[&x];
            let d = diff.scale(a);
            self.values[b] += &d;
        }
        self.values[x] = value;
    }

    fn below_lower(&self, x: usize) -> bool {
        matches!(&self.lower[x], Some(l) if self.values[x] < l.value)
    }

    fn above_upper(&self, x: usize) -> bool {
        matches!(&self.upper[x], Some(u) if self.values[x] > u.value)
    }

    fn can_increase(&self, x: usize) -> bool {
        self.upper[x]
            .as_ref()
            .map_or(true, |u| self.values[x] < u.value)
    }

    fn can_decrease(&self, x: usize) -> bool {
        self.lower[x]
            .as_ref()
            .map_or(true, |l| self.values[x] > l.value)
    }

    /// Restores feasibility of all bounds or explains why that is impossible.
    pub fn check(&mut self) -> Result<(), Explanation> {
        let mut budget = match self.rule {
            PivotRule::Bland => 0,
            PivotRule::Sparse => HEURISTIC_PIVOTS,
        };
        loop {
            let bland = budget == 0;
            budget = budget.saturating_sub(1);
            let b = (0..self.values.len())
                .find(|&b| self.rows[b].is_some() && (self.below_lower(b) || self.above_upper(b)));
            let Some(b) = b else {
                return Ok(());
            };
            let row = self.rows[b].as_ref().unwrap();
            if self.below_lower(b) {
                let entering = self.choose(row, bland, |x, a| {
                    (a.is_positive() && self.can_increase(x))
                        || (a.is_negative() && self.can_decrease(x))
                });
                match entering {
                    Some((&x, _)) => {
                        let target = self.lower[b].as_ref().unwrap().value.clone();
                        self.pivot_and_update(b, x, target);
                    }
                    None => {
                        let mut entries = vec![(
                            self.lower[b].as_ref().unwrap().reason,
                            BoundKind::Lower,
                            Rat::one(),
                        )];
                        for (x, a) in row {
                            if a.is_positive() {
                                let u = self.upper[*x].as_ref().unwrap();
                                entries.push((u.reason, BoundKind::Upper, a.clone()));
                            } else {
                                let l = self.lower[*x].as_ref().unwrap();
                                entries.push((l.reason, BoundKind::Lower, -a));
                            }
                        }
                        return Err(Explanation { entries });
                    }
                }
            } else {
                let entering = self.choose(row, bland, |x, a| {
                    (a.is_negative() && self.can_increase(x))
                        || (a.is_positive() && self.can_decrease(x))
                });
                match entering {
                    Some((&x, _)) => {
                        let target = self.upper[b].as_ref().unwrap().value.clone();
                        self.pivot_and_update(b, x, target);
                    }
                    None => {
                        let mut entries = vec![(
                            self.upper[b].as_ref().unwrap().reason,
                            BoundKind::Upper,
                            Rat::one(),
                        )];
                        for (x, a) in row {
                            if a.is_positive() {
                                let l = self.lower[*x].as_ref().unwrap();
                                entries.push((l.reason, BoundKind::Lower, a.clone()));
                            } else {
                                let u = self.upper[*x].as_ref().unwrap();
                                entries.push((u.reason, BoundKind::Upper, -a));
                            }
                        }
                        return Err(Explanation { entries });
                    }
                }
            }
        }
    }

    /// The entering variable: the first eligible one under Bland's rule,
    /// otherwise the one occurring in the fewest rows.
    fn choose<'r>(
        &self,
        row: &'r BTreeMap<usize, Rat>,
        bland: bool,
        eligible: impl Fn(usize, &Rat) -> bool,
    ) -> Option<(&'r usize, &'r Rat)> {
        let mut it = row.iter().filter(|(x, a)| eligible(**x, a));
        if bland {
            it.next()
        } else {
            it.min_by_key(|(x, _)| self.cols[**x].len())
        }
    }

    fn pivot_and_update(&mut self, b: usize, x: usize, target: DeltaRational) {
        let a = self.rows[b].as_ref().unwrap()[&x].clone();
        let theta = (&target - &self.values[b]).scale(&a.recip());
        self.values[b] = target;
        self.values[x] += &theta;
        for &r in &self.cols[x] {
            if r != b {
                let c = &self.rows[r].as_ref().unwrap()[&x];
                let d = theta.scale(c);
                self.values[r] += &d;
            }
        }
        self.pivot(b, x);
    }

    /// Makes non-basic `x` basic in place of `b`.
    fn pivot(&mut self, b: usize, x: usize) {
        self.pivots += 1;
        let mut row_b = self.rows[b].take().unwrap();
        let a = row_b.remove(&x).unwrap();
        let inv = a.recip();
        let mut row_x: BTreeMap<usize, Rat> = BTreeMap::new();
        row_x.insert(b, inv.clone());
        for (k, c) in row_b {
            self.cols[k].remove(&b);
            row_x.insert(k, -(c * &inv));
        }
        let users: Vec<usize> = std::mem::take(&mut self.cols[x])
            .into_iter()
            .filter(|&r| r != b)
            .collect();
        for r in users {
            let row_r = self.rows[r].as_mut().unwrap();
            let c = row_r.remove(&x).unwrap();
            for (k, v) in &row_x {
                let e = row_r.entry(*k).or_insert_with(Rat::zero);
                *e += &c * v;
                if e.is_zero() {
                    row_r.remove(k);
                    self.cols[*k].remove(&r);
                } else {
                    self.cols[*k].insert(r);
                }
            }
        }
        for k in row_x.keys() {
            self.cols[*k].insert(x);
        }
        self.rows[x] = Some(row_x);
    }

    /// A positive `δ` small enough that every bound holds once each value
    /// `a + bδ` is read as a plain rational.
    pub fn concrete_delta(&self) -> Rat {
        let mut delta = Rat::one();
        for x in 0..self.values.len() {
            let v = &self.values[x];
            if let Some(l) = &self.lower[x] {
                // v ≥ l: need (l.inf - v.inf)·δ ≤ v.std - l.std
                tighten(&mut delta, &v.standard - &l.value.standard, &l.value.infinitesimal - &v.infinitesimal);
            }
            if let Some(u) = &self.upper[x] {
                tighten(&mut delta, &u.value.standard - &v.standard, &v.infinitesimal - &u.value.infinitesimal);
            }
        }
        delta
    }
}

fn tighten(delta: &mut Rat, slack: Rat, rate: Rat) {
    if rate.is_positive() && slack.is_positive() {
        let cap = slack / rate;
        if cap < *delta {
            *delta = cap;
        }
    }
}
