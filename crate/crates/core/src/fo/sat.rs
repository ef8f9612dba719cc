//! A small conflict-driven clause-learning SAT solver with a theory hook.
//!
//! Literals assigned true are forwarded to a [`Theory`] in trail order, one
//! theory scope per decision level; the theory may answer with a conflict
//! clause, which is analysed exactly like a falsified input clause. Search is
//! deterministic: activity-based branching with ties broken by variable
//! index, saved phases starting at `false`, and geometric restarts.

use std::ops::Not;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit(((var as u32) << 1) | (!positive) as u32)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

pub trait Theory {
    /// Called once for every assigned literal. A conflict is reported as a
    /// clause whose literals are all currently false.
    fn assign(&mut self, lit: Lit) -> Result<(), Vec<Lit>>;
    /// Consistency check of everything assigned so far.
    fn check(&mut self) -> Result<(), Vec<Lit>>;
    fn push(&mut self);
    fn pop(&mut self, levels: usize);
}

/// The empty theory.
pub struct NoTheory;

impl Theory for NoTheory {
    fn assign(&mut self, _: Lit) -> Result<(), Vec<Lit>> {
        Ok(())
    }
    fn check(&mut self) -> Result<(), Vec<Lit>> {
        Ok(())
    }
    fn push(&mut self) {}
    fn pop(&mut self, _: usize) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Interrupted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SatStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub theory_conflicts: u64,
    pub restarts: u64,
    pub learned: u64,
}

#[derive(Default)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    activity: Vec<f64>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    theory_head: usize,
    var_inc: f64,
    unsat: bool,
    pub stats: SatStats,
}

const STOP_POLL: u64 = 64;

impl Solver {
    pub fn new() -> Self {
        Solver {
            var_inc: 1.0,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.value.len()
    }

    pub fn new_var(&mut self) -> usize {
        let v = self.value.len();
        self.value.push(0);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    /// Truth value of `var` in the current assignment.
    pub fn value(&self, var: usize) -> Option<bool> {
        match self.value[var] {
            0 => None,
            v => Some(v > 0),
        }
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.var()];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    /// Adds a permanent clause. Must be called with no decision pending,
    /// i.e. before `solve` or after [`Solver::reset`].
    pub fn add_clause(&mut self, lits: &[Lit]) {
        assert_eq!(self.decision_level(), 0, "clauses are added at the root");
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.lit_value(l) {
                1 => return,
                -1 => {}
                _ => {
                    if c.contains(&!l) {
                        return;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => self.unsat = true,
            1 => self.enqueue(c[0], None),
            _ => {
                self.attach(c);
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let cref = self.clauses.len();
        self.watches[c[0].code()].push(cref);
        self.watches[c[1].code()].push(cref);
        self.clauses.push(c);
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        debug_assert_eq!(self.value[v], 0);
        self.value[v] = if l.is_positive() { 1 } else { -1 };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn new_level(&mut self, theory: &mut dyn Theory) {
        self.trail_lim.push(self.trail.len());
        theory.push();
    }

    fn backtrack(&mut self, level: usize, theory: &mut dyn Theory) {
        let cur = self.decision_level();
        if cur <= level {
            return;
        }
        let keep = self.trail_lim[level];
        for &l in &self.trail[keep..] {
            let v = l.var();
            self.phase[v] = l.is_positive();
            self.value[v] = 0;
            self.reason[v] = None;
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(level);
        self.qhead = keep;
        self.theory_head = self.theory_head.min(keep);
        theory.pop(cur - level);
    }

    /// Undoes every decision, keeping learned clauses.
    pub fn reset(&mut self, theory: &mut dyn Theory) {
        self.backtrack(0, theory);
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cref = ws[i];
                i += 1;
                {
                    let c = &mut self.clauses[cref];
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cref][0];
                if self.lit_value(first) == 1 {
                    ws[j] = cref;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref][k];
                    if self.lit_value(l) != -1 {
                        self.clauses[cref].swap(1, k);
                        self.watches[l.code()].push(cref);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cref;
                j += 1;
                if self.lit_value(first) == -1 {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn propagate_all(&mut self, theory: &mut dyn Theory) -> Option<Vec<Lit>> {
        if let Some(cref) = self.propagate() {
            return Some(self.clauses[cref].clone());
        }
        while self.theory_head < self.trail.len() {
            let l = self.trail[self.theory_head];
            self.theory_head += 1;
            if let Err(c) = theory.assign(l) {
                self.stats.theory_conflicts += 1;
                return Some(c);
            }
        }
        if let Err(c) = theory.check() {
            self.stats.theory_conflicts += 1;
            return Some(c);
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    /// First-UIP analysis of a conflict whose literals are all false and at
    /// least one of which sits at the current level.
    fn analyze(&mut self, conflict: &[Lit]) -> (Vec<Lit>, usize) {
        let cur = self.decision_level() as u32;
        let mut learnt = vec![Lit(0)];
        let mut counter = 0usize;
        let mut idx = self.trail.len();
        let mut lits: Vec<Lit> = conflict.to_vec();
        let mut pivot: Option<Lit> = None;
        loop {
            for &q in &lits {
                if pivot == Some(q) {
                    continue;
                }
                let v = q.var();
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.bump(v);
                if self.level[v] == cur {
                    counter += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let p = self.trail[idx];
            self.seen[p.var()] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = !p;
                break;
            }
            let r = self.reason[p.var()].expect("implied literal has a reason");
            lits = self.clauses[r].clone();
            pivot = Some(p);
        }
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut bt = 0;
        let mut at = 1;
        for (i, l) in learnt.iter().enumerate().skip(1) {
            let lv = self.level[l.var()] as usize;
            if lv > bt {
                bt = lv;
                at = i;
            }
        }
        if learnt.len() > 1 {
            learnt.swap(1, at);
        }
        (learnt, bt)
    }

    fn pick_branch(&self) -> Option<Lit> {
        let mut best: Option<usize> = None;
        for v in 0..self.value.len() {
            if self.value[v] == 0 && best.map_or(true, |b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best.map(|v| Lit::new(v, self.phase[v]))
    }

    /// Searches for an assignment extending `assumptions`. On `Sat` the
    /// assignment stays in place until [`Solver::reset`]; otherwise the
    /// solver is back at the root.
    pub fn solve(
        &mut self,
        assumptions: &[Lit],
        theory: &mut dyn Theory,
        stop: &dyn Fn() -> bool,
    ) -> SatResult {
        self.reset(theory);
        if self.unsat {
            return SatResult::Unsat;
        }
        let mut restart_limit = 100.0f64;
        let mut since_restart = 0u64;
        let mut polls = 0u64;
        loop {
            if let Some(conflict) = self.propagate_all(theory) {
                self.stats.conflicts += 1;
                since_restart += 1;
                let max_level = conflict
                    .iter()
                    .map(|l| self.level[l.var()] as usize)
                    .max()
                    .unwrap_or(0);
                if conflict.is_empty() || max_level == 0 {
                    self.reset(theory);
                    self.unsat = true;
                    return SatResult::Unsat;
                }
                if max_level < self.decision_level() {
                    self.backtrack(max_level, theory);
                }
                let (learnt, bt) = self.analyze(&conflict);
                self.backtrack(bt, theory);
                self.stats.learned += 1;
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                if since_restart as f64 >= restart_limit {
                    since_restart = 0;
                    restart_limit *= 1.5;
                    self.stats.restarts += 1;
                    self.backtrack(0, theory);
                }
                continue;
            }
            polls += 1;
            if polls % STOP_POLL == 1 && stop() {
                self.reset(theory);
                return SatResult::Interrupted;
            }
            let dl = self.decision_level();
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.lit_value(a) {
                    1 => self.new_level(theory),
                    -1 => {
                        self.reset(theory);
                        return SatResult::Unsat;
                    }
                    _ => {
                        self.new_level(theory);
                        self.enqueue(a, None);
                    }
                }
                continue;
            }
            match self.pick_branch() {
                None => return SatResult::Sat,
                Some(l) => {
                    self.stats.decisions += 1;
                    self.new_level(theory);
                    self.enqueue(l, None);
                }
            }
        }
    }
}
