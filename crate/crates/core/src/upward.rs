//! Upward-closed sets of discrete markings, represented by their minimal
//! bases.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::net::{DiscreteMarking, PetriNet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("marking of dimension {found} in a set of dimension {expected}")]
pub struct DimensionError {
    pub expected: usize,
    pub found: usize,
}

/// A finite antichain of markings, sorted lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Basis {
    elements: Vec<DiscreteMarking>,
}

impl Basis {
    pub fn empty() -> Self {
        Basis::default()
    }

    pub fn elements(&self) -> &[DiscreteMarking] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DiscreteMarking> {
        self.elements.iter()
    }

    /// Whether `m` lies in the upward closure of the basis.
    pub fn member_up(&self, m: &DiscreteMarking) -> Result<bool, DimensionError> {
        if let Some(first) = self.elements.first() {
            check_dim(first.len(), m)?;
        }
        Ok(self.elements.iter().any(|v| v.le(m)))
    }

    /// No two distinct elements are comparable.
    pub fn is_antichain(&self) -> bool {
        self.elements.iter().enumerate().all(|(i, a)| {
            self.elements
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.le(b))
        })
    }
}

impl<'a> IntoIterator for &'a Basis {
    type Item = &'a DiscreteMarking;
    type IntoIter = std::slice::Iter<'a, DiscreteMarking>;
    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

fn check_dim(expected: usize, m: &DiscreteMarking) -> Result<(), DimensionError> {
    if m.len() == expected {
        Ok(())
    } else {
        Err(DimensionError {
            expected,
            found: m.len(),
        })
    }
}

/// Mutable antichain kept minimal on every insertion.
///
/// Elements are bucketed by sum-norm: `v ≤ m` implies `|v| ≤ |m|`, so a
/// dominance query only scans buckets on one side of `|m|`.
#[derive(Clone, Debug, Default)]
pub struct Antichain {
    dim: Option<usize>,
    buckets: BTreeMap<u64, Vec<DiscreteMarking>>,
    len: usize,
}

impl Antichain {
    pub fn new() -> Self {
        Antichain::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&mut self, m: &DiscreteMarking) -> Result<(), DimensionError> {
        match self.dim {
            Some(d) => check_dim(d, m),
            None => {
                self.dim = Some(m.len());
                Ok(())
            }
        }
    }

    /// Whether some element is `≤ m`.
    pub fn covers(&self, m: &DiscreteMarking) -> bool {
        self.buckets
            .range(..=m.sum())
            .any(|(_, b)| b.iter().any(|v| v.le(m)))
    }

    /// Inserts `m` unless it is already covered, evicting the elements it
    /// dominates. Returns whether `m` was added.
    pub fn insert(&mut self, m: DiscreteMarking) -> Result<bool, DimensionError> {
        self.check(&m)?;
        if self.covers(&m) {
            return Ok(false);
        }
        let s = m.sum();
        let mut removed = 0;
        for bucket in self.buckets.range_mut(s..).map(|(_, b)| b) {
            let before = bucket.len();
            bucket.retain(|v| !m.le(v));
            removed += before - bucket.len();
        }
        self.buckets.retain(|_, b| !b.is_empty());
        self.len -= removed;
        self.len += 1;
        self.buckets.entry(s).or_default().push(m);
        Ok(true)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DiscreteMarking> {
        self.buckets.values().flatten()
    }

    pub fn to_basis(&self) -> Basis {
        let mut elements: Vec<_> = self.iter().cloned().collect();
        elements.sort();
        Basis { elements }
    }
}

/// `Min(F)`: the minimal elements of a finite set of markings.
pub fn minimize<'a>(
    ms: impl IntoIterator<Item = &'a DiscreteMarking>,
) -> Result<Basis, DimensionError> {
    let mut sorted: Vec<&DiscreteMarking> = ms.into_iter().collect();
    if let Some(first) = sorted.first() {
        let d = first.len();
        for m in &sorted {
            check_dim(d, m)?;
        }
    }
    // Inserting in increasing sum-norm order never evicts.
    sorted.sort_by(|a, b| a.sum().cmp(&b.sum()).then_with(|| a.cmp(b)));
    let mut chain = Antichain::new();
    for m in sorted {
        chain.insert(m.clone())?;
    }
    Ok(chain.to_basis())
}

/// `m'_t(p) = max{Pre(p,t), m'(p) - C(p,t)}`: the least marking that covers
/// `m'` after firing `t` once.
pub fn predecessor(net: &PetriNet, target: &DiscreteMarking, t: crate::Transition) -> DiscreteMarking {
    let mut out = target.0.clone();
    for (p, c) in net.effect_column(t) {
        out[p] = (out[p] as i64 - c).max(0) as u64;
    }
    for &(p, w) in net.pre_column(t) {
        out[p] = out[p].max(w);
    }
    DiscreteMarking(out)
}

/// `pb(M)`: one-step predecessor basis of every element for every transition.
pub fn pre_basis<'a>(
    net: &PetriNet,
    basis: impl IntoIterator<Item = &'a DiscreteMarking>,
) -> BTreeSet<DiscreteMarking> {
    let mut out = BTreeSet::new();
    for m in basis {
        for t in net.transitions() {
            out.insert(predecessor(net, m, t));
        }
    }
    out
}
