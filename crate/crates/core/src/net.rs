//! Petri nets and their discrete and continuous firing semantics.
//!
//! Places and transitions are dense indices into name tables. The arc
//! weights are stored column-wise: for each transition a sorted list of
//! `(place, weight)` pairs, with absent entries meaning weight zero.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::Rat;

/// Index of a place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Place(pub usize);

/// Index of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Transition(pub usize);

/// A node of the net graph, used where a set may hold either kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Place(Place),
    Transition(Transition),
}

/// Which neighbourhood [`PetriNet::adjacency`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `•X`
    Pre,
    /// `X•`
    Post,
    /// `•X•`
    Both,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("unknown place index {0}")]
    UnknownPlace(usize),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("firing amount {amount} for `{transition}` outside [0, {degree}]")]
    AmountOutOfRange {
        transition: String,
        amount: String,
        degree: String,
    },
    #[error("marking has {found} entries, net has {expected} places")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("node set mixes places and transitions")]
    MixedNodeKinds,
    #[error("negative entry in marking")]
    NegativeMarking,
}

/// A Petri net `(P, T, Pre, Post)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    place_names: Vec<String>,
    transition_names: Vec<String>,
    // Per transition: sorted (place, weight) with weight > 0.
    pre: Vec<Vec<(usize, u64)>>,
    post: Vec<Vec<(usize, u64)>>,
    // Per place: transitions consuming from it (p•) / producing into it (•p).
    consumers: Vec<Vec<usize>>,
    producers: Vec<Vec<usize>>,
}

/// Incrementally assembles a [`PetriNet`].
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    place_names: Vec<String>,
    transition_names: Vec<String>,
    pre: Vec<std::collections::BTreeMap<usize, u64>>,
    post: Vec<std::collections::BTreeMap<usize, u64>>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> Place {
        self.place_names.push(name.into());
        Place(self.place_names.len() - 1)
    }

    pub fn add_transition(&mut self, name: impl Into<String>) -> Transition {
        self.transition_names.push(name.into());
        self.pre.push(Default::default());
        self.post.push(Default::default());
        Transition(self.transition_names.len() - 1)
    }

    /// Sets `Pre(p, t)`; a zero weight removes the arc.
    pub fn set_pre(&mut self, p: Place, t: Transition, weight: u64) -> &mut Self {
        Self::set(&mut self.pre[t.0], p, weight);
        self
    }

    /// Sets `Post(p, t)`; a zero weight removes the arc.
    pub fn set_post(&mut self, p: Place, t: Transition, weight: u64) -> &mut Self {
        Self::set(&mut self.post[t.0], p, weight);
        self
    }

    fn set(col: &mut std::collections::BTreeMap<usize, u64>, p: Place, weight: u64) {
        if weight == 0 {
            col.remove(&p.0);
        } else {
            col.insert(p.0, weight);
        }
    }

    pub fn build(self) -> Result<PetriNet, NetError> {
        let mut seen = std::collections::HashSet::new();
        for name in self.place_names.iter().chain(&self.transition_names) {
            if !seen.insert(name.as_str()) {
                return Err(NetError::DuplicateName(name.clone()));
            }
        }
        let n = self.place_names.len();
        for col in self.pre.iter().chain(&self.post) {
            if let Some((&p, _)) = col.iter().next_back() {
                if p >= n {
                    return Err(NetError::UnknownPlace(p));
                }
            }
        }
        let pre = self.pre.into_iter().map(|c| c.into_iter().collect()).collect();
        let post = self.post.into_iter().map(|c| c.into_iter().collect()).collect();
        Ok(PetriNet::from_columns(
            self.place_names,
            self.transition_names,
            pre,
            post,
        ))
    }
}

impl PetriNet {
    fn from_columns(
        place_names: Vec<String>,
        transition_names: Vec<String>,
        pre: Vec<Vec<(usize, u64)>>,
        post: Vec<Vec<(usize, u64)>>,
    ) -> Self {
        let n = place_names.len();
        let mut consumers = vec![Vec::new(); n];
        let mut producers = vec![Vec::new(); n];
        for (t, col) in pre.iter().enumerate() {
            for &(p, _) in col {
                consumers[p].push(t);
            }
        }
        for (t, col) in post.iter().enumerate() {
            for &(p, _) in col {
                producers[p].push(t);
            }
        }
        PetriNet {
            place_names,
            transition_names,
            pre,
            post,
            consumers,
            producers,
        }
    }

    pub fn num_places(&self) -> usize {
        self.place_names.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transition_names.len()
    }

    pub fn places(&self) -> impl Iterator<Item = Place> + '_ {
        (0..self.num_places()).map(Place)
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..self.num_transitions()).map(Transition)
    }

    pub fn place_name(&self, p: Place) -> &str {
        &self.place_names[p.0]
    }

    pub fn transition_name(&self, t: Transition) -> &str {
        &self.transition_names[t.0]
    }

    pub fn place_names(&self) -> &[String] {
        &self.place_names
    }

    pub fn transition_names(&self) -> &[String] {
        &self.transition_names
    }

    pub fn place_by_name(&self, name: &str) -> Option<Place> {
        self.place_names.iter().position(|n| n == name).map(Place)
    }

    pub fn transition_by_name(&self, name: &str) -> Option<Transition> {
        self.transition_names
            .iter()
            .position(|n| n == name)
            .map(Transition)
    }

    pub fn check_transition(&self, t: Transition) -> Result<(), NetError> {
        if t.0 < self.num_transitions() {
            Ok(())
        } else {
            Err(NetError::UnknownTransition(t.0))
        }
    }

    /// Non-zero `Pre(·, t)` entries, sorted by place.
    pub fn pre_column(&self, t: Transition) -> &[(usize, u64)] {
        &self.pre[t.0]
    }

    /// Non-zero `Post(·, t)` entries, sorted by place.
    pub fn post_column(&self, t: Transition) -> &[(usize, u64)] {
        &self.post[t.0]
    }

    pub fn pre(&self, p: Place, t: Transition) -> u64 {
        lookup(&self.pre[t.0], p.0)
    }

    pub fn post(&self, p: Place, t: Transition) -> u64 {
        lookup(&self.post[t.0], p.0)
    }

    /// `C(p, t) = Post(p, t) - Pre(p, t)`.
    pub fn effect(&self, p: Place, t: Transition) -> i64 {
        self.post(p, t) as i64 - self.pre(p, t) as i64
    }

    /// Non-zero entries of column `t` of the incidence matrix, sorted by place.
    pub fn effect_column(&self, t: Transition) -> Vec<(usize, i64)> {
        let (pre, post) = (&self.pre[t.0], &self.post[t.0]);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(pre.len() + post.len());
        while i < pre.len() || j < post.len() {
            let a = pre.get(i).map_or(usize::MAX, |e| e.0);
            let b = post.get(j).map_or(usize::MAX, |e| e.0);
            let (p, c) = if a < b {
                i += 1;
                (a, -(pre[i - 1].1 as i64))
            } else if b < a {
                j += 1;
                (b, post[j - 1].1 as i64)
            } else {
                i += 1;
                j += 1;
                (a, post[j - 1].1 as i64 - pre[i - 1].1 as i64)
            };
            if c != 0 {
                out.push((p, c));
            }
        }
        out
    }

    /// Dense incidence matrix indexed `[place][transition]`.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        let mut c = vec![vec![0i64; self.num_transitions()]; self.num_places()];
        for t in self.transitions() {
            for (p, v) in self.effect_column(t) {
                c[p][t.0] = v;
            }
        }
        c
    }

    /// Number of non-zero entries of `Pre` plus those of `Post`.
    pub fn arc_count(&self) -> usize {
        self.pre.iter().chain(&self.post).map(Vec::len).sum()
    }

    /// `p•`: transitions consuming from `p`.
    pub fn consumers(&self, p: Place) -> impl Iterator<Item = Transition> + '_ {
        self.consumers[p.0].iter().map(|&t| Transition(t))
    }

    /// `•p`: transitions producing into `p`.
    pub fn producers(&self, p: Place) -> impl Iterator<Item = Transition> + '_ {
        self.producers[p.0].iter().map(|&t| Transition(t))
    }

    /// `•t`
    pub fn preset(&self, t: Transition) -> impl Iterator<Item = Place> + '_ {
        self.pre[t.0].iter().map(|&(p, _)| Place(p))
    }

    /// `t•`
    pub fn postset(&self, t: Transition) -> impl Iterator<Item = Place> + '_ {
        self.post[t.0].iter().map(|&(p, _)| Place(p))
    }

    /// The reverse net, with `Pre` and `Post` swapped.
    pub fn reverse(&self) -> PetriNet {
        PetriNet {
            place_names: self.place_names.clone(),
            transition_names: self.transition_names.clone(),
            pre: self.post.clone(),
            post: self.pre.clone(),
            consumers: self.producers.clone(),
            producers: self.consumers.clone(),
        }
    }

    /// Lifted neighbourhood `•X`, `X•` or `•X•` of a homogeneous node set.
    pub fn adjacency(&self, nodes: &[Node], side: Side) -> Result<BTreeSet<Node>, NetError> {
        let mut out = BTreeSet::new();
        let kinds: BTreeSet<bool> = nodes.iter().map(|n| matches!(n, Node::Place(_))).collect();
        if kinds.len() > 1 {
            return Err(NetError::MixedNodeKinds);
        }
        let (want_pre, want_post) = match side {
            Side::Pre => (true, false),
            Side::Post => (false, true),
            Side::Both => (true, true),
        };
        for node in nodes {
            match *node {
                Node::Place(p) => {
                    if p.0 >= self.num_places() {
                        return Err(NetError::UnknownPlace(p.0));
                    }
                    if want_pre {
                        out.extend(self.producers(p).map(Node::Transition));
                    }
                    if want_post {
                        out.extend(self.consumers(p).map(Node::Transition));
                    }
                }
                Node::Transition(t) => {
                    self.check_transition(t)?;
                    if want_pre {
                        out.extend(self.preset(t).map(Node::Place));
                    }
                    if want_post {
                        out.extend(self.postset(t).map(Node::Place));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `•S•` for a transition set, sorted.
    pub fn neighbourhood(&self, transitions: &BTreeSet<Transition>) -> BTreeSet<Place> {
        transitions
            .iter()
            .flat_map(|&t| self.preset(t).chain(self.postset(t)))
            .collect()
    }

    /// The sub-net `N_S` over places `•S•` and transitions `S`.
    pub fn subnet(&self, transitions: &BTreeSet<Transition>) -> Result<SubNet, NetError> {
        for &t in transitions {
            self.check_transition(t)?;
        }
        let places: Vec<Place> = self.neighbourhood(transitions).into_iter().collect();
        let mut index = vec![usize::MAX; self.num_places()];
        for (i, p) in places.iter().enumerate() {
            index[p.0] = i;
        }
        let remap = |col: &Vec<(usize, u64)>| -> Vec<(usize, u64)> {
            col.iter().map(|&(p, w)| (index[p], w)).collect()
        };
        let transitions: Vec<Transition> = transitions.iter().copied().collect();
        let net = PetriNet::from_columns(
            places.iter().map(|&p| self.place_names[p.0].clone()).collect(),
            transitions
                .iter()
                .map(|&t| self.transition_names[t.0].clone())
                .collect(),
            transitions.iter().map(|&t| remap(&self.pre[t.0])).collect(),
            transitions.iter().map(|&t| remap(&self.post[t.0])).collect(),
        );
        Ok(SubNet {
            net,
            places,
            transitions,
        })
    }

    fn check_len(&self, len: usize) -> Result<(), NetError> {
        if len == self.num_places() {
            Ok(())
        } else {
            Err(NetError::DimensionMismatch {
                expected: self.num_places(),
                found: len,
            })
        }
    }

    pub fn is_enabled(&self, m: &DiscreteMarking, t: Transition) -> bool {
        self.pre[t.0].iter().all(|&(p, w)| m.0[p] >= w)
    }

    /// Fires `t` once under the discrete semantics.
    pub fn fire_discrete(
        &self,
        m: &DiscreteMarking,
        t: Transition,
    ) -> Result<DiscreteMarking, NetError> {
        self.check_transition(t)?;
        self.check_len(m.len())?;
        if !self.is_enabled(m, t) {
            return Err(NetError::NotEnabled(self.transition_name(t).to_string()));
        }
        let mut next = m.0.clone();
        for &(p, w) in &self.pre[t.0] {
            next[p] -= w;
        }
        for &(p, w) in &self.post[t.0] {
            next[p] += w;
        }
        Ok(DiscreteMarking(next))
    }

    /// `min { m(p) / Pre(p,t) : p ∈ •t }`, infinite for an empty pre-set.
    pub fn enabling_degree(
        &self,
        m: &RationalMarking,
        t: Transition,
    ) -> Result<Degree, NetError> {
        self.check_transition(t)?;
        self.check_len(m.len())?;
        Ok(self.pre[t.0]
            .iter()
            .map(|&(p, w)| &m.0[p] / Rat::from_integer(w.into()))
            .min()
            .map_or(Degree::Infinite, Degree::Finite))
    }

    /// Fires `t` by the rational amount `q` under the continuous semantics.
    pub fn fire_continuous(
        &self,
        m: &RationalMarking,
        t: Transition,
        q: &Rat,
    ) -> Result<RationalMarking, NetError> {
        let degree = self.enabling_degree(m, t)?;
        if q.is_negative() || !degree.admits(q) {
            return Err(NetError::AmountOutOfRange {
                transition: self.transition_name(t).to_string(),
                amount: q.to_string(),
                degree: degree.to_string(),
            });
        }
        let mut next = m.0.clone();
        for (p, c) in self.effect_column(t) {
            next[p] += q * Rat::from_integer(c.into());
        }
        Ok(RationalMarking(next))
    }

    /// `m0 + C·x` for a rational Parikh vector `x`.
    pub fn apply_parikh(&self, m0: &RationalMarking, x: &[Rat]) -> RationalMarking {
        let mut out = m0.0.clone();
        for t in self.transitions() {
            if x[t.0].is_zero() {
                continue;
            }
            for (p, c) in self.effect_column(t) {
                out[p] += &x[t.0] * Rat::from_integer(c.into());
            }
        }
        RationalMarking(out)
    }
}

fn lookup(col: &[(usize, u64)], p: usize) -> u64 {
    col.binary_search_by_key(&p, |e| e.0)
        .map_or(0, |i| col[i].1)
}

/// A sub-net together with the original indices of its nodes.
#[derive(Clone, Debug)]
pub struct SubNet {
    pub net: PetriNet,
    /// `places[i]` is the original index of the sub-net's place `i`.
    pub places: Vec<Place>,
    /// `transitions[i]` is the original index of the sub-net's transition `i`.
    pub transitions: Vec<Transition>,
}

impl SubNet {
    pub fn restrict(&self, m: &RationalMarking) -> RationalMarking {
        RationalMarking(self.places.iter().map(|p| m.0[p.0].clone()).collect())
    }

    pub fn lift_transitions<'a>(
        &'a self,
        set: impl IntoIterator<Item = Transition> + 'a,
    ) -> impl Iterator<Item = Transition> + 'a {
        set.into_iter().map(move |t| self.transitions[t.0])
    }
}

/// Enabling degree of a transition under the continuous semantics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    Finite(Rat),
    Infinite,
}

impl Degree {
    pub fn admits(&self, q: &Rat) -> bool {
        match self {
            Degree::Finite(d) => q <= d,
            Degree::Infinite => true,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Degree::Finite(d) => d.is_positive(),
            Degree::Infinite => true,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::Finite(d) => write!(f, "{d}"),
            Degree::Infinite => f.write_str("inf"),
        }
    }
}

/// A marking over the naturals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct DiscreteMarking(pub Vec<u64>);

impl DiscreteMarking {
    pub fn zero(n: usize) -> Self {
        DiscreteMarking(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &DiscreteMarking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn to_rational(&self) -> RationalMarking {
        RationalMarking(
            self.0
                .iter()
                .map(|&v| Rat::from_integer(v.into()))
                .collect(),
        )
    }
}

impl fmt::Display for DiscreteMarking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A marking over the non-negative rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMarking(pub Vec<Rat>);

impl RationalMarking {
    pub fn new(entries: Vec<Rat>) -> Result<Self, NetError> {
        if entries.iter().any(Signed::is_negative) {
            return Err(NetError::NegativeMarking);
        }
        Ok(RationalMarking(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `⟦m⟧`
    pub fn support(&self) -> BTreeSet<Place> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_positive())
            .map(|(p, _)| Place(p))
            .collect()
    }
}

impl From<&DiscreteMarking> for RationalMarking {
    fn from(m: &DiscreteMarking) -> Self {
        m.to_rational()
    }
}

/// A sequence of continuous firings `q1 t1 ... qk tk`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiringSequence {
    pub steps: Vec<(Rat, Transition)>,
}

impl FiringSequence {
    pub fn new(steps: Vec<(Rat, Transition)>) -> Self {
        FiringSequence { steps }
    }

    /// Q-Parikh image over the net's transitions.
    pub fn parikh(&self, num_transitions: usize) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); num_transitions];
        for (q, t) in &self.steps {
            out[t.0] += q;
        }
        out
    }

    /// Replays the sequence from `start`, checking every step.
    pub fn replay(
        &self,
        net: &PetriNet,
        start: &RationalMarking,
    ) -> Result<RationalMarking, NetError> {
        let mut m = start.clone();
        for (q, t) in &self.steps {
            if !q.is_positive() {
                return Err(NetError::AmountOutOfRange {
                    transition: net.transition_name(*t).to_string(),
                    amount: q.to_string(),
                    degree: "positive".into(),
                });
            }
            m = net.fire_continuous(&m, *t, q)?;
        }
        Ok(m)
    }
}

/// `⟦x⟧` of a vector indexed by transitions.
pub fn support(x: &[Rat]) -> BTreeSet<Transition> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.is_positive())
        .map(|(t, _)| Transition(t))
        .collect()
}
