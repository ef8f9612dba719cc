//! Coverability checking for Petri nets.
//!
//! The crate decides whether a target marking is coverable from an initial
//! marking. The main procedure is a backward search over upward-closed sets
//! whose new basis elements are discarded as soon as they are shown not to be
//! coverable under the continuous (rational) semantics, which over-approximates
//! the discrete one. Continuous reachability is decided both by a polynomial
//! fixed-point algorithm ([`qreach`]) and by an existential linear arithmetic
//! encoding with an exact, self-contained solver ([`fo`]).

pub mod audit;
pub mod cli;
pub mod covercheck;
pub mod fo;
pub mod gen;
pub mod instance;
pub mod mist;
pub mod net;
pub mod oracle;
pub mod qreach;
pub mod ratlp;
pub mod structural;
pub mod upward;

pub use instance::{Format, Instance};
pub use net::{DiscreteMarking, PetriNet, Place, RationalMarking, Transition};

/// Exact rational numbers used throughout the continuous semantics.
pub type Rat = num_rational::BigRational;

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Shorthand for the integer `n` as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Crate version reported in benchmark output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serializes rationals as strings such as `"3/2"`, for JSON reports.
#[doc(hidden)]
pub fn ser_rats<S: serde::Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}
