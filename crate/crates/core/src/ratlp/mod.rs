//! Exact feasibility of linear systems over non-negative rationals.
//!
//! [`feasible`] answers with either a witness or a Farkas certificate, and
//! both kinds of answer are re-checked by [`check_certificate`] before they
//! are returned.

mod delta;
pub mod simplex;

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use delta::DeltaRational;
pub use simplex::{BoundKind, Explanation, PivotRule, Simplex};

use crate::{audit, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Ge,
    Gt,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        })
    }
}

/// `Σ coeff·x  rel  rhs`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) -> Self {
        Row {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        self.coeffs.iter().map(|(i, a)| a * &x[*i]).sum()
    }

    pub fn holds(&self, x: &[Rat]) -> bool {
        let lhs = self.eval(x);
        match self.relation {
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Gt => lhs > self.rhs,
        }
    }
}

/// Rows over variables `0..num_vars`, all of them implicitly `≥ 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearSystem {
    pub num_vars: usize,
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        LinearSystem {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) {
        self.rows.push(Row::new(coeffs, relation, rhs));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    /// A point satisfying every row.
    Witness(Vec<Rat>),
    /// One multiplier per row combining them into `0 ≥ c > 0` or `0 > 0`.
    Certificate(Vec<Rat>),
}

impl Feasibility {
    pub fn is_sat(&self) -> bool {
        matches!(self, Feasibility::Witness(_))
    }

    pub fn witness(&self) -> Option<&[Rat]> {
        match self {
            Feasibility::Witness(w) => Some(w),
            Feasibility::Certificate(_) => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row mentions variable {0} outside the system")]
    UnknownVariable(usize),
}

// Reason ids below `num_vars` name the non-negativity of a variable; the
// rest name rows.
fn row_reason(num_vars: usize, i: usize) -> usize {
    num_vars + i
}

/// Decides feasibility of `sys` exactly.
pub fn feasible(sys: &LinearSystem) -> Feasibility {
    feasible_with(sys, PivotRule::Bland)
}

pub fn feasible_with(sys: &LinearSystem, rule: PivotRule) -> Feasibility {
    let result = solve_unchecked(sys, rule);
    let ok = check_certificate(sys, &result).unwrap_or(false);
    audit::record(ok);
    debug_assert!(ok, "self-audit failed for {sys:?} -> {result:?}");
    result
}

fn solve_unchecked(sys: &LinearSystem, rule: PivotRule) -> Feasibility {
    let n = sys.num_vars;
    let mut simplex = Simplex::with_rule(rule);
    for j in 0..n {
        simplex.add_var();
        simplex
            .assert_lower(j, DeltaRational::zero(), j)
            .expect("fresh variable");
    }
    let mut clash = None;
    for (i, row) in sys.rows.iter().enumerate() {
        let s = simplex.add_row(&row.coeffs);
        let reason = row_reason(n, i);
        let rhs = DeltaRational::from_rat(row.rhs.clone());
        let r = match row.relation {
            Relation::Eq => simplex
                .assert_lower(s, rhs.clone(), reason)
                .and_then(|_| simplex.assert_upper(s, rhs, reason)),
            Relation::Ge => simplex.assert_lower(s, rhs, reason),
            Relation::Gt => simplex.assert_lower(
                s,
                DeltaRational::new(row.rhs.clone(), Rat::one()),
                reason,
            ),
        };
        if let Err(e) = r {
            clash = Some(e);
            break;
        }
    }
    let outcome = match clash {
        Some(e) => Err(e),
        None => simplex.check(),
    };
    match outcome {
        Ok(()) => {
            let delta = simplex.concrete_delta();
            Feasibility::Witness(
                (0..n)
                    .map(|j| simplex.value(j).concretize(&delta))
                    .collect(),
            )
        }
        Err(expl) => {
            let mut mult = vec![Rat::zero(); sys.rows.len()];
            for (reason, kind, c) in expl.entries {
                if reason < n {
                    continue;
                }
                let i = reason - n;
                match kind {
                    BoundKind::Lower => mult[i] += c,
                    BoundKind::Upper => mult[i] -= c,
                }
            }
            Feasibility::Certificate(mult)
        }
    }
}

/// Independently re-checks a witness by substitution, or a certificate as a
/// valid contradictory combination of rows and non-negativity.
pub fn check_certificate(sys: &LinearSystem, f: &Feasibility) -> Result<bool, LpError> {
    for row in &sys.rows {
        if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= sys.num_vars) {
            return Err(LpError::UnknownVariable(*j));
        }
    }
    match f {
        Feasibility::Witness(x) => {
            if x.len() != sys.num_vars {
                return Err(LpError::DimensionMismatch {
                    expected: sys.num_vars,
                    found: x.len(),
                });
            }
            Ok(x.iter().all(|v| !v.is_negative()) && sys.rows.iter().all(|r| r.holds(x)))
        }
        Feasibility::Certificate(mult) => {
            if mult.len() != sys.rows.len() {
                return Err(LpError::DimensionMismatch {
                    expected: sys.rows.len(),
                    found: mult.len(),
                });
            }
            let mut combined = vec![Rat::zero(); sys.num_vars];
            let mut rhs = Rat::zero();
            let mut strict = false;
            for (row, lambda) in sys.rows.iter().zip(mult) {
                if lambda.is_zero() {
                    continue;
                }
                if row.relation != Relation::Eq && lambda.is_negative() {
                    return Ok(false);
                }
                if row.relation == Relation::Gt {
                    strict = true;
                }
                for (j, a) in &row.coeffs {
                    combined[*j] += a * lambda;
                }
                rhs += &row.rhs * lambda;
            }
            // With x ≥ 0 and every combined coefficient ≤ 0 the left side is
            // at most zero, so it cannot reach a positive right side.
            if combined.iter().any(Signed::is_positive) {
                return Ok(false);
            }
            Ok(rhs.is_positive() || (strict && rhs.is_zero()))
        }
    }
}
