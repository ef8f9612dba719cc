use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_traits::Zero;

use crate::Rat;

/// `standard + infinitesimal·δ` for a symbolic positive `δ`.
///
/// Ordered lexicographically, which is how strict bounds `x > c` become the
/// non-strict `x ≥ c + δ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DeltaRational {
    pub standard: Rat,
    pub infinitesimal: Rat,
}

impl DeltaRational {
    pub fn new(standard: Rat, infinitesimal: Rat) -> Self {
        DeltaRational {
            standard,
            infinitesimal,
        }
    }

    pub fn from_rat(standard: Rat) -> Self {
        DeltaRational {
            standard,
            infinitesimal: Rat::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Value for a concrete choice of `δ`.
    pub fn concretize(&self, delta: &Rat) -> Rat {
        &self.standard + &self.infinitesimal * delta
    }

    pub fn scale(&self, k: &Rat) -> Self {
        DeltaRational {
            standard: &self.standard * k,
            infinitesimal: &self.infinitesimal * k,
        }
    }
}

impl Ord for DeltaRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.standard
            .cmp(&other.standard)
            .then_with(|| self.infinitesimal.cmp(&other.infinitesimal))
    }
}

impl PartialOrd for DeltaRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &DeltaRational {
    type Output = DeltaRational;
    fn add(self, rhs: &DeltaRational) -> DeltaRational {
        DeltaRational {
            standard: &self.standard + &rhs.standard,
            infinitesimal: &self.infinitesimal + &rhs.infinitesimal,
        }
    }
}

impl Sub for &DeltaRational {
    type Output = DeltaRational;
    fn sub(self, rhs: &DeltaRational) -> DeltaRational {
        DeltaRational {
            standard: &self.standard - &rhs.standard,
            infinitesimal: &self.infinitesimal - &rhs.infinitesimal,
        }
    }
}

impl AddAssign<&DeltaRational> for DeltaRational {
    fn add_assign(&mut self, rhs: &DeltaRational) {
        self.standard += &rhs.standard;
        self.infinitesimal += &rhs.infinitesimal;
    }
}

impl Mul<&Rat> for &DeltaRational {
    type Output = DeltaRational;
    fn mul(self, k: &Rat) -> DeltaRational {
        self.scale(k)
    }
}

impl fmt::Display for DeltaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.infinitesimal.is_zero() {
            write!(f, "{}", self.standard)
        } else {
            write!(f, "{}+{}d", self.standard, self.infinitesimal)
        }
    }
}
