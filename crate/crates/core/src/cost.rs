//! Cost arithmetic with an absorbing infinity.
//!
//! Costs are stored as `f64` so fractional weights (`w = 1.5`) stay exact
//! for the magnitudes used here; integer inputs stay integral under `+`, `-`
//! and `min`/`max`. Infinity absorbs addition and subtraction, so a threshold
//! derived from an infinite pruning quantity stays infinite.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cost(f64);

impl Cost {
    pub const ZERO: Cost = Cost(0.0);
    pub const INFINITY: Cost = Cost(f64::INFINITY);

    /// Panics on NaN; every other value (including negative thresholds) is accepted.
    pub fn new(value: f64) -> Cost {
        assert!(!value.is_nan(), "cost must not be NaN");
        Cost(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Multiplication by a non-negative factor; `∞ · x = ∞` for every `x`.
    pub fn scale(self, factor: f64) -> Cost {
        debug_assert!(factor >= 0.0);
        if self.is_infinite() {
            Cost::INFINITY
        } else {
            Cost(self.0 * factor)
        }
    }

    pub fn min(self, other: Cost) -> Cost {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Cost) -> Cost {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn floor(self) -> Cost {
        if self.is_finite() {
            Cost(self.0.floor())
        } else {
            self
        }
    }
}

impl From<u32> for Cost {
    fn from(v: u32) -> Self {
        Cost(v as f64)
    }
}

impl From<i32> for Cost {
    fn from(v: i32) -> Self {
        Cost(v as f64)
    }
}

impl From<u64> for Cost {
    fn from(v: u64) -> Self {
        Cost(v as f64)
    }
}

impl PartialEq for Cost {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for Cost {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // -0.0 and 0.0 compare equal under `total_cmp` only if normalized
        (self.0 + 0.0).to_bits().hash(state)
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        if self.is_infinite() || rhs.is_infinite() {
            Cost::INFINITY
        } else {
            Cost(self.0 + rhs.0)
        }
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        *self = *self + rhs;
    }
}

impl Sub for Cost {
    type Output = Cost;

    /// `∞ - x = ∞` for all `x`, including `x = ∞`.
    fn sub(self, rhs: Cost) -> Cost {
        if self.is_infinite() {
            Cost::INFINITY
        } else {
            Cost(self.0 - rhs.0)
        }
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, |acc, c| acc + c)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
