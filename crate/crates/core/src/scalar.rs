//! Scalar abstraction for edit costs.

use std::fmt::Debug;

use num_traits::{Num, NumCast, ToPrimitive};

/// Numeric type an edit distance can be accumulated in.
///
/// Integer instantiations give exact arithmetic (unit-cost oracles),
/// floating point ones allow fractional confusability weights.
pub trait Cost: Copy + PartialOrd + Debug + Num + NumCast + ToPrimitive + Send + Sync + 'static {
    fn is_valid_weight(self) -> bool {
        self >= Self::zero() && self.to_f64().is_some_and(f64::is_finite)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Cost for T where T: Copy + PartialOrd + Debug + Num + NumCast + ToPrimitive + Send + Sync + 'static {}

/// Smaller of two partially ordered costs; `a` on ties.
pub(crate) fn min_cost<C: Cost>(a: C, b: C) -> C {
    if b < a {
        b
    } else {
        a
    }
}
