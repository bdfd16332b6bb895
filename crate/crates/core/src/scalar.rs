//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::{Product, Sum};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Product
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// A tolerance of `f64_tol`, floored at a small multiple of this type's
    /// machine epsilon so that `f32` callers get attainable targets.
    #[inline]
    fn tol(f64_tol: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(f64_tol).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_floors_at_epsilon() {
        assert_eq!(<f64 as Real>::tol(1e-3), 1e-3);
        assert!(<f32 as Real>::tol(1e-13) > 1e-6);
        assert!(<f64 as Real>::tol(1e-20) > 1e-15);
    }
}
