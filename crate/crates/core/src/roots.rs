//! Bracketing root finder for continuous, strictly decreasing scalar functions.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of a bracketed solve.
#[derive(Clone, Debug)]
pub struct RootSolve<T> {
    pub root: T,
    /// `|f(root)|`
    pub residual: T,
    /// Successive brackets `(lo, hi)` visited by bisection.
    pub brackets: Vec<(T, T)>,
}

/// Finds the root of a strictly decreasing `f` on `[lo, hi]`.
///
/// Bisects until the bracket is narrower than `width`, then takes one secant
/// step through the final bracket and keeps it only if it lands inside the
/// bracket with a smaller residual.
pub fn decreasing_root<T: Real>(f: impl Fn(T) -> Result<T>, mut lo: T, mut hi: T, width: T) -> Result<RootSolve<T>> {
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if f_lo < T::zero() || f_hi > T::zero() {
        return Err(Error::Domain(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }
    let mut brackets = vec![(lo, hi)];
    for _ in 0..400 {
        if hi - lo <= width {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == T::zero() {
            return Ok(RootSolve {
                root: mid,
                residual: T::zero(),
                brackets,
            });
        }
        if f_mid > T::zero() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        brackets.push((lo, hi));
    }
    let (mut root, mut residual) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo.abs())
    } else {
        (hi, f_hi.abs())
    };
    if f_lo != f_hi {
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        if secant >= lo && secant <= hi {
            let f_sec = f(secant)?.abs();
            if f_sec < residual {
                root = secant;
                residual = f_sec;
            }
        }
    }
    Ok(RootSolve {
        root,
        residual,
        brackets,
    })
}

/// Root of a strictly decreasing `f` on `(0, inf)` with `f(0+) > 0`:
/// doubles an upper bracket from 1 until the sign changes.
pub fn decreasing_root_positive<T: Real>(f: impl Fn(T) -> Result<T>, width: T) -> Result<RootSolve<T>> {
    let mut hi = T::one();
    let mut doublings = 0;
    while f(hi)? > T::zero() {
        hi *= T::lit(2.0);
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoConvergence {
                what: "upper bracket search",
                iterations: doublings,
            });
        }
    }
    decreasing_root(f, T::zero(), hi, width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_log_root() {
        // 2 * 3^-t = 1
        let s = decreasing_root(|t: f64| Ok(2.0 * 3f64.powf(-t) - 1.0), 0.0, 1.0, 1e-14).unwrap();
        assert!((s.root - 2f64.ln() / 3f64.ln()).abs() < 1e-13);
        assert!(s.residual < 1e-13);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(decreasing_root(|t: f64| Ok(1.0 - t), 2.0, 3.0, 1e-10).is_err());
    }

    #[test]
    fn positive_bracket_expansion() {
        // 4 * 2^-t = 1  at t = 2
        let s = decreasing_root_positive(|t: f64| Ok(4.0 * 2f64.powf(-t) - 1.0), 1e-14).unwrap();
        assert!((s.root - 2.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let s = decreasing_root(|t: f32| Ok(0.5 - t), 0.0, 1.0, 1e-6).unwrap();
        assert!((s.root - 0.5).abs() < 1e-6);
    }
}
