//! Weight matrices `[(p_ij b_ij^r)^t]`, their Perron roots, and the
//! dimension bounds obtained by solving `radius(t) = 1`.
//!
//! With `b = s` the root gives the upper bound `k_r`, with `b = c` the
//! lower bound `l_r`; in both cases the bound is `r t / (1 - t)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::rifs::{derived_constants, RifsSpec};
use crate::roots::{decreasing_root, RootSolve};
use crate::scalar::Real;
use crate::symbolic::{enumerate_words, is_admissible, word_count};

/// Which bi-Lipschitz bound feeds the weight matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Upper contraction bounds `s_ij`; yields `k_r`.
    Upper,
    /// Lower contraction bounds `c_ij`; yields `l_r`.
    Lower,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        })
    }
}

/// Entry `(i,j)` is `(p_ij b_ij^r)^t` on admissible edges and 0 elsewhere,
/// including at `t = 0`.
pub fn build_weight_matrix<T: Real>(spec: &RifsSpec<T>, r: T, t: T, side: Side) -> SquareMatrix<T> {
    let mut m = SquareMatrix::zeros(spec.n());
    for (i, j, e) in spec.edges() {
        let b = match side {
            Side::Upper => e.s,
            Side::Lower => e.c,
        };
        m.set(i, j, (spec.p(i, j) * b.powf(r)).powf(t));
    }
    m
}

const MAX_POWER_STEPS: usize = 200_000;

/// Perron root of a nonnegative irreducible matrix.
///
/// Runs power iteration on the primitive shift `M + I` and stops once the
/// Collatz-Wielandt bracket `min_i (Bx)_i/x_i <= rho(B) <= max_i (Bx)_i/x_i`
/// is tight; the result is `rho(M + I) - 1`.
pub fn spectral_radius<T: Real>(m: &SquareMatrix<T>) -> Result<T> {
    if !m.is_nonnegative() {
        return Err(Error::Precondition("matrix has a negative entry".into()));
    }
    if !m.support().is_strongly_connected() {
        return Err(Error::Precondition("matrix support is reducible".into()));
    }
    let b = m.add_identity();
    let n = m.n();
    let rel = T::tol(1e-15);
    let noise = T::epsilon() * T::lit(8.0);
    let mut x = vec![T::one(); n];
    for _ in 0..MAX_POWER_STEPS {
        let y = b.mul_vec(&x);
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for (&yi, &xi) in y.iter().zip(&x) {
            let q = yi / xi;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let lambda = (lo + hi) / T::lit(2.0) - T::one();
        if hi - lo <= (rel * lambda).max(noise * hi) {
            return Ok(lambda);
        }
        let top = y.iter().copied().fold(T::zero(), T::max);
        x = y.into_iter().map(|v| v / top).collect();
        // entries of an irreducible iterate stay positive; guard underflow
        if x.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::NoConvergence {
                what: "power iteration underflow",
                iterations: 0,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "Perron root",
        iterations: MAX_POWER_STEPS,
    })
}

/// Perron root of the weight matrix at `(r, t)`.
pub fn radius<T: Real>(spec: &RifsSpec<T>, r: T, t: T, side: Side) -> Result<T> {
    spectral_radius(&build_weight_matrix(spec, r, t, side))
}

/// Solved dimension bound for one order and side.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProfile<T> {
    pub r: T,
    pub side: Side,
    /// Root `t_r` of `radius(t) = 1`; 0 when degenerate.
    pub t_r: T,
    /// `k_r` (upper) or `l_r` (lower); 0 when degenerate.
    pub bound: T,
    /// `|radius(t_r) - 1|`
    pub residual: T,
    pub radius_at_0: T,
    pub radius_at_1: T,
    pub brackets: Vec<(T, T)>,
    /// The support is a single cycle (`radius(0) = 1`), so no positive bound exists.
    pub degenerate: bool,
}

/// Converts the root `t` of the pressure-type equation into a dimension.
#[inline]
pub fn bound_from_root<T: Real>(r: T, t: T) -> T {
    r * t / (T::one() - t)
}

pub fn solve_dimension_bound<T: Real>(spec: &RifsSpec<T>, r: T, side: Side) -> Result<SpectralProfile<T>> {
    if !(r > T::zero() && r.is_finite()) {
        return Err(Error::Domain(format!("order r = {r} must be positive")));
    }
    let radius_at_0 = radius(spec, r, T::zero(), side)?;
    let radius_at_1 = radius(spec, r, T::one(), side)?;
    if radius_at_0 <= T::one() + T::tol(1e-12) {
        return Ok(SpectralProfile {
            r,
            side,
            t_r: T::zero(),
            bound: T::zero(),
            residual: (radius_at_0 - T::one()).abs(),
            radius_at_0,
            radius_at_1,
            brackets: Vec::new(),
            degenerate: true,
        });
    }
    let RootSolve {
        root,
        residual,
        brackets,
    } = decreasing_root(
        |t| Ok(radius(spec, r, t, side)? - T::one()),
        T::zero(),
        T::one() - T::lit(1e-9),
        T::tol(1e-13),
    )?;
    if residual > T::tol(1e-11) {
        return Err(Error::NoConvergence {
            what: "dimension bound residual above 1e-11",
            iterations: brackets.len(),
        });
    }
    Ok(SpectralProfile {
        r,
        side,
        t_r: root,
        bound: bound_from_root(r, root),
        residual,
        radius_at_0,
        radius_at_1,
        brackets,
        degenerate: false,
    })
}

/// Finite-length approximation of the pressure `log radius(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaPartial<T> {
    pub n: usize,
    pub t: T,
    pub side: Side,
    /// `sum over Omega_n of (p_w b_w^r)^t`
    pub sum: T,
    /// `log(sum) / n`
    pub value: T,
    pub word_count: u128,
}

pub fn theta_partial<T: Real>(
    spec: &RifsSpec<T>,
    r: T,
    t: T,
    n: usize,
    side: Side,
    cap: u128,
) -> Result<ThetaPartial<T>> {
    let words = enumerate_words(spec, n, cap)?;
    let sum = words
        .iter()
        .map(|w| {
            let b = match side {
                Side::Upper => w.s(),
                Side::Lower => w.c(),
            };
            (w.p() * b.powf(r)).powf(t)
        })
        .sum::<T>();
    Ok(ThetaPartial {
        n,
        t,
        side,
        sum,
        value: sum.ln() / T::from_usize_lossy(n),
        word_count: words.len() as u128,
    })
}

/// Relative rounding allowance in [`envelope_check`]; rank-one systems
/// attain the upper envelope exactly.
pub const ENVELOPE_REL_TOL: f64 = 1e-12;

/// `F^-t <= sum over Omega_n of (p_w b_w^r)^t <= F^t` at the solved root,
/// with `F = F_r` (upper) or `G_r` (lower).
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeCheck<T> {
    pub n: usize,
    pub sum: T,
    pub lower: T,
    pub upper: T,
    pub holds: bool,
}

pub fn envelope_check<T: Real>(
    spec: &RifsSpec<T>,
    profile: &SpectralProfile<T>,
    n: usize,
    cap: u128,
) -> Result<EnvelopeCheck<T>> {
    let partial = theta_partial(spec, profile.r, profile.t_r, n, profile.side, cap)?;
    let dc = derived_constants(spec, profile.r, None);
    let f = match profile.side {
        Side::Upper => dc.f_r,
        Side::Lower => dc.g_r,
    };
    let upper = f.powf(profile.t_r);
    let lower = upper.recip();
    let slack = T::tol(ENVELOPE_REL_TOL);
    Ok(EnvelopeCheck {
        n,
        sum: partial.sum,
        lower,
        upper,
        holds: lower * (T::one() - slack) <= partial.sum && partial.sum <= upper * (T::one() + slack),
    })
}

/// For each state `i`, the shortest admissible word from `i` back to `i`,
/// ties broken lexicographically.
pub fn find_return_words<T: Real>(transition: &SquareMatrix<T>) -> Result<Vec<Vec<usize>>> {
    let support = transition.support();
    if !support.is_strongly_connected() {
        return Err(Error::Precondition("transition matrix is reducible".into()));
    }
    let reversed = support.reversed();
    (0..support.n())
        .map(|i| {
            let to_i = reversed.distances_from(i);
            let steps = support
                .successors(i)
                .iter()
                .filter_map(|&v| to_i[v])
                .min()
                .expect("irreducible support")
                + 1;
            let mut word = vec![i];
            let mut cur = i;
            for left in (0..steps).rev() {
                cur = *support
                    .successors(cur)
                    .iter()
                    .find(|&&v| to_i[v] == Some(left))
                    .expect("a shortest continuation exists");
                word.push(cur);
            }
            Ok(word)
        })
        .collect()
}

/// Lower bound from the separated sub-system built on words of length `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemBound<T> {
    pub r: T,
    pub m: usize,
    pub word_count: u128,
    pub t: T,
    /// `l_{m,r}`
    pub bound: T,
    pub residual: T,
}

/// Solves `sum over Omega_m of (p_w C_w^r)^t = 1` with `C_w = c_w c_sigma`,
/// where `sigma` is the return word of the last symbol of `w`.
pub fn subsystem_lower_bound<T: Real>(
    spec: &RifsSpec<T>,
    r: T,
    m: usize,
    return_words: &[Vec<usize>],
    cap: u128,
) -> Result<SubsystemBound<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain(format!("order r = {r} must be positive")));
    }
    if return_words.len() != spec.n() {
        return Err(Error::Domain(format!(
            "need {} return words, got {}",
            spec.n(),
            return_words.len()
        )));
    }
    let mut c_sigma = Vec::with_capacity(spec.n());
    for (i, sigma) in return_words.iter().enumerate() {
        let ok = sigma.len() >= 2
            && sigma[0] == i
            && sigma[sigma.len() - 1] == i
            && is_admissible(sigma, spec.transition())?;
        if !ok {
            return Err(Error::Domain(format!(
                "return word for state {} must be an admissible loop of length >= 2",
                i + 1
            )));
        }
        let c: T = sigma
            .windows(2)
            .map(|e| spec.edge(e[0], e[1]).expect("admissible").c)
            .product();
        c_sigma.push(c);
    }
    word_count(spec, m, cap)?;
    let weights: Vec<T> = enumerate_words(spec, m, cap)?
        .iter()
        .map(|w| w.p() * (w.c() * c_sigma[w.last()]).powf(r))
        .collect();
    solve_weight_sum(r, m, &weights)
}

/// Root of `sum_w a_w^t = 1` for weights `a_w < 1`, mapped to `r t / (1 - t)`.
fn solve_weight_sum<T: Real>(r: T, m: usize, weights: &[T]) -> Result<SubsystemBound<T>> {
    if weights.len() <= 1 {
        return Err(Error::Degenerate(format!(
            "{} word(s) of length {m}: the sub-system sum cannot exceed 1",
            weights.len()
        )));
    }
    let solve = decreasing_root(
        |t| Ok(weights.iter().map(|&a| a.powf(t)).sum::<T>() - T::one()),
        T::zero(),
        T::one(),
        T::tol(1e-14),
    )?;
    if solve.residual > T::tol(1e-11) {
        return Err(Error::NoConvergence {
            what: "sub-system bound residual above 1e-11",
            iterations: solve.brackets.len(),
        });
    }
    Ok(SubsystemBound {
        r,
        m,
        word_count: weights.len() as u128,
        t: solve.root,
        bound: bound_from_root(r, solve.root),
        residual: solve.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::symbolic::DEFAULT_WORD_CAP;

    #[test]
    fn r2_weight_matrix_at_t1() {
        let m = build_weight_matrix(&fixtures::r2::<f64>(), 2.0, 1.0, Side::Upper);
        assert!((m.get(0, 0) - 1.0 / 18.0).abs() < 1e-16);
        assert!((m.get(0, 1) - 1.0 / 18.0).abs() < 1e-16);
        assert!((m.get(1, 0) - 1.0 / 16.0).abs() < 1e-16);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn t0_gives_support_indicator() {
        let m = build_weight_matrix(&fixtures::r2::<f64>(), 2.0, 0.0, Side::Lower);
        assert_eq!(m.rows(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn radius_examples() {
        let perm = SquareMatrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((spectral_radius(&perm).unwrap() - 1.0).abs() < 1e-14);

        // [[a,a],[b,0]]: lambda^2 - a lambda - a b = 0
        let (a, b) = (0.3f64, 0.2f64);
        let m = SquareMatrix::from_rows(&[vec![a, a], vec![b, 0.0]]).unwrap();
        let closed = (a + (a * a + 4.0 * a * b).sqrt()) / 2.0;
        assert!((closed - 0.437_228_132_326_901_4).abs() < 1e-15);
        assert!((spectral_radius(&m).unwrap() - closed).abs() < 1e-13 * closed);

        // rank one [q_j s_j^r]: radius = sum_j q_j s_j^r
        let q = [0.2, 0.3, 0.5];
        let s = [0.5, 0.25, 0.1];
        let m = SquareMatrix::from_fn(3, |_, j| q[j] * s[j] * s[j]);
        let trace: f64 = (0..3).map(|j| q[j] * s[j] * s[j]).sum();
        assert!((spectral_radius(&m).unwrap() - trace).abs() < 1e-13 * trace);
    }

    #[test]
    fn radius_rejects_reducible() {
        let m = SquareMatrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(spectral_radius(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn cantor_bound_is_log2_over_log3() {
        let c2 = fixtures::c2::<f64>();
        let d = 2f64.ln() / 3f64.ln();
        for r in [0.5, 1.0, 2.0, 3.0] {
            let up = solve_dimension_bound(&c2, r, Side::Upper).unwrap();
            assert!((up.bound - d).abs() < 1e-9, "r={r}: {}", up.bound);
            assert!(up.residual < 1e-11);
            let t = 2f64.ln() / (2f64.ln() + r * 3f64.ln());
            assert!((up.t_r - t).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_cycle_reports_zero() {
        let p = solve_dimension_bound(&fixtures::cycle_pair(0.5), 2.0, Side::Upper).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.bound, 0.0);
    }

    #[test]
    fn return_words_examples() {
        let r2 = fixtures::r2::<f64>();
        assert_eq!(
            find_return_words(r2.transition()).unwrap(),
            vec![vec![0, 0], vec![1, 0, 1]]
        );
        let c2 = fixtures::c2::<f64>();
        assert_eq!(
            find_return_words(c2.transition()).unwrap(),
            vec![vec![0, 0], vec![1, 1]]
        );
        let cyc = fixtures::cycle_pair(0.5);
        assert_eq!(
            find_return_words(cyc.transition()).unwrap(),
            vec![vec![0, 1, 0], vec![1, 0, 1]]
        );
    }

    #[test]
    fn return_words_prefer_lexicographic_among_shortest() {
        // 0 -> {1,2}, 1 -> 0, 2 -> 0: both 0-1-0 and 0-2-0 have length 3
        let m = SquareMatrix::from_rows(&[vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(find_return_words(&m).unwrap()[0], vec![0, 1, 0]);
    }

    #[test]
    fn subsystem_on_cantor() {
        let c2 = fixtures::c2::<f64>();
        let sigma = find_return_words(c2.transition()).unwrap();
        let r = 2.0;
        let b = subsystem_lower_bound(&c2, r, 1, &sigma, DEFAULT_WORD_CAP).unwrap();
        // sum_i (1/2 * 3^-r)^t = 1, solved independently in closed form
        let t = 2f64.ln() / (2f64.ln() + r * 3f64.ln());
        assert!((b.t - t).abs() < 1e-12);
        assert_eq!(b.word_count, 2);
    }

    #[test]
    fn subsystem_rejects_bad_return_words() {
        let r2 = fixtures::r2::<f64>();
        let bad = vec![vec![0, 0], vec![1, 1]];
        assert!(matches!(
            subsystem_lower_bound(&r2, 2.0, 2, &bad, DEFAULT_WORD_CAP),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn subsystem_degenerate_when_single_word() {
        let err = solve_weight_sum(2.0, 1, &[0.3]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }
}
