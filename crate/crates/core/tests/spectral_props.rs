use proptest::prelude::*;

use rifs_quant::fixtures;
use rifs_quant::rifs::{derived_constants, RifsSpec};
use rifs_quant::spectral::{envelope_check, radius, solve_dimension_bound, theta_partial, Side};
use rifs_quant::symbolic::{antichain_by_threshold, AntichainWeight, DEFAULT_WORD_CAP};

fn fixtures_f64() -> Vec<RifsSpec<f64>> {
    vec![fixtures::c2(), fixtures::r2(), fixtures::planar_affine()]
}

/// Root of `sum_j (q_j s_j^r)^t = 1` by plain bisection.
fn rank_one_root(q: &[f64], s: &[f64], r: f64) -> f64 {
    let f = |t: f64| q.iter().zip(s).map(|(&q, &s)| (q * s.powf(r)).powf(t)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn radius_strictly_decreases() {
    for spec in fixtures_f64() {
        for side in [Side::Upper, Side::Lower] {
            for r in [0.5, 2.0] {
                let vals: Vec<f64> = (0..=20)
                    .map(|k| radius(&spec, r, k as f64 * 0.05, side).unwrap())
                    .collect();
                for w in vals.windows(2) {
                    assert!(w[1] < w[0], "{} {side} r={r}: {vals:?}", spec.name());
                }
            }
        }
    }
}

#[test]
fn radius_at_one_is_below_contraction_power() {
    for spec in fixtures_f64() {
        for r in [0.5, 1.0, 2.0, 3.0] {
            let rad = radius(&spec, r, 1.0, Side::Upper).unwrap();
            assert!(rad <= spec.s_max().powf(r) * (1.0 + 1e-12), "{}", spec.name());
        }
    }
}

#[test]
fn lower_bound_never_exceeds_upper() {
    let spec = fixtures::planar_affine();
    for r in [0.5, 1.0, 2.0, 3.0] {
        let k = solve_dimension_bound(&spec, r, Side::Upper).unwrap();
        let l = solve_dimension_bound(&spec, r, Side::Lower).unwrap();
        assert!(l.bound < k.bound);
        assert!(k.residual < 1e-11 && l.residual < 1e-11);
    }
}

#[test]
fn envelope_holds_on_dense_fixtures() {
    for spec in [fixtures::c2::<f64>(), fixtures::planar_affine()] {
        for side in [Side::Upper, Side::Lower] {
            let profile = solve_dimension_bound(&spec, 2.0, side).unwrap();
            for n in 2..=12 {
                let chk = envelope_check(&spec, &profile, n, DEFAULT_WORD_CAP).unwrap();
                assert!(chk.holds, "{} {side} n={n}: {chk:?}", spec.name());
            }
        }
    }
}

#[test]
fn sparse_r2_breaks_upper_envelope_from_length_three() {
    let spec = fixtures::r2::<f64>();
    let profile = solve_dimension_bound(&spec, 2.0, Side::Upper).unwrap();
    let two = envelope_check(&spec, &profile, 2, DEFAULT_WORD_CAP).unwrap();
    assert!(two.holds);
    for n in 3..=12 {
        let chk = envelope_check(&spec, &profile, n, DEFAULT_WORD_CAP).unwrap();
        assert!(chk.sum > chk.upper && chk.sum >= chk.lower, "n={n}: {chk:?}");
    }
}

#[test]
fn antichain_sums_respect_eta() {
    for spec in fixtures_f64() {
        for r in [1.0, 2.0] {
            let k = solve_dimension_bound(&spec, r, Side::Upper).unwrap();
            let eta = derived_constants(&spec, r, Some(k.bound)).eta_r.unwrap();
            for eps in [0.3, 0.1, 0.01] {
                let w = AntichainWeight::ScaledMass { r, theta: k.t_r };
                let chain = antichain_by_threshold(&spec, w, eps, DEFAULT_WORD_CAP).unwrap();
                assert!(chain.scaled_sum(r, k.t_r) <= eta, "{} r={r} eps={eps}", spec.name());
            }
        }
    }
}

#[test]
fn finite_length_pressure_converges() {
    for spec in fixtures_f64() {
        let dc = derived_constants(&spec, 2.0, None);
        let p_min = spec.stationary().iter().copied().fold(1.0, f64::min);
        for t in [0.1, 0.3, 0.7] {
            let log_phi = radius(&spec, 2.0, t, Side::Upper).unwrap().ln();
            let scale = t * (dc.f_r.ln() + p_min.ln().abs()) + log_phi.abs();
            let errs: Vec<f64> = (4..=12)
                .map(|n| {
                    let tp = theta_partial(&spec, 2.0, t, n, Side::Upper, DEFAULT_WORD_CAP).unwrap();
                    (tp.value - log_phi).abs()
                })
                .collect();
            for (k, e) in errs.iter().enumerate() {
                assert!(*e <= scale / (k + 4) as f64, "{} t={t}: {errs:?}", spec.name());
            }
            for w in errs.windows(2) {
                assert!(w[1] < w[0], "{} t={t}: {errs:?}", spec.name());
            }
        }
    }
}

#[test]
fn single_precision_bounds_track_double() {
    let k32 = solve_dimension_bound(&fixtures::c2::<f32>(), 2.0f32, Side::Upper).unwrap();
    let k64 = solve_dimension_bound(&fixtures::c2::<f64>(), 2.0, Side::Upper).unwrap();
    assert!((k32.bound as f64 - k64.bound).abs() < 1e-5);
}

proptest! {
    #[test]
    fn rank_one_systems_reduce_to_scalar_equation(
        raw in prop::collection::vec(0.05f64..1.0, 2..5),
        scales in prop::collection::vec(0.05f64..0.45, 4),
        r in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]),
    ) {
        let total: f64 = raw.iter().sum();
        let q: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let s = &scales[..q.len()];
        let spec = fixtures::full_shift(&q, s);
        let t = rank_one_root(&q, s, r);
        let expected = r * t / (1.0 - t);
        for side in [Side::Upper, Side::Lower] {
            let got = solve_dimension_bound(&spec, r, side).unwrap().bound;
            prop_assert!((got - expected).abs() < 1e-9, "{side}: {got} vs {expected}");
        }
    }
}
