use proptest::prelude::*;

use rifs_quant::fixtures;
use rifs_quant::rifs::{compose_map, derived_constants, RifsSpec};
use rifs_quant::symbolic::{antichain_by_threshold, enumerate_words, AntichainWeight, Word, DEFAULT_WORD_CAP};

fn specs() -> Vec<RifsSpec<f64>> {
    vec![
        fixtures::c2(),
        fixtures::r2(),
        fixtures::planar_affine(),
        fixtures::full_shift(&[0.2, 0.5, 0.3], &[0.3, 0.2, 0.25]),
    ]
}

/// Admissible word starting at `start`, steered by `choices`.
fn walk(spec: &RifsSpec<f64>, start: usize, choices: &[usize]) -> Vec<usize> {
    let mut w = vec![start % spec.n()];
    for &c in choices {
        let succ = spec.support().successors(*w.last().unwrap());
        w.push(succ[c % succ.len()]);
    }
    w
}

/// Neumaier summation; Omega_12 of a three-state shift has half a million terms.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

#[test]
fn cylinder_masses_sum_to_one() {
    for spec in specs() {
        for n in 1..=12 {
            let words = enumerate_words(&spec, n, DEFAULT_WORD_CAP).unwrap();
            let total = compensated_sum(words.iter().map(Word::p));
            assert!((total - 1.0).abs() < 1e-12, "{} n={n}: {total}", spec.name());
        }
    }
}

#[test]
fn enumeration_is_lexicographic_and_admissible() {
    let spec = fixtures::r2::<f64>();
    let words = enumerate_words(&spec, 5, DEFAULT_WORD_CAP).unwrap();
    for pair in words.windows(2) {
        assert!(pair[0].symbols() < pair[1].symbols());
    }
    assert!(words.iter().all(|w| !w.symbols().windows(2).any(|e| e == [1, 1])));
}

#[test]
fn antichains_partition_code_space() {
    for spec in [fixtures::c2::<f64>(), fixtures::r2(), fixtures::planar_affine()] {
        for eps in [0.3, 0.1, 0.01] {
            let weights = [
                AntichainWeight::Nu,
                AntichainWeight::ScaledMass { r: 2.0, theta: 0.3 },
                AntichainWeight::Contraction { theta: 1.0 },
            ];
            for weight in weights {
                let chain = antichain_by_threshold(&spec, weight, eps, DEFAULT_WORD_CAP).unwrap();
                assert!((chain.total_mass() - 1.0).abs() < 1e-12);
                assert!(chain.is_prefix_free());
                for w in &chain.members {
                    assert!(weight.of(w) < eps);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn concatenation_products(
        which in 0usize..4,
        a in 0usize..3,
        left in prop::collection::vec(0usize..8, 0..6),
        right in prop::collection::vec(0usize..8, 0..6),
        joint in 0usize..8,
    ) {
        let spec = &specs()[which];
        let w = walk(spec, a, &left);
        let last = *w.last().unwrap();
        let succ = spec.support().successors(last);
        let b = succ[joint % succ.len()];
        let tau = walk(spec, b, &right);
        let ww = Word::new(w.clone(), spec).unwrap();
        let wt = Word::new(tau.clone(), spec).unwrap();
        let joined = ww.concat(&wt, spec).unwrap();
        let edge = spec.edge(last, b).unwrap();
        let p_edge = spec.p(last, b);

        let s_expected = ww.s() * wt.s() * edge.s;
        let p_expected = ww.p() * wt.p() * p_edge / spec.stationary()[b];
        prop_assert!((joined.s() - s_expected).abs() <= 1e-14 * s_expected);
        prop_assert!((joined.p() - p_expected).abs() <= 1e-14 * p_expected);

        for r in [0.5, 1.0, 2.0, 3.0] {
            let dc = derived_constants(spec, r, None);
            let lhs = ww.p() * ww.s().powf(r) * wt.p() * wt.s().powf(r);
            let mid = joined.p() * joined.s().powf(r);
            prop_assert!(dc.a_r * lhs <= mid * (1.0 + 1e-12));
            prop_assert!(mid <= dc.a_tilde_r * lhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn composed_maps_respect_lipschitz_bounds(
        start in 0usize..2,
        path in prop::collection::vec(0usize..4, 1..6),
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 100),
    ) {
        let spec = fixtures::planar_affine();
        let word = Word::new(walk(&spec, start, &path), &spec).unwrap();
        let map = compose_map(&word, &spec).unwrap();
        for (x0, x1, y0, y1) in pts {
            let (x, y) = ([x0, x1], [y0, y1]);
            let d = ((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt();
            if d < 1e-9 {
                continue;
            }
            let (fx, fy) = (map.apply(&x), map.apply(&y));
            let fd = ((fx[0] - fy[0]).powi(2) + (fx[1] - fy[1]).powi(2)).sqrt();
            let ratio = fd / d;
            prop_assert!(ratio >= word.c() - 1e-12 && ratio <= word.s() + 1e-12, "{ratio} vs [{}, {}]", word.c(), word.s());
        }
    }
}
