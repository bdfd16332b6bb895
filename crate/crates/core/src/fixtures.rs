//! Reference systems used by tests, examples and the shipped config files.

use crate::rifs::{AffineMap, EdgeParts, RifsParts, RifsSpec, Separation};
use crate::scalar::Real;

fn edge<T: Real>(from: usize, to: usize, a: f64, b: f64) -> EdgeParts<T> {
    EdgeParts {
        from,
        to,
        map: AffineMap::scalar(T::lit(a), T::lit(b)),
        c: None,
        s: None,
    }
}

fn unit_interval<T: Real>() -> Vec<(T, T)> {
    vec![(T::zero(), T::one())]
}

/// Middle-thirds Cantor set written as a two-state system: every row of the
/// transition matrix is `(1/2, 1/2)` and `f_ij(x) = x/3 + 2(j-1)/3`.
pub fn c2_parts<T: Real>() -> RifsParts<T> {
    let third = 1.0 / 3.0;
    RifsParts {
        name: "C2".into(),
        separation: Separation::Ssc,
        transition: vec![vec![T::lit(0.5); 2]; 2],
        maps: vec![
            edge(0, 0, third, 0.0),
            edge(0, 1, third, 2.0 * third),
            edge(1, 0, third, 0.0),
            edge(1, 1, third, 2.0 * third),
        ],
        domain: unit_interval(),
    }
}

pub fn c2<T: Real>() -> RifsSpec<T> {
    RifsSpec::new(c2_parts()).expect("C2 is valid")
}

/// Two states on `[0,1]` with `P = [[1/2,1/2],[1,0]]`, `f_11 = x/3`,
/// `f_12 = x/3 + 2/3`, `f_21 = x/4`.
pub fn r2_parts<T: Real>() -> RifsParts<T> {
    let third = 1.0 / 3.0;
    RifsParts {
        name: "R2".into(),
        separation: Separation::Sosc,
        transition: vec![vec![T::lit(0.5), T::lit(0.5)], vec![T::one(), T::zero()]],
        maps: vec![
            edge(0, 0, third, 0.0),
            edge(0, 1, third, 2.0 * third),
            edge(1, 0, 0.25, 0.0),
        ],
        domain: unit_interval(),
    }
}

pub fn r2<T: Real>() -> RifsSpec<T> {
    RifsSpec::new(r2_parts()).expect("R2 is valid")
}

/// Pure two-cycle `P = [[0,1],[1,0]]` with `f_12 = s x`, `f_21 = s x + 1 - s`.
/// Its support digraph is a single cycle, so the dimension bounds degenerate.
pub fn cycle_pair(s: f64) -> RifsSpec<f64> {
    RifsSpec::new(RifsParts {
        name: "cycle".into(),
        separation: Separation::None,
        transition: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        maps: vec![edge(0, 1, s, 0.0), edge(1, 0, s, 1.0 - s)],
        domain: unit_interval(),
    })
    .expect("cycle pair is valid")
}

/// Rank-one system on `[0,1]`: every row equals `q` and the map on edge
/// `(i, j)` is `x -> scale[j] x + b_j`, independent of `i`.
pub fn full_shift(q: &[f64], scale: &[f64]) -> RifsSpec<f64> {
    let n = q.len();
    assert_eq!(n, scale.len());
    let offset = |j: usize| {
        if n == 1 {
            0.0
        } else {
            j as f64 * (1.0 - scale[j]) / (n - 1) as f64
        }
    };
    let maps = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(_, j)| q[j] > 0.0)
        .map(|(i, j)| edge(i, j, scale[j], offset(j)))
        .collect();
    RifsSpec::new(RifsParts {
        name: "full-shift".into(),
        separation: Separation::None,
        transition: vec![q.to_vec(); n],
        maps,
        domain: unit_interval(),
    })
    .expect("full shift is valid")
}

/// A 2-D system with rotations and non-conformal maps (so `c < s`).
pub fn planar_affine() -> RifsSpec<f64> {
    let map = |linear: [f64; 4], offset: [f64; 2]| AffineMap::new(linear.to_vec(), offset.to_vec()).unwrap();
    let maps = vec![
        EdgeParts {
            from: 0,
            to: 0,
            map: map([0.4, 0.0, 0.0, 0.25], [0.0, 0.0]),
            c: None,
            s: None,
        },
        EdgeParts {
            from: 0,
            to: 1,
            map: map([0.3, -0.1, 0.1, 0.3], [0.6, 0.1]),
            c: None,
            s: None,
        },
        EdgeParts {
            from: 1,
            to: 0,
            map: map([0.35, 0.0, 0.0, 0.35], [0.1, 0.6]),
            c: Some(0.3),
            s: Some(0.4),
        },
        EdgeParts {
            from: 1,
            to: 1,
            map: map([0.2, 0.05, 0.0, 0.3], [0.6, 0.6]),
            c: None,
            s: None,
        },
    ];
    RifsSpec::new(RifsParts {
        name: "planar".into(),
        separation: Separation::None,
        transition: vec![vec![0.3, 0.7], vec![0.6, 0.4]],
        maps,
        domain: vec![(0.0, 1.0), (0.0, 1.0)],
    })
    .expect("planar system is valid")
}
