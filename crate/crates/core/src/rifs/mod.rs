//! Recurrent iterated function systems: the system data, its validation,
//! the stationary law of the driving chain, and derived constants.
//!
//! Maps follow the direction of the invariance equation: the map attached to
//! the edge `(i, j)` sends the `j`-th component set into the `i`-th one, so a
//! word `w = (w1, ..., wn)` composes as `f_{w1 w2} o ... o f_{w(n-1) wn}`.
//! States are 0-based inside the library and 1-based in every user-facing
//! message, file and config.

mod sample;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{singular_values, solve_linear, SquareMatrix, Support};
use crate::scalar::Real;
use crate::symbolic::Word;

pub use sample::{sample_measure, SampleCloud, SampleOptions};

/// Row-sum tolerance for the transition matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// `x -> A x + b` on `R^k`, with `A` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap<T> {
    dim: usize,
    linear: Vec<T>,
    offset: Vec<T>,
}

impl<T: Real> AffineMap<T> {
    pub fn new(linear: Vec<T>, offset: Vec<T>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 || linear.len() != dim * dim {
            return Err(Error::Domain(format!(
                "affine map needs a {dim}x{dim} linear part, got {} entries",
                linear.len()
            )));
        }
        Ok(Self { dim, linear, offset })
    }

    /// `x -> a x + b` in one dimension.
    pub fn scalar(a: T, b: T) -> Self {
        Self {
            dim: 1,
            linear: vec![a],
            offset: vec![b],
        }
    }

    /// Similarity-style map `x -> a x + b` in `dim` dimensions.
    pub fn scaled_identity(a: T, offset: Vec<T>) -> Self {
        let dim = offset.len();
        let mut linear = vec![T::zero(); dim * dim];
        for i in 0..dim {
            linear[i * dim + i] = a;
        }
        Self { dim, linear, offset }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(T::one(), vec![T::zero(); dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn linear(&self) -> &[T] {
        &self.linear
    }

    pub fn offset(&self) -> &[T] {
        &self.offset
    }

    #[inline]
    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        let k = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(k) {
            let row = &self.linear[i * k..(i + 1) * k];
            *o = row.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + self.offset[i];
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// `self o inner`
    pub fn compose(&self, inner: &AffineMap<T>) -> AffineMap<T> {
        let k = self.dim;
        let mut linear = vec![T::zero(); k * k];
        for i in 0..k {
            for j in 0..k {
                linear[i * k + j] = (0..k).map(|l| self.linear[i * k + l] * inner.linear[l * k + j]).sum();
            }
        }
        let offset = self.apply(&inner.offset);
        AffineMap { dim: k, linear, offset }
    }

    /// Singular values of the linear part, descending.
    pub fn singular_values(&self) -> Vec<T> {
        singular_values(&self.linear, self.dim)
    }
}

/// User assertion about the geometric separation of the map images.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separation {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "OSC")]
    Osc,
    #[serde(rename = "SOSC")]
    Sosc,
    #[serde(rename = "SSC")]
    Ssc,
}

/// One map entry of an unvalidated system.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeParts<T> {
    pub from: usize,
    pub to: usize,
    pub map: AffineMap<T>,
    /// Declared lower Lipschitz bound; defaults to the smallest singular value.
    pub c: Option<T>,
    /// Declared upper Lipschitz bound; defaults to the largest singular value.
    pub s: Option<T>,
}

/// Raw system data prior to validation.
#[derive(Clone, Debug, PartialEq)]
pub struct RifsParts<T> {
    pub name: String,
    pub separation: Separation,
    pub transition: Vec<Vec<T>>,
    pub maps: Vec<EdgeParts<T>>,
    /// Axis-aligned box `X`, one `(lo, hi)` pair per coordinate.
    pub domain: Vec<(T, T)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Location of the offending datum, e.g. `transition[1]` or `maps[3]`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

/// A validated edge: its map and bi-Lipschitz bounds `c <= s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub map: AffineMap<T>,
    pub c: T,
    pub s: T,
}

/// A validated recurrent IFS. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct RifsSpec<T> {
    parts: RifsParts<T>,
    transition: SquareMatrix<T>,
    support: Support,
    stationary: Vec<T>,
    edges: Vec<Option<Edge<T>>>,
}

/// Checks every structural hypothesis on the system; failures are returned
/// as data.
pub fn validate<T: Real>(parts: &RifsParts<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = parts.transition.len();
    let dim = parts.domain.len();
    let tol = T::tol(STOCHASTIC_TOL);

    if n < 2 {
        report.push("states", format!("need at least 2 states, got {n}"));
    }
    if !(1..=3).contains(&dim) {
        report.push("domain", format!("ambient dimension must be 1, 2 or 3, got {dim}"));
    }
    for (k, &(lo, hi)) in parts.domain.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            report.push(
                format!("domain[{k}]"),
                format!("interval [{lo}, {hi}] is empty or not finite"),
            );
        }
    }

    let mut square = true;
    for (i, row) in parts.transition.iter().enumerate() {
        if row.len() != n {
            report.push(
                format!("transition[{i}]"),
                format!("row {} has {} entries, expected {n}", i + 1, row.len()),
            );
            square = false;
            continue;
        }
        if let Some(j) = row.iter().position(|&x| !(x.is_finite() && x >= T::zero())) {
            report.push(
                format!("transition[{i}][{j}]"),
                format!("entry ({},{}) = {} is negative or not finite", i + 1, j + 1, row[j]),
            );
        }
        let sum: T = row.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            report.push(
                format!("transition[{i}]"),
                format!("row {} sums to {sum} (not stochastic)", i + 1),
            );
        }
    }
    if n == 0 || !square {
        return report;
    }

    let positive = |i: usize, j: usize| parts.transition[i][j] > T::zero();
    let support = Support::from_fn(n, positive);
    if !support.is_strongly_connected() {
        report.push("transition", "transition matrix is not irreducible");
    }

    let mut seen = vec![None; n * n];
    for (idx, e) in parts.maps.iter().enumerate() {
        let path = format!("maps[{idx}]");
        if e.from >= n || e.to >= n {
            report.push(path, format!("edge ({},{}) outside 1..{n}", e.from + 1, e.to + 1));
            continue;
        }
        let edge = format!("edge ({},{})", e.from + 1, e.to + 1);
        if let Some(prev) = seen[e.from * n + e.to].replace(idx) {
            report.push(path.clone(), format!("{edge}: duplicate of maps[{prev}]"));
        }
        if !positive(e.from, e.to) {
            report.push(path.clone(), format!("{edge}: map given for a zero transition"));
        }
        if e.map.dim() != dim {
            report.push(
                path,
                format!(
                    "{edge}: map dimension {} does not match domain dimension {dim}",
                    e.map.dim()
                ),
            );
            continue;
        }
        check_edge(&mut report, &path, &edge, e, &parts.domain);
    }
    for (i, j) in support.edges() {
        if seen[i * n + j].is_none() {
            report.push(
                "maps",
                format!("edge ({},{}) has positive transition but no map", i + 1, j + 1),
            );
        }
    }
    report
}

fn check_edge<T: Real>(report: &mut ValidationReport, path: &str, edge: &str, e: &EdgeParts<T>, domain: &[(T, T)]) {
    let tol = T::tol(1e-12);
    let sv = e.map.singular_values();
    let (sigma_max, sigma_min) = (sv[0], sv[sv.len() - 1]);
    let s = e.s.unwrap_or(sigma_max);
    let c = e.c.unwrap_or(sigma_min);
    if !(s < T::one()) {
        report.push(path, format!("{edge}: contraction ≥ 1 (s = {s})"));
    }
    if !(c > T::zero()) {
        report.push(path, format!("{edge}: lower bound c = {c} must be positive"));
    }
    if c > s {
        report.push(path, format!("{edge}: lower bound c = {c} exceeds upper bound s = {s}"));
    }
    if c > sigma_min + tol {
        report.push(
            path,
            format!("{edge}: declared c = {c} exceeds smallest singular value {sigma_min}"),
        );
    }
    if sigma_max > s + tol {
        report.push(
            path,
            format!("{edge}: largest singular value {sigma_max} exceeds declared s = {s}"),
        );
    }
    if domain.iter().any(|&(lo, hi)| !(lo < hi)) {
        return;
    }
    let diam = domain.iter().map(|&(lo, hi)| (hi - lo) * (hi - lo)).sum::<T>().sqrt();
    let slack = tol * diam.max(T::one());
    let k = domain.len();
    let mut corner = vec![T::zero(); k];
    let mut image = vec![T::zero(); k];
    for mask in 0..(1usize << k) {
        for (a, (x, &(lo, hi))) in corner.iter_mut().zip(domain).enumerate() {
            *x = if mask >> a & 1 == 1 { hi } else { lo };
        }
        e.map.apply_into(&corner, &mut image);
        let outside = image
            .iter()
            .zip(domain)
            .any(|(&y, &(lo, hi))| y < lo - slack || y > hi + slack);
        if outside {
            report.push(path, format!("{edge}: image of the domain box leaves the box"));
            return;
        }
    }
}

impl<T: Real> RifsSpec<T> {
    /// Validates `parts` and builds the system, or returns every violation.
    pub fn new(parts: RifsParts<T>) -> Result<Self> {
        let report = validate(&parts);
        if !report.is_valid() {
            return Err(Error::Validation(report.violations));
        }
        let transition = SquareMatrix::from_rows(&parts.transition)?;
        let n = transition.n();
        let support = transition.support();
        let stationary = stationary_distribution(&transition)?;
        let mut edges = vec![None; n * n];
        for e in &parts.maps {
            let sv = e.map.singular_values();
            edges[e.from * n + e.to] = Some(Edge {
                map: e.map.clone(),
                c: e.c.unwrap_or(sv[sv.len() - 1]),
                s: e.s.unwrap_or(sv[0]),
            });
        }
        Ok(Self {
            parts,
            transition,
            support,
            stationary,
            edges,
        })
    }

    pub fn parts(&self) -> &RifsParts<T> {
        &self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    /// Number of states `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.transition.n()
    }

    /// Ambient dimension `k`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.parts.domain.len()
    }

    pub fn domain(&self) -> &[(T, T)] {
        &self.parts.domain
    }

    pub fn transition(&self) -> &SquareMatrix<T> {
        &self.transition
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> T {
        self.transition.get(i, j)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Stationary vector `p` with `pP = p`.
    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    /// The edge `(i, j)` if `p_ij > 0`.
    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> Option<&Edge<T>> {
        self.edges[i * self.n() + j].as_ref()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Edge<T>)> + '_ {
        self.support
            .edges()
            .map(move |(i, j)| (i, j, self.edge(i, j).expect("edge on support")))
    }

    /// Box center, used as the anchor point of truncated codings.
    pub fn anchor(&self) -> Vec<T> {
        self.domain().iter().map(|&(lo, hi)| (lo + hi) / T::lit(2.0)).collect()
    }

    pub fn domain_diameter(&self) -> T {
        self.domain()
            .iter()
            .map(|&(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<T>()
            .sqrt()
    }

    pub fn s_max(&self) -> T {
        self.edges().map(|(_, _, e)| e.s).fold(T::zero(), T::max)
    }
}

/// Unique probability vector `p` with `pP = p` for an irreducible
/// row-stochastic `P`.
pub fn stationary_distribution<T: Real>(transition: &SquareMatrix<T>) -> Result<Vec<T>> {
    let n = transition.n();
    if !transition.support().is_strongly_connected() {
        return Err(Error::Precondition(
            "transition matrix is reducible; stationary vector is not unique".into(),
        ));
    }
    // (P^T - I) p = 0 with the last equation replaced by sum(p) = 1.
    let mut a = SquareMatrix::from_fn(n, |i, j| transition.get(j, i));
    for i in 0..n {
        let v = a.get(i, i) - T::one();
        a.set(i, i, v);
    }
    for j in 0..n {
        a.set(n - 1, j, T::one());
    }
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    let mut p = solve_linear(&a, &rhs)?;
    if p.iter().any(|&x| !(x > T::zero())) {
        return Err(Error::Precondition("stationary vector has a non-positive entry".into()));
    }
    let total: T = p.iter().copied().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// `max_i |(pP)_i - p_i|`
pub fn stationary_residual<T: Real>(transition: &SquareMatrix<T>, p: &[T]) -> T {
    transition
        .vec_mul(p)
        .iter()
        .zip(p)
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max)
}

/// Constants bounding how the weights `p_w s_w^r` behave under
/// concatenation, for one order `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants<T> {
    pub r: T,
    pub s_max: T,
    pub s_min: T,
    pub c_max: T,
    pub c_min: T,
    /// Extremes of the stationary vector.
    pub p_max: T,
    pub p_min: T,
    /// Extremes of the positive transition probabilities.
    pub big_p_max: T,
    pub big_p_min: T,
    pub a_r: T,
    pub a_tilde_r: T,
    pub b_r: T,
    pub b_tilde_r: T,
    /// `max(1/A_r, Ã_r)`
    pub f_r: T,
    /// `max(1/B_r, B̃_r)`
    pub g_r: T,
    /// Antichain sum bound; present when the upper bound `k_r` was supplied.
    pub eta_r: Option<T>,
}

pub fn derived_constants<T: Real>(spec: &RifsSpec<T>, r: T, k_r: Option<T>) -> DerivedConstants<T> {
    let inf = T::infinity();
    let (mut s_max, mut s_min, mut c_max, mut c_min) = (T::zero(), inf, T::zero(), inf);
    let (mut big_p_max, mut big_p_min) = (T::zero(), inf);
    for (i, j, e) in spec.edges() {
        s_max = s_max.max(e.s);
        s_min = s_min.min(e.s);
        c_max = c_max.max(e.c);
        c_min = c_min.min(e.c);
        big_p_max = big_p_max.max(spec.p(i, j));
        big_p_min = big_p_min.min(spec.p(i, j));
    }
    let p = spec.stationary();
    let p_max = p.iter().copied().fold(T::zero(), T::max);
    let p_min = p.iter().copied().fold(inf, T::min);

    let one = T::one();
    let a_r = (s_min.powf(r) * big_p_min / p_max).min(one);
    let a_tilde_r = (s_max.powf(r) * big_p_max / p_min).max(one);
    let b_r = (c_min.powf(r) * big_p_min / p_max).min(one);
    let b_tilde_r = (c_max.powf(r) * big_p_max / p_min).max(one);
    let f_r = a_r.recip().max(a_tilde_r);
    let g_r = b_r.recip().max(b_tilde_r);
    let eta_r = k_r.map(|k| {
        let t = k / (r + k);
        let inner = big_p_min / p_max * s_min.powf(r);
        (f_r.powf(t + t) * inner.powf(-t)).max(one)
    });
    DerivedConstants {
        r,
        s_max,
        s_min,
        c_max,
        c_min,
        p_max,
        p_min,
        big_p_max,
        big_p_min,
        a_r,
        a_tilde_r,
        b_r,
        b_tilde_r,
        f_r,
        g_r,
        eta_r,
    }
}

/// The composed map `f_w` of an admissible word with at least two symbols.
pub fn compose_map<T: Real>(word: &Word<T>, spec: &RifsSpec<T>) -> Result<AffineMap<T>> {
    let sym = word.symbols();
    if sym.len() < 2 {
        return Err(Error::Domain("a word of length 1 has no composed map".into()));
    }
    let mut acc = AffineMap::identity(spec.dim());
    for pair in sym.windows(2) {
        let edge = spec.edge(pair[0], pair[1]).ok_or_else(|| {
            Error::Domain(format!(
                "transition ({},{}) is not admissible",
                pair[0] + 1,
                pair[1] + 1
            ))
        })?;
        acc = acc.compose(&edge.map);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn p2(rows: [[f64; 2]; 2]) -> SquareMatrix<f64> {
        SquareMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let p = stationary_distribution(&p2([[0.5, 0.5], [1.0, 0.0]])).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);

        let p = stationary_distribution(&p2([[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        let q = [0.2f64, 0.3, 0.5];
        let m = SquareMatrix::from_rows(&[q.to_vec(), q.to_vec(), q.to_vec()]).unwrap();
        let p = stationary_distribution(&m).unwrap();
        for (a, b) in p.iter().zip(q) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(stationary_residual(&m, &p) < 1e-12);
    }

    #[test]
    fn stationary_rejects_reducible() {
        let err = stationary_distribution(&p2([[1.0, 0.0], [0.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn r2_is_valid_and_constants_match() {
        let spec = fixtures::r2::<f64>();
        assert!(validate(spec.parts()).is_valid());
        let dc = derived_constants(&spec, 2.0, None);
        assert_eq!(dc.s_max, 1.0 / 3.0);
        assert_eq!(dc.s_min, 0.25);
        assert_eq!(dc.big_p_min, 0.5);
        assert_eq!(dc.big_p_max, 1.0);
        assert!((dc.p_max - 2.0 / 3.0).abs() < 1e-15);
        assert!((dc.p_min - 1.0 / 3.0).abs() < 1e-15);
        // c = s edgewise
        assert_eq!(dc.a_r, dc.b_r);
        assert_eq!(dc.a_tilde_r, dc.b_tilde_r);
        assert_eq!(dc.f_r, dc.g_r);
        assert!(dc.a_r <= 1.0 && dc.a_tilde_r >= 1.0 && dc.f_r >= 1.0);
    }

    #[test]
    fn equal_scales_give_unit_a_tilde() {
        // three states, every map x -> x/5 + b, equal rows 1/3
        let q = 1.0 / 3.0;
        let spec = fixtures::full_shift(&[q, q, q], &[0.2, 0.2, 0.2]);
        let dc = derived_constants(&spec, 2.0, Some(0.5));
        assert_eq!(dc.a_tilde_r, 1.0);
        assert!(dc.eta_r.unwrap() >= 1.0);
    }

    #[test]
    fn row_sum_and_irreducibility_violations() {
        let mut parts = fixtures::r2::<f64>().parts().clone();
        parts.transition[0] = vec![0.5, 0.4];
        let report = validate(&parts);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("row 1 sums to 0.9")));

        let mut parts = fixtures::c2::<f64>().parts().clone();
        parts.transition = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        parts.maps.retain(|e| e.from == e.to);
        let report = validate(&parts);
        assert!(report.violations.iter().any(|v| v.message.contains("not irreducible")));
    }

    #[test]
    fn compose_examples() {
        let spec = fixtures::c2::<f64>();
        let f = compose_map(&Word::new(vec![0, 1], &spec).unwrap(), &spec).unwrap();
        assert!((f.linear()[0] - 1.0 / 3.0).abs() < 1e-16);
        assert!((f.offset()[0] - 2.0 / 3.0).abs() < 1e-16);

        let f = compose_map(&Word::new(vec![0, 0, 1], &spec).unwrap(), &spec).unwrap();
        assert!((f.linear()[0] - 1.0 / 9.0).abs() < 1e-16);
        assert!((f.offset()[0] - 2.0 / 9.0).abs() < 1e-16);

        let err = compose_map(&Word::new(vec![0], &spec).unwrap(), &spec).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }
}
