//! Codebooks and the quantization error of order `r` against finite
//! weighted point clouds, plus Voronoi diagnostics.

mod lloyd;
mod oracle;

use crate::error::{Error, Result};
use crate::rifs::SampleCloud;
use crate::scalar::Real;

pub use lloyd::{lloyd_optimize, LloydOptions, QuantizationRun};
pub use oracle::{oracle_optimal, OracleResult, ORACLE_MAX_CODEBOOK, ORACLE_MAX_POINTS};

/// Finite probability measure: points with nonnegative weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCloud<T> {
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> WeightedCloud<T> {
    /// Weights must be nonnegative and sum to 1 within `1e-9`, or within the
    /// rounding a sum of that length can accumulate; they are renormalized.
    pub fn new(dim: usize, coords: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.len() != dim * weights.len() {
            return Err(Error::Domain(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("coordinates must be finite".into()));
        }
        if weights.iter().any(|&w| !(w >= T::zero() && w.is_finite())) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        let slack = T::tol(1e-9).max(T::epsilon() * T::from_usize_lossy(4 * weights.len()));
        if weights.is_empty() || (total - T::one()).abs() > slack {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { dim, coords, weights })
    }

    pub fn uniform(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Domain("empty or ragged point list".into()));
        }
        let n = coords.len() / dim;
        let w = T::one() / T::from_usize_lossy(n);
        Self::new(dim, coords, vec![w; n])
    }

    /// Uniform empirical measure of a sample.
    pub fn from_sample(sample: &SampleCloud<T>) -> Result<Self> {
        Self::uniform(sample.dim, sample.coords.clone())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Indices of the points in lexicographic coordinate order.
    pub(crate) fn lex_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx
    }

    /// Number of distinct support points (positive weight).
    pub fn distinct_support(&self) -> usize {
        let order = self.lex_order();
        let mut count = 0;
        let mut prev: Option<&[T]> = None;
        for &i in &order {
            if self.weight(i) > T::zero() && prev != Some(self.point(i)) {
                count += 1;
                prev = Some(self.point(i));
            }
        }
        count
    }

    /// Same measure with points sorted lexicographically and duplicates merged.
    pub fn merged(&self) -> Self {
        let mut coords = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        for i in self.lex_order() {
            if !(self.weight(i) > T::zero()) {
                continue;
            }
            let p = self.point(i);
            if !weights.is_empty() && &coords[coords.len() - self.dim..] == p {
                *weights.last_mut().unwrap() += self.weight(i);
            } else {
                coords.extend_from_slice(p);
                weights.push(self.weight(i));
            }
        }
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// Same measure with points sorted lexicographically (duplicates kept).
    pub(crate) fn sorted(&self) -> Self {
        let order = self.lex_order();
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut weights = Vec::with_capacity(self.len());
        for i in order {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weight(i));
        }
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|&x| x * factor).collect(),
            weights: self.weights.clone(),
        }
    }
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite coordinates") {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// `n >= 1` pairwise distinct points.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Real> Codebook<T> {
    pub fn new(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Domain("codebook must hold at least one point".into()));
        }
        let cb = Self { dim, coords };
        let n = cb.len();
        for a in 0..n {
            for b in a + 1..n {
                if cb.point(a) == cb.point(b) {
                    return Err(Error::Domain(format!(
                        "codebook points {} and {} coincide",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(cb)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|&x| x * factor).collect(),
        }
    }
}

#[inline]
pub(crate) fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// `d^r` from a squared distance.
#[inline]
pub(crate) fn pow_r<T: Real>(d2: T, r: T) -> T {
    if r == T::lit(2.0) {
        d2
    } else if r == T::one() {
        d2.sqrt()
    } else {
        d2.powf(r / T::lit(2.0))
    }
}

/// Nearest-center assignment with ties going to the lowest center index.
pub(crate) struct Assignment<T> {
    pub labels: Vec<usize>,
    /// Squared distance of each point to its center.
    pub d2: Vec<T>,
}

pub(crate) fn assign<T: Real>(cloud: &WeightedCloud<T>, codebook: &Codebook<T>, sorted_1d: bool) -> Assignment<T> {
    let n = codebook.len();
    let mut labels = Vec::with_capacity(cloud.len());
    let mut d2 = Vec::with_capacity(cloud.len());
    if cloud.dim() == 1 && n > 1 {
        let mut centers: Vec<(T, usize)> = (0..n).map(|k| (codebook.point(k)[0], k)).collect();
        centers.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let better = |x: T, a: (T, usize), b: (T, usize)| {
            let (da, db) = ((x - a.0).abs(), (x - b.0).abs());
            db < da || (db == da && b.1 < a.1)
        };
        let mut k = 0;
        for i in 0..cloud.len() {
            let x = cloud.point(i)[0];
            if sorted_1d {
                while k + 1 < n && better(x, centers[k], centers[k + 1]) {
                    k += 1;
                }
            } else {
                let pos = centers.partition_point(|c| c.0 < x);
                k = if pos == 0 {
                    0
                } else if pos == n || better(x, centers[pos], centers[pos - 1]) {
                    pos - 1
                } else {
                    pos
                };
            }
            let (c, idx) = centers[k];
            labels.push(idx);
            d2.push((x - c) * (x - c));
        }
        return Assignment { labels, d2 };
    }
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let mut best = (0, dist2(p, codebook.point(0)));
        for k in 1..n {
            let d = dist2(p, codebook.point(k));
            if d < best.1 {
                best = (k, d);
            }
        }
        labels.push(best.0);
        d2.push(best.1);
    }
    Assignment { labels, d2 }
}

/// `V = sum_x weight(x) min_a |x - a|^r`.
pub fn quantization_error<T: Real>(cloud: &WeightedCloud<T>, codebook: &Codebook<T>, r: T) -> Result<T> {
    check_order(r)?;
    check_dims(cloud, codebook)?;
    let a = assign(cloud, codebook, false);
    Ok(weighted_cost(cloud, &a.d2, r))
}

pub(crate) fn weighted_cost<T: Real>(cloud: &WeightedCloud<T>, d2: &[T], r: T) -> T {
    cloud
        .weights()
        .iter()
        .zip(d2)
        .map(|(&w, &d)| w * pow_r(d, r))
        .fold(T::zero(), |acc, v| acc + v)
}

pub(crate) fn check_order<T: Real>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("order r = {r} must be positive")))
    }
}

fn check_dims<T: Real>(cloud: &WeightedCloud<T>, codebook: &Codebook<T>) -> Result<()> {
    if cloud.dim() != codebook.dim() {
        return Err(Error::Domain(format!(
            "cloud dimension {} differs from codebook dimension {}",
            cloud.dim(),
            codebook.dim()
        )));
    }
    Ok(())
}

/// Voronoi-cell diagnostics of a codebook on an empirical measure.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiStats<T> {
    pub cell_mass: Vec<T>,
    /// Largest in-cell distance to the cell's center.
    pub cell_max_distance: Vec<T>,
    /// `max` of `cell_max_distance`: the covering radius of the codebook.
    pub covering_radius: T,
    /// `min over sample points x of mu(B(x, covering_radius / 2))`.
    pub min_ball_mass: T,
    /// `(covering_radius / 2)^r * min_ball_mass`
    pub lower_side: T,
    pub error: T,
    /// `lower_side <= error`
    pub holds: bool,
}

pub fn voronoi_stats<T: Real>(cloud: &WeightedCloud<T>, codebook: &Codebook<T>, r: T) -> Result<VoronoiStats<T>> {
    check_order(r)?;
    check_dims(cloud, codebook)?;
    let a = assign(cloud, codebook, false);
    let n = codebook.len();
    let mut cell_mass = vec![T::zero(); n];
    let mut cell_max_distance = vec![T::zero(); n];
    for (i, (&k, &d)) in a.labels.iter().zip(&a.d2).enumerate() {
        cell_mass[k] += cloud.weight(i);
        cell_max_distance[k] = cell_max_distance[k].max(d.sqrt());
    }
    let covering_radius = cell_max_distance.iter().copied().fold(T::zero(), T::max);
    let half = covering_radius / T::lit(2.0);
    let min_ball_mass = min_ball_mass(cloud, half);
    let error = weighted_cost(cloud, &a.d2, r);
    let lower_side = half.powf(r) * min_ball_mass;
    let holds = lower_side <= error + T::tol(1e-12) * error.abs();
    Ok(VoronoiStats {
        cell_mass,
        cell_max_distance,
        covering_radius,
        min_ball_mass,
        lower_side,
        error,
        holds,
    })
}

/// Smallest closed-ball mass `mu(B(x, radius))` over the cloud's points.
pub fn min_ball_mass<T: Real>(cloud: &WeightedCloud<T>, radius: T) -> T {
    if cloud.is_empty() {
        return T::zero();
    }
    // Sorting by the first coordinate confines each ball to a slab.
    let sorted = cloud.sorted();
    let m = sorted.len();
    let key = |i: usize| sorted.point(i)[0];
    let r2 = radius * radius;
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(T::zero());
    for i in 0..m {
        let last = prefix[i];
        prefix.push(last + sorted.weight(i));
    }
    let (mut lo, mut hi) = (0, 0);
    let mut best = T::infinity();
    for i in 0..m {
        let x = key(i);
        while key(lo) < x - radius {
            lo += 1;
        }
        while hi < m && key(hi) <= x + radius {
            hi += 1;
        }
        let mass = if sorted.dim() == 1 {
            prefix[hi] - prefix[lo]
        } else {
            let p = sorted.point(i);
            (lo..hi)
                .filter(|&j| dist2(p, sorted.point(j)) <= r2)
                .map(|j| sorted.weight(j))
                .fold(T::zero(), |acc, w| acc + w)
        };
        best = best.min(mass);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> WeightedCloud<f64> {
        WeightedCloud::uniform(1, xs.to_vec()).unwrap()
    }

    fn book(xs: &[f64]) -> Codebook<f64> {
        Codebook::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn error_examples() {
        let two = line(&[0.0, 1.0]);
        assert_eq!(quantization_error(&two, &book(&[0.0, 1.0]), 2.0).unwrap(), 0.0);
        assert_eq!(quantization_error(&two, &book(&[0.5]), 2.0).unwrap(), 0.25);
        let four = line(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let v = quantization_error(&four, &book(&[1.0 / 6.0, 5.0 / 6.0]), 1.0).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn codebook_rejects_duplicates_and_empty() {
        assert!(Codebook::new(1, vec![0.5, 0.5]).is_err());
        assert!(Codebook::<f64>::new(1, vec![]).is_err());
    }

    #[test]
    fn cloud_rejects_bad_weights() {
        assert!(WeightedCloud::new(1, vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(WeightedCloud::new(1, vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cloud = line(&[0.5]);
        for sorted in [false, true] {
            let a = assign(&cloud, &book(&[1.0, 0.0]), sorted);
            assert_eq!(a.labels, vec![0]);
            let a = assign(&cloud, &book(&[0.0, 1.0]), sorted);
            assert_eq!(a.labels, vec![0]);
        }
        let planar = WeightedCloud::uniform(2, vec![0.0, 0.0]).unwrap();
        let cb = Codebook::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(assign(&planar, &cb, false).labels, vec![0]);
    }

    #[test]
    fn sweep_matches_binary_search() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 199.0).collect();
        let cloud = line(&xs).sorted();
        let cb = book(&[0.9, 0.1, 0.45, 0.5, 0.77]);
        let a = assign(&cloud, &cb, true);
        let b = assign(&cloud, &cb, false);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn voronoi_examples() {
        let two = line(&[0.0, 1.0]);
        let s = voronoi_stats(&two, &book(&[0.0, 1.0]), 2.0).unwrap();
        assert_eq!(s.covering_radius, 0.0);
        assert_eq!(s.lower_side, 0.0);
        assert!(s.holds);

        let s = voronoi_stats(&two, &book(&[0.5]), 2.0).unwrap();
        assert_eq!(s.covering_radius, 0.5);
        assert_eq!(s.min_ball_mass, 0.5);
        assert_eq!(s.lower_side, 1.0 / 32.0);
        assert_eq!(s.error, 0.25);
        assert!(s.holds);
        assert_eq!(s.cell_mass.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn ball_mass_planar_matches_brute_force() {
        let coords: Vec<f64> = (0..60).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect();
        let cloud = WeightedCloud::uniform(2, coords).unwrap();
        let radius = 0.2;
        let brute = (0..cloud.len())
            .map(|i| {
                (0..cloud.len())
                    .filter(|&j| dist2(cloud.point(i), cloud.point(j)) <= radius * radius)
                    .map(|j| cloud.weight(j))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((min_ball_mass(&cloud, radius) - brute).abs() < 1e-15);
    }

    #[test]
    fn distinct_support_merges_duplicates() {
        let cloud = line(&[0.2, 0.1, 0.2, 0.3]);
        assert_eq!(cloud.distinct_support(), 3);
        let m = cloud.merged();
        assert_eq!(m.coords(), &[0.1, 0.2, 0.3]);
        assert_eq!(m.weights(), &[0.25, 0.5, 0.25]);
    }
}
