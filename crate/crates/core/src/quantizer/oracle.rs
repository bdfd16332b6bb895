use super::{assign, check_dims, dist2, pow_r, Codebook, WeightedCloud};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const ORACLE_MAX_POINTS: usize = 14;
pub const ORACLE_MAX_CODEBOOK: usize = 5;

/// Exact optimum of the discrete quantization problem.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<T> {
    pub error: T,
    pub codebook: Codebook<T>,
    /// Cell of each input point, indexing into `codebook`.
    pub labels: Vec<usize>,
}

/// Optimal `n`-point codebook for a small weighted cloud, by exhaustive search.
///
/// On the line every optimal cell is an interval of the sorted support, so
/// the search runs over compositions. In higher dimension only `r = 2` is
/// supported; there the search runs over all set partitions into `n` blocks
/// with branch-and-bound on the within-cell variance.
pub fn oracle_optimal<T: Real>(cloud: &WeightedCloud<T>, n: usize, r: T) -> Result<OracleResult<T>> {
    let one = r == T::one();
    let two = r == T::lit(2.0);
    if !(one || two) {
        return Err(Error::Domain("the exact oracle supports r = 1 and r = 2 only".into()));
    }
    if one && cloud.dim() != 1 {
        return Err(Error::Domain("the exact oracle supports r = 1 on the line only".into()));
    }
    if cloud.len() > ORACLE_MAX_POINTS {
        return Err(Error::Resource {
            what: "oracle points",
            needed: cloud.len() as u128,
            cap: ORACLE_MAX_POINTS as u128,
        });
    }
    if n > ORACLE_MAX_CODEBOOK {
        return Err(Error::Resource {
            what: "oracle codebook size",
            needed: n as u128,
            cap: ORACLE_MAX_CODEBOOK as u128,
        });
    }
    if n == 0 {
        return Err(Error::Domain("codebook size must be at least 1".into()));
    }
    let support = cloud.merged();
    if n > support.len() {
        return Err(Error::Domain(format!(
            "codebook size {n} exceeds the {} distinct support points",
            support.len()
        )));
    }
    let centers = if support.dim() == 1 {
        intervals(&support, n, r)
    } else {
        partitions(&support, n)
    };
    let codebook = Codebook::new(support.dim(), centers)?;
    check_dims(cloud, &codebook)?;
    let a = assign(cloud, &codebook, false);
    let error =
        a.d2.iter()
            .zip(cloud.weights())
            .map(|(&d, &w)| w * pow_r(d, r))
            .fold(T::zero(), |s, v| s + v);
    Ok(OracleResult {
        error,
        codebook,
        labels: a.labels,
    })
}

/// Optimal center and cost of the cell `lo..hi` of a sorted 1-D support.
fn interval_cell<T: Real>(xs: &[T], ws: &[T], lo: usize, hi: usize, r: T) -> (T, T) {
    let (x, w) = (&xs[lo..hi], &ws[lo..hi]);
    let mass = w.iter().fold(T::zero(), |a, &b| a + b);
    let center = if r == T::one() {
        let mut acc = T::zero();
        let mut med = x[x.len() - 1];
        for (&xi, &wi) in x.iter().zip(w) {
            acc += wi;
            if acc + acc >= mass {
                med = xi;
                break;
            }
        }
        med
    } else {
        x.iter().zip(w).fold(T::zero(), |a, (&xi, &wi)| a + xi * wi) / mass
    };
    let cost = x
        .iter()
        .zip(w)
        .fold(T::zero(), |a, (&xi, &wi)| a + wi * ((xi - center).abs()).powf(r));
    (center, cost)
}

fn intervals<T: Real>(support: &WeightedCloud<T>, n: usize, r: T) -> Vec<T> {
    let xs = support.coords();
    let ws = support.weights();
    let m = xs.len();
    let mut best = (T::infinity(), Vec::new());
    let mut cuts = Vec::with_capacity(n + 1);
    cuts.push(0);
    fn walk<T: Real>(xs: &[T], ws: &[T], r: T, n: usize, cuts: &mut Vec<usize>, cost: T, best: &mut (T, Vec<usize>)) {
        let m = xs.len();
        let start = *cuts.last().unwrap();
        let left = n + 1 - cuts.len();
        if left == 1 {
            let total = cost + interval_cell(xs, ws, start, m, r).1;
            if total < best.0 {
                cuts.push(m);
                *best = (total, cuts.clone());
                cuts.pop();
            }
            return;
        }
        for end in start + 1..=m - (left - 1) {
            let c = cost + interval_cell(xs, ws, start, end, r).1;
            if c >= best.0 {
                continue;
            }
            cuts.push(end);
            walk(xs, ws, r, n, cuts, c, best);
            cuts.pop();
        }
    }
    walk(xs, ws, r, n, &mut cuts, T::zero(), &mut best);
    debug_assert!(m >= n);
    best.1
        .windows(2)
        .map(|c| interval_cell(xs, ws, c[0], c[1], r).0)
        .collect()
}

#[derive(Clone)]
struct Cell<T> {
    mass: T,
    sum: Vec<T>,
    cost: T,
}

struct Search<'a, T> {
    cloud: &'a WeightedCloud<T>,
    n: usize,
    cells: Vec<Cell<T>>,
    labels: Vec<usize>,
    best_cost: T,
    best_labels: Vec<usize>,
}

impl<T: Real> Search<'_, T> {
    /// Restricted growth strings: point `i` joins an open cell or opens the
    /// next one, so each partition is visited once.
    fn visit(&mut self, i: usize, cost: T) {
        let m = self.cloud.len();
        if i == m {
            if self.cells.len() == self.n && cost < self.best_cost {
                self.best_cost = cost;
                self.best_labels = self.labels.clone();
            }
            return;
        }
        if self.n - self.cells.len() > m - i {
            return;
        }
        let x = self.cloud.point(i).to_vec();
        let w = self.cloud.weight(i);
        for k in 0..self.cells.len() {
            let saved = self.cells[k].clone();
            let cell = &mut self.cells[k];
            let mean: Vec<T> = cell.sum.iter().map(|&s| s / cell.mass).collect();
            let added = cell.mass * w / (cell.mass + w) * dist2(&x, &mean);
            let next = cost + added;
            if next >= self.best_cost {
                continue;
            }
            cell.cost += added;
            cell.mass += w;
            for (s, &xi) in cell.sum.iter_mut().zip(&x) {
                *s += w * xi;
            }
            self.labels[i] = k;
            self.visit(i + 1, next);
            self.cells[k] = saved;
        }
        if self.cells.len() < self.n {
            self.cells.push(Cell {
                mass: w,
                sum: x.iter().map(|&xi| w * xi).collect(),
                cost: T::zero(),
            });
            self.labels[i] = self.cells.len() - 1;
            self.visit(i + 1, cost);
            self.cells.pop();
        }
    }
}

fn partitions<T: Real>(support: &WeightedCloud<T>, n: usize) -> Vec<T> {
    let dim = support.dim();
    let mut search = Search {
        cloud: support,
        n,
        cells: Vec::with_capacity(n),
        labels: vec![0; support.len()],
        best_cost: T::infinity(),
        best_labels: Vec::new(),
    };
    search.visit(0, T::zero());
    let mut mass = vec![T::zero(); n];
    let mut sum = vec![T::zero(); n * dim];
    for (i, &k) in search.best_labels.iter().enumerate() {
        let w = support.weight(i);
        mass[k] += w;
        for (s, &x) in sum[k * dim..(k + 1) * dim].iter_mut().zip(support.point(i)) {
            *s += w * x;
        }
    }
    sum.chunks(dim)
        .zip(&mass)
        .flat_map(|(s, &m)| s.iter().map(move |&v| v / m).collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_points_two_centers() {
        let cloud = WeightedCloud::uniform(1, vec![1.0, 0.0, 2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let res = oracle_optimal(&cloud, 2, 2.0f64).unwrap();
        assert!((res.error - 1.0 / 36.0).abs() < 1e-15);
        assert_eq!(res.labels, vec![1, 0, 1, 0]);
        let r1 = oracle_optimal(&cloud, 2, 1.0f64).unwrap();
        assert!((r1.error - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn planar_partition_matches_interval_search_on_a_line() {
        let xs = [0.0, 0.1, 0.15, 0.5, 0.52, 0.9, 1.0];
        let line = WeightedCloud::uniform(1, xs.to_vec()).unwrap();
        let plane = WeightedCloud::uniform(2, xs.iter().flat_map(|&x| [x, 0.0]).collect()).unwrap();
        for n in 1..=4 {
            let a = oracle_optimal(&line, n, 2.0f64).unwrap();
            let b = oracle_optimal(&plane, n, 2.0).unwrap();
            assert!((a.error - b.error).abs() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn limits_are_enforced() {
        let big = WeightedCloud::uniform(1, (0..15).map(f64::from).collect()).unwrap();
        assert!(matches!(oracle_optimal(&big, 2, 2.0), Err(Error::Resource { .. })));
        let small = WeightedCloud::uniform(1, (0..8).map(f64::from).collect()).unwrap();
        assert!(matches!(oracle_optimal(&small, 6, 2.0), Err(Error::Resource { .. })));
        assert!(matches!(oracle_optimal(&small, 2, 1.5), Err(Error::Domain(_))));
        let plane = WeightedCloud::uniform(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(oracle_optimal(&plane, 1, 1.0), Err(Error::Domain(_))));
    }
}
