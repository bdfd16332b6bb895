use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{assign, check_order, dist2, pow_r, weighted_cost, Assignment, Codebook, WeightedCloud};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inner step cap for the fixed-point re-centering used when `r` is not 1 or 2.
const INNER_STEPS: usize = 50;

/// Iteration cap for the two-center descent that splits a cell.
const SPLIT_STEPS: usize = 30;

#[derive(Clone, Debug)]
pub struct LloydOptions<T> {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once an outer iteration lowers the error by at most this fraction.
    pub rel_tol: T,
    /// Optional warm start; completed to `n` points by seeding and run as one
    /// extra candidate after the seeded restarts.
    pub init: Option<Codebook<T>>,
}

impl<T: Real> Default for LloydOptions<T> {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 100,
            seed: 0,
            rel_tol: T::lit(1e-10),
            init: None,
        }
    }
}

/// Best codebook found over all restarts.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationRun<T> {
    pub r: T,
    pub n: usize,
    pub codebook: Codebook<T>,
    /// Quantization error `V` on the cloud.
    pub error: T,
    /// `V^(1/r)`
    pub e: T,
    pub iterations: usize,
    pub seed: u64,
    /// Winning candidate; equals the restart count for the warm start.
    pub best_restart: usize,
    /// Error after each outer iteration of the winning candidate.
    pub trace: Vec<T>,
    pub samples: usize,
    pub flags: Vec<String>,
}

struct Candidate<T> {
    centers: Vec<T>,
    error: T,
    trace: Vec<T>,
}

/// Lloyd iterations from D^r-weighted seeding, best of `restarts`.
///
/// Each outer iteration assigns points to their nearest center (lowest index
/// on ties) and re-centers every cell: weighted mean for `r = 2`, weighted
/// median for `r = 1` on the line, and a damped fixed-point descent
/// otherwise. Empty cells are moved to the point farthest from its center.
pub fn lloyd_optimize<T: Real>(
    cloud: &WeightedCloud<T>,
    n: usize,
    r: T,
    opts: &LloydOptions<T>,
) -> Result<QuantizationRun<T>> {
    check_order(r)?;
    if n == 0 {
        return Err(Error::Domain("codebook size must be at least 1".into()));
    }
    let distinct = cloud.distinct_support();
    if n > distinct {
        return Err(Error::Domain(format!(
            "codebook size {n} exceeds the {distinct} distinct support points"
        )));
    }
    if let Some(init) = &opts.init {
        if init.dim() != cloud.dim() || init.len() > n {
            return Err(Error::Domain("warm start does not fit the requested codebook".into()));
        }
    }
    let sorted_1d = cloud.dim() == 1;
    let work = if sorted_1d { cloud.sorted() } else { cloud.clone() };
    let restarts = opts.restarts.max(1);
    let total = restarts + usize::from(opts.init.is_some());

    let candidates: Vec<Candidate<T>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let centers = match (&opts.init, k >= restarts) {
                (Some(init), true) => {
                    let split = split_cells(&work, n, r, init, sorted_1d);
                    seed_centers(&work, n, r, split, &mut rng, sorted_1d)
                }
                _ => seed_centers(&work, n, r, Vec::new(), &mut rng, sorted_1d),
            };
            descend(&work, centers, r, opts, sorted_1d)
        })
        .collect();

    let (best_restart, best) = candidates
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.error < a.1.error { b } else { a })
        .expect("at least one candidate");
    let mut flags = Vec::new();
    if r < T::one() {
        flags.push("order below 1: re-centering reaches a local stationary point".into());
    }
    Ok(QuantizationRun {
        r,
        n,
        codebook: Codebook::new(cloud.dim(), best.centers)?,
        error: best.error,
        e: best.error.powf(r.recip()),
        iterations: best.trace.len() - 1,
        seed: opts.seed,
        best_restart,
        trace: best.trace,
        samples: cloud.len(),
        flags,
    })
}

/// Completes `centers` to `n` points, each new one drawn with probability
/// proportional to `weight * D^r`, where `D` is the distance to the nearest
/// chosen center.
///
/// On a sorted line the points a new center captures form a contiguous run
/// around it, so only that run is rescored.
fn seed_centers<T: Real>(
    cloud: &WeightedCloud<T>,
    n: usize,
    r: T,
    mut centers: Vec<T>,
    rng: &mut ChaCha8Rng,
    sorted_1d: bool,
) -> Vec<T> {
    let dim = cloud.dim();
    let m = cloud.len();
    let mut near = vec![T::infinity(); m];
    let mut score = Fenwick::new(cloud.weights());
    let visit = |i: usize, c: &[T], near: &mut [T], score: &mut Fenwick<T>| {
        let d = dist2(cloud.point(i), c);
        if d < near[i] {
            near[i] = d;
            score.set(i, cloud.weight(i) * pow_r(d, r));
            true
        } else {
            false
        }
    };
    let update = |c: &[T], near: &mut [T], score: &mut Fenwick<T>| {
        if sorted_1d {
            let start = cloud.coords().partition_point(|&v| v < c[0]);
            for i in start..m {
                if !visit(i, c, near, score) {
                    break;
                }
            }
            for i in (0..start).rev() {
                if !visit(i, c, near, score) {
                    break;
                }
            }
        } else {
            for i in 0..m {
                visit(i, c, near, score);
            }
        }
    };
    for c in centers.chunks(dim) {
        update(c, &mut near, &mut score);
    }
    while centers.len() < n * dim {
        let total = score.total();
        if !(total > T::zero()) {
            break;
        }
        let target = T::lit(rng.random::<f64>()) * total;
        let Some(pick) = score.find(target) else {
            break;
        };
        let p = cloud.point(pick).to_vec();
        update(&p, &mut near, &mut score);
        centers.extend(p);
    }
    centers
}

/// Grows `init` toward `n` centers by repeatedly splitting the cell with the
/// largest cost into two, each pair placed by a two-center descent inside
/// that cell. Stops early when no cell with positive cost can be split.
fn split_cells<T: Real>(cloud: &WeightedCloud<T>, n: usize, r: T, init: &Codebook<T>, sorted_1d: bool) -> Vec<T> {
    let dim = cloud.dim();
    let mut centers: Vec<Vec<T>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    if init.is_empty() {
        let all: Vec<usize> = (0..cloud.len()).collect();
        centers.push(cell_center(cloud, &all, cloud.point(0), r));
        cells.push(all);
    } else {
        let a = assign(cloud, init, sorted_1d);
        cells = vec![Vec::new(); init.len()];
        for (i, &k) in a.labels.iter().enumerate() {
            cells[k].push(i);
        }
        centers = (0..init.len()).map(|k| init.point(k).to_vec()).collect();
    }
    let mut costs: Vec<T> = cells
        .iter()
        .zip(&centers)
        .map(|(cell, c)| cell_cost(cloud, cell, c, r))
        .collect();
    while centers.len() < n {
        let Some((worst, _)) = costs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > T::zero())
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        else {
            break;
        };
        let Some((left, right)) = two_centers(cloud, &cells[worst], &centers[worst], r) else {
            costs[worst] = T::zero();
            continue;
        };
        for (slot, (cell, c)) in [(worst, left), (centers.len(), right)] {
            let cost = cell_cost(cloud, &cell, &c, r);
            if slot == centers.len() {
                centers.push(c);
                cells.push(cell);
                costs.push(cost);
            } else {
                centers[slot] = c;
                cells[slot] = cell;
                costs[slot] = cost;
            }
        }
    }
    let mut flat = Vec::with_capacity(centers.len() * dim);
    centers.into_iter().for_each(|c| flat.extend(c));
    flat
}

type Half<T> = (Vec<usize>, Vec<T>);

/// Lloyd iterations with two centers restricted to `cell`, started from the
/// current center and the member farthest from it.
fn two_centers<T: Real>(cloud: &WeightedCloud<T>, cell: &[usize], center: &[T], r: T) -> Option<(Half<T>, Half<T>)> {
    let far = *cell.iter().max_by(|&&i, &&j| {
        dist2(cloud.point(i), center)
            .partial_cmp(&dist2(cloud.point(j), center))
            .unwrap()
    })?;
    let mut a = center.to_vec();
    let mut b = cloud.point(far).to_vec();
    if dist2(&a, &b) == T::zero() {
        return None;
    }
    let mut sides: (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    for _ in 0..SPLIT_STEPS {
        let next: (Vec<usize>, Vec<usize>) = cell
            .iter()
            .partition(|&&i| dist2(cloud.point(i), &a) <= dist2(cloud.point(i), &b));
        if next.0.is_empty() || next.1.is_empty() {
            return None;
        }
        if next == sides {
            break;
        }
        a = cell_center(cloud, &next.0, &a, r);
        b = cell_center(cloud, &next.1, &b, r);
        sides = next;
    }
    Some(((sides.0, a), (sides.1, b)))
}

/// Binary indexed tree over nonnegative scores for proportional draws.
struct Fenwick<T> {
    values: Vec<T>,
    tree: Vec<T>,
}

impl<T: Real> Fenwick<T> {
    fn new(values: &[T]) -> Self {
        let m = values.len();
        let mut tree = vec![T::zero(); m + 1];
        for (i, &v) in values.iter().enumerate() {
            tree[i + 1] += v;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= m {
                let carry = tree[i + 1];
                tree[parent] += carry;
            }
        }
        Self {
            values: values.to_vec(),
            tree,
        }
    }

    fn set(&mut self, i: usize, v: T) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> T {
        let mut k = self.values.len();
        let mut s = T::zero();
        while k > 0 {
            s += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        s
    }

    /// Smallest index whose running total exceeds `target`, moved to the
    /// nearest positive score if rounding lands on a zero one.
    fn find(&self, target: T) -> Option<usize> {
        let m = self.values.len();
        let mut pos = 0;
        let mut rest = target;
        let mut step = m.checked_next_power_of_two().unwrap_or(0).max(1);
        while step > 0 {
            let next = pos + step;
            if next <= m && self.tree[next] <= rest {
                pos = next;
                rest -= self.tree[next];
            }
            step >>= 1;
        }
        let i = pos.min(m - 1);
        let positive = |&k: &usize| self.values[k] > T::zero();
        (i..m).find(positive).or_else(|| (0..i).rev().find(positive))
    }
}

fn descend<T: Real>(
    cloud: &WeightedCloud<T>,
    mut centers: Vec<T>,
    r: T,
    opts: &LloydOptions<T>,
    sorted_1d: bool,
) -> Candidate<T> {
    let dim = cloud.dim();
    let book = |c: &[T]| Codebook {
        dim,
        coords: c.to_vec(),
    };
    let mut a = assign(cloud, &book(&centers), sorted_1d);
    let mut error = weighted_cost(cloud, &a.d2, r);
    let mut trace = vec![error];
    for _ in 0..opts.max_iters {
        if error == T::zero() {
            break;
        }
        let next = recenter(cloud, &centers, &a, r);
        let b = assign(cloud, &book(&next), sorted_1d);
        let next_error = weighted_cost(cloud, &b.d2, r);
        if next_error > error {
            break;
        }
        let gain = error - next_error;
        centers = next;
        a = b;
        error = next_error;
        trace.push(error);
        if gain <= opts.rel_tol * trace[trace.len() - 2] {
            break;
        }
    }
    Candidate { centers, error, trace }
}

fn recenter<T: Real>(cloud: &WeightedCloud<T>, centers: &[T], a: &Assignment<T>, r: T) -> Vec<T> {
    let dim = cloud.dim();
    let n = centers.len() / dim;
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &k) in a.labels.iter().enumerate() {
        if cloud.weight(i) > T::zero() {
            cells[k].push(i);
        }
    }
    let mut next = centers.to_vec();
    let mut vacant = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        if cell.is_empty() {
            vacant.push(k);
            continue;
        }
        let old = &centers[k * dim..(k + 1) * dim];
        let c = cell_center(cloud, cell, old, r);
        next[k * dim..(k + 1) * dim].copy_from_slice(&c);
    }
    // A center landing on an earlier one serves no points of its own.
    let mut seen = HashSet::with_capacity(n);
    for k in 0..n {
        if !seen.insert(key(&next[k * dim..(k + 1) * dim])) && !vacant.contains(&k) {
            vacant.push(k);
        }
    }
    if vacant.is_empty() {
        return next;
    }
    let mut occupied: HashSet<Vec<u64>> = (0..n)
        .filter(|k| !vacant.contains(k))
        .map(|k| key(&next[k * dim..(k + 1) * dim]))
        .collect();
    let mut order: Vec<usize> = (0..cloud.len())
        .filter(|&i| a.d2[i] > T::zero() && cloud.weight(i) > T::zero())
        .collect();
    order.sort_by(|&i, &j| a.d2[j].partial_cmp(&a.d2[i]).unwrap());
    let mut far = order.into_iter();
    for k in vacant {
        if let Some(i) = far.by_ref().find(|&i| !occupied.contains(&key(cloud.point(i)))) {
            occupied.insert(key(cloud.point(i)));
            next[k * dim..(k + 1) * dim].copy_from_slice(cloud.point(i));
        }
    }
    next
}

fn key<T: Real>(p: &[T]) -> Vec<u64> {
    p.iter().map(|&x| (x.to_f64_lossy() + 0.0).to_bits()).collect()
}

fn cell_cost<T: Real>(cloud: &WeightedCloud<T>, cell: &[usize], c: &[T], r: T) -> T {
    cell.iter()
        .map(|&i| cloud.weight(i) * pow_r(dist2(cloud.point(i), c), r))
        .fold(T::zero(), |a, b| a + b)
}

fn cell_center<T: Real>(cloud: &WeightedCloud<T>, cell: &[usize], old: &[T], r: T) -> Vec<T> {
    let dim = cloud.dim();
    if r == T::lit(2.0) {
        let mut mass = T::zero();
        let mut sum = vec![T::zero(); dim];
        for &i in cell {
            let w = cloud.weight(i);
            mass += w;
            for (s, &x) in sum.iter_mut().zip(cloud.point(i)) {
                *s += w * x;
            }
        }
        return sum.into_iter().map(|s| s / mass).collect();
    }
    if r == T::one() && dim == 1 {
        return vec![weighted_median(cloud, cell)];
    }
    fixed_point_center(cloud, cell, old, r)
}

fn weighted_median<T: Real>(cloud: &WeightedCloud<T>, cell: &[usize]) -> T {
    let mut vals: Vec<(T, T)> = cell.iter().map(|&i| (cloud.point(i)[0], cloud.weight(i))).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let half = vals.iter().map(|v| v.1).fold(T::zero(), |a, b| a + b) / T::lit(2.0);
    let mut acc = T::zero();
    for &(x, w) in &vals {
        acc += w;
        if acc >= half {
            return x;
        }
    }
    vals[vals.len() - 1].0
}

/// Damped Weiszfeld-type descent on `sum w |x - a|^r`, starting from the
/// current center and accepting only steps that lower the cell cost.
fn fixed_point_center<T: Real>(cloud: &WeightedCloud<T>, cell: &[usize], old: &[T], r: T) -> Vec<T> {
    let dim = cloud.dim();
    let two = T::lit(2.0);
    let mut a = old.to_vec();
    let radius = cell
        .iter()
        .map(|&i| dist2(cloud.point(i), &a))
        .fold(T::zero(), T::max)
        .sqrt();
    if radius == T::zero() {
        return a;
    }
    let floor = T::epsilon().sqrt() * radius;
    let settle = T::tol(1e-12) * radius;
    let mut cost = cell_cost(cloud, cell, &a, r);
    for _ in 0..INNER_STEPS {
        let mut num = vec![T::zero(); dim];
        let mut den = T::zero();
        for &i in cell {
            let x = cloud.point(i);
            let d = dist2(x, &a).sqrt().max(floor);
            let g = cloud.weight(i) * d.powf(r - two);
            den += g;
            for k in 0..dim {
                num[k] += g * x[k];
            }
        }
        let target: Vec<T> = num.iter().map(|&v| v / den).collect();
        if dist2(&target, &a).sqrt() <= settle {
            break;
        }
        let mut step = T::one();
        let mut moved = false;
        while step > T::lit(1e-6) {
            let trial: Vec<T> = a.iter().zip(&target).map(|(&x, &t)| x + step * (t - x)).collect();
            let trial_cost = cell_cost(cloud, cell, &trial, r);
            if trial_cost < cost {
                a = trial;
                cost = trial_cost;
                moved = true;
                break;
            }
            step /= two;
        }
        if !moved {
            break;
        }
    }
    a
}
