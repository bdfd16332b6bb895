//! Small dense matrices and the support digraph of a nonnegative matrix.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Domain("matrix has no rows".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `y = M x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `y = x^T M`
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, &m) in y.iter_mut().zip(self.row(i)) {
                *yj += xi * m;
            }
        }
        y
    }

    pub fn add_identity(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            let v = m.get(i, i) + T::one();
            m.set(i, i, v);
        }
        m
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= T::zero())
    }

    /// Digraph with an edge `i -> j` wherever the entry is strictly positive.
    pub fn support(&self) -> Support {
        Support::from_fn(self.n, |i, j| self.get(i, j) > T::zero())
    }
}

/// Directed graph on `0..n`, successor lists sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    succ: Vec<Vec<usize>>,
}

impl Support {
    pub fn from_fn(n: usize, edge: impl Fn(usize, usize) -> bool) -> Self {
        let succ = (0..n).map(|i| (0..n).filter(|&j| edge(i, j)).collect()).collect();
        Self { succ }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.succ.len()
    }

    #[inline]
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.succ[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }

    pub fn reversed(&self) -> Support {
        let mut succ = vec![Vec::new(); self.n()];
        for (i, j) in self.edges() {
            succ[j].push(i);
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        Support { succ }
    }

    /// BFS distances from `start`; `None` for unreachable vertices.
    pub fn distances_from(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[start] = Some(0);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in self.successors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n() == 0 {
            return false;
        }
        self.distances_from(0).iter().all(Option::is_some)
            && self.reversed().distances_from(0).iter().all(Option::is_some)
    }

    /// Number of directed paths with `steps` edges, i.e. the number of
    /// admissible words of length `steps + 1`. Saturates at `u128::MAX`.
    pub fn path_count(&self, steps: usize) -> u128 {
        let mut ways = vec![1u128; self.n()];
        for _ in 0..steps {
            ways = (0..self.n())
                .map(|i| {
                    self.successors(i)
                        .iter()
                        .fold(0u128, |acc, &j| acc.saturating_add(ways[j]))
                })
                .collect();
        }
        ways.iter().fold(0u128, |acc, &w| acc.saturating_add(w))
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear<T: Real>(a: &SquareMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.n();
    let mut m: Vec<Vec<T>> = a.rows();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() <= T::epsilon() {
            return Err(Error::Precondition("singular linear system".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == T::zero() {
                continue;
            }
            let (top, bottom) = m.split_at_mut(row);
            for (dst, &v) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *dst -= factor * v;
            }
            let v = rhs[col];
            rhs[row] -= factor * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail: T = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Ok(x)
}

/// Singular values of a `k x k` row-major matrix, descending.
///
/// Computed as square roots of the eigenvalues of `A^T A` by cyclic Jacobi
/// rotations; intended for the tiny linear parts of affine maps.
pub fn singular_values<T: Real>(a: &[T], k: usize) -> Vec<T> {
    assert_eq!(a.len(), k * k, "matrix must be k x k");
    if k == 1 {
        return vec![a[0].abs()];
    }
    // G = A^T A
    let mut g = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = (0..k).map(|l| a[l * k + i] * a[l * k + j]).sum();
        }
    }
    for _sweep in 0..64 {
        let off: T = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g[i * k + j] * g[i * k + j])
            .sum();
        if off <= T::epsilon() * T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = g[p * k + q];
                if apq == T::zero() {
                    continue;
                }
                let app = g[p * k + p];
                let aqq = g[q * k + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..k {
                    let grp = g[r * k + p];
                    let grq = g[r * k + q];
                    g[r * k + p] = c * grp - s * grq;
                    g[r * k + q] = s * grp + c * grq;
                }
                for r in 0..k {
                    let gpr = g[p * k + r];
                    let gqr = g[q * k + r];
                    g[p * k + r] = c * gpr - s * gqr;
                    g[q * k + r] = s * gpr + c * gqr;
                }
            }
        }
    }
    let mut sv: Vec<T> = (0..k).map(|i| g[i * k + i].max(T::zero()).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_connectivity() {
        let cyc = Support::from_fn(3, |i, j| j == (i + 1) % 3);
        assert!(cyc.is_strongly_connected());
        let split = Support::from_fn(2, |i, j| i == j);
        assert!(!split.is_strongly_connected());
        let one_way = Support::from_fn(2, |i, j| i <= j);
        assert!(!one_way.is_strongly_connected());
    }

    #[test]
    fn path_counts_match_golden_mean_shift() {
        // [[1,1],[1,0]]: counts are Fibonacci numbers
        let s = Support::from_fn(2, |i, j| !(i == 1 && j == 1));
        let counts: Vec<u128> = (0..6).map(|k| s.path_count(k)).collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21]);
    }

    #[test]
    fn solve_small_system() {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x: Vec<f64> = solve_linear(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn singular_values_of_rotation_and_shear() {
        let th: f64 = 0.7;
        let rot = [0.5 * th.cos(), -0.5 * th.sin(), 0.5 * th.sin(), 0.5 * th.cos()];
        let sv = singular_values(&rot, 2);
        assert!((sv[0] - 0.5).abs() < 1e-14 && (sv[1] - 0.5).abs() < 1e-14);

        // [[1,1],[0,1]] has singular values golden ratio and its inverse
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let sv = singular_values(&[1.0, 1.0, 0.0, 1.0], 2);
        assert!((sv[0] - phi).abs() < 1e-12 && (sv[1] - 1.0 / phi).abs() < 1e-12);

        let diag = [0.2f64, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.3];
        let sv = singular_values(&diag, 3);
        assert!((sv[0] - 0.5).abs() < 1e-15 && (sv[2] - 0.2).abs() < 1e-15);
    }
}
