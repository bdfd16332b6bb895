//! Finite admissible words over the support digraph of the transition
//! matrix, their cylinder products, and threshold antichains.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::rifs::RifsSpec;
use crate::roots::decreasing_root_positive;
use crate::scalar::Real;

/// Default cap on the number of words a single enumeration may produce.
pub const DEFAULT_WORD_CAP: u128 = 10_000_000;

/// True iff every adjacent transition of `symbols` has positive probability.
/// Symbols are 0-based state indices.
pub fn is_admissible<T: Real>(symbols: &[usize], transition: &SquareMatrix<T>) -> Result<bool> {
    let n = transition.n();
    if let Some(&bad) = symbols.iter().find(|&&s| s >= n) {
        return Err(Error::Domain(format!("symbol {} outside 1..{n}", bad + 1)));
    }
    Ok(symbols.windows(2).all(|w| transition.get(w[0], w[1]) > T::zero()))
}

/// An admissible word with its cached products.
#[derive(Clone, Debug, PartialEq)]
pub struct Word<T> {
    symbols: Vec<usize>,
    /// `p_{w1} p_{w1 w2} ... p_{w(n-1) wn}`, which is also `nu([w])`.
    p: T,
    /// Product of the upper bounds `s` along the word's edges.
    s: T,
    /// Product of the lower bounds `c` along the word's edges.
    c: T,
}

/// The five products attached to a word for a given order `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordProducts<T> {
    pub p: T,
    pub s: T,
    pub c: T,
    pub p_s_r: T,
    pub p_c_r: T,
}

impl<T: Real> Word<T> {
    pub fn new(symbols: Vec<usize>, spec: &RifsSpec<T>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Domain("words have at least one symbol".into()));
        }
        if !is_admissible(&symbols, spec.transition())? {
            return Err(Error::Domain(format!(
                "word {} is not admissible",
                format_symbols(&symbols)
            )));
        }
        let mut w = Self {
            p: spec.stationary()[symbols[0]],
            s: T::one(),
            c: T::one(),
            symbols: vec![symbols[0]],
        };
        for &next in &symbols[1..] {
            w.push(next, spec);
        }
        Ok(w)
    }

    /// Appends an admissible symbol.
    fn push(&mut self, next: usize, spec: &RifsSpec<T>) {
        let last = self.last();
        let edge = spec.edge(last, next).expect("admissible extension");
        self.p *= spec.p(last, next);
        self.s *= edge.s;
        self.c *= edge.c;
        self.symbols.push(next);
    }

    fn extended(&self, next: usize, spec: &RifsSpec<T>) -> Self {
        let mut w = self.clone();
        w.push(next, spec);
        w
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn first(&self) -> usize {
        self.symbols[0]
    }

    pub fn last(&self) -> usize {
        *self.symbols.last().unwrap()
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// Mass of the cylinder `[w]`.
    pub fn nu(&self) -> T {
        self.p
    }

    pub fn products(&self, r: T) -> WordProducts<T> {
        WordProducts {
            p: self.p,
            s: self.s,
            c: self.c,
            p_s_r: self.p * self.s.powf(r),
            p_c_r: self.p * self.c.powf(r),
        }
    }

    /// True iff `prefix` is a (not necessarily proper) prefix of `self`.
    pub fn extends(&self, prefix: &Word<T>) -> bool {
        self.symbols.starts_with(&prefix.symbols)
    }

    /// `w tau`, when `p_{last(w) first(tau)} > 0`.
    pub fn concat(&self, tail: &Word<T>, spec: &RifsSpec<T>) -> Result<Self> {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&tail.symbols);
        Word::new(symbols, spec)
    }

    /// Dash-separated 1-based symbols, e.g. `1-2-1`.
    pub fn label(&self) -> String {
        format_symbols(&self.symbols)
    }
}

pub fn format_symbols(symbols: &[usize]) -> String {
    symbols
        .iter()
        .map(|s| (s + 1).to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// `p_w, s_w, c_w, p_w s_w^r, p_w c_w^r` of an admissible symbol string.
pub fn word_products<T: Real>(symbols: &[usize], spec: &RifsSpec<T>, r: T) -> Result<WordProducts<T>> {
    Ok(Word::new(symbols.to_vec(), spec)?.products(r))
}

/// `|Omega_n|`, or a resource error when it exceeds `cap`.
pub fn word_count<T: Real>(spec: &RifsSpec<T>, n: usize, cap: u128) -> Result<u128> {
    if n == 0 {
        return Err(Error::Domain("word length must be at least 1".into()));
    }
    let count = spec.support().path_count(n - 1);
    if count > cap {
        return Err(Error::Resource {
            what: "admissible words",
            needed: count,
            cap,
        });
    }
    Ok(count)
}

/// All admissible words of length `n`, in lexicographic order.
pub fn enumerate_words<T: Real>(spec: &RifsSpec<T>, n: usize, cap: u128) -> Result<Vec<Word<T>>> {
    let count = word_count(spec, n, cap)?;
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..spec.n() {
        let root = Word::new(vec![i], spec)?;
        extend_all(root, n, spec, &mut out);
    }
    Ok(out)
}

fn extend_all<T: Real>(w: Word<T>, n: usize, spec: &RifsSpec<T>, out: &mut Vec<Word<T>>) {
    if w.len() == n {
        out.push(w);
        return;
    }
    for &next in spec.support().successors(w.last()) {
        extend_all(w.extended(next, spec), n, spec, out);
    }
}

/// Weight whose threshold crossing defines an antichain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AntichainWeight<T> {
    /// `nu([w])`
    Nu,
    /// `(p_w s_w^r)^theta`
    ScaledMass { r: T, theta: T },
    /// `s_w^theta`
    Contraction { theta: T },
}

impl<T: Real> AntichainWeight<T> {
    pub fn of(&self, w: &Word<T>) -> T {
        match *self {
            Self::Nu => w.nu(),
            Self::ScaledMass { r, theta } => (w.p() * w.s().powf(r)).powf(theta),
            Self::Contraction { theta } => w.s().powf(theta),
        }
    }

    /// Multiplicative change of the weight along the edge `(i, j)`.
    pub fn edge_factor(&self, spec: &RifsSpec<T>, i: usize, j: usize) -> T {
        let edge = spec.edge(i, j).expect("admissible edge");
        match *self {
            Self::Nu => spec.p(i, j),
            Self::ScaledMass { r, theta } => (spec.p(i, j) * edge.s.powf(r)).powf(theta),
            Self::Contraction { theta } => edge.s.powf(theta),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Nu => "nu",
            Self::ScaledMass { .. } => "scaled-mass",
            Self::Contraction { .. } => "contraction",
        }
    }
}

/// A finite maximal antichain cut out by a weight threshold.
#[derive(Clone, Debug)]
pub struct Antichain<T> {
    pub members: Vec<Word<T>>,
    pub weight: AntichainWeight<T>,
    pub threshold: T,
}

impl<T: Real> Antichain<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sum nu([w])`; equals 1 for a maximal antichain.
    pub fn total_mass(&self) -> T {
        self.members.iter().map(Word::nu).sum()
    }

    /// `sum (p_w s_w^r)^t` over the members.
    pub fn scaled_sum(&self, r: T, t: T) -> T {
        self.members.iter().map(|w| (w.p() * w.s().powf(r)).powf(t)).sum()
    }

    /// True iff no member is an extension of another member.
    pub fn is_prefix_free(&self) -> bool {
        let set: HashSet<&[usize]> = self.members.iter().map(|w| w.symbols()).collect();
        set.len() == self.members.len()
            && self
                .members
                .iter()
                .all(|w| (1..w.len()).all(|k| !set.contains(&w.symbols()[..k])))
    }
}

/// The antichain `{w : weight(w^-) >= eps > weight(w)}`, with the parent of a
/// length-1 word treated as having infinite weight.
pub fn antichain_by_threshold<T: Real>(
    spec: &RifsSpec<T>,
    weight: AntichainWeight<T>,
    eps: T,
    cap: u128,
) -> Result<Antichain<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Domain(format!("threshold {eps} outside (0, 1)")));
    }
    match weight {
        AntichainWeight::ScaledMass { r, theta } if !(r > T::zero() && theta > T::zero()) => {
            return Err(Error::Domain("weight needs r > 0 and theta > 0".into()))
        }
        AntichainWeight::Contraction { theta } if !(theta > T::zero()) => {
            return Err(Error::Domain("weight needs theta > 0".into()))
        }
        _ => {}
    }
    if let Some((i, j)) = stalled_cycle_edge(spec, &weight) {
        return Err(Error::NonTermination {
            from: i + 1,
            to: j + 1,
            factor: weight.edge_factor(spec, i, j).to_f64_lossy(),
        });
    }
    let mut members = Vec::new();
    let mut stack: Vec<Word<T>> = (0..spec.n())
        .rev()
        .map(|i| Word::new(vec![i], spec))
        .collect::<Result<_>>()?;
    // Depth-first with children pushed in reverse keeps lexicographic order.
    while let Some(w) = stack.pop() {
        if weight.of(&w) < eps {
            members.push(w);
            if members.len() as u128 > cap {
                return Err(Error::Resource {
                    what: "antichain members",
                    needed: members.len() as u128,
                    cap,
                });
            }
            continue;
        }
        for &next in spec.support().successors(w.last()).iter().rev() {
            stack.push(w.extended(next, spec));
        }
    }
    Ok(Antichain {
        members,
        weight,
        threshold: eps,
    })
}

/// An edge on a cycle along which the weight never shrinks, if any. Every
/// infinite path must pass a shrinking edge infinitely often for the
/// threshold descent to stop.
fn stalled_cycle_edge<T: Real>(spec: &RifsSpec<T>, weight: &AntichainWeight<T>) -> Option<(usize, usize)> {
    let n = spec.n();
    let stalled: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            spec.support()
                .successors(i)
                .iter()
                .copied()
                .filter(|&j| !(weight.edge_factor(spec, i, j) < T::one()))
                .collect()
        })
        .collect();
    // 0 unvisited, 1 on the current path, 2 finished
    let mut color = vec![0u8; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if let Some(&u) = stalled[v].get(*k) {
                *k += 1;
                match color[u] {
                    0 => {
                        color[u] = 1;
                        stack.push((u, 0));
                    }
                    1 => return Some((v, u)),
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Unique `t0 > 0` with `sum over admissible edges of s_ij^t0 = 1`.
pub fn diameter_exponent<T: Real>(spec: &RifsSpec<T>) -> Result<T> {
    let s: Vec<T> = spec.edges().map(|(_, _, e)| e.s).collect();
    edge_sum_exponent(&s)
}

/// Unique `t > 0` with `sum_e s_e^t = 1`.
pub fn edge_sum_exponent<T: Real>(s: &[T]) -> Result<T> {
    if s.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} admissible edge(s): the edge sum never reaches 1",
            s.len()
        )));
    }
    if s.iter().any(|&x| !(x < T::one())) {
        return Err(Error::Precondition("every s_ij must be < 1".into()));
    }
    let solve = decreasing_root_positive(
        |t| Ok(s.iter().map(|&x| x.powf(t)).sum::<T>() - T::one()),
        T::tol(1e-15),
    )?;
    Ok(solve.root)
}
