use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::RifsSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Points drawn per RNG stream. Fixed so output does not depend on the
/// number of worker threads.
const SHARD: usize = 4096;

#[derive(Clone, Debug)]
pub struct SampleOptions<T> {
    pub count: usize,
    /// Length of the sampled code prefix; the map applied has `depth - 1` factors.
    pub depth: usize,
    pub seed: u64,
    /// How many leading code symbols to keep per point (at most `depth`).
    pub record_prefix: usize,
    /// If set, a warning is attached when the truncation bound exceeds it.
    pub tolerance: Option<T>,
}

impl<T> SampleOptions<T> {
    pub fn new(count: usize, depth: usize, seed: u64) -> Self {
        Self {
            count,
            depth,
            seed,
            record_prefix: 2,
            tolerance: None,
        }
    }
}

/// I.i.d. draws from the push-forward of the Markov measure on code space.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCloud<T> {
    pub dim: usize,
    /// Row-major coordinates, `dim` per point.
    pub coords: Vec<T>,
    pub prefix_len: usize,
    /// Leading code symbols (0-based states), `prefix_len` per point.
    pub prefixes: Vec<u32>,
    pub depth: usize,
    pub seed: u64,
    /// Upper bound on the distance of each point from its exact coding image.
    pub truncation_bound: T,
    pub warnings: Vec<String>,
}

impl<T: Real> SampleCloud<T> {
    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn prefix(&self, i: usize) -> &[u32] {
        &self.prefixes[i * self.prefix_len..(i + 1) * self.prefix_len]
    }

    /// First code symbol: the component `E_i` the point belongs to.
    pub fn state(&self, i: usize) -> usize {
        self.prefixes[i * self.prefix_len] as usize
    }
}

/// Draws `count` points `f_{w|depth}(anchor)` with `w` a path of the chain
/// started from the stationary law. Deterministic for a given seed.
pub fn sample_measure<T: Real>(spec: &RifsSpec<T>, opts: &SampleOptions<T>) -> Result<SampleCloud<T>> {
    if opts.depth < 2 {
        return Err(Error::Domain(format!("depth must be at least 2, got {}", opts.depth)));
    }
    let n = spec.n();
    let dim = spec.dim();
    let prefix_len = opts.record_prefix.clamp(1, opts.depth);
    let truncation_bound = spec.s_max().powi(opts.depth as i32 - 1) * spec.domain_diameter();
    let mut warnings = Vec::new();
    if let Some(tol) = opts.tolerance {
        if truncation_bound > tol {
            warnings.push(format!(
                "depth {} gives truncation bound {truncation_bound:e} above tolerance {tol:e}",
                opts.depth
            ));
        }
    }

    let weights =
        |row: Vec<f64>| WeightedIndex::new(row).map_err(|e| Error::Precondition(format!("bad sampling weights: {e}")));
    let initial = weights(spec.stationary().iter().map(|p| p.to_f64_lossy()).collect())?;
    let rows = (0..n)
        .map(|i| weights(spec.transition().row(i).iter().map(|p| p.to_f64_lossy()).collect()))
        .collect::<Result<Vec<_>>>()?;
    let anchor = spec.anchor();

    let shards = opts.count.div_ceil(SHARD);
    let parts: Vec<(Vec<T>, Vec<u32>)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(shard as u64);
            let len = SHARD.min(opts.count - shard * SHARD);
            let mut coords = Vec::with_capacity(len * dim);
            let mut prefixes = Vec::with_capacity(len * prefix_len);
            let mut word = vec![0usize; opts.depth];
            let mut x = vec![T::zero(); dim];
            let mut y = vec![T::zero(); dim];
            for _ in 0..len {
                word[0] = initial.sample(&mut rng);
                for k in 1..opts.depth {
                    word[k] = rows[word[k - 1]].sample(&mut rng);
                }
                x.copy_from_slice(&anchor);
                for k in (0..opts.depth - 1).rev() {
                    let edge = spec.edge(word[k], word[k + 1]).expect("sampled edge is admissible");
                    edge.map.apply_into(&x, &mut y);
                    std::mem::swap(&mut x, &mut y);
                }
                coords.extend_from_slice(&x);
                prefixes.extend(word[..prefix_len].iter().map(|&s| s as u32));
            }
            (coords, prefixes)
        })
        .collect();

    let mut coords = Vec::with_capacity(opts.count * dim);
    let mut prefixes = Vec::with_capacity(opts.count * prefix_len);
    for (c, p) in parts {
        coords.extend(c);
        prefixes.extend(p);
    }
    Ok(SampleCloud {
        dim,
        coords,
        prefix_len,
        prefixes,
        depth: opts.depth,
        seed: opts.seed,
        truncation_bound,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn cantor_points_stay_in_unit_interval() {
        let spec = fixtures::c2::<f64>();
        let cloud = sample_measure(&spec, &SampleOptions::new(5000, 30, 11)).unwrap();
        assert_eq!(cloud.len(), 5000);
        assert!(cloud.coords.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(cloud.truncation_bound <= 3f64.powi(-29) * (1.0 + 1e-12));
        // no point falls in the removed middle third
        assert!(cloud
            .coords
            .iter()
            .all(|&x| !(x > 1.0 / 3.0 + 1e-9 && x < 2.0 / 3.0 - 1e-9)));
    }

    #[test]
    fn zero_count_is_empty() {
        let spec = fixtures::r2::<f64>();
        let cloud = sample_measure(&spec, &SampleOptions::new(0, 8, 1)).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = fixtures::r2::<f64>();
        let a = sample_measure(&spec, &SampleOptions::new(9000, 16, 5)).unwrap();
        let b = sample_measure(&spec, &SampleOptions::new(9000, 16, 5)).unwrap();
        let c = sample_measure(&spec, &SampleOptions::new(9000, 16, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn shallow_depth_is_rejected_and_tolerance_warns() {
        let spec = fixtures::c2::<f64>();
        assert!(sample_measure(&spec, &SampleOptions::new(10, 1, 0)).is_err());
        let mut opts = SampleOptions::new(10, 4, 0);
        opts.tolerance = Some(1e-6);
        let cloud = sample_measure(&spec, &opts).unwrap();
        assert_eq!(cloud.warnings.len(), 1);
    }
}
