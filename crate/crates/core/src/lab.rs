//! End-to-end quantization-dimension experiments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{lloyd_optimize, LloydOptions, WeightedCloud};
use crate::rifs::{sample_measure, RifsSpec, SampleOptions};
use crate::scalar::Real;
use crate::spectral::{solve_dimension_bound, Side};

/// Samples per codebook point below which a run is flagged as undersampled.
pub const SAMPLES_PER_CENTER: usize = 1000;

/// Ratio threshold separating bounded from growing coefficient sequences.
pub const BOUNDED_RATIO: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    ViolatedLow,
    ViolatedHigh,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::ViolatedLow => "violated-low",
            Verdict::ViolatedHigh => "violated-high",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint<T> {
    pub n: usize,
    pub e: T,
    /// `log n / (-log e)`
    pub d_local: T,
    pub n_e_pow_k: T,
    pub n_e_pow_l: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionReport<T> {
    pub r: T,
    pub points: Vec<GridPoint<T>>,
    /// Slope of `log n` against `-log e` over the upper half of the grid.
    pub d_hat: T,
    pub stderr: T,
    pub l_r: T,
    pub k_r: T,
    pub verdict: Option<Verdict>,
    pub flags: Vec<String>,
}

impl<T: Real> DimensionReport<T> {
    /// Builds a report from measured `(n, e_n)` pairs.
    ///
    /// Pairs with `e_n = 0` are dropped and flagged. At least two positive
    /// errors must remain for the fit.
    pub fn from_errors(r: T, errors: &[(usize, T)], l_r: T, k_r: T) -> Result<Self> {
        let mut flags = Vec::new();
        let mut points = Vec::new();
        for &(n, e) in errors {
            if !(e > T::zero()) {
                flags.push(format!("n = {n} saturated (e = 0), dropped"));
                continue;
            }
            let nf = T::from_usize_lossy(n);
            points.push(GridPoint {
                n,
                e,
                d_local: nf.ln() / -e.ln(),
                n_e_pow_k: nf * e.powf(k_r),
                n_e_pow_l: nf * e.powf(l_r),
            });
        }
        if points.len() < 2 {
            return Err(Error::Degenerate(
                "fewer than two unsaturated grid points; no dimension estimate".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].e > w[0].e {
                flags.push(format!("e increases from n = {} to n = {}", w[0].n, w[1].n));
            }
        }
        let top = &points[points.len() / 2..];
        let top = if top.len() < 2 {
            &points[points.len() - 2..]
        } else {
            top
        };
        let xs: Vec<T> = top.iter().map(|p| -p.e.ln()).collect();
        let ys: Vec<T> = top.iter().map(|p| T::from_usize_lossy(p.n).ln()).collect();
        let (d_hat, stderr) = slope(&xs, &ys)?;
        if !(d_hat > T::zero()) {
            flags.push(format!("non-positive fitted dimension {d_hat}"));
        }
        Ok(Self {
            r,
            points,
            d_hat,
            stderr,
            l_r,
            k_r,
            verdict: None,
            flags,
        })
    }

    pub fn with_verdict(mut self, slack: T) -> Self {
        self.verdict = Some(bound_verdict(&self, self.l_r, self.k_r, slack));
        self
    }
}

/// Least-squares slope of `y` on `x` and its standard error (zero for two points).
fn slope<T: Real>(xs: &[T], ys: &[T]) -> Result<(T, T)> {
    let m = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::Degenerate("errors are constant over the fitted range".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let stderr = if xs.len() > 2 {
        let ss: T = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let res = y - a - b * x;
                res * res
            })
            .sum();
        (ss / (m - T::lit(2.0)) / sxx).sqrt()
    } else {
        T::zero()
    };
    Ok((b, stderr))
}

pub fn bound_verdict<T: Real>(report: &DimensionReport<T>, l_r: T, k_r: T, slack: T) -> Verdict {
    if report.d_hat < l_r - slack {
        Verdict::ViolatedLow
    } else if report.d_hat > k_r + slack {
        Verdict::ViolatedHigh
    } else {
        Verdict::Consistent
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceTrend<T> {
    pub exponent: T,
    /// max/min of `n e_n^exponent` over the upper half of the grid.
    pub ratio: T,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientDiagnostic<T> {
    pub upper: SequenceTrend<T>,
    pub lower: SequenceTrend<T>,
}

pub fn coefficient_diagnostic<T: Real>(
    report: &DimensionReport<T>,
    k_r: T,
    l_r: T,
) -> Result<CoefficientDiagnostic<T>> {
    if report.points.len() < 6 {
        return Err(Error::Precondition(format!(
            "coefficient diagnostic needs at least 6 grid points, got {}",
            report.points.len()
        )));
    }
    let top = &report.points[report.points.len() / 2..];
    let trend = |t: T| {
        let vals: Vec<T> = top.iter().map(|p| T::from_usize_lossy(p.n) * p.e.powf(t)).collect();
        let hi = vals.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = vals.iter().copied().fold(T::infinity(), T::min);
        let ratio = hi / lo;
        SequenceTrend {
            exponent: t,
            ratio,
            bounded: ratio <= T::lit(BOUNDED_RATIO),
        }
    };
    Ok(CoefficientDiagnostic {
        upper: trend(k_r),
        lower: trend(l_r),
    })
}

/// Codebook sizes `lo, lo*factor, ...` up to and including `hi`.
pub fn geometric_grid(lo: usize, hi: usize, factor: usize) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || factor < 2 {
        return Err(Error::Domain(format!(
            "invalid geometric grid {lo}:{hi} with factor {factor}"
        )));
    }
    let mut grid = vec![lo];
    while let Some(next) = grid.last().unwrap().checked_mul(factor) {
        if next > hi {
            break;
        }
        grid.push(next);
    }
    Ok(grid)
}

#[derive(Clone, Debug)]
pub struct LabOptions<T> {
    pub sampling: SampleOptions<T>,
    pub quantizer: LloydOptions<T>,
    pub slack: T,
}

/// Errors and run details behind a report.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRun<T> {
    pub n: usize,
    pub error: T,
    pub e: T,
    pub iterations: usize,
    pub best_restart: usize,
}

#[derive(Clone, Debug)]
pub struct Experiment<T> {
    pub report: DimensionReport<T>,
    pub runs: Vec<GridRun<T>>,
    pub samples: usize,
    pub sample_seed: u64,
    pub quantizer_seed: u64,
}

/// Samples the invariant measure once, quantizes it at every grid size and
/// fits the dimension.
///
/// Each run after the first is warm-started from the previous codebook, so
/// the measured errors never increase along the grid. Grid sizes beyond the
/// number of distinct sample points are dropped with a flag.
pub fn estimate_dimension<T: Real>(
    spec: &RifsSpec<T>,
    r: T,
    grid: &[usize],
    opts: &LabOptions<T>,
) -> Result<Experiment<T>> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::Domain("empty codebook-size grid".into()));
    }
    let k = solve_dimension_bound(spec, r, Side::Upper)?;
    let l = solve_dimension_bound(spec, r, Side::Lower)?;
    let sample = sample_measure(spec, &opts.sampling)?;
    let cloud = WeightedCloud::from_sample(&sample)?;
    let distinct = cloud.distinct_support();

    let mut flags: Vec<String> = sample.warnings.clone();
    if k.degenerate || l.degenerate {
        flags.push("degenerate spectral bound (zero)".into());
    }
    let largest = *grid.last().unwrap();
    if cloud.len() < SAMPLES_PER_CENTER * largest {
        flags.push(format!(
            "undersampled: {} samples for n = {largest} (policy {} per center)",
            cloud.len(),
            SAMPLES_PER_CENTER
        ));
    }

    let mut runs = Vec::new();
    let mut errors = Vec::new();
    let mut warm = None;
    for &n in &grid {
        if n > distinct {
            flags.push(format!("n = {n} exceeds {distinct} distinct sample points, dropped"));
            continue;
        }
        let q = LloydOptions {
            init: warm.take(),
            ..opts.quantizer.clone()
        };
        let run = lloyd_optimize(&cloud, n, r, &q)?;
        for f in &run.flags {
            if !flags.contains(f) {
                flags.push(f.clone());
            }
        }
        errors.push((n, run.e));
        runs.push(GridRun {
            n,
            error: run.error,
            e: run.e,
            iterations: run.iterations,
            best_restart: run.best_restart,
        });
        warm = Some(run.codebook);
    }
    let mut report = DimensionReport::from_errors(r, &errors, l.bound, k.bound)?.with_verdict(opts.slack);
    flags.append(&mut report.flags);
    report.flags = flags;
    Ok(Experiment {
        report,
        runs,
        samples: cloud.len(),
        sample_seed: opts.sampling.seed,
        quantizer_seed: opts.quantizer.seed,
    })
}
