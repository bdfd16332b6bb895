//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage, I/O or numerical failure |
//! | 2 | invalid configuration |
//! | 3 | degenerate bound or estimate |
//! | 4 | resource limit exceeded |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rifs_quant::config::load_config;
use rifs_quant::csv as out;
use rifs_quant::lab::{coefficient_diagnostic, estimate_dimension, geometric_grid, LabOptions};
use rifs_quant::quantizer::{lloyd_optimize, oracle_optimal, voronoi_stats, LloydOptions, WeightedCloud};
use rifs_quant::rifs::{derived_constants, sample_measure, SampleOptions};
use rifs_quant::spectral::{find_return_words, solve_dimension_bound, subsystem_lower_bound, theta_partial, Side};
use rifs_quant::symbolic::{antichain_by_threshold, AntichainWeight, DEFAULT_WORD_CAP};
use rifs_quant::{Error, RifsSpecF64};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RIFSQ_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "rifs-quant",
    version,
    about = "Quantization dimension of recurrent IFS measures"
)]
struct Cli {
    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration and print the stationary vector.
    Validate { config: PathBuf },
    /// Solve for the upper and lower dimension bounds.
    Bounds {
        config: PathBuf,
        /// Quantization order; repeat for several.
        #[arg(long = "r", default_values_t = [2.0])]
        r: Vec<f64>,
    },
    /// Draw points from the invariant measure.
    Sample {
        config: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        /// Prefix each point with its 1-based state.
        #[arg(long)]
        with_state: bool,
    },
    /// Optimize an n-point codebook with Lloyd iterations.
    Quantize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[command(flatten)]
        lloyd: Lloyd,
    },
    /// Exact optimal codebook for a tiny point set.
    OracleQuantize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
    /// Threshold cut of the code space.
    Antichain {
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Weight::Scaled)]
        weight: Weight,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Exponent for the scaled and contraction weights; defaults to the
        /// root of the upper spectral equation.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: u128,
    },
    /// Word sums over all admissible words of lengths 1..=n.
    Theta {
        config: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Exponent; defaults to the solved root on the chosen side.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SideArg::Upper)]
        side: SideArg,
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: u128,
    },
    /// Lower bound from the sub-system built on words of length m.
    Subsystem {
        config: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: u128,
    },
    /// Estimate the quantization dimension from a codebook-size sweep.
    EstimateDim {
        config: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// `lo:hi:geom[:factor]` or a comma-separated list.
        #[arg(long, default_value = "2:512:geom")]
        n_grid: String,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        lloyd: Lloyd,
        #[arg(long, default_value_t = 0.1)]
        slack: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct Sampling {
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct Lloyd {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// System configuration to sample from.
    #[arg(required_unless_present = "points", conflicts_with = "points")]
    config: Option<PathBuf>,
    /// Point CSV to quantize instead of a sampled measure.
    #[arg(long)]
    points: Option<PathBuf>,
    #[command(flatten)]
    sampling: Sampling,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Weight {
    Nu,
    Scaled,
    Contraction,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SideArg {
    Upper,
    Lower,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Upper => Side::Upper,
            SideArg::Lower => Side::Lower,
        }
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Syntax { .. } => 2,
            Error::Degenerate(_) => 3,
            Error::Resource { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<i32, Failure>;

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    argv: Vec<String>,
    version: &'a str,
    seed: Option<u64>,
    sample_seed: Option<u64>,
    samples: Option<usize>,
    depth: Option<usize>,
    flags: Vec<String>,
}

struct Ctx {
    out: PathBuf,
    argv: Vec<String>,
    stdout: Box<dyn Write>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join(name), contents)
    }

    fn metadata(&self, meta: Metadata<'_>) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        text.push('\n');
        self.write("metadata.json", &text)
    }

    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.stdout, "{}", line.as_ref());
    }
}

/// Runs one command and returns its exit code; messages for failures go to
/// standard error.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    run_with_output(argv, Box::new(std::io::stdout()))
}

/// As [`run`], with normal output sent to `stdout`.
pub fn run_with_output<I, S>(argv: I, stdout: Box<dyn Write>) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    let mut ctx = Ctx {
        out: cli.out.clone(),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        stdout,
    };
    match dispatch(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load(path: &Path) -> std::result::Result<RifsSpecF64, Failure> {
    load_config(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// Parses `lo:hi:geom[:factor]` or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad grid entry {s:?}"));
    match parts.as_slice() {
        [list] => {
            let mut v = list.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            v.sort_unstable();
            v.dedup();
            if v.is_empty() || v[0] == 0 {
                return Err("grid sizes must be positive".into());
            }
            Ok(v)
        }
        [lo, hi, "geom"] => geometric_grid(num(lo)?, num(hi)?, 2).map_err(|e| e.to_string()),
        [lo, hi, "geom", f] => geometric_grid(num(lo)?, num(hi)?, num(f)?).map_err(|e| e.to_string()),
        _ => Err(format!("unrecognized grid {text:?}; expected lo:hi:geom or a list")),
    }
}

fn input_cloud(input: &Input) -> std::result::Result<(WeightedCloud<f64>, Option<usize>), Failure> {
    match (&input.config, &input.points) {
        (_, Some(points)) => {
            let table = out::read_points::<f64>(&fs::read_to_string(points)?)?;
            Ok((WeightedCloud::uniform(table.dim, table.coords)?, None))
        }
        (Some(config), None) => {
            let spec = load(config)?;
            let s = &input.sampling;
            let cloud = sample_measure(&spec, &SampleOptions::new(s.samples, s.depth, s.seed))?;
            Ok((WeightedCloud::from_sample(&cloud)?, Some(s.samples)))
        }
        (None, None) => Err(usage("either a configuration or --points is required")),
    }
}

fn dispatch(command: Command, ctx: &mut Ctx) -> CmdResult {
    match command {
        Command::Validate { config } => {
            let spec = load(&config)?;
            let p: Vec<String> = spec.stationary().iter().map(|x| format!("{x:.12}")).collect();
            ctx.say(format!(
                "valid: {} ({} states, dimension {}, {} maps)",
                spec.name(),
                spec.n(),
                spec.dim(),
                spec.edges().count()
            ));
            ctx.say(format!("stationary: {}", p.join(" ")));
            Ok(0)
        }
        Command::Bounds { config, r } => {
            let spec = load(&config)?;
            let mut profiles = Vec::new();
            let mut degenerate = false;
            for &r in &r {
                let k = solve_dimension_bound(&spec, r, Side::Upper)?;
                let l = solve_dimension_bound(&spec, r, Side::Lower)?;
                degenerate |= k.degenerate || l.degenerate;
                let dc = derived_constants(&spec, r, Some(k.bound));
                ctx.say(format!(
                    "r={r} k_r={:.6} l_r={:.6} t_upper={:.12} t_lower={:.12} F_r={:.6} G_r={:.6}",
                    k.bound, l.bound, k.t_r, l.t_r, dc.f_r, dc.g_r
                ));
                profiles.push(k);
                profiles.push(l);
            }
            ctx.write("profiles.csv", &out::profiles_csv(&profiles))?;
            if degenerate {
                ctx.say("degenerate: spectral radius at 0 is 1, bound 0");
            }
            let flags = if degenerate {
                vec!["degenerate bound 0".into()]
            } else {
                vec![]
            };
            ctx.metadata(meta(ctx, "bounds", None, None, flags))?;
            Ok(if degenerate { 3 } else { 0 })
        }
        Command::Sample {
            config,
            sampling,
            with_state,
        } => {
            let spec = load(&config)?;
            let mut opts = SampleOptions::new(sampling.samples, sampling.depth, sampling.seed);
            opts.record_prefix = 1;
            let cloud = sample_measure(&spec, &opts)?;
            ctx.write("points.csv", &out::points_csv(&cloud, with_state))?;
            for w in &cloud.warnings {
                eprintln!("warning: {w}");
            }
            ctx.say(format!(
                "sampled {} points at depth {} (truncation bound {:.3e})",
                cloud.len(),
                cloud.depth,
                cloud.truncation_bound
            ));
            let mut m = meta(
                ctx,
                "sample",
                Some(sampling.seed),
                Some(&sampling),
                cloud.warnings.clone(),
            );
            m.sample_seed = Some(sampling.seed);
            ctx.metadata(m)?;
            Ok(0)
        }
        Command::Quantize { input, n, r, lloyd } => {
            let (cloud, samples) = input_cloud(&input)?;
            let opts = LloydOptions {
                restarts: lloyd.restarts,
                max_iters: lloyd.max_iters,
                seed: input.sampling.seed,
                ..LloydOptions::default()
            };
            let run = lloyd_optimize(&cloud, n, r, &opts)?;
            let vs = voronoi_stats(&cloud, &run.codebook, r)?;
            let mut flags = run.flags.clone();
            if samples.is_some() && cloud.len() < rifs_quant::lab::SAMPLES_PER_CENTER * n {
                flags.push(format!("undersampled: {} samples for n = {n}", cloud.len()));
            }
            ctx.write("codebook.csv", &out::codebook_csv(&run.codebook))?;
            ctx.write("runs.csv", &out::run_summary_csv(std::slice::from_ref(&run)))?;
            ctx.say(format!(
                "n={n} r={r} V={:.9e} e={:.9e} iterations={} covering_radius={:.6e} lemma_lhs={:.6e} lemma_holds={}",
                run.error, run.e, run.iterations, vs.covering_radius, vs.lower_side, vs.holds
            ));
            let sampling = samples.map(|_| input.sampling.clone());
            ctx.metadata(meta(
                ctx,
                "quantize",
                Some(input.sampling.seed),
                sampling.as_ref(),
                flags,
            ))?;
            Ok(0)
        }
        Command::OracleQuantize { input, n, r } => {
            let (cloud, samples) = input_cloud(&input)?;
            let res = oracle_optimal(&cloud, n, r)?;
            ctx.write("codebook.csv", &out::codebook_csv(&res.codebook))?;
            ctx.say(format!(
                "n={n} r={r} V={:.17e} e={:.17e}",
                res.error,
                res.error.powf(1.0 / r)
            ));
            let sampling = samples.map(|_| input.sampling.clone());
            ctx.metadata(meta(
                ctx,
                "oracle-quantize",
                Some(input.sampling.seed),
                sampling.as_ref(),
                vec![],
            ))?;
            Ok(0)
        }
        Command::Antichain {
            config,
            eps,
            weight,
            r,
            theta,
            cap,
        } => {
            let spec = load(&config)?;
            let k = solve_dimension_bound(&spec, r, Side::Upper)?;
            let theta = theta.unwrap_or(k.t_r);
            let w = match weight {
                Weight::Nu => AntichainWeight::Nu,
                Weight::Scaled => AntichainWeight::ScaledMass { r, theta },
                Weight::Contraction => AntichainWeight::Contraction { theta },
            };
            let chain = antichain_by_threshold(&spec, w, eps, cap)?;
            ctx.write("antichain.csv", &out::antichain_csv(&chain))?;
            let eta = derived_constants(&spec, r, Some(k.bound)).eta_r.unwrap_or(f64::NAN);
            ctx.say(format!(
                "words={} mass={:.15} prefix_free={} scaled_sum={:.9} eta_r={:.9}",
                chain.len(),
                chain.total_mass(),
                chain.is_prefix_free(),
                chain.scaled_sum(r, k.t_r),
                eta
            ));
            ctx.metadata(meta(ctx, "antichain", None, None, vec![]))?;
            Ok(0)
        }
        Command::Theta {
            config,
            r,
            t,
            n,
            side,
            cap,
        } => {
            let spec = load(&config)?;
            let t = match t {
                Some(t) => t,
                None => solve_dimension_bound(&spec, r, side.into())?.t_r,
            };
            let mut csv = String::from("n,t,sum,value,word_count\n");
            for len in 1..=n {
                let tp = theta_partial(&spec, r, t, len, side.into(), cap)?;
                csv.push_str(&format!(
                    "{len},{},{},{},{}\n",
                    out::num(t),
                    out::num(tp.sum),
                    out::num(tp.value),
                    tp.word_count
                ));
                ctx.say(format!("n={len} sum={:.12} value={:.12}", tp.sum, tp.value));
            }
            ctx.write("theta.csv", &csv)?;
            ctx.metadata(meta(ctx, "theta", None, None, vec![]))?;
            Ok(0)
        }
        Command::Subsystem { config, r, m, cap } => {
            let spec = load(&config)?;
            let words = find_return_words(spec.transition())?;
            let sb = subsystem_lower_bound(&spec, r, m, &words, cap)?;
            let l = solve_dimension_bound(&spec, r, Side::Lower)?;
            ctx.write(
                "subsystem.csv",
                &format!(
                    "r,m,word_count,t,bound,residual\n{},{m},{},{},{},{}\n",
                    out::num(r),
                    sb.word_count,
                    out::num(sb.t),
                    out::num(sb.bound),
                    out::num(sb.residual)
                ),
            )?;
            ctx.say(format!(
                "m={m} words={} bound={:.9} l_r={:.9}",
                sb.word_count, sb.bound, l.bound
            ));
            ctx.metadata(meta(ctx, "subsystem", None, None, vec![]))?;
            Ok(0)
        }
        Command::EstimateDim {
            config,
            r,
            n_grid,
            sampling,
            lloyd,
            slack,
        } => {
            let spec = load(&config)?;
            let grid = parse_grid(&n_grid).map_err(usage)?;
            let opts = LabOptions {
                sampling: SampleOptions::new(sampling.samples, sampling.depth, sampling.seed),
                quantizer: LloydOptions {
                    restarts: lloyd.restarts,
                    max_iters: lloyd.max_iters,
                    seed: sampling.seed,
                    ..LloydOptions::default()
                },
                slack,
            };
            let ex = estimate_dimension(&spec, r, &grid, &opts)?;
            let rep = &ex.report;
            ctx.write("report.csv", &out::report_csv(rep))?;
            ctx.write("summary.csv", &out::report_summary_csv(rep))?;
            ctx.write("runs.csv", &out::grid_runs_csv(r, ex.quantizer_seed, &ex.runs))?;
            let verdict = rep.verdict.map(|v| v.to_string()).unwrap_or_default();
            ctx.say(format!(
                "r={r} D_hat={:.6} stderr={:.6} l_r={:.6} k_r={:.6} verdict={verdict}",
                rep.d_hat, rep.stderr, rep.l_r, rep.k_r
            ));
            if let Ok(diag) = coefficient_diagnostic(rep, rep.k_r, rep.l_r) {
                ctx.say(format!(
                    "n*e^k_r ratio={:.4} bounded={}; n*e^l_r ratio={:.4} bounded={}",
                    diag.upper.ratio, diag.upper.bounded, diag.lower.ratio, diag.lower.bounded
                ));
            }
            for f in &rep.flags {
                ctx.say(format!("flag: {f}"));
            }
            let mut m = meta(
                ctx,
                "estimate-dim",
                Some(ex.quantizer_seed),
                Some(&sampling),
                rep.flags.clone(),
            );
            m.sample_seed = Some(ex.sample_seed);
            ctx.metadata(m)?;
            Ok(0)
        }
    }
}

fn meta<'a>(
    ctx: &Ctx,
    command: &'a str,
    seed: Option<u64>,
    sampling: Option<&Sampling>,
    flags: Vec<String>,
) -> Metadata<'a> {
    Metadata {
        command,
        argv: ctx.argv.clone(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        sample_seed: sampling.map(|s| s.seed),
        samples: sampling.map(|s| s.samples),
        depth: sampling.map(|s| s.depth),
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("2:16:geom").unwrap(), vec![2, 4, 8, 16]);
        assert_eq!(parse_grid("3:30:geom:3").unwrap(), vec![3, 9, 27]);
        assert_eq!(parse_grid("8,2,4,4").unwrap(), vec![2, 4, 8]);
        assert!(parse_grid("2:16:lin").is_err());
        assert!(parse_grid("0,2").is_err());
    }
}
