//! Subcommand dispatch. Every report is a flat `key = value` block or CSV so
//! the output of two runs can be compared byte for byte.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clipcube::heaviside::{h_k, logistic, phi_g, phi_l};
use clipcube::moments::block_moments;
use clipcube::numeric::{format_rational, parse_rational};
use clipcube::oracle::mc_volume;
use clipcube::quadrature::RiemannRule;
use clipcube::solver::{max_distance, McOracle, TkOracle, VolumeOracle};
use clipcube::volume::{ball_error_bound, t_of_k, ApproximationParams};
use clipcube::{ClippedCubeProblem, MomentFamily, Sharpness};

use crate::problem::{parse_problem, ParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Engine(#[from] clipcube::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        use clipcube::Error as E;
        match self {
            AppError::Usage(_) | AppError::Parse { .. } => EXIT_USAGE,
            AppError::Engine(e) => match e {
                E::InvalidInput(_) | E::DimensionMismatch { .. } | E::NonAdjacent { .. } => EXIT_USAGE,
                E::Inconclusive { .. } => EXIT_INCONCLUSIVE,
                _ => EXIT_PRECONDITION,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "clipcube", version, about = "Volume of the unit cube clipped by separable polynomial sets")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Append wall_time_ms to reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smoothed volume T(K) with its error budget.
    Volume(VolumeArgs),
    /// A-priori bound on |vol − T(K)| for balls far from the cube.
    Bound(BoundArgs),
    /// Monte Carlo volume estimate.
    Mc(McArgs),
    /// Largest distance from a point to the clipped cube, by bisection.
    Maxdist(MaxdistArgs),
    /// CSV samples of the step functions and kernels.
    Plot(PlotArgs),
    /// Exact moment table of the constraint polynomials.
    Moments(MomentsArgs),
}

#[derive(Args, Debug)]
struct VolumeArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long = "K")]
    k: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Midpoint instead of left Riemann sums.
    #[arg(long)]
    midpoint: bool,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long = "K")]
    k: f64,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleKind {
    Mc,
    Tk,
}

#[derive(Args, Debug)]
struct MaxdistArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Comma separated coordinates of C₀.
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = OracleKind::Mc)]
    oracle: OracleKind,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Smoothed-volume settings for `--oracle tk`.
    #[arg(long = "K", default_value_t = 4.0)]
    k: f64,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlotFunction {
    Hk,
    Logistic,
    Phil,
    Phig,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long, value_enum)]
    function: PlotFunction,
    /// Comma separated sharpness values.
    #[arg(long = "K")]
    k: String,
    /// `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    max_power: usize,
}

/// Exit code and the text for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };

    let started = Instant::now();
    let result = match cli.threads {
        Some(0) => Err(AppError::Usage("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(AppError::Usage(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(mut text) => {
            if cli.timing && !matches!(cli.command, Command::Volume(_)) {
                let _ = writeln!(text, "wall_time_ms = {}", started.elapsed().as_millis());
            }
            Outcome {
                code: EXIT_OK,
                stdout: text,
                stderr: String::new(),
            }
        }
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn load(path: &PathBuf) -> Result<ClippedCubeProblem, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text).map_err(|source| AppError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn sharpness(k: f64) -> Result<Sharpness, AppError> {
    Ok(Sharpness::new(k)?)
}

fn dispatch(cli: &Cli) -> Result<String, AppError> {
    match &cli.command {
        Command::Volume(a) => volume(a, cli.timing),
        Command::Bound(a) => bound(a),
        Command::Mc(a) => mc(a),
        Command::Maxdist(a) => maxdist(a),
        Command::Plot(a) => plot(a),
        Command::Moments(a) => moments(a),
    }
}

fn volume(a: &VolumeArgs, timing: bool) -> Result<String, AppError> {
    let problem = load(&a.problem)?;
    let mut params = ApproximationParams::new(sharpness(a.k)?, a.delta, a.tau);
    params.precision_bits = a.precision_bits;
    if a.midpoint {
        params.rule = RiemannRule::Midpoint;
    }
    let report = t_of_k(&problem, &params)?;
    Ok(report.to_key_values(timing))
}

fn bound(a: &BoundArgs) -> Result<String, AppError> {
    let problem = load(&a.problem)?;
    let b = ball_error_bound(&problem, sharpness(a.k)?)?;
    Ok(format!("k = {}\nerror_bound = {b}\n", a.k))
}

fn mc(a: &McArgs) -> Result<String, AppError> {
    let problem = load(&a.problem)?;
    Ok(mc_volume(&problem, a.samples, a.seed)?.to_key_values())
}

fn maxdist(a: &MaxdistArgs) -> Result<String, AppError> {
    let problem = load(&a.problem)?;
    let center = a
        .center
        .split(',')
        .map(parse_rational)
        .collect::<Result<Vec<_>, _>>()?;
    let oracle: Box<dyn VolumeOracle> = match a.oracle {
        OracleKind::Mc => Box::new(McOracle::new(a.samples, a.seed)),
        OracleKind::Tk => Box::new(TkOracle::new(ApproximationParams::new(
            sharpness(a.k)?,
            a.delta,
            a.tau,
        ))),
    };
    let (_, trace) = max_distance(&problem, &center, a.tol, oracle.as_ref())?;
    Ok(trace.to_report())
}

/// Digits after the decimal point in a number as typed.
fn decimals(text: &str) -> usize {
    let mantissa = text.split(['e', 'E']).next().unwrap_or("");
    mantissa.split_once('.').map_or(0, |(_, f)| f.len())
}

fn plot(a: &PlotArgs) -> Result<String, AppError> {
    let ks = a
        .k
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| AppError::Usage(format!("malformed K value '{s}'")))
                .and_then(|v| Ok((s.trim().to_string(), sharpness(v)?)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<&str> = a.range.split(':').collect();
    let [lo_s, hi_s, step_s] = parts[..] else {
        return Err(AppError::Usage(format!("--range must be lo:hi:step, got '{}'", a.range)));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| AppError::Usage(format!("malformed range value '{s}'")))
    };
    let (lo, hi, step) = (num(lo_s)?, num(hi_s)?, num(step_s)?);
    if !(step > 0.0) || hi < lo {
        return Err(AppError::Usage(format!("empty or reversed range '{}'", a.range)));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let digits = decimals(step_s.trim()).max(decimals(lo_s.trim()));

    let mut csv = String::from("t,value,K\n");
    for (k_text, k) in &ks {
        for i in 0..count {
            let t = lo + i as f64 * step;
            let value = match a.function {
                PlotFunction::Hk => h_k(t, *k),
                PlotFunction::Logistic => logistic(t, *k),
                PlotFunction::Phil => phi_l(k.value() * t),
                PlotFunction::Phig => phi_g(k.value() * t),
            };
            let _ = writeln!(csv, "{t:.digits$},{value},{k_text}");
        }
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, &csv)
                .map_err(|e| AppError::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(format!("out = {}\nrows = {}\n", path.display(), ks.len() * count))
        }
        None => Ok(csv),
    }
}

fn moments(a: &MomentsArgs) -> Result<String, AppError> {
    let problem = load(&a.problem)?;
    let cs = problem.constraints();
    let Some(first) = cs.first() else {
        return Err(clipcube::Error::Precondition("the problem has no constraints".into()).into());
    };
    let g = first.per_coordinate().to_vec();
    let h = cs.get(1).map(|c| c.per_coordinate().to_vec());
    let h_depth = if h.is_some() { a.max_power } else { 0 };
    let fam = MomentFamily::unit_weights(g, h)?;
    let table = block_moments(&fam, a.max_power, h_depth)?;
    let mut out = String::new();
    let _ = writeln!(out, "dimension = {}", problem.dimension());
    let _ = writeln!(out, "max_g_power = {}", a.max_power);
    let _ = writeln!(out, "max_h_power = {h_depth}");
    let _ = writeln!(out, "m,r,value");
    for m in 0..=a.max_power {
        for r in 0..=h_depth {
            let _ = writeln!(out, "{m},{r},{}", format_rational(&table.value(m, r)));
        }
    }
    Ok(out)
}
