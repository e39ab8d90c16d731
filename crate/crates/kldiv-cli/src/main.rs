//! `kldiv`: sampling, one-shot estimation, Monte Carlo experiments, and
//! convergence-rate reports, with reproducible seeds and plain CSV formats.
//!
//! Exit codes: 0 success, 2 usage error (bad flags, specs, or file formats),
//! 1 runtime error (estimation or experiment failures).

mod config;
mod points;

use clap::{Parser, Subcommand, ValueEnum};
use kldiv::{
    estimate_kl, format_rate_table, format_sig9, rate_report, read_summary_csv,
    run_experiment_detailed, sample, write_rates_csv, write_raw_trials_csv, write_summary_csv,
    DistributionSpec, EstimatorConfig, Error, RateClass, RngState, TheoreticalCase,
    ZeroDistancePolicy,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kldiv",
    version,
    about = "kNN KL divergence estimation and Monte Carlo convergence-rate lab",
    long_about = "Estimates D(f||g) in nats from i.i.d. samples via k-th nearest-neighbor \
                  distances, samples synthetic distributions with analytic ground truth, and \
                  measures empirical bias/variance convergence rates against theory.\n\n\
                  All outputs are deterministic functions of flags, files, and seeds."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    /// Euclidean norm
    L2,
    /// Chebyshev (max) norm
    Linf,
}

impl From<NormArg> for kldiv::NormKind {
    fn from(arg: NormArg) -> Self {
        match arg {
            NormArg::L2 => kldiv::NormKind::Euclidean,
            NormArg::Linf => kldiv::NormKind::Chebyshev,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    /// Bounded support, densities bounded away from zero
    Bounded,
    /// Smooth everywhere with tail parameter gamma
    Smooth,
}

#[derive(Subcommand)]
enum Command {
    /// Draw n i.i.d. points from a distribution spec into a CSV.
    ///
    /// Output header is `x1,...,xd`, one row per point; reruns with the same
    /// flags are byte-identical. Spec grammar (see the README for details):
    /// `uniform-box d=D lo=.. hi=..`, `gaussian d=D mean=.. scale=..`,
    /// `bump-mixture d=D m=M alpha=.. D=.. weights=..`.
    Sample {
        /// Distribution spec string, e.g. "uniform-box d=1 lo=0 hi=2"
        #[arg(long)]
        dist: String,
        /// Number of points to draw
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// RNG stream id alongside the seed
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate D(f||g) in nats from two point-cloud CSVs.
    ///
    /// Both files use the `x1,...,xd` header produced by `sample` and must
    /// share a dimension. Prints `kl_nats=`, `n=`, `m=`, and `k=` lines;
    /// values carry 9 significant digits.
    Estimate {
        /// CSV of samples drawn from f
        #[arg(long)]
        x: PathBuf,
        /// CSV of samples drawn from g
        #[arg(long)]
        y: PathBuf,
        /// Neighbor order
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Distance norm
        #[arg(long, value_enum, default_value_t = NormArg::L2)]
        norm: NormArg,
        /// Zero-distance policy: "error" or "clamp:FLOOR" with FLOOR > 0
        #[arg(long, default_value = "error")]
        policy: String,
    },
    /// Run a Monte Carlo convergence experiment from a config file.
    ///
    /// The config is line-oriented `key = value` with `#` comments; keys:
    /// f_spec, g_spec, trials (required); sizes, k, norm, seed, case, gamma,
    /// ratio_bounded (optional). Writes `summary.csv` (header
    /// `n,trials,mean_estimate,bias,variance`) and `rates.csv` (header
    /// `metric,empirical_slope,theoretical_exponent,r_squared`) into the
    /// output directory and prints the rate table.
    Experiment {
        /// Config file path
        #[arg(long)]
        config: PathBuf,
        /// Directory for summary.csv and rates.csv
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write raw_trials.csv (header `n,trial,estimate`)
        #[arg(long)]
        raw: bool,
    },
    /// Fit log-log convergence slopes from an existing summary CSV.
    ///
    /// Input header must be `n,trials,mean_estimate,bias,variance` with at
    /// least 3 rows. Prints the rate table; `--out` also writes the rates
    /// CSV (`metric,empirical_slope,theoretical_exponent,r_squared`).
    Rates {
        /// summary.csv path
        #[arg(long)]
        summary: PathBuf,
        /// Distribution class for theoretical exponents
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
        /// Dimension d for the theoretical exponents (required with --case)
        #[arg(long)]
        d: Option<usize>,
        /// Tail parameter in (0,1] (required with --case smooth)
        #[arg(long)]
        gamma: Option<f64>,
        /// Whether f/g is bounded (smooth case variance exponent)
        #[arg(long, default_value_t = false)]
        ratio_bounded: bool,
        /// Optional path for the rates CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn parse_policy(raw: &str) -> Result<ZeroDistancePolicy, CliError> {
    if raw == "error" {
        return Ok(ZeroDistancePolicy::Error);
    }
    if let Some(floor_raw) = raw.strip_prefix("clamp:") {
        let floor: f64 = floor_raw
            .parse()
            .map_err(|_| usage(format!("policy clamp floor must be a real number, got '{floor_raw}'")))?;
        if floor <= 0.0 || !floor.is_finite() {
            return Err(usage(format!("policy clamp floor must be positive, got {floor}")));
        }
        return Ok(ZeroDistancePolicy::Clamp { floor });
    }
    Err(usage(format!(
        "policy must be 'error' or 'clamp:FLOOR', got '{raw}'"
    )))
}

fn cmd_sample(
    dist: &str,
    n: u64,
    seed: u64,
    stream: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let spec: DistributionSpec = dist.parse().map_err(usage)?;
    let set = sample(&spec, n as usize, RngState::new(seed, stream)).map_err(runtime)?;
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(runtime)?;
            points::write_points_csv(std::io::BufWriter::new(file), &set).map_err(runtime)?;
        }
        None => {
            let stdout = std::io::stdout();
            points::write_points_csv(stdout.lock(), &set).map_err(runtime)?;
        }
    }
    Ok(())
}

fn cmd_estimate(
    x_path: &Path,
    y_path: &Path,
    k: usize,
    norm: NormArg,
    policy: &str,
) -> Result<(), CliError> {
    let policy = parse_policy(policy)?;
    let x = points::read_points_csv(x_path).map_err(usage)?;
    let y = points::read_points_csv(y_path).map_err(usage)?;
    let cfg = EstimatorConfig {
        k,
        norm: norm.into(),
        zero_distance_policy: policy,
    };
    let estimate = estimate_kl(&x, &y, &cfg).map_err(runtime)?;
    println!("kl_nats={}", format_sig9(estimate.value));
    println!("n={}", estimate.n);
    println!("m={}", estimate.m);
    println!("k={}", estimate.k);
    Ok(())
}

fn cmd_experiment(config_path: &Path, out_dir: &Path, raw: bool) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", config_path.display())))?;
    let config = config::parse_config(&text)
        .map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    let (summaries, raw_estimates) = run_experiment_detailed(&config.plan).map_err(|e| match e {
        Error::NotClosedForm(_) => runtime(format!(
            "{e}; experiments need a distribution pair with an analytic KL ground truth"
        )),
        other => runtime(other),
    })?;
    let report = rate_report(&summaries, config.case.as_ref()).map_err(runtime)?;

    std::fs::create_dir_all(out_dir).map_err(runtime)?;
    let summary_path = out_dir.join("summary.csv");
    let mut summary_bytes = Vec::new();
    write_summary_csv(&mut summary_bytes, &summaries).map_err(runtime)?;
    std::fs::write(&summary_path, summary_bytes).map_err(runtime)?;

    let rates_path = out_dir.join("rates.csv");
    let mut rates_bytes = Vec::new();
    write_rates_csv(&mut rates_bytes, &report).map_err(runtime)?;
    std::fs::write(&rates_path, rates_bytes).map_err(runtime)?;

    if raw {
        let raw_path = out_dir.join("raw_trials.csv");
        let mut raw_bytes = Vec::new();
        write_raw_trials_csv(&mut raw_bytes, &config.plan.sizes, &raw_estimates)
            .map_err(runtime)?;
        std::fs::write(&raw_path, raw_bytes).map_err(runtime)?;
    }

    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{}", format_rate_table(&report)).map_err(runtime)?;
    Ok(())
}

fn cmd_rates(
    summary_path: &Path,
    case: Option<CaseArg>,
    d: Option<usize>,
    gamma: Option<f64>,
    ratio_bounded: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = std::fs::File::open(summary_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", summary_path.display())))?;
    let summaries = read_summary_csv(std::io::BufReader::new(file)).map_err(usage)?;

    let theoretical_case = match case {
        None => None,
        Some(arg) => {
            let dim = d.ok_or_else(|| usage("--case requires --d"))?;
            Some(match arg {
                CaseArg::Bounded => TheoreticalCase {
                    class: RateClass::BoundedSupport,
                    dim,
                    density_ratio_bounded: true,
                },
                CaseArg::Smooth => TheoreticalCase {
                    class: RateClass::Smooth {
                        gamma: gamma.ok_or_else(|| usage("--case smooth requires --gamma"))?,
                    },
                    dim,
                    density_ratio_bounded: ratio_bounded,
                },
            })
        }
    };

    let report = match rate_report(&summaries, theoretical_case.as_ref()) {
        Ok(report) => report,
        Err(e @ Error::RegressionInput(_)) => return Err(usage(e)),
        Err(e @ Error::InvalidPlan(_)) => return Err(usage(e)),
        Err(e) => return Err(runtime(e)),
    };
    if let Some(path) = out {
        let mut bytes = Vec::new();
        write_rates_csv(&mut bytes, &report).map_err(runtime)?;
        std::fs::write(path, bytes).map_err(runtime)?;
    }
    print!("{}", format_rate_table(&report));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sample {
            dist,
            n,
            seed,
            stream,
            out,
        } => cmd_sample(dist, *n, *seed, *stream, out.as_deref()),
        Command::Estimate {
            x,
            y,
            k,
            norm,
            policy,
        } => cmd_estimate(x, y, *k, *norm, policy),
        Command::Experiment {
            config,
            out_dir,
            raw,
        } => cmd_experiment(config, out_dir, *raw),
        Command::Rates {
            summary,
            case,
            d,
            gamma,
            ratio_bounded,
            out,
        } => cmd_rates(summary, *case, *d, *gamma, *ratio_bounded, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
