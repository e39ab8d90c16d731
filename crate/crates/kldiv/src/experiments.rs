//! Monte Carlo convergence-rate lab.
//!
//! For each sample size n in a plan, the divergence is estimated over T
//! independent trials (M = N within a run); per-size bias and variance are
//! summarized, log-log slopes are fitted, and the empirical slopes are set
//! against the theoretical exponents for the distribution class.
//!
//! Trials are embarrassingly parallel. Every trial draws from its own RNG
//! stream derived from (seed, n, t), results are gathered into a (n, t)-indexed
//! layout, and reductions run in index order, so serial and parallel runs
//! produce identical summaries bit for bit.
//!
//! Reported theoretical exponents suppress sub-polynomial (logarithmic)
//! factors; slope regression over a 1.5-decade grid cannot resolve them.

use crate::distributions::{analytic_kl, sample_with, DistributionSpec, RngState};
use crate::error::{Error, Result};
use crate::estimators::{estimate_kl, EstimatorConfig};
use rayon::prelude::*;
use std::io::{BufRead, Write};

/// Distribution pair, sample-size grid, trial count, and estimator settings
/// for one lab run. Sizes are strictly ascending; M = N per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub f_spec: DistributionSpec,
    pub g_spec: DistributionSpec,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub estimator: EstimatorConfig,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.f_spec.validate()?;
        self.g_spec.validate()?;
        if self.f_spec.dim() != self.g_spec.dim() {
            return Err(Error::DimensionMismatch {
                left: self.f_spec.dim(),
                right: self.g_spec.dim(),
            });
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidPlan("sizes must be nonempty".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidPlan("sizes must be strictly ascending".into()));
        }
        if self.sizes[0] <= self.estimator.k + 1 {
            return Err(Error::InvalidPlan(format!(
                "every size must exceed k+1 = {}",
                self.estimator.k + 1
            )));
        }
        if self.trials < 2 {
            return Err(Error::InvalidPlan("trials must be at least 2".into()));
        }
        Ok(())
    }
}

/// Per-size summary of the T trial estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub n: usize,
    pub mean_estimate: f64,
    /// mean_estimate minus the analytic divergence.
    pub bias: f64,
    /// Unbiased (T-1 denominator) sample variance of the trial estimates.
    pub variance: f64,
    pub trials: usize,
}

impl SizeSummary {
    /// Monte Carlo standard error of the mean estimate.
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

/// Distribution class determining the theoretical convergence exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateClass {
    /// Bounded support, densities bounded away from zero.
    BoundedSupport,
    /// Smooth everywhere with tail parameter gamma in (0, 1].
    Smooth { gamma: f64 },
}

/// Inputs to [`theoretical_rates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalCase {
    pub class: RateClass,
    pub dim: usize,
    /// Whether f/g is bounded; governs the variance exponent in the smooth
    /// case (bounded support implies a bounded ratio).
    pub density_ratio_bounded: bool,
}

/// Theoretical exponents with logarithmic factors suppressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalRates {
    pub bias_exponent: f64,
    /// Absent when the density-ratio bound fails (no variance guarantee).
    pub variance_exponent: Option<f64>,
    pub minimax_mse_exponent: f64,
}

/// Fitted log-log slopes plus the matching theoretical exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Negated slope of log10 |bias| against log10 n.
    pub bias_slope: f64,
    pub variance_slope: f64,
    pub bias_r_squared: f64,
    pub variance_r_squared: f64,
    pub theoretical_bias_exponent: Option<f64>,
    pub theoretical_variance_exponent: Option<f64>,
    /// Sizes where |bias| sits below 10x the Monte Carlo standard error of
    /// the mean; their log|bias| points are regression-unreliable.
    pub unreliable_bias_sizes: Vec<usize>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG stream id for trial t at sample size n.
pub fn trial_stream(n: usize, t: usize) -> u64 {
    splitmix64(splitmix64(n as u64).wrapping_add(t as u64))
}

/// Default sample-size grid: 8 geometric points from 10^2 to 10^3.5.
pub fn default_size_grid() -> Vec<usize> {
    (0..8)
        .map(|j| 10f64.powf(2.0 + 1.5 * j as f64 / 7.0).round() as usize)
        .collect()
}

/// Runs trial `t` of the plan at size `n`: fresh X and Y draws from stream
/// (seed, trial_stream(n, t)), then one divergence estimate.
pub fn run_trial(plan: &ExperimentPlan, n: usize, t: usize) -> Result<f64> {
    let mut rng = RngState::new(plan.seed, trial_stream(n, t)).rng();
    let x = sample_with(&plan.f_spec, n, &mut rng)?;
    let y = sample_with(&plan.g_spec, n, &mut rng)?;
    Ok(estimate_kl(&x, &y, &plan.estimator)?.value)
}

/// Runs the full plan, returning per-size summaries plus the raw per-trial
/// estimates (outer index follows `plan.sizes`).
pub fn run_experiment_detailed(
    plan: &ExperimentPlan,
) -> Result<(Vec<SizeSummary>, Vec<Vec<f64>>)> {
    plan.validate()?;
    // Bias needs ground truth; refuse pairs without one.
    let truth = analytic_kl(&plan.f_spec, &plan.g_spec)?;
    let mut summaries = Vec::with_capacity(plan.sizes.len());
    let mut raw = Vec::with_capacity(plan.sizes.len());
    for &n in &plan.sizes {
        let estimates: Vec<f64> = (0..plan.trials)
            .into_par_iter()
            .map(|t| run_trial(plan, n, t))
            .collect::<Result<Vec<_>>>()?;
        let t = plan.trials as f64;
        let mean = estimates.iter().sum::<f64>() / t;
        let variance = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (t - 1.0);
        summaries.push(SizeSummary {
            n,
            mean_estimate: mean,
            bias: mean - truth,
            variance,
            trials: plan.trials,
        });
        raw.push(estimates);
    }
    Ok((summaries, raw))
}

/// Runs the full plan; one [`SizeSummary`] per size, ascending.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<SizeSummary>> {
    run_experiment_detailed(plan).map(|(summaries, _)| summaries)
}

/// Ordinary least squares of log10(value) on log10(n).
///
/// Returns the negated regression coefficient (a decay n^-beta reports slope
/// beta) and R^2. Needs at least 3 pairs with positive values.
pub fn fit_loglog_slope(pairs: &[(usize, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 3 {
        return Err(Error::RegressionInput(format!(
            "need at least 3 points, got {}",
            pairs.len()
        )));
    }
    for &(n, v) in pairs {
        if n == 0 || v <= 0.0 || !v.is_finite() {
            return Err(Error::RegressionInput(format!(
                "nonpositive point (n={n}, value={v})"
            )));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|&(n, _)| (n as f64).log10()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, v)| v.log10()).collect();
    let len = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / len;
    let y_mean = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::RegressionInput("all n values coincide".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fitted = y_mean + slope * (x - x_mean);
            (y - fitted) * (y - fitted)
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * len {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((-slope, r_squared))
}

/// Theoretical bias/variance/minimax exponents for a distribution class,
/// logarithmic factors suppressed.
pub fn theoretical_rates(case: &TheoreticalCase) -> Result<TheoreticalRates> {
    if case.dim == 0 {
        return Err(Error::InvalidPlan("case dimension must be positive".into()));
    }
    let d = case.dim as f64;
    match case.class {
        RateClass::BoundedSupport => Ok(TheoreticalRates {
            bias_exponent: 1.0 / d,
            variance_exponent: Some(1.0),
            minimax_mse_exponent: (2.0 / d).min(1.0),
        }),
        RateClass::Smooth { gamma } => {
            if gamma.is_nan() || gamma <= 0.0 || gamma > 1.0 {
                return Err(Error::InvalidPlan(format!(
                    "gamma must lie in (0,1], got {gamma}"
                )));
            }
            Ok(TheoreticalRates {
                bias_exponent: 2.0 * gamma / (d + 2.0),
                variance_exponent: case.density_ratio_bounded.then_some(1.0),
                minimax_mse_exponent: (4.0 * gamma / (d + 2.0)).min(1.0),
            })
        }
    }
}

/// Fits bias and variance slopes from the summaries and attaches theoretical
/// exponents when a case is supplied.
pub fn rate_report(
    summaries: &[SizeSummary],
    case: Option<&TheoreticalCase>,
) -> Result<RateReport> {
    if summaries.len() < 3 {
        return Err(Error::RegressionInput(format!(
            "need at least 3 summaries, got {}",
            summaries.len()
        )));
    }
    for s in summaries {
        if s.bias == 0.0 || !s.bias.is_finite() {
            return Err(Error::DegenerateSummary {
                n: s.n,
                what: format!("bias {} has no log magnitude", s.bias),
            });
        }
        if s.variance <= 0.0 || !s.variance.is_finite() {
            return Err(Error::DegenerateSummary {
                n: s.n,
                what: format!("variance {} is not positive", s.variance),
            });
        }
    }
    let bias_pairs: Vec<(usize, f64)> = summaries.iter().map(|s| (s.n, s.bias.abs())).collect();
    let var_pairs: Vec<(usize, f64)> = summaries.iter().map(|s| (s.n, s.variance)).collect();
    let (bias_slope, bias_r_squared) = fit_loglog_slope(&bias_pairs)?;
    let (variance_slope, variance_r_squared) = fit_loglog_slope(&var_pairs)?;
    let rates = case.map(theoretical_rates).transpose()?;
    let unreliable_bias_sizes = summaries
        .iter()
        .filter(|s| s.bias.abs() < 10.0 * s.standard_error())
        .map(|s| s.n)
        .collect();
    Ok(RateReport {
        bias_slope,
        variance_slope,
        bias_r_squared,
        variance_r_squared,
        theoretical_bias_exponent: rates.map(|r| r.bias_exponent),
        theoretical_variance_exponent: rates.and_then(|r| r.variance_exponent),
        unreliable_bias_sizes,
    })
}

/// Nine significant digits; fixed formatting keeps outputs byte-reproducible.
pub fn format_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Header: `n,trials,mean_estimate,bias,variance`; one row per size.
pub fn write_summary_csv<W: Write>(mut w: W, summaries: &[SizeSummary]) -> Result<()> {
    writeln!(w, "n,trials,mean_estimate,bias,variance")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.n,
            s.trials,
            format_sig9(s.mean_estimate),
            format_sig9(s.bias),
            format_sig9(s.variance)
        )?;
    }
    Ok(())
}

/// Parses a summary CSV produced by [`write_summary_csv`] (or any file in the
/// same format). Errors carry 1-based line numbers.
pub fn read_summary_csv<R: BufRead>(r: R) -> Result<Vec<SizeSummary>> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(Error::CsvParse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    if header.trim() != "n,trials,mean_estimate,bias,variance" {
        return Err(Error::CsvParse {
            line: 1,
            msg: format!("expected header 'n,trials,mean_estimate,bias,variance', got '{header}'"),
        });
    }
    let mut summaries: Vec<SizeSummary> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::CsvParse {
                line: lineno,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_u = |s: &str, what: &str| -> Result<usize> {
            s.trim().parse::<usize>().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("{what} must be an integer, got '{s}'"),
            })
        };
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("{what} must be a real number, got '{s}'"),
            })
        };
        let summary = SizeSummary {
            n: parse_u(fields[0], "n")?,
            trials: parse_u(fields[1], "trials")?,
            mean_estimate: parse_f(fields[2], "mean_estimate")?,
            bias: parse_f(fields[3], "bias")?,
            variance: parse_f(fields[4], "variance")?,
        };
        if let Some(prev) = summaries.last() {
            if summary.n <= prev.n {
                return Err(Error::CsvParse {
                    line: lineno,
                    msg: format!("sizes must be ascending: {} after {}", summary.n, prev.n),
                });
            }
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

/// Header: `n,trial,estimate`; `raw[i]` holds the trial estimates for
/// `sizes[i]`.
pub fn write_raw_trials_csv<W: Write>(mut w: W, sizes: &[usize], raw: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "n,trial,estimate")?;
    for (n, estimates) in sizes.iter().zip(raw) {
        for (t, e) in estimates.iter().enumerate() {
            writeln!(w, "{},{},{}", n, t, format_sig9(*e))?;
        }
    }
    Ok(())
}

fn format_exponent(e: Option<f64>) -> String {
    match e {
        Some(v) => format!("{v:.2}"),
        None => String::new(),
    }
}

/// Header: `metric,empirical_slope,theoretical_exponent,r_squared`; empty
/// theoretical column when no exponent applies.
pub fn write_rates_csv<W: Write>(mut w: W, report: &RateReport) -> Result<()> {
    writeln!(w, "metric,empirical_slope,theoretical_exponent,r_squared")?;
    writeln!(
        w,
        "bias,{},{},{}",
        format_sig9(report.bias_slope),
        format_exponent(report.theoretical_bias_exponent),
        format_sig9(report.bias_r_squared)
    )?;
    writeln!(
        w,
        "variance,{},{},{}",
        format_sig9(report.variance_slope),
        format_exponent(report.theoretical_variance_exponent),
        format_sig9(report.variance_r_squared)
    )?;
    Ok(())
}

/// Aligned text rendering of a rate report.
pub fn format_rate_table(report: &RateReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10}  {:>16}  {:>20}  {:>12}\n",
        "metric", "empirical_slope", "theoretical_exponent", "r_squared"
    ));
    let theo_bias = match report.theoretical_bias_exponent {
        Some(v) => format!("{v:.2}"),
        None => "--".into(),
    };
    let theo_var = match report.theoretical_variance_exponent {
        Some(v) => format!("{v:.2}"),
        None => "--".into(),
    };
    out.push_str(&format!(
        "{:<10}  {:>16.4}  {:>20}  {:>12.4}\n",
        "bias", report.bias_slope, theo_bias, report.bias_r_squared
    ));
    out.push_str(&format!(
        "{:<10}  {:>16.4}  {:>20}  {:>12.4}\n",
        "variance", report.variance_slope, theo_var, report.variance_r_squared
    ));
    if !report.unreliable_bias_sizes.is_empty() {
        out.push_str(&format!(
            "note: |bias| within 10x the standard error at n = {:?}; those points are regression-unreliable\n",
            report.unreliable_bias_sizes
        ));
    }
    out
}
