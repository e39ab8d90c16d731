//! kNN estimators for KL divergence, differential entropy, and cross entropy.
//!
//! The divergence estimate is
//!
//! ```text
//! D_hat = (d/N) * sum_i ln(nu_i / eps_i) + ln(M / (N-1))
//! ```
//!
//! where `eps_i` is the k-th nearest-neighbor distance of X_i within the X
//! sample (self excluded) and `nu_i` is the k-th nearest-neighbor distance of
//! X_i within the Y sample (no exclusion). The entropy and cross-entropy
//! estimators carry digamma corrections; [`decompose`] ties all three together
//! through an exact residual identity. All values are in nats.
//!
//! Per-point sums are accumulated in sample-index order, so results are
//! reproducible run to run regardless of parallelism elsewhere.

use crate::error::{DistanceSide, Error, Result};
use crate::spatial::{build_index, SampleSet};
use crate::special::{digamma, unit_ball_volume, NormKind};

/// How zero k-th neighbor distances (duplicate points) are handled.
///
/// `Clamp` raises every distance below the floor up to the floor; `Error`
/// fails deterministically, naming the offending sample index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroDistancePolicy {
    Error,
    Clamp { floor: f64 },
}

/// Configuration shared by all kNN-based estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Neighbor order; the same k is used for both neighbor searches.
    pub k: usize,
    pub norm: NormKind,
    pub zero_distance_policy: ZeroDistancePolicy,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            k: 3,
            norm: NormKind::Euclidean,
            zero_distance_policy: ZeroDistancePolicy::Error,
        }
    }
}

impl EstimatorConfig {
    pub fn with_k(k: usize) -> Self {
        EstimatorConfig {
            k,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::KOutOfRange {
                k: 0,
                available: 0,
            });
        }
        if let ZeroDistancePolicy::Clamp { floor } = self.zero_distance_policy {
            if floor <= 0.0 || !floor.is_finite() {
                return Err(Error::NonPositive {
                    func: "clamp floor",
                    value: floor,
                });
            }
        }
        Ok(())
    }
}

/// A KL divergence estimate in nats, with the inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub norm: NormKind,
}

/// Entropy / cross-entropy split of a divergence estimate.
///
/// `cross_entropy_part - entropy_part + digamma_residual` reconstructs the
/// [`estimate_kl`] value exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionReport {
    pub entropy_part: f64,
    pub cross_entropy_part: f64,
    pub digamma_residual: f64,
}

impl DecompositionReport {
    pub fn reconstructed_kl(&self) -> f64 {
        self.cross_entropy_part - self.entropy_part + self.digamma_residual
    }
}

/// k-th neighbor distances of each X_i within x itself, self excluded.
fn kth_distances_within(x: &SampleSet, k: usize, norm: NormKind) -> Result<Vec<f64>> {
    let index = build_index(x, norm);
    (0..x.len())
        .map(|i| index.kth_distance(x.point(i), k, Some(i)))
        .collect()
}

/// k-th neighbor distances of each X_i within y, no exclusion.
fn kth_distances_cross(x: &SampleSet, y: &SampleSet, k: usize, norm: NormKind) -> Result<Vec<f64>> {
    let index = build_index(y, norm);
    x.iter_points()
        .map(|p| index.kth_distance(p, k, None))
        .collect()
}

fn apply_policy(dists: &mut [f64], policy: ZeroDistancePolicy, side: DistanceSide) -> Result<()> {
    match policy {
        ZeroDistancePolicy::Error => {
            for (index, d) in dists.iter().enumerate() {
                if *d <= 0.0 {
                    return Err(Error::ZeroDistance { index, side });
                }
            }
        }
        ZeroDistancePolicy::Clamp { floor } => {
            for d in dists.iter_mut() {
                if *d < floor {
                    *d = floor;
                }
            }
        }
    }
    Ok(())
}

/// Sum of natural logs in index order.
fn sum_ln(dists: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &d in dists {
        acc += d.ln();
    }
    acc
}

// The assembly formulas below are shared by the public estimators and by
// `decompose`, so the decomposition identity holds bit-for-bit.

fn entropy_from_sum(k: usize, n: usize, dim: usize, norm: NormKind, s_eps: f64) -> Result<f64> {
    let ln_cd = unit_ball_volume(dim, norm)?.ln();
    Ok(-digamma(k as f64)? + digamma(n as f64)? + ln_cd + (dim as f64 / n as f64) * s_eps)
}

fn cross_entropy_from_sum(
    k: usize,
    n: usize,
    m: usize,
    dim: usize,
    norm: NormKind,
    s_nu: f64,
) -> Result<f64> {
    let ln_cd = unit_ball_volume(dim, norm)?.ln();
    Ok(-digamma(k as f64)? + digamma(m as f64 + 1.0)? + ln_cd + (dim as f64 / n as f64) * s_nu)
}

fn kl_from_sums(n: usize, m: usize, dim: usize, s_eps: f64, s_nu: f64) -> f64 {
    (dim as f64 / n as f64) * (s_nu - s_eps) + ((m as f64).ln() - (n as f64 - 1.0).ln())
}

fn digamma_residual(n: usize, m: usize) -> Result<f64> {
    let m_part = (m as f64).ln() - digamma(m as f64 + 1.0)?;
    let n_part = (n as f64 - 1.0).ln() - digamma(n as f64)?;
    Ok(m_part - n_part)
}

fn check_pair(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<()> {
    cfg.validate()?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    if x.len() < cfg.k + 1 {
        return Err(Error::InsufficientSamples {
            needed: cfg.k + 1,
            got: x.len(),
        });
    }
    if y.len() < cfg.k {
        return Err(Error::InsufficientSamples {
            needed: cfg.k,
            got: y.len(),
        });
    }
    Ok(())
}

/// kNN estimate of D(f||g) from samples `x` of f and `y` of g.
pub fn estimate_kl(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<DivergenceEstimate> {
    check_pair(x, y, cfg)?;
    let mut eps = kth_distances_within(x, cfg.k, cfg.norm)?;
    apply_policy(&mut eps, cfg.zero_distance_policy, DistanceSide::WithinSample)?;
    let mut nu = kth_distances_cross(x, y, cfg.k, cfg.norm)?;
    apply_policy(&mut nu, cfg.zero_distance_policy, DistanceSide::CrossSample)?;
    let value = kl_from_sums(x.len(), y.len(), x.dim(), sum_ln(&eps), sum_ln(&nu));
    Ok(DivergenceEstimate {
        value,
        n: x.len(),
        m: y.len(),
        k: cfg.k,
        norm: cfg.norm,
    })
}

/// Kozachenko-Leonenko estimate of the differential entropy of `x`.
pub fn estimate_entropy(x: &SampleSet, cfg: &EstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    if x.len() < cfg.k + 1 {
        return Err(Error::InsufficientSamples {
            needed: cfg.k + 1,
            got: x.len(),
        });
    }
    let mut eps = kth_distances_within(x, cfg.k, cfg.norm)?;
    apply_policy(&mut eps, cfg.zero_distance_policy, DistanceSide::WithinSample)?;
    entropy_from_sum(cfg.k, x.len(), x.dim(), cfg.norm, sum_ln(&eps))
}

/// kNN estimate of the cross entropy -E_f[ln g] from samples of f and g.
pub fn estimate_cross_entropy(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<f64> {
    cfg.validate()?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    if y.len() < cfg.k {
        return Err(Error::InsufficientSamples {
            needed: cfg.k,
            got: y.len(),
        });
    }
    let mut nu = kth_distances_cross(x, y, cfg.k, cfg.norm)?;
    apply_policy(&mut nu, cfg.zero_distance_policy, DistanceSide::CrossSample)?;
    cross_entropy_from_sum(cfg.k, x.len(), y.len(), x.dim(), cfg.norm, sum_ln(&nu))
}

/// Splits the divergence estimate into entropy and cross-entropy parts plus
/// the digamma bookkeeping residual.
pub fn decompose(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<DecompositionReport> {
    check_pair(x, y, cfg)?;
    let mut eps = kth_distances_within(x, cfg.k, cfg.norm)?;
    apply_policy(&mut eps, cfg.zero_distance_policy, DistanceSide::WithinSample)?;
    let mut nu = kth_distances_cross(x, y, cfg.k, cfg.norm)?;
    apply_policy(&mut nu, cfg.zero_distance_policy, DistanceSide::CrossSample)?;
    let s_eps = sum_ln(&eps);
    let s_nu = sum_ln(&nu);
    Ok(DecompositionReport {
        entropy_part: entropy_from_sum(cfg.k, x.len(), x.dim(), cfg.norm, s_eps)?,
        cross_entropy_part: cross_entropy_from_sum(cfg.k, x.len(), y.len(), x.dim(), cfg.norm, s_nu)?,
        digamma_residual: digamma_residual(x.len(), y.len())?,
    })
}

/// Pointwise kNN density estimate at `at`.
///
/// With `self_excluded`, `at` must be one of the sample points; that
/// occurrence is excluded and the denominator is N-1. Otherwise all points
/// count and the denominator is N.
pub fn density_estimate(
    samples: &SampleSet,
    at: &[f64],
    cfg: &EstimatorConfig,
    self_excluded: bool,
) -> Result<f64> {
    cfg.validate()?;
    if at.len() != samples.dim() {
        return Err(Error::DimensionMismatch {
            left: at.len(),
            right: samples.dim(),
        });
    }
    let exclude = if self_excluded {
        let found = (0..samples.len()).find(|&i| samples.point(i) == at);
        Some(found.ok_or(Error::QueryNotInSet)?)
    } else {
        None
    };
    let denominator = samples.len() - usize::from(self_excluded);
    if denominator < cfg.k {
        return Err(Error::InsufficientSamples {
            needed: cfg.k + usize::from(self_excluded),
            got: samples.len(),
        });
    }
    let index = build_index(samples, cfg.norm);
    let mut r = index.kth_distance(at, cfg.k, exclude)?;
    if r <= 0.0 {
        match cfg.zero_distance_policy {
            ZeroDistancePolicy::Error => {
                return Err(Error::ZeroDistance {
                    index: exclude.unwrap_or(0),
                    side: DistanceSide::WithinSample,
                })
            }
            ZeroDistancePolicy::Clamp { floor } => r = floor,
        }
    } else if let ZeroDistancePolicy::Clamp { floor } = cfg.zero_distance_policy {
        if r < floor {
            r = floor;
        }
    }
    let dim = samples.dim();
    let cd = unit_ball_volume(dim, cfg.norm)?;
    Ok(cfg.k as f64 / (denominator as f64 * cd * r.powi(dim as i32)))
}
