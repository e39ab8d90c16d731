//! Synthetic distribution families with exact samplers, pointwise densities,
//! and closed-form KL divergence.
//!
//! Three families are supported: axis-aligned uniform boxes, isotropic
//! Gaussians, and bump mixtures built from scaled uniform-ball bumps around a
//! uniform unit-ball base. Closed-form divergences exist for box-in-box
//! uniform pairs, Gaussian/Gaussian pairs, and bump-mixture pairs sharing the
//! same bump geometry; [`quadrature_kl`] is the d=1 numerical oracle.
//!
//! Specs have a one-line textual form (see [`DistributionSpec::to_string`]
//! and the `FromStr` impl):
//!
//! ```text
//! uniform-box d=2 lo=0.5 hi=1.5
//! gaussian d=3 mean=1.0 scale=1.0
//! bump-mixture d=1 m=4 alpha=0.2 D=0.1 weights=0.1,0.15,0.25,0.3
//! ```
//!
//! Vector-valued fields accept a single value (broadcast to all coordinates)
//! or a comma-separated list of exactly d values.

use crate::error::{Error, Result};
use crate::spatial::SampleSet;
use crate::special::{unit_ball_volume, NormKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;

/// Reproducible RNG position: identical (seed, stream) pairs produce the
/// identical sample sequence on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngState { seed, stream }
    }

    /// Counter-based generator positioned at this (seed, stream).
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Declarative description of a synthetic density.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Uniform on the axis-aligned box [lo, hi].
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Isotropic normal: covariance is `covariance_scale` times the identity.
    Gaussian { mean: Vec<f64>, covariance_scale: f64 },
    /// Mixture of a uniform unit-ball base (weight 1-alpha) and m uniform-ball
    /// bumps of radius `radius` at `centers` with masses `weights[i]/m`.
    ///
    /// Bump balls are pairwise disjoint and disjoint from the base ball, which
    /// is what makes the closed-form divergence between matched-geometry pairs
    /// exact. Balls are Euclidean regardless of the estimator norm.
    BumpMixture {
        alpha: f64,
        centers: Vec<Vec<f64>>,
        radius: f64,
        weights: Vec<f64>,
    },
}

/// Default bump-center placement: a grid along the first axis with spacing
/// 3*radius, starting just outside the unit ball. Separation exceeds
/// 2*radius and every bump stays clear of the base ball.
pub fn default_bump_centers(dim: usize, m: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let mut c = vec![0.0; dim];
            c[0] = 1.0 + 2.0 * radius + 3.0 * radius * i as f64;
            c
        })
        .collect()
}

fn euclidean_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn euclidean_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl DistributionSpec {
    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec::UniformBox { lo, hi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(mean: Vec<f64>, covariance_scale: f64) -> Result<Self> {
        let spec = DistributionSpec::Gaussian {
            mean,
            covariance_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bump_mixture(
        alpha: f64,
        centers: Vec<Vec<f64>>,
        radius: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let spec = DistributionSpec::BumpMixture {
            alpha,
            centers,
            radius,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Bump mixture with centers from [`default_bump_centers`].
    pub fn bump_mixture_grid(
        dim: usize,
        alpha: f64,
        radius: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let centers = default_bump_centers(dim, weights.len(), radius);
        Self::bump_mixture(alpha, centers, radius, weights)
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::UniformBox { lo, .. } => lo.len(),
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::BumpMixture { centers, .. } => {
                centers.first().map_or(0, |c| c.len())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::InvalidSpec(format!(
                        "uniform-box lo/hi must be nonempty vectors of equal dimension, got {} and {}",
                        lo.len(),
                        hi.len()
                    )));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !l.is_finite() || !h.is_finite() || l >= h {
                        return Err(Error::InvalidSpec(format!(
                            "uniform-box requires lo < hi componentwise, got lo={l} hi={h}"
                        )));
                    }
                }
            }
            DistributionSpec::Gaussian {
                mean,
                covariance_scale,
            } => {
                if mean.is_empty() {
                    return Err(Error::InvalidSpec("gaussian mean must be nonempty".into()));
                }
                if mean.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("gaussian mean must be finite".into()));
                }
                if *covariance_scale <= 0.0 || !covariance_scale.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "gaussian scale must be positive, got {covariance_scale}"
                    )));
                }
            }
            DistributionSpec::BumpMixture {
                alpha,
                centers,
                radius,
                weights,
            } => {
                if alpha.is_nan() || *alpha <= 0.0 || *alpha >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "bump-mixture alpha must lie in (0,1), got {alpha}"
                    )));
                }
                if *radius <= 0.0 || !radius.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "bump-mixture D must be positive, got {radius}"
                    )));
                }
                let m = centers.len();
                if m == 0 || weights.len() != m {
                    return Err(Error::InvalidSpec(format!(
                        "bump-mixture needs matching nonempty centers/weights, got {} and {}",
                        m,
                        weights.len()
                    )));
                }
                let dim = centers[0].len();
                if dim == 0 {
                    return Err(Error::InvalidSpec("bump-mixture centers must be nonempty vectors".into()));
                }
                for c in centers {
                    if c.len() != dim || c.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSpec(
                            "bump-mixture centers must share a dimension and be finite".into(),
                        ));
                    }
                }
                let mean_weight = weights.iter().sum::<f64>() / m as f64;
                if (mean_weight - alpha).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "bump-mixture weights must average to alpha: mean {mean_weight} vs alpha {alpha}"
                    )));
                }
                let peak = m as f64 * radius.powi(dim as i32);
                for &w in weights {
                    if w < 0.0 || !w.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "bump-mixture weights must be nonnegative, got {w}"
                        )));
                    }
                    if w / peak >= 1.0 {
                        return Err(Error::InvalidSpec(format!(
                            "bump-mixture weight {w} violates w/(m*D^d) < 1"
                        )));
                    }
                }
                for i in 0..m {
                    for j in i + 1..m {
                        if euclidean_dist(&centers[i], &centers[j]) <= 2.0 * radius {
                            return Err(Error::InvalidSpec(format!(
                                "bump-mixture centers {i} and {j} are closer than 2*D"
                            )));
                        }
                    }
                    if euclidean_norm(&centers[i]) <= 1.0 + radius {
                        return Err(Error::InvalidSpec(format!(
                            "bump-mixture center {i} overlaps the base unit ball"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Draws one point uniformly from the Euclidean ball of radius `radius`
/// around `center`, appending coordinates to `out`.
fn sample_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64, out: &mut Vec<f64>) {
    let dim = center.len();
    loop {
        let mut norm_sq = 0.0;
        let start = out.len();
        for _ in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            norm_sq += z * z;
            out.push(z);
        }
        if norm_sq > 0.0 {
            let u: f64 = rng.random::<f64>();
            let r = radius * u.powf(1.0 / dim as f64) / norm_sq.sqrt();
            for (i, c) in center.iter().enumerate() {
                out[start + i] = c + out[start + i] * r;
            }
            return;
        }
        out.truncate(start);
    }
}

/// Draws `n` i.i.d. points from `spec` using the given generator.
pub fn sample_with<R: Rng>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<SampleSet> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let dim = spec.dim();
    let mut data = Vec::with_capacity(n * dim);
    match spec {
        DistributionSpec::UniformBox { lo, hi } => {
            for _ in 0..n {
                for j in 0..dim {
                    let u: f64 = rng.random();
                    data.push(lo[j] + (hi[j] - lo[j]) * u);
                }
            }
        }
        DistributionSpec::Gaussian {
            mean,
            covariance_scale,
        } => {
            let sd = covariance_scale.sqrt();
            for _ in 0..n {
                for &mu in mean {
                    let z: f64 = rng.sample(StandardNormal);
                    data.push(mu + sd * z);
                }
            }
        }
        DistributionSpec::BumpMixture {
            alpha,
            centers,
            radius,
            weights,
        } => {
            let m = centers.len();
            let origin = vec![0.0; dim];
            for _ in 0..n {
                let t: f64 = rng.random();
                if t < 1.0 - alpha {
                    sample_in_ball(rng, &origin, 1.0, &mut data);
                } else {
                    // Walk the bump masses w_i/m; numeric slack lands on the
                    // last positive-weight bump.
                    let mut rest = t - (1.0 - alpha);
                    let mut chosen = None;
                    for (i, &w) in weights.iter().enumerate() {
                        let mass = w / m as f64;
                        if rest < mass {
                            chosen = Some(i);
                            break;
                        }
                        rest -= mass;
                    }
                    let i = chosen.unwrap_or_else(|| {
                        (0..m).rev().find(|&i| weights[i] > 0.0).unwrap_or(m - 1)
                    });
                    sample_in_ball(rng, &centers[i], *radius, &mut data);
                }
            }
        }
    }
    SampleSet::from_flat(dim, data)
}

/// Draws `n` i.i.d. points from `spec`; deterministic given `rng`.
pub fn sample(spec: &DistributionSpec, n: usize, rng: RngState) -> Result<SampleSet> {
    sample_with(spec, n, &mut rng.rng())
}

/// Exact pdf value of `spec` at `at`.
pub fn density(spec: &DistributionSpec, at: &[f64]) -> Result<f64> {
    spec.validate()?;
    if at.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            left: at.len(),
            right: spec.dim(),
        });
    }
    match spec {
        DistributionSpec::UniformBox { lo, hi } => {
            let inside = lo
                .iter()
                .zip(hi)
                .zip(at)
                .all(|((l, h), x)| *l <= *x && *x <= *h);
            if inside {
                let volume: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
                Ok(1.0 / volume)
            } else {
                Ok(0.0)
            }
        }
        DistributionSpec::Gaussian {
            mean,
            covariance_scale,
        } => {
            let d = mean.len() as f64;
            let sq: f64 = mean
                .iter()
                .zip(at)
                .map(|(mu, x)| (x - mu) * (x - mu))
                .sum();
            let log_pdf = -0.5 * d * (2.0 * std::f64::consts::PI * covariance_scale).ln()
                - 0.5 * sq / covariance_scale;
            Ok(log_pdf.exp())
        }
        DistributionSpec::BumpMixture {
            alpha,
            centers,
            radius,
            weights,
        } => {
            let dim = spec.dim();
            let vd = unit_ball_volume(dim, NormKind::Euclidean)?;
            let m = centers.len() as f64;
            let mut value = 0.0;
            if euclidean_norm(at) <= 1.0 {
                value += (1.0 - alpha) / vd;
            }
            for (c, &w) in centers.iter().zip(weights) {
                if euclidean_dist(c, at) <= *radius {
                    value += w / (m * radius.powi(dim as i32) * vd);
                }
            }
            Ok(value)
        }
    }
}

/// Closed-form KL divergence D(f||g) in nats.
///
/// Supported pairs: box-in-box uniforms, Gaussian/Gaussian, and bump mixtures
/// sharing centers and radius. Everything else is `NotClosedForm`.
pub fn analytic_kl(f: &DistributionSpec, g: &DistributionSpec) -> Result<f64> {
    f.validate()?;
    g.validate()?;
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: g.dim(),
        });
    }
    match (f, g) {
        (
            DistributionSpec::UniformBox { lo: flo, hi: fhi },
            DistributionSpec::UniformBox { lo: glo, hi: ghi },
        ) => {
            let contained = flo
                .iter()
                .zip(fhi)
                .zip(glo.iter().zip(ghi))
                .all(|((fl, fh), (gl, gh))| gl <= fl && fh <= gh);
            if !contained {
                return Err(Error::SupportViolation(
                    "f's box is not contained in g's box".into(),
                ));
            }
            // ln(vol g) - ln(vol f)
            let mut value = 0.0;
            for i in 0..flo.len() {
                value += (ghi[i] - glo[i]).ln() - (fhi[i] - flo[i]).ln();
            }
            Ok(value)
        }
        (
            DistributionSpec::Gaussian {
                mean: mf,
                covariance_scale: sf,
            },
            DistributionSpec::Gaussian {
                mean: mg,
                covariance_scale: sg,
            },
        ) => {
            let d = mf.len() as f64;
            let shift_sq: f64 = mf.iter().zip(mg).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(0.5 * (d * sf / sg + shift_sq / sg - d + d * (sg / sf).ln()))
        }
        (
            DistributionSpec::BumpMixture {
                alpha: af,
                centers: cf,
                radius: rf,
                weights: wf,
            },
            DistributionSpec::BumpMixture {
                alpha: ag,
                centers: cg,
                radius: rg,
                weights: wg,
            },
        ) => {
            let matched = cf.len() == cg.len()
                && rf == rg
                && cf
                    .iter()
                    .zip(cg)
                    .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x == y));
            if !matched {
                return Err(Error::NotClosedForm(
                    "bump mixtures must share centers and radius".into(),
                ));
            }
            let m = wf.len() as f64;
            // Base balls and bump balls are disjoint, so the divergence splits
            // into a base term and one term per bump.
            let mut value = if af == ag {
                0.0
            } else {
                (1.0 - af) * ((1.0 - af) / (1.0 - ag)).ln()
            };
            for (i, (&u, &v)) in wf.iter().zip(wg).enumerate() {
                if u == 0.0 {
                    continue;
                }
                if v == 0.0 {
                    return Err(Error::SupportViolation(format!(
                        "bump {i} has f-weight {u} but zero g-weight"
                    )));
                }
                value += if u == v { 0.0 } else { (u / m) * (u / v).ln() };
            }
            Ok(value)
        }
        _ => Err(Error::NotClosedForm(format!(
            "no closed form for {f} against {g}"
        ))),
    }
}

/// Intervals on which the density of a 1-d spec is smooth and positive.
fn support_pieces_1d(spec: &DistributionSpec) -> Vec<(f64, f64)> {
    match spec {
        DistributionSpec::UniformBox { lo, hi } => vec![(lo[0], hi[0])],
        DistributionSpec::Gaussian {
            mean,
            covariance_scale,
        } => {
            let sd = covariance_scale.sqrt();
            vec![(mean[0] - 10.0 * sd, mean[0] + 10.0 * sd)]
        }
        DistributionSpec::BumpMixture {
            centers,
            radius,
            weights,
            ..
        } => {
            let mut pieces = vec![(-1.0, 1.0)];
            for (c, &w) in centers.iter().zip(weights) {
                if w > 0.0 {
                    pieces.push((c[0] - radius, c[0] + radius));
                }
            }
            pieces
        }
    }
}

/// Trims a support piece inward by a relative 1e-12 so every quadrature
/// sample point lies strictly inside the piece. Ball-boundary membership
/// tests are not reproducible at the exact endpoints after rounding; the
/// trimmed sliver contributes under 1e-12 of the integral.
fn trim_piece(a: f64, b: f64) -> (f64, f64) {
    let margin = 1e-12 * (b - a);
    (a + margin, b - margin)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Numerical KL divergence for d=1 via composite Simpson quadrature with at
/// least `resolution` panels per smooth support piece. Test oracle for
/// [`analytic_kl`]; Gaussian supports are truncated at ten standard
/// deviations.
pub fn quadrature_kl(f: &DistributionSpec, g: &DistributionSpec, resolution: usize) -> Result<f64> {
    f.validate()?;
    g.validate()?;
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::QuadratureUnsupported(f.dim().max(g.dim())));
    }
    let integrand = |x: f64| {
        let fx = density(f, &[x]).unwrap_or(0.0);
        if fx <= 0.0 {
            return 0.0;
        }
        let gx = density(g, &[x]).unwrap_or(0.0);
        fx * (fx / gx).ln()
    };
    let mut total = 0.0;
    for (a, b) in support_pieces_1d(f) {
        let (a, b) = trim_piece(a, b);
        total += simpson(&integrand, a, b, resolution);
    }
    Ok(total)
}

fn format_value(v: f64) -> String {
    format!("{v:?}")
}

fn format_vector(vs: &[f64]) -> String {
    if vs.iter().all(|v| v == &vs[0]) {
        format_value(vs[0])
    } else {
        vs.iter()
            .map(|v| format_value(*v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::UniformBox { lo, hi } => write!(
                f,
                "uniform-box d={} lo={} hi={}",
                lo.len(),
                format_vector(lo),
                format_vector(hi)
            ),
            DistributionSpec::Gaussian {
                mean,
                covariance_scale,
            } => write!(
                f,
                "gaussian d={} mean={} scale={}",
                mean.len(),
                format_vector(mean),
                format_value(*covariance_scale)
            ),
            DistributionSpec::BumpMixture {
                alpha,
                centers,
                radius,
                weights,
            } => write!(
                f,
                "bump-mixture d={} m={} alpha={} D={} weights={}",
                centers.first().map_or(0, |c| c.len()),
                centers.len(),
                format_value(*alpha),
                format_value(*radius),
                weights
                    .iter()
                    .map(|w| format_value(*w))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

struct KeyValues<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> KeyValues<'a> {
    fn parse(tokens: &[&'a str]) -> Result<Self> {
        let mut pairs = Vec::new();
        for tok in tokens {
            let (key, value) = tok.split_once('=').ok_or_else(|| {
                Error::SpecParse(format!("expected key=value token, got '{tok}'"))
            })?;
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(Error::SpecParse(format!("duplicate key '{key}'")));
            }
            pairs.push((key, value));
        }
        Ok(KeyValues { pairs })
    }

    fn take(&mut self, key: &str) -> Result<&'a str> {
        let pos = self
            .pairs
            .iter()
            .position(|(k, _)| *k == key)
            .ok_or_else(|| Error::SpecParse(format!("missing required key '{key}'")))?;
        Ok(self.pairs.remove(pos).1)
    }

    fn finish(self, family: &str) -> Result<()> {
        if let Some((k, _)) = self.pairs.first() {
            return Err(Error::SpecParse(format!(
                "unknown key '{k}' for {family}"
            )));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| Error::SpecParse(format!("{key} must be a real number, got '{raw}'")))
}

fn parse_usize(key: &str, raw: &str) -> Result<usize> {
    raw.parse::<usize>()
        .ok()
        .filter(|v| *v > 0)
        .ok_or_else(|| Error::SpecParse(format!("{key} must be a positive integer, got '{raw}'")))
}

/// Scalar broadcast or comma list of exactly `dim` reals.
fn parse_vector(key: &str, raw: &str, dim: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() == 1 {
        return Ok(vec![parse_f64(key, parts[0])?; dim]);
    }
    if parts.len() != dim {
        return Err(Error::SpecParse(format!(
            "{key} must have 1 or {dim} comma-separated values, got {}",
            parts.len()
        )));
    }
    parts.iter().map(|p| parse_f64(key, p)).collect()
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let (family, rest) = tokens
            .split_first()
            .ok_or_else(|| Error::SpecParse("empty spec string".into()))?;
        let mut kv = KeyValues::parse(rest)?;
        match *family {
            "uniform-box" => {
                let dim = parse_usize("d", kv.take("d")?)?;
                let lo = parse_vector("lo", kv.take("lo")?, dim)?;
                let hi = parse_vector("hi", kv.take("hi")?, dim)?;
                kv.finish("uniform-box")?;
                DistributionSpec::uniform_box(lo, hi)
            }
            "gaussian" => {
                let dim = parse_usize("d", kv.take("d")?)?;
                let mean = parse_vector("mean", kv.take("mean")?, dim)?;
                let scale = parse_f64("scale", kv.take("scale")?)?;
                kv.finish("gaussian")?;
                DistributionSpec::gaussian(mean, scale)
            }
            "bump-mixture" => {
                let dim = parse_usize("d", kv.take("d")?)?;
                let m = parse_usize("m", kv.take("m")?)?;
                let alpha = parse_f64("alpha", kv.take("alpha")?)?;
                let radius = parse_f64("D", kv.take("D")?)?;
                let weights = parse_vector("weights", kv.take("weights")?, m)?;
                kv.finish("bump-mixture")?;
                DistributionSpec::bump_mixture_grid(dim, alpha, radius, weights)
            }
            other => Err(Error::SpecParse(format!(
                "unknown distribution family '{other}' (expected uniform-box, gaussian, or bump-mixture)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_pair_1d() -> (DistributionSpec, DistributionSpec) {
        (
            DistributionSpec::uniform_box(vec![0.5], vec![1.5]).unwrap(),
            DistributionSpec::uniform_box(vec![0.0], vec![2.0]).unwrap(),
        )
    }

    fn bump_pair_1d() -> (DistributionSpec, DistributionSpec) {
        let f = DistributionSpec::bump_mixture_grid(1, 0.2, 0.1, vec![0.2; 4]).unwrap();
        let g =
            DistributionSpec::bump_mixture_grid(1, 0.2, 0.1, vec![0.1, 0.15, 0.25, 0.3]).unwrap();
        (f, g)
    }

    #[test]
    fn uniform_box_moment_check() {
        let spec = DistributionSpec::uniform_box(vec![0.0], vec![2.0]).unwrap();
        let n = 100_000;
        let xs = sample(&spec, n, RngState::new(1, 0)).unwrap();
        let mean: f64 = xs.iter_points().map(|p| p[0]).sum::<f64>() / n as f64;
        let sigma = (2.0 / 12f64.sqrt()) / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn gaussian_moment_check() {
        let spec = DistributionSpec::gaussian(vec![0.0], 2.0).unwrap();
        let n = 100_000;
        let xs = sample(&spec, n, RngState::new(2, 0)).unwrap();
        let mean: f64 = xs.iter_points().map(|p| p[0]).sum::<f64>() / n as f64;
        let var: f64 =
            xs.iter_points().map(|p| (p[0] - mean) * (p[0] - mean)).sum::<f64>() / (n - 1) as f64;
        // variance of the sample variance is 2*sigma^4/(n-1)
        let sigma_var = (2.0 * 4.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 2.0).abs() < 3.0 * sigma_var, "variance {var}");
    }

    #[test]
    fn bump_mixture_bump_fraction_matches_alpha() {
        // w/(m*D^d) = 0.2/(4*0.09) < 1 keeps the mixture valid in d=2
        let spec = DistributionSpec::bump_mixture_grid(2, 0.2, 0.3, vec![0.2; 4]).unwrap();
        let n = 100_000;
        let xs = sample(&spec, n, RngState::new(3, 0)).unwrap();
        let centers = match &spec {
            DistributionSpec::BumpMixture { centers, .. } => centers.clone(),
            _ => unreachable!(),
        };
        let in_bump = xs
            .iter_points()
            .filter(|p| centers.iter().any(|c| euclidean_dist(c, p) <= 0.3))
            .count();
        let frac = in_bump as f64 / n as f64;
        let sigma = (0.2 * 0.8 / n as f64).sqrt();
        assert!((frac - 0.2).abs() < 3.0 * sigma, "bump fraction {frac}");
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let spec = DistributionSpec::gaussian(vec![0.0, 0.0], 1.0).unwrap();
        let a = sample(&spec, 100, RngState::new(7, 3)).unwrap();
        let b = sample(&spec, 100, RngState::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample(&spec, 100, RngState::new(7, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn density_examples() {
        let box2 = DistributionSpec::uniform_box(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(density(&box2, &[1.0, 1.0]).unwrap(), 0.25);

        let normal = DistributionSpec::gaussian(vec![0.0], 1.0).unwrap();
        let at_zero = density(&normal, &[0.0]).unwrap();
        assert!((at_zero - 0.3989422804014327).abs() < 1e-10);

        let narrow = DistributionSpec::uniform_box(vec![0.5], vec![1.5]).unwrap();
        assert_eq!(density(&narrow, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn density_checks_dimension() {
        let spec = DistributionSpec::gaussian(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            density(&spec, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn analytic_kl_named_pairs() {
        for d in [1usize, 2, 3] {
            let f = DistributionSpec::uniform_box(vec![0.5; d], vec![1.5; d]).unwrap();
            let g = DistributionSpec::uniform_box(vec![0.0; d], vec![2.0; d]).unwrap();
            let expected = d as f64 * std::f64::consts::LN_2;
            assert!((analytic_kl(&f, &g).unwrap() - expected).abs() < 1e-14);

            let gf = DistributionSpec::gaussian(vec![0.0; d], 1.0).unwrap();
            let gg = DistributionSpec::gaussian(vec![1.0; d], 1.0).unwrap();
            assert!((analytic_kl(&gf, &gg).unwrap() - d as f64 / 2.0).abs() < 1e-14);

            let gw = DistributionSpec::gaussian(vec![0.0; d], 2.0).unwrap();
            let expected = 0.5 * d as f64 * (std::f64::consts::LN_2 - 0.5);
            assert!((analytic_kl(&gf, &gw).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_kl_matched_bump_pair() {
        let (f, g) = bump_pair_1d();
        let alpha = 0.2f64;
        let weights = [0.1f64, 0.15, 0.25, 0.3];
        let expected =
            alpha * alpha.ln() - (alpha / 4.0) * weights.iter().map(|w| w.ln()).sum::<f64>();
        assert!((analytic_kl(&f, &g).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn analytic_kl_detects_violations() {
        let f = DistributionSpec::uniform_box(vec![0.0], vec![3.0]).unwrap();
        let g = DistributionSpec::uniform_box(vec![0.0], vec![2.0]).unwrap();
        assert!(matches!(
            analytic_kl(&f, &g),
            Err(Error::SupportViolation(_))
        ));
        let normal = DistributionSpec::gaussian(vec![0.0], 1.0).unwrap();
        assert!(matches!(
            analytic_kl(&f, &normal),
            Err(Error::NotClosedForm(_))
        ));
    }

    #[test]
    fn analytic_kl_is_zero_on_self_and_nonnegative() {
        let (f1, g1) = fig1_pair_1d();
        let (fb, gb) = bump_pair_1d();
        let normal = DistributionSpec::gaussian(vec![0.0, 1.0], 1.5).unwrap();
        for spec in [&f1, &g1, &fb, &gb, &normal] {
            assert_eq!(analytic_kl(spec, spec).unwrap(), 0.0);
        }
        for (f, g) in [(&f1, &g1), (&fb, &gb)] {
            assert!(analytic_kl(f, g).unwrap() >= 0.0);
        }
    }

    #[test]
    fn quadrature_matches_analytic() {
        let (f1, g1) = fig1_pair_1d();
        let gf = DistributionSpec::gaussian(vec![0.0], 1.0).unwrap();
        let gg = DistributionSpec::gaussian(vec![1.0], 1.0).unwrap();
        let gw = DistributionSpec::gaussian(vec![0.0], 2.0).unwrap();
        let (fb, gb) = bump_pair_1d();
        for (f, g) in [(&f1, &g1), (&gf, &gg), (&gf, &gw), (&fb, &gb)] {
            let exact = analytic_kl(f, g).unwrap();
            let numeric = quadrature_kl(f, g, 100_000).unwrap();
            assert!(
                (exact - numeric).abs() < 1e-6,
                "analytic {exact} vs quadrature {numeric}"
            );
        }
        assert!(quadrature_kl(&f1, &f1, 100_000).unwrap().abs() < 1e-10);
    }

    #[test]
    fn quadrature_rejects_higher_dimensions() {
        let f = DistributionSpec::gaussian(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            quadrature_kl(&f, &f, 1000),
            Err(Error::QuadratureUnsupported(2))
        ));
    }

    #[test]
    fn densities_integrate_to_one_in_1d() {
        let (f1, g1) = fig1_pair_1d();
        let normal = DistributionSpec::gaussian(vec![0.3], 1.7).unwrap();
        let (fb, _) = bump_pair_1d();
        for spec in [&f1, &g1, &normal, &fb] {
            let mut total = 0.0;
            for (a, b) in support_pieces_1d(spec) {
                let (a, b) = trim_piece(a, b);
                total += simpson(&|x| density(spec, &[x]).unwrap(), a, b, 100_000);
            }
            assert!((total - 1.0).abs() < 1e-6, "{spec}: integral {total}");
        }
    }

    #[test]
    fn densities_integrate_to_one_in_2d() {
        // Tensor Simpson for the smooth/box specs; the bump mixture is a sum
        // of constant-density Euclidean discs, integrated in polar form.
        let box2 = DistributionSpec::uniform_box(vec![0.0, -1.0], vec![2.0, 1.5]).unwrap();
        let normal = DistributionSpec::gaussian(vec![0.5, -0.5], 1.3).unwrap();
        for (spec, lo, hi) in [
            (&box2, [0.0, -1.0], [2.0, 1.5]),
            (&normal, [-11.0, -12.0], [12.0, 11.0]),
        ] {
            let n = 600;
            let hx = (hi[0] - lo[0]) / n as f64;
            let hy = (hi[1] - lo[1]) / n as f64;
            let weight = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let mut total = 0.0;
            for i in 0..=n {
                let x = lo[0] + i as f64 * hx;
                let mut row = 0.0;
                for j in 0..=n {
                    let y = lo[1] + j as f64 * hy;
                    row += weight(j) * density(spec, &[x, y]).unwrap();
                }
                total += weight(i) * row;
            }
            total *= hx * hy / 9.0;
            assert!((total - 1.0).abs() < 1e-3, "{spec}: integral {total}");
        }

        let bump = DistributionSpec::bump_mixture_grid(2, 0.1, 0.2, vec![0.1; 3]).unwrap();
        let (centers, radius) = match &bump {
            DistributionSpec::BumpMixture { centers, radius, .. } => (centers.clone(), *radius),
            _ => unreachable!(),
        };
        let mut discs: Vec<(Vec<f64>, f64)> = vec![(vec![0.0, 0.0], 1.0)];
        discs.extend(centers.iter().map(|c| (c.clone(), radius)));
        let mut total = 0.0;
        for (center, r) in discs {
            // constant density inside each disc; polar integral is exact
            let value = density(&bump, &center).unwrap();
            let nr = 200;
            let hr = r / nr as f64;
            let mut radial = 0.0;
            for i in 0..=nr {
                let w = if i == 0 || i == nr { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let rr = i as f64 * hr;
                radial += w * rr;
            }
            radial *= hr / 3.0;
            total += value * 2.0 * std::f64::consts::PI * radial;
        }
        assert!((total - 1.0).abs() < 1e-3, "bump integral {total}");
    }

    #[test]
    fn kolmogorov_smirnov_against_numeric_cdf() {
        let specs = [
            DistributionSpec::uniform_box(vec![0.5], vec![1.5]).unwrap(),
            DistributionSpec::gaussian(vec![0.0], 1.0).unwrap(),
            bump_pair_1d().0,
        ];
        for (si, spec) in specs.iter().enumerate() {
            let n = 100_000;
            let xs = sample(spec, n, RngState::new(100 + si as u64, 0)).unwrap();
            let mut values: Vec<f64> = xs.iter_points().map(|p| p[0]).collect();
            values.sort_by(|a, b| a.total_cmp(b));

            // cumulative trapezoid CDF on a fine grid
            let pieces = support_pieces_1d(spec);
            let lo = pieces.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let grid = 1_000_000usize;
            let h = (hi - lo) / grid as f64;
            let mut cdf = Vec::with_capacity(grid + 1);
            let mut acc = 0.0;
            let mut prev = density(spec, &[lo]).unwrap();
            cdf.push(0.0);
            for i in 1..=grid {
                let x = lo + i as f64 * h;
                let cur = density(spec, &[x]).unwrap();
                acc += 0.5 * (prev + cur) * h;
                cdf.push(acc);
                prev = cur;
            }
            let eval = |x: f64| -> f64 {
                if x <= lo {
                    return 0.0;
                }
                if x >= hi {
                    return 1.0;
                }
                let t = (x - lo) / h;
                let i = t.floor() as usize;
                let frac = t - i as f64;
                (cdf[i] * (1.0 - frac) + cdf[i + 1] * frac).clamp(0.0, 1.0)
            };

            let mut ks = 0.0f64;
            for (i, &x) in values.iter().enumerate() {
                let fx = eval(x);
                ks = ks.max((fx - i as f64 / n as f64).abs());
                ks = ks.max(((i + 1) as f64 / n as f64 - fx).abs());
            }
            let critical = 1.628 / (n as f64).sqrt();
            assert!(ks < critical, "{spec}: KS statistic {ks} >= {critical}");
        }
    }

    #[test]
    fn bump_constructor_enforces_constraints() {
        // weights must average to alpha
        assert!(DistributionSpec::bump_mixture_grid(1, 0.2, 0.1, vec![0.3; 4]).is_err());
        // peak constraint w/(m*D^d) < 1
        assert!(DistributionSpec::bump_mixture_grid(1, 0.2, 0.04, vec![0.2; 4]).is_err());
        // centers closer than 2D
        let centers = vec![vec![1.5], vec![1.6]];
        assert!(DistributionSpec::bump_mixture(0.2, centers, 0.1, vec![0.2, 0.2]).is_err());
        // centers overlapping the base ball
        let centers = vec![vec![0.5], vec![1.5]];
        assert!(DistributionSpec::bump_mixture(0.2, centers, 0.1, vec![0.2, 0.2]).is_err());

        let spec = DistributionSpec::bump_mixture_grid(1, 0.2, 0.1, vec![0.1, 0.15, 0.25, 0.3])
            .unwrap();
        if let DistributionSpec::BumpMixture { centers, weights, .. } = &spec {
            for i in 0..centers.len() {
                for j in i + 1..centers.len() {
                    assert!(euclidean_dist(&centers[i], &centers[j]) > 0.2);
                }
            }
            let mean = weights.iter().sum::<f64>() / weights.len() as f64;
            assert!((mean - 0.2).abs() <= 1e-12);
        } else {
            unreachable!()
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        let specs = [
            DistributionSpec::uniform_box(vec![0.5, 0.5], vec![1.5, 1.5]).unwrap(),
            DistributionSpec::uniform_box(vec![0.0, -0.25], vec![2.0, 1.0]).unwrap(),
            DistributionSpec::gaussian(vec![1.0, 1.0, 1.0], 2.0).unwrap(),
            DistributionSpec::bump_mixture_grid(1, 0.2, 0.1, vec![0.1, 0.15, 0.25, 0.3]).unwrap(),
        ];
        for spec in specs {
            let text = spec.to_string();
            let parsed: DistributionSpec = text.parse().unwrap();
            assert_eq!(parsed, spec, "round trip failed for '{text}'");
        }
    }

    #[test]
    fn spec_parse_errors_name_the_rule() {
        let err = "uniform-box d=1 lo=2 hi=1".parse::<DistributionSpec>().unwrap_err();
        assert!(err.to_string().contains("lo < hi"));
        let err = "gaussian d=2 mean=0".parse::<DistributionSpec>().unwrap_err();
        assert!(err.to_string().contains("scale"));
        let err = "triangle d=1".parse::<DistributionSpec>().unwrap_err();
        assert!(err.to_string().contains("unknown distribution family"));
        let err = "gaussian d=2 mean=0,0,0 scale=1"
            .parse::<DistributionSpec>()
            .unwrap_err();
        assert!(err.to_string().contains("comma-separated"));
        let err = "gaussian d=2 mean=0 scale=1 extra=1"
            .parse::<DistributionSpec>()
            .unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }
}
