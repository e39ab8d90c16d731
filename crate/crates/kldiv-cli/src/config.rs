//! Line-oriented `key = value` experiment configs with `#` comments.
//!
//! Keys: `f_spec`, `g_spec`, `trials` (required); `sizes`, `k`, `norm`,
//! `seed`, `case`, `gamma`, `ratio_bounded` (optional). `sizes` defaults to
//! the 8-point geometric grid from 10^2 to 10^3.5.

use kldiv::{
    default_size_grid, DistributionSpec, EstimatorConfig, ExperimentPlan, NormKind, RateClass,
    TheoreticalCase, ZeroDistancePolicy,
};

#[derive(Debug)]
pub struct ExperimentConfig {
    pub plan: ExperimentPlan,
    pub case: Option<TheoreticalCase>,
}

pub fn parse_norm(raw: &str) -> Result<NormKind, String> {
    match raw {
        "l2" => Ok(NormKind::Euclidean),
        "linf" => Ok(NormKind::Chebyshev),
        other => Err(format!("norm must be 'l2' or 'linf', got '{other}'")),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut pairs: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value'", idx + 1))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if pairs.iter().any(|(k, _, _)| *k == key) {
            return Err(format!("line {}: duplicate key '{key}'", idx + 1));
        }
        pairs.push((key, value, idx + 1));
    }

    let mut take = |key: &str| -> Option<(String, usize)> {
        pairs
            .iter()
            .position(|(k, _, _)| k == key)
            .map(|pos| {
                let (_, value, line) = pairs.remove(pos);
                (value, line)
            })
    };

    let (f_raw, f_line) = take("f_spec").ok_or("missing required key 'f_spec'")?;
    let f_spec: DistributionSpec = f_raw
        .parse()
        .map_err(|e| format!("line {f_line}: f_spec: {e}"))?;
    let (g_raw, g_line) = take("g_spec").ok_or("missing required key 'g_spec'")?;
    let g_spec: DistributionSpec = g_raw
        .parse()
        .map_err(|e| format!("line {g_line}: g_spec: {e}"))?;

    let (trials_raw, trials_line) = take("trials").ok_or("missing required key 'trials'")?;
    let trials: usize = trials_raw
        .parse()
        .map_err(|_| format!("line {trials_line}: trials must be a positive integer"))?;

    let sizes = match take("sizes") {
        Some((raw, line)) => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("line {line}: sizes must be comma-separated integers"))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => default_size_grid(),
    };

    let k = match take("k") {
        Some((raw, line)) => raw
            .parse::<usize>()
            .ok()
            .filter(|k| *k >= 1)
            .ok_or_else(|| format!("line {line}: k must be a positive integer"))?,
        None => 3,
    };

    let norm = match take("norm") {
        Some((raw, line)) => parse_norm(&raw).map_err(|e| format!("line {line}: {e}"))?,
        None => NormKind::Euclidean,
    };

    let seed = match take("seed") {
        Some((raw, line)) => raw
            .parse::<u64>()
            .map_err(|_| format!("line {line}: seed must be a 64-bit unsigned integer"))?,
        None => 0,
    };

    let ratio_bounded = match take("ratio_bounded") {
        Some((raw, line)) => match raw.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(format!(
                    "line {line}: ratio_bounded must be 'true' or 'false', got '{other}'"
                ))
            }
        },
        None => false,
    };

    let gamma = match take("gamma") {
        Some((raw, line)) => Some(
            raw.parse::<f64>()
                .map_err(|_| format!("line {line}: gamma must be a real number"))?,
        ),
        None => None,
    };

    let case = match take("case") {
        Some((raw, line)) => match raw.as_str() {
            "bounded" => Some(TheoreticalCase {
                class: RateClass::BoundedSupport,
                dim: f_spec.dim(),
                // bounded support with densities bounded away from zero
                // implies a bounded density ratio
                density_ratio_bounded: true,
            }),
            "smooth" => {
                let gamma = gamma
                    .ok_or_else(|| format!("line {line}: case = smooth requires a gamma key"))?;
                Some(TheoreticalCase {
                    class: RateClass::Smooth { gamma },
                    dim: f_spec.dim(),
                    density_ratio_bounded: ratio_bounded,
                })
            }
            other => {
                return Err(format!(
                    "line {line}: case must be 'bounded' or 'smooth', got '{other}'"
                ))
            }
        },
        None => None,
    };

    if let Some((key, _, line)) = pairs.first() {
        return Err(format!("line {line}: unknown key '{key}'"));
    }

    let plan = ExperimentPlan {
        f_spec,
        g_spec,
        sizes,
        trials,
        estimator: EstimatorConfig {
            k,
            norm,
            zero_distance_policy: ZeroDistancePolicy::Error,
        },
        seed,
    };
    plan.validate().map_err(|e| e.to_string())?;
    Ok(ExperimentConfig { plan, case })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "\
# Fig-1-style pair at d = 1
f_spec = uniform-box d=1 lo=0.5 hi=1.5
g_spec = uniform-box d=1 lo=0 hi=2
trials = 50
sizes = 100,164,268
seed = 7
case = bounded
";

    #[test]
    fn parses_a_complete_config() {
        let config = parse_config(FIG1).unwrap();
        assert_eq!(config.plan.sizes, vec![100, 164, 268]);
        assert_eq!(config.plan.trials, 50);
        assert_eq!(config.plan.seed, 7);
        assert_eq!(config.plan.estimator.k, 3);
        let case = config.case.unwrap();
        assert_eq!(case.class, RateClass::BoundedSupport);
        assert_eq!(case.dim, 1);
    }

    #[test]
    fn sizes_default_to_the_geometric_grid() {
        let text = "f_spec = gaussian d=1 mean=0 scale=1\ng_spec = gaussian d=1 mean=1 scale=1\ntrials = 10\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.plan.sizes, default_size_grid());
        assert!(config.case.is_none());
    }

    #[test]
    fn missing_trials_is_an_error() {
        let text = "f_spec = gaussian d=1 mean=0 scale=1\ng_spec = gaussian d=1 mean=1 scale=1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.contains("trials"));
    }

    #[test]
    fn smooth_case_requires_gamma() {
        let text = "f_spec = gaussian d=1 mean=0 scale=1\ng_spec = gaussian d=1 mean=1 scale=1\ntrials = 10\ncase = smooth\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.contains("gamma"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "f_spec = gaussian d=1 mean=0 scale=1\ng_spec = gaussian d=1 mean=1 scale=1\ntrials = 10\nbogus = 1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.contains("unknown key 'bogus'"));
    }
}
