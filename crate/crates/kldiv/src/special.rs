//! Scalar special functions and geometric constants used by the estimators:
//! digamma, log-gamma, and the volume of the unit ball for each supported norm.

use crate::error::{Error, Result};

/// Norm used for all distance computations and the matching unit-ball volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormKind {
    /// L2 norm; unit-ball volume pi^(d/2) / Gamma(d/2 + 1).
    #[default]
    Euclidean,
    /// L-infinity norm; unit-ball volume 2^d.
    Chebyshev,
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::Euclidean => write!(f, "l2"),
            NormKind::Chebyshev => write!(f, "linf"),
        }
    }
}

/// Largest supported dimension for unit-ball volumes.
pub const MAX_DIMENSION: usize = 64;

// Asymptotic series coefficients B_{2n}/(2n) for digamma, n = 1..=6.
const DIGAMMA_SERIES: [f64; 6] = [
    1.0 / 12.0,
    1.0 / 120.0,
    1.0 / 252.0,
    1.0 / 240.0,
    1.0 / 132.0,
    691.0 / 32760.0,
];

// Stirling series coefficients B_{2n}/(2n(2n-1)) for log-gamma, n = 1..=6.
const LOG_GAMMA_SERIES: [f64; 6] = [
    1.0 / 12.0,
    1.0 / 360.0,
    1.0 / 1260.0,
    1.0 / 1680.0,
    1.0 / 1188.0,
    691.0 / 360360.0,
];

// Arguments are shifted up to this value before applying the asymptotic series.
const SHIFT_THRESHOLD: f64 = 10.0;

/// Digamma function psi(x) = d/dx ln Gamma(x) for x > 0.
///
/// Absolute error is below 1e-10 for x in [1e-3, 1e9]; the recurrence
/// psi(x+1) = psi(x) + 1/x holds to 1e-12.
pub fn digamma(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::NonPositive {
            func: "digamma",
            value: x,
        });
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < SHIFT_THRESHOLD {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let w = 1.0 / (z * z);
    let series = w * (DIGAMMA_SERIES[0]
        - w * (DIGAMMA_SERIES[1]
            - w * (DIGAMMA_SERIES[2]
                - w * (DIGAMMA_SERIES[3] - w * (DIGAMMA_SERIES[4] - w * DIGAMMA_SERIES[5])))));
    Ok(shift + z.ln() - 0.5 / z - series)
}

/// Natural log of the Gamma function for x > 0.
///
/// Stirling series after recurrence shift; absolute error below 1e-10 and
/// ln Gamma(x+1) = ln x + ln Gamma(x) to 1e-12.
pub fn log_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::NonPositive {
            func: "log_gamma",
            value: x,
        });
    }
    let mut shift = 0.0;
    let mut z = x;
    while z < SHIFT_THRESHOLD {
        shift -= z.ln();
        z += 1.0;
    }
    let w = 1.0 / (z * z);
    let series = (LOG_GAMMA_SERIES[0]
        - w * (LOG_GAMMA_SERIES[1]
            - w * (LOG_GAMMA_SERIES[2]
                - w * (LOG_GAMMA_SERIES[3] - w * (LOG_GAMMA_SERIES[4] - w * LOG_GAMMA_SERIES[5])))))
        / z;
    let half_ln_two_pi = 0.918_938_533_204_672_8;
    Ok(shift + (z - 0.5) * z.ln() - z + half_ln_two_pi + series)
}

/// Volume of the unit ball in `dim` dimensions under `norm`.
///
/// Supported for 1 <= dim <= [`MAX_DIMENSION`]; relative error below 1e-12.
pub fn unit_ball_volume(dim: usize, norm: NormKind) -> Result<f64> {
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(Error::DimensionOutOfRange {
            dim,
            max: MAX_DIMENSION,
        });
    }
    match norm {
        NormKind::Euclidean => {
            let d = dim as f64;
            let ln_volume = 0.5 * d * std::f64::consts::PI.ln() - log_gamma(0.5 * d + 1.0)?;
            Ok(ln_volume.exp())
        }
        NormKind::Chebyshev => Ok(2f64.powi(dim as i32)),
    }
}
