use crate::dist::{DistributionSpec, Family};
use crate::error::Result;

/// Closed-form Pitman estimate, when the family has one.
pub(crate) fn estimate(family: &Family, xs: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match *family {
        Family::Gaussian { mean, .. } => Some(super::mean(xs) - mean),
        Family::Uniform { a, b } => Some(0.5 * (lo + hi) - 0.5 * (a + b)),
        Family::Exponential { origin, scale } => {
            let edge = if scale > 0.0 { lo } else { hi };
            Some(edge - origin - scale / n)
        }
        _ => None,
    }
}

/// `var(t_n)` for Gaussian (`σ²/n`), uniform (midrange) and exponential
/// (`λ²/n²`) populations.
pub fn closed_form_variance(spec: &DistributionSpec, n: usize) -> Result<Option<f64>> {
    let n = n as f64;
    Ok(match spec.compile()?.family() {
        Family::Gaussian { sd, .. } => Some(sd * sd / n),
        Family::Uniform { a, b } => {
            let half = 0.5 * (b - a);
            Some(half * half * 2.0 / ((n + 1.0) * (n + 2.0)))
        }
        Family::Exponential { scale, .. } => Some(scale * scale / (n * n)),
        _ => None,
    })
}

/// Variance of the midrange of `n` draws from Uniform(-1, 1).
pub fn midrange_variance_oracle(n: usize) -> f64 {
    let n = n as f64;
    2.0 / ((n + 1.0) * (n + 2.0))
}

/// Alternative closed forms `2λ/((n+1)(n+2))` for the exponential (scale λ)
/// and `4n/((n+1)²(n+2))` for Uniform(-1, 1). These disagree with the
/// order-statistics results and are kept for comparison.
pub fn alternative_variance_formula(spec: &DistributionSpec, n: usize) -> Result<Option<f64>> {
    let nf = n as f64;
    Ok(match spec.compile()?.family() {
        Family::Exponential { scale, .. } if scale > 0.0 => Some(2.0 * scale / ((nf + 1.0) * (nf + 2.0))),
        Family::Uniform { a, b } if a == -1.0 && b == 1.0 => Some(4.0 * nf / ((nf + 1.0).powi(2) * (nf + 2.0))),
        _ => None,
    })
}
