//! A uniform variable split into two independent singular summands by
//! routing its even- and odd-indexed binary digits.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::mc::exact_verdict;
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::verdict::{Claim, InequalityVerdict};

/// Digits must fit the f64 mantissa for every sum below to be exact.
pub const MAX_DEPTH: usize = 52;

#[derive(Debug, Clone, Serialize)]
pub struct DyadicDraw {
    pub digits: Vec<u8>,
    pub xi: f64,
    pub x: f64,
    pub y: f64,
    pub reconstruction_check: bool,
}

/// `X = Σ_{k even} d_k 2^-k`, `Y = Σ_{k odd} d_k 2^-k`, positions 1-based.
pub fn dyadic_split(digits: &[u8]) -> (f64, f64) {
    let (mut x, mut y) = (0.0, 0.0);
    let mut w = 1.0;
    for (i, &d) in digits.iter().enumerate() {
        w *= 0.5;
        let v = f64::from(d) * w;
        if (i + 1) % 2 == 0 {
            x += v;
        } else {
            y += v;
        }
    }
    (x, y)
}

/// Recovers both summands from the binary expansion of `X + Y` alone.
fn recover(sum: f64, depth: usize) -> Option<(f64, f64)> {
    let scaled = sum * (1u64 << depth) as f64;
    if scaled.fract() != 0.0 || scaled < 0.0 {
        return None;
    }
    let bits = scaled as u64;
    let digits: Vec<u8> = (1..=depth).map(|k| ((bits >> (depth - k)) & 1) as u8).collect();
    Some(dyadic_split(&digits))
}

pub fn dyadic_strong_components<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<DyadicDraw> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Domain(format!("depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    let digits: Vec<u8> = (0..depth).map(|_| u8::from(rng.random::<bool>())).collect();
    Ok(draw_from_digits(digits))
}

fn draw_from_digits(digits: Vec<u8>) -> DyadicDraw {
    let (x, y) = dyadic_split(&digits);
    let bits = digits.iter().fold(0u64, |acc, &d| (acc << 1) | u64::from(d));
    let xi = bits as f64 / (1u64 << digits.len()) as f64;
    let sum = x + y;
    let reconstruction_check = sum == xi && recover(sum, digits.len()) == Some((x, y));
    DyadicDraw {
        digits,
        xi,
        x,
        y,
        reconstruction_check,
    }
}

pub(super) fn dyadic_experiment(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let depth = cfg.depth.unwrap_or(16) as usize;
    let instances = cfg.instances.unwrap_or(10_000);
    let mut failures = 0usize;
    for i in 0..instances {
        let mut rng = stream.replicate(i as u64);
        if !dyadic_strong_components(depth, &mut rng)?.reconstruction_check {
            failures += 1;
        }
    }
    let instance = json!({ "depth": depth, "instances": instances });
    Ok(vec![exact_verdict(
        "dyadic_reconstruction",
        instance,
        failures as f64,
        0.0,
        0.0,
        Claim::Equality,
    )])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn split_of_1011() {
        let (x, y) = dyadic_split(&[1, 0, 1, 1]);
        assert_eq!(x, 1.0 / 16.0);
        assert_eq!(y, 0.5 + 0.125);
        assert_eq!(x + y, 11.0 / 16.0);
    }

    #[test]
    fn full_depth_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = dyadic_strong_components(MAX_DEPTH, &mut rng).unwrap();
            assert!(d.reconstruction_check);
        }
        assert!(dyadic_strong_components(53, &mut rng).is_err());
    }
}
