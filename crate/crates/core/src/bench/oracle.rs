//! Three independent routes to `var(t_n)` for Uniform(-1, 1): quadrature
//! over the joint law of the extremes, enumeration on a fine lattice, and
//! Monte Carlo.

use serde_json::json;

use super::mc::{discretize, exact_verdict};
use super::ExperimentConfig;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::pitman::{midrange_variance_oracle, alternative_variance_formula, pitman_variance_exact, pitman_variance_mc};
use crate::quadrature::integrate_scalar;
use crate::rng::SeededStream;
use crate::verdict::{Claim, InequalityVerdict};

/// `E M^2` for the midrange `M` of `n` Uniform(-1, 1) draws, integrating
/// against the density `n(n-1)(y-x)^{n-2}/2^n` of (min, max) on `x < y`.
pub fn midrange_variance_quadrature(n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::Domain("sample size must be at least 1".into())),
        1 => Ok(1.0 / 3.0),
        _ => {
            let nf = n as f64;
            let c = nf * (nf - 1.0) / 2f64.powi(n as i32);
            let inner = |x: f64| {
                integrate_scalar(
                    |y| {
                        let m = 0.5 * (x + y);
                        m * m * c * (y - x).powi(n as i32 - 2)
                    },
                    &[x, 1.0],
                    1e-13,
                    0.0,
                )
                .value[0]
            };
            let r = integrate_scalar(inner, &[-1.0, 1.0], 1e-12, 0.0);
            if !r.converged {
                return Err(Error::Numerical("midrange quadrature did not converge".into()));
            }
            Ok(r.value[0])
        }
    }
}

pub(super) fn uniform_oracle_chain(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let ns = if cfg.n_values.is_empty() && cfg.n.is_none() { (1..=6).collect() } else { cfg.n_list()? };
    let cells = cfg.discretize.unwrap_or(40);
    let spec = DistributionSpec::uniform(-1.0, 1.0);
    let fine = discretize(&spec, cells)?;
    let lattice = fine.compile()?;
    let lattice = lattice.lattice().expect("discretize returns a lattice");
    let reps = cfg.require_mc_reps()?;
    let mut out = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let oracle = midrange_variance_quadrature(n)?;
        let instance = json!({ "population": spec.label(), "n": n });
        out.push(exact_verdict(
            "oracle_vs_closed_form",
            instance.clone(),
            oracle,
            midrange_variance_oracle(n),
            cfg.tol,
            Claim::Equality,
        ));
        let enumerated = pitman_variance_exact(lattice, n)?.variance;
        let lat_instance = json!({ "population": spec.label(), "n": n, "cells": cells });
        out.push(exact_verdict("oracle_vs_lattice", lat_instance, oracle, enumerated, 1e-3, Claim::Equality));
        let mc = pitman_variance_mc(&spec, n, reps, &stream.fork(i as u64))?;
        let mc_instance = json!({ "population": spec.label(), "n": n, "reps": reps });
        out.push(InequalityVerdict::new(
            "oracle_vs_mc",
            mc_instance,
            oracle,
            mc.value,
            oracle - mc.value,
            mc.stderr,
            cfg.tol,
            Claim::Equality,
        ));
        if let Some(alt) = alternative_variance_formula(&spec, n)? {
            out.push(exact_verdict("oracle_vs_alternative_formula", instance, oracle, alt, cfg.tol, Claim::Report));
        }
    }
    Ok(out)
}
