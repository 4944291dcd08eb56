//! Fisher-information counterparts of the variance inequalities.

use serde_json::json;

use super::mc::{exact_verdict, is_gaussian};
use super::univariate::prefix_variances_mc;
use super::ExperimentConfig;
use crate::dist::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::pitman::closed_form_variance;
use crate::rng::SeededStream;
use crate::verdict::{Claim, InequalityVerdict};

/// Families whose convolutions stay in the family, so `I(X+Y)` is available.
fn stable_family(spec: &DistributionSpec) -> Result<&'static str> {
    match spec.compile()?.family() {
        Family::Gaussian { .. } => Ok("gaussian"),
        Family::Cauchy { .. } => Ok("cauchy"),
        _ => Err(Error::capability(format!(
            "{} is outside the convolution-closed registry (Gaussian, Cauchy)",
            spec.label()
        ))),
    }
}

pub(super) fn fisher_counterparts(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let mut out = Vec::new();
    let pops = &cfg.populations;
    if pops.len() >= 2 {
        let (x, y) = (&pops[0], &pops[1]);
        let fx = stable_family(x)?;
        let fy = stable_family(y)?;
        if fx != fy {
            return Err(Error::capability("Stam's inequality needs two laws of the same closed family"));
        }
        let sum = DistributionSpec::convolution(vec![x.clone(), y.clone()]);
        let ix = x.fisher_information()?;
        let iy = y.fisher_information()?;
        let isum = sum.fisher_information()?;
        let claim = if fx == "gaussian" { Claim::Equality } else { Claim::AtLeast };
        let instance = json!({ "X": x.label(), "Y": y.label() });
        out.push(exact_verdict("stam", instance, 1.0 / isum, 1.0 / ix + 1.0 / iy, cfg.tol, claim));
    }
    if let Some(h) = pops.first() {
        let family = stable_family(h)?;
        let claim = if family == "gaussian" { Claim::Equality } else { Claim::AtLeast };
        let list = if cfg.big_n_values.is_empty() && cfg.big_n.is_none() { vec![2, 3] } else { cfg.big_n_list()? };
        for big in list.into_iter().filter(|&b| b >= 2) {
            let prev = h.convolution_power(big - 1).fisher_information()?;
            let cur = h.convolution_power(big).fisher_information()?;
            let instance = json!({ "population": h.label(), "N": big });
            out.push(exact_verdict(
                "fisher_sum_monotonicity",
                instance,
                (big - 1) as f64 * prev,
                big as f64 * cur,
                cfg.tol,
                claim,
            ));
        }
    }
    for (pi, probe) in cfg.probes.iter().enumerate() {
        let info = probe.fisher_information()?;
        if let Family::Laplace { scale, .. } = probe.compile()?.family() {
            let instance = json!({ "population": probe.label() });
            out.push(exact_verdict(
                "laplace_fisher_quadrature",
                instance,
                info,
                1.0 / (scale * scale),
                1e-6,
                Claim::Equality,
            ));
        }
        if cfg.n_values.is_empty() {
            continue;
        }
        let ns = cfg.n_list()?;
        let gaussian = is_gaussian(probe);
        let exact: Option<Vec<f64>> = ns
            .iter()
            .map(|&n| closed_form_variance(probe, n).ok().flatten())
            .collect();
        match exact {
            Some(v) if gaussian => {
                for (n, var) in ns.iter().zip(v) {
                    let instance = json!({ "population": probe.label(), "n": n });
                    out.push(exact_verdict("efficiency_trend", instance, *n as f64 * var * info, 1.0, cfg.tol, Claim::Equality));
                }
            }
            _ => {
                let vars = prefix_variances_mc(probe, &ns, cfg.require_mc_reps()?, &stream.fork(pi as u64))?;
                for (i, n) in ns.iter().enumerate() {
                    let nf = *n as f64;
                    let instance = json!({ "population": probe.label(), "n": n });
                    out.push(vars.verdict("efficiency_trend", instance, |v| nf * v(i) * info, |_| 1.0, cfg.tol, Claim::Report));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config("/populations", "at least one population or probe required"));
    }
    Ok(out)
}
