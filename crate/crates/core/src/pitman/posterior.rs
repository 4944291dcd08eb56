//! Generalized-Bayes form of the Pitman estimator: the posterior mean of the
//! shift under a flat prior, `∫u Π f_j(x_i - u) du / ∫ Π f_j(x_i - u) du`.

use crate::dist::{Family, Population};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

const POSTERIOR_REL_TOL: f64 = 1e-11;
const MAX_BREAKPOINTS: usize = 2048;

/// Posterior mean of the shift for one iid sample.
pub fn posterior_mean(pop: &Population, xs: &[f64]) -> Result<f64> {
    pooled_estimate(&[(pop, xs)])
}

/// Pitman estimator from independent groups, group `j` drawn from
/// `F_j(x - θ)`. All groups must be lattices, or all must have densities.
pub fn pooled_estimate(groups: &[(&Population, &[f64])]) -> Result<f64> {
    let groups: Vec<(&Population, &[f64])> = groups.iter().copied().filter(|(_, xs)| !xs.is_empty()).collect();
    if groups.is_empty() {
        return Err(Error::Shape("pooled sample is empty".into()));
    }
    let lattices = groups.iter().filter(|(p, _)| p.is_lattice()).count();
    if lattices == groups.len() {
        return pooled_discrete(&groups);
    }
    if lattices > 0 {
        return Err(Error::capability("cannot pool lattice and continuous populations"));
    }
    if let Some(t) = pooled_gaussian(&groups) {
        return Ok(t);
    }
    pooled_quadrature(&groups)
}

fn pooled_gaussian(groups: &[(&Population, &[f64])]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, xs) in groups {
        let Family::Gaussian { mean, sd } = p.family() else {
            return None;
        };
        let w = xs.len() as f64 / (sd * sd);
        num += w * (super::mean(xs) - mean);
        den += w;
    }
    Some(num / den)
}

fn pooled_discrete(groups: &[(&Population, &[f64])]) -> Result<f64> {
    let (p0, xs0) = groups[0];
    let l0 = p0.lattice().expect("lattice group");
    let mut num = 0.0;
    let mut den = 0.0;
    for (y, _) in l0.support() {
        let theta = xs0[0] - y;
        let mut w = 1.0;
        for (p, xs) in groups {
            let l = p.lattice().expect("lattice group");
            for &x in xs.iter() {
                w *= match l.index_of(x - theta) {
                    Some(k) => l.prob_at_index(k),
                    None => 0.0,
                };
                if w == 0.0 {
                    break;
                }
            }
            if w == 0.0 {
                break;
            }
        }
        num += w * theta;
        den += w;
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("sample is impossible under the lattice model for every shift".into()));
    }
    Ok(num / den)
}

fn pooled_quadrature(groups: &[(&Population, &[f64])]) -> Result<f64> {
    let total: usize = groups.iter().map(|(_, xs)| xs.len()).sum();
    if groups.iter().all(|(p, _)| p.heavy_tailed()) && total < 2 {
        return Err(Error::capability("posterior mean of a heavy-tailed shift needs at least two observations"));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, xs) in groups {
        let (slo, shi) = p.support();
        let xmin = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let xmax = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo = lo.max(xmax - shi);
        hi = hi.min(xmin - slo);
    }
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "posterior support is empty (shift interval [{lo}, {hi}])"
        )));
    }
    let loglik = |u: f64| -> f64 {
        let mut s = 0.0;
        for (p, xs) in groups {
            for &x in xs.iter() {
                match p.ln_density(x - u) {
                    Ok(v) if !v.is_nan() => s += v,
                    _ => return f64::NEG_INFINITY,
                }
            }
        }
        s
    };

    let width = groups.iter().map(|(p, _)| p.spread()).fold(f64::INFINITY, f64::min) / (total as f64).sqrt();
    let clip = |u: f64| -> f64 {
        let (a, b) = (
            if lo.is_finite() { lo + 1e-9 * (hi - lo).min(1.0) } else { f64::NEG_INFINITY },
            if hi.is_finite() { hi - 1e-9 * (hi - lo).min(1.0) } else { f64::INFINITY },
        );
        u.clamp(a, b)
    };
    let mut candidates = Vec::new();
    let mut centre_sum = 0.0;
    for (p, xs) in groups {
        let c = p.center();
        for &x in xs.iter() {
            candidates.push(clip(x - c));
            centre_sum += x - c;
        }
    }
    candidates.push(clip(centre_sum / total as f64));
    if lo.is_finite() && hi.is_finite() {
        for i in 1..32 {
            candidates.push(lo + (hi - lo) * i as f64 / 32.0);
        }
    }
    let (peak, ref_ll) = candidates
        .iter()
        .map(|&u| (u, loglik(u)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !ref_ll.is_finite() {
        return Err(Error::Degenerate("likelihood vanishes at every trial shift".into()));
    }

    let mut bp = vec![lo, hi, peak];
    for k in [1.0, 3.0, 10.0, 30.0] {
        bp.push(peak - k * width);
        bp.push(peak + k * width);
    }
    'outer: for (p, xs) in groups {
        let kinks = p.kinks();
        for &x in xs.iter() {
            for k in &kinks {
                bp.push(x - k);
                if bp.len() > MAX_BREAKPOINTS {
                    break 'outer;
                }
            }
        }
    }
    bp.retain(|u| *u >= lo && *u <= hi && !u.is_nan());
    bp.sort_by(f64::total_cmp);
    bp.dedup();

    let opts = QuadOptions::<2> {
        rel_tol: POSTERIOR_REL_TOL,
        abs_tol: 0.0,
        scales: [0.0, width],
        ..QuadOptions::default()
    };
    let r = integrate(
        |u| {
            let l = (loglik(u) - ref_ll).exp();
            if l.is_finite() {
                [l, (u - peak) * l]
            } else {
                [0.0, 0.0]
            }
        },
        &bp,
        &opts,
    );
    if !(r.value[0] > 0.0) || !r.value[1].is_finite() {
        return Err(Error::Numerical("posterior normaliser vanished".into()));
    }
    Ok(peak + r.value[1] / r.value[0])
}
