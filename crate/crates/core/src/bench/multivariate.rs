//! Loewner-order versions of the sample-size and pooling inequalities.

use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::json;

use super::ExperimentConfig;
use crate::dist::{DistributionSpec, Family, MultiPopulation, Population};
use crate::error::{Error, Result};
use crate::pitman::{multi_lattice_covariance_exact, pooled_estimate, MultiEvaluator, Sample};
use crate::rng::SeededStream;
use crate::stats::{run_replicates, ColumnStats, Replicates};
use crate::verdict::{Claim, InequalityVerdict, Quantity};

/// Inverses are refused above this condition number.
pub const CONDITION_LIMIT: f64 = 1e8;

fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

/// Smallest eigenvalue for one-sided claims; the eigenvalue of largest
/// magnitude for equality claims.
fn matrix_slack(d: &DMatrix<f64>, claim: Claim) -> f64 {
    let e = eigenvalues(d);
    match claim {
        Claim::Equality => e.into_iter().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc }),
        _ => e.into_iter().fold(f64::INFINITY, f64::min),
    }
}

fn guarded_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eigenvalues(m);
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > CONDITION_LIMIT {
        return Err(Error::Singularity(format!(
            "covariance matrix has eigenvalues in [{min:e}, {max:e}], condition limit {CONDITION_LIMIT:e}"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singularity("covariance matrix is not invertible".into()))
}

fn to_quantity(m: &DMatrix<f64>) -> Quantity {
    Quantity::Matrix((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
}

fn gaussian_sds(spec: &DistributionSpec) -> Result<Option<Vec<f64>>> {
    Ok(match spec.compile_multi()? {
        MultiPopulation::Product(c) => c
            .iter()
            .map(|p| match p.family() {
                Family::Gaussian { sd, .. } => Some(sd),
                _ => None,
            })
            .collect(),
        MultiPopulation::Lattice(_) => None,
    })
}

/// Exact `V_n` for Gaussian products and lattices.
fn exact_covariance(spec: &DistributionSpec, n: usize) -> Result<Option<DMatrix<f64>>> {
    if let Some(sds) = gaussian_sds(spec)? {
        let d: Vec<f64> = sds.iter().map(|s| s * s / n as f64).collect();
        return Ok(Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))));
    }
    let mp = spec.compile_multi()?;
    if let Some(l) = mp.as_lattice() {
        match multi_lattice_covariance_exact(&l, n) {
            Ok(v) => return Ok(Some(DMatrix::from_row_slice(l.dim(), l.dim(), &v))),
            Err(Error::Size { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn block_cov(st: &ColumnStats, block: usize, s: usize) -> DMatrix<f64> {
    DMatrix::from_fn(s, s, |i, j| st.covariance(block * s + i, block * s + j))
}

fn matrix_verdict(
    name: &str,
    instance: serde_json::Value,
    lhs: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    tol: f64,
    claim: Claim,
) -> InequalityVerdict {
    let slack = matrix_slack(&(lhs - rhs), claim);
    InequalityVerdict::new(name, instance, to_quantity(lhs), to_quantity(rhs), slack, 0.0, tol, claim)
}

fn mc_matrix_verdict<L, R>(
    name: &str,
    instance: serde_json::Value,
    rows: &Replicates,
    lhs: L,
    rhs: R,
    tol: f64,
    claim: Claim,
) -> InequalityVerdict
where
    L: Fn(&ColumnStats) -> DMatrix<f64>,
    R: Fn(&ColumnStats) -> DMatrix<f64>,
{
    let st = rows.stats();
    let (l, r) = (lhs(&st), rhs(&st));
    let s = rows.jackknife(|st| matrix_slack(&(lhs(st) - rhs(st)), claim));
    InequalityVerdict::new(name, instance, to_quantity(&l), to_quantity(&r), s.value, s.stderr, tol, claim)
}

pub(super) fn multivariate_monotonicity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let spec = cfg.population(0)?;
    let ns = cfg.n_list()?;
    let gaussian = gaussian_sds(spec)?.is_some();
    let claim = if gaussian { Claim::Equality } else { Claim::AtLeast };
    let mut out = Vec::new();

    if ns.len() >= 2 {
        let exact: Option<Vec<DMatrix<f64>>> =
            ns.iter().map(|&n| exact_covariance(spec, n)).collect::<Result<Vec<_>>>()?.into_iter().collect();
        match exact {
            Some(vs) => {
                for i in 0..ns.len() - 1 {
                    let (a, b) = (ns[i] as f64, ns[i + 1] as f64);
                    let instance = json!({ "population": spec.label(), "n": ns[i], "n_next": ns[i + 1] });
                    out.push(matrix_verdict("multivariate_monotonicity", instance, &(&vs[i] * a), &(&vs[i + 1] * b), cfg.tol, claim));
                }
            }
            None => {
                let mp = spec.compile_multi()?;
                let eval = MultiEvaluator::new(spec)?;
                let s = mp.dim();
                let len = *ns.last().expect("nonempty");
                let rows = run_replicates(cfg.require_mc_reps()?, &stream.fork(0), s * ns.len(), |rng| {
                    let pts: Vec<Vec<f64>> = (0..len).map(|_| mp.sample(rng)).collect();
                    let mut row = Vec::with_capacity(s * ns.len());
                    for &n in &ns {
                        row.extend(eval.estimate(&Sample::multivariate(pts[..n].to_vec())?)?);
                    }
                    Ok(row)
                })?;
                for i in 0..ns.len() - 1 {
                    let (a, b) = (ns[i] as f64, ns[i + 1] as f64);
                    let instance = json!({ "population": spec.label(), "n": ns[i], "n_next": ns[i + 1] });
                    out.push(mc_matrix_verdict(
                        "multivariate_monotonicity",
                        instance,
                        &rows,
                        |st| block_cov(st, i, s) * a,
                        |st| block_cov(st, i + 1, s) * b,
                        cfg.tol,
                        claim,
                    ));
                }
            }
        }
    }

    if cfg.populations.len() >= 2 && cfg.sizes.len() == 2 {
        out.push(pooled_inverse(cfg, stream)?);
    }
    if out.is_empty() {
        return Err(Error::config("/n_values", "need two sample sizes, or two populations with sizes"));
    }
    Ok(out)
}

/// `V^{-1}(pooled) ⪰ V^{-1}(t^{(1)}) + V^{-1}(t^{(2)})`.
fn pooled_inverse(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<InequalityVerdict> {
    let (f1, f2) = (&cfg.populations[0], &cfg.populations[1]);
    let (n1, n2) = (cfg.sizes[0], cfg.sizes[1]);
    if n1 == 0 || n2 == 0 {
        return Err(Error::config("/sizes", "group sizes must be positive"));
    }
    if f1.dim() != f2.dim() {
        return Err(Error::Shape("pooled populations must share a dimension".into()));
    }
    let s = f1.dim();
    let instance = json!({ "populations": [f1.label(), f2.label()], "sizes": [n1, n2] });
    let g1 = gaussian_sds(f1)?;
    let g2 = gaussian_sds(f2)?;
    if let (Some(a), Some(b)) = (&g1, &g2) {
        let pooled: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| 1.0 / (n1 as f64 / (x * x) + n2 as f64 / (y * y)))
            .collect();
        let v = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(pooled));
        let v1 = exact_covariance(f1, n1)?.expect("gaussian");
        let v2 = exact_covariance(f2, n2)?.expect("gaussian");
        let lhs = guarded_inverse(&v)?;
        let rhs = guarded_inverse(&v1)? + guarded_inverse(&v2)?;
        return Ok(matrix_verdict("pooled_inverse_covariance", instance, &lhs, &rhs, cfg.tol, Claim::Equality));
    }
    if f1 == f2 {
        if let (Some(v), Some(v1), Some(v2)) =
            (exact_covariance(f1, n1 + n2)?, exact_covariance(f1, n1)?, exact_covariance(f1, n2)?)
        {
            let lhs = guarded_inverse(&v)?;
            let rhs = guarded_inverse(&v1)? + guarded_inverse(&v2)?;
            return Ok(matrix_verdict("pooled_inverse_covariance", instance, &lhs, &rhs, cfg.tol, Claim::AtLeast));
        }
    }
    // Product laws factor, so the pooled estimator is coordinatewise.
    let (MultiPopulation::Product(c1), MultiPopulation::Product(c2)) = (f1.compile_multi()?, f2.compile_multi()?) else {
        return Err(Error::capability("pooled multivariate estimator is available for product laws only"));
    };
    let e1 = MultiEvaluator::new(f1)?;
    let e2 = MultiEvaluator::new(f2)?;
    let rows = run_replicates(cfg.require_mc_reps()?, &stream.fork(1), 3 * s, |rng| {
        let x1: Vec<Vec<f64>> = c1.iter().map(|p| p.sample_n(rng, n1)).collect();
        let x2: Vec<Vec<f64>> = c2.iter().map(|p| p.sample_n(rng, n2)).collect();
        let mut row = Vec::with_capacity(3 * s);
        for j in 0..s {
            let groups: [(&Population, &[f64]); 2] = [(&c1[j], &x1[j]), (&c2[j], &x2[j])];
            row.push(pooled_estimate(&groups)?);
        }
        let pts = |x: &[Vec<f64>], n: usize| -> Vec<Vec<f64>> { (0..n).map(|i| x.iter().map(|c| c[i]).collect()).collect() };
        row.extend(e1.estimate(&Sample::multivariate(pts(&x1, n1))?)?);
        row.extend(e2.estimate(&Sample::multivariate(pts(&x2, n2))?)?);
        Ok(row)
    })?;
    let inv = |m: DMatrix<f64>| guarded_inverse(&m).unwrap_or_else(|_| DMatrix::from_element(s, s, f64::NAN));
    Ok(mc_matrix_verdict(
        "pooled_inverse_covariance",
        instance,
        &rows,
        |st| inv(block_cov(st, 0, s)),
        |st| inv(block_cov(st, 1, s)) + inv(block_cov(st, 2, s)),
        cfg.tol,
        Claim::AtLeast,
    ))
}
