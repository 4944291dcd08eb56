//! Polynomial Pitman estimators: `x̄` minus its least-squares projection on
//! polynomials of bounded degree in the residuals, computed from moments only.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, MomentTable};
use crate::error::{Error, Result};
use crate::moment_algebra::{build_gram, central_moment_basis, expect_iid, residual_basis, SymPoly, PINV_CUTOFF};
use crate::pitman::Sample;
use crate::rng::SeededStream;
use crate::stats::{run_replicates, ColumnStats, JackknifeEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// All polynomials of degree `≤ k` in the residuals.
    ResidualSpace,
    /// Span of `1, m_2, ..., m_k`.
    CentralMomentSpace,
}

impl ModelKind {
    fn basis(self, n: usize, k: u32) -> Vec<SymPoly> {
        match self {
            ModelKind::ResidualSpace => residual_basis(n, k),
            ModelKind::CentralMomentSpace => central_moment_basis(n, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyPitmanModel {
    pub n: usize,
    pub k: u32,
    pub basis: Vec<SymPoly>,
    /// Coefficients of the projection of `x̄`; the first basis element is 1.
    pub coefficients: Vec<f64>,
    pub variance: f64,
    pub effective_rank: usize,
    pub kind: ModelKind,
    /// `‖G c - rhs‖ / ‖rhs‖` of the centred normal equations.
    pub relative_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    n: usize,
    k: u32,
    kind: ModelKind,
    basis: Vec<String>,
    coefficients: Vec<f64>,
    variance: f64,
    effective_rank: usize,
}

impl Serialize for PolyPitmanModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            n: self.n,
            k: self.k,
            kind: self.kind,
            basis: self.basis.iter().map(ToString::to_string).collect(),
            coefficients: self.coefficients.clone(),
            variance: self.variance,
            effective_rank: self.effective_rank,
        }
        .serialize(s)
    }
}

fn required_order(k: u32) -> usize {
    (2 * k as usize).max(2)
}

fn check_args(moments: &MomentTable, n: usize, k: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("polynomial Pitman estimators need n >= 2, got {n}")));
    }
    if k == 0 {
        return Err(Error::Domain("degree k must be at least 1".into()));
    }
    let order = required_order(k);
    if moments.order_limit() < order {
        return Err(Error::Order {
            order: order as i64,
            limit: moments.order_limit(),
        });
    }
    Ok(())
}

/// Projection on `kind`'s basis. The system is solved for the centred law and
/// the mean is restored through the constant coefficient; residual features
/// do not see the location.
fn fit(moments: &MomentTable, n: usize, k: u32, kind: ModelKind) -> Result<PolyPitmanModel> {
    check_args(moments, n, k)?;
    let centred = moments.centered().truncated(required_order(k))?;
    let basis = kind.basis(n, k);
    let system = build_gram(&basis, &SymPoly::mean(n), &centred)?;
    let sol = system.solve();
    let target = system.target_norm.to_f64().unwrap_or(f64::NAN);
    let variance = (target - sol.projection_norm).max(0.0);
    let mut coefficients = sol.coefficients;
    coefficients[0] += moments.mean();
    Ok(PolyPitmanModel {
        n,
        k,
        basis,
        coefficients,
        variance,
        effective_rank: sol.effective_rank,
        kind,
        relative_residual: sol.relative_residual,
    })
}

/// `x̄ - Ê(x̄ | polynomials of degree ≤ k in the residuals)`.
pub fn fit_poly_pitman(moments: &MomentTable, n: usize, k: u32) -> Result<PolyPitmanModel> {
    fit(moments, n, k, ModelKind::ResidualSpace)
}

/// `x̄ - Ê(x̄ | 1, m_2, ..., m_k)`.
pub fn fit_tau(moments: &MomentTable, n: usize, k: u32) -> Result<PolyPitmanModel> {
    fit(moments, n, k, ModelKind::CentralMomentSpace)
}

pub fn fit_model(moments: &MomentTable, n: usize, k: u32, kind: ModelKind) -> Result<PolyPitmanModel> {
    fit(moments, n, k, kind)
}

/// Exact variances for each `n`, in input order.
pub fn variance_sweep(
    moments: &MomentTable,
    k: u32,
    ns: &[usize],
    kind: ModelKind,
) -> Result<Vec<(usize, f64)>> {
    ns.par_iter()
        .map(|&n| fit(moments, n, k, kind).map(|m| (n, m.variance)))
        .collect()
}

/// `x̄ - Σ c_a q_a(x)`.
pub fn evaluate_model(model: &PolyPitmanModel, sample: &Sample) -> Result<f64> {
    let xs = sample.values()?;
    if xs.len() != model.n {
        return Err(Error::Shape(format!(
            "model is fitted for n = {} but the sample has {} points",
            model.n,
            xs.len()
        )));
    }
    let xbar = crate::pitman::mean(xs);
    let proj: f64 = model.basis.iter().zip(&model.coefficients).map(|(q, c)| c * q.eval(xs)).sum();
    Ok(xbar - proj)
}

/// Monte Carlo least-squares estimate of the same variance: `x̄` is regressed
/// on the non-constant basis features over `draws` simulated samples, and the
/// explained part is subtracted from the exact `var x̄ = σ²/n`. The standard
/// error is a block jackknife of the whole fit.
pub fn mc_regression_variance(
    spec: &DistributionSpec,
    n: usize,
    k: u32,
    kind: ModelKind,
    draws: usize,
    stream: &SeededStream,
) -> Result<JackknifeEstimate> {
    if draws < 100 {
        return Err(Error::Domain(format!("Monte Carlo regression needs at least 100 draws, got {draws}")));
    }
    let pop = spec.compile()?;
    let var_mean = spec.variance()? / n as f64;
    let basis = kind.basis(n, k);
    let features = &basis[1..];
    let p = features.len();
    if p == 0 {
        return Ok(JackknifeEstimate::exact(var_mean));
    }
    let reps = run_replicates(draws, stream, 1 + p, |rng| {
        let xs = pop.sample_n(rng, n);
        let mut row = Vec::with_capacity(1 + p);
        row.push(crate::pitman::mean(&xs));
        row.extend(features.iter().map(|q| q.eval(&xs)));
        Ok(row)
    })?;
    Ok(reps.jackknife(|st| var_mean - explained_variance(st, p)))
}

/// `s_xqᵀ S_qq⁺ s_xq` from sample covariances, column 0 being `x̄`.
fn explained_variance(st: &ColumnStats, p: usize) -> f64 {
    let sqq = DMatrix::from_fn(p, p, |i, j| st.covariance(i + 1, j + 1));
    let d: Vec<f64> = (0..p).map(|i| if sqq[(i, i)] > 0.0 { 1.0 / sqq[(i, i)].sqrt() } else { 0.0 }).collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| sqq[(i, j)] * d[i] * d[j]);
    let b = DVector::from_fn(p, |i, _| st.covariance(0, i + 1) * d[i]);
    let eig = SymmetricEigen::new(scaled);
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut explained = 0.0;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > PINV_CUTOFF * max {
            let v = eig.eigenvectors.column(j).dot(&b);
            explained += v * v / l;
        }
    }
    explained
}

/// `E x̄²` from raw moments, a check on the moment calculus.
pub fn mean_square(moments: &MomentTable, n: usize) -> Result<f64> {
    expect_iid(&SymPoly::mean(n).pow(2), moments)
}

/// Convenience: the exact moment table of `spec` to the order a degree-`k`
/// fit needs.
pub fn moments_for(spec: &DistributionSpec, k: u32) -> Result<MomentTable> {
    spec.moment_table(required_order(k))
}
