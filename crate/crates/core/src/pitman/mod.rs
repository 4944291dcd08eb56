//! Pitman estimators of location and their variances.
//!
//! Throughout, the population `F` is taken as given and the estimand is the
//! shift `θ` in `F(x - θ)`. Variances are computed at `θ = 0`; every
//! estimator here is equivariant, so they do not depend on `θ`.

mod closed;
mod lattice_exact;
mod posterior;

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::dist::{DistributionSpec, Family, MultiLattice, MultiPopulation, Population};
use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::stats::{run_replicates, JackknifeEstimate};

pub use closed::{closed_form_variance, midrange_variance_oracle, alternative_variance_formula};
pub use lattice_exact::{
    lattice_estimate, multi_lattice_covariance_exact, multi_lattice_estimate, pitman_variance_exact,
    ExactVariance, ENUMERATION_GUARD,
};
pub use posterior::{pooled_estimate, posterior_mean};

/// Observations, each a point in `R^s`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn univariate(xs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Shape("sample must be nonempty".into()));
        }
        Ok(Self { dim: 1, data: xs })
    }

    pub fn multivariate(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Shape("sample must be nonempty with positive dimension".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("sample points have different dimensions".into()));
        }
        Ok(Self {
            dim,
            data: points.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate `j` of every observation.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Observations of a univariate sample.
    pub fn values(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::Shape(format!("expected a univariate sample, got dimension {}", self.dim)));
        }
        Ok(&self.data)
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|j| mean(&self.coordinate(j))).collect()
    }

    pub fn shifted(&self, c: &[f64]) -> Self {
        assert_eq!(c.len(), self.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().enumerate().map(|(i, x)| x + c[i % self.dim]).collect(),
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactEnumeration => "exact_enumeration",
            Method::MonteCarlo => "monte_carlo",
            Method::ClosedForm => "closed_form",
        })
    }
}

/// Variance with its provenance. Serializes as
/// `{value, stderr, ci: [lo, hi], method, reps}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: Method,
    pub replications: usize,
}

impl VarianceEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        debug_assert!(method != Method::MonteCarlo);
        Self {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
            method,
            replications: 0,
        }
    }

    pub fn monte_carlo(j: JackknifeEstimate, reps: usize) -> Self {
        Self {
            value: j.value,
            stderr: j.stderr,
            ci_low: j.ci_low,
            ci_high: j.ci_high,
            method: Method::MonteCarlo,
            replications: reps,
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

impl Serialize for VarianceEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("VarianceEstimate", 5)?;
        st.serialize_field("value", &self.value)?;
        st.serialize_field("stderr", &self.stderr)?;
        st.serialize_field("ci", &[self.ci_low, self.ci_high])?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("reps", &self.replications)?;
        st.end()
    }
}

/// Covariance matrix of an `s`-variate estimator, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub value: Vec<f64>,
    /// Largest entrywise standard error (0 for exact methods).
    pub stderr: f64,
    pub method: Method,
    pub reps: usize,
}

impl CovarianceEstimate {
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.value)
    }
}

/// A compiled evaluation path for the univariate Pitman estimator.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Closed(Family),
    Discrete(crate::dist::Lattice),
    Quadrature(Population),
}

impl Evaluator {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        Ok(Self::from_population(spec.compile()?))
    }

    pub fn from_population(pop: Population) -> Self {
        match pop.family() {
            f @ (Family::Gaussian { .. } | Family::Uniform { .. } | Family::Exponential { .. }) => Evaluator::Closed(f),
            Family::Lattice => Evaluator::Discrete(pop.lattice().expect("lattice family").clone()),
            _ => Evaluator::Quadrature(pop),
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            Evaluator::Closed(_) => "closed",
            Evaluator::Discrete(_) => "discrete",
            Evaluator::Quadrature(_) => "quadrature",
        }
    }

    pub fn estimate(&self, xs: &[f64]) -> Result<f64> {
        if xs.is_empty() {
            return Err(Error::Shape("sample must be nonempty".into()));
        }
        match self {
            Evaluator::Closed(f) => Ok(closed::estimate(f, xs).expect("closed family")),
            Evaluator::Discrete(l) => lattice_estimate(l, xs),
            Evaluator::Quadrature(p) => posterior_mean(p, xs),
        }
    }
}

/// Posterior mean `∫θ Π f(x_i-θ) dθ / ∫Π f(x_i-θ) dθ` by adaptive quadrature.
pub fn pitman_quadrature(spec: &DistributionSpec, sample: &Sample) -> Result<f64> {
    let pop = spec.compile()?;
    if pop.is_lattice() {
        return Err(Error::capability("quadrature path needs a density; use the discrete path for lattices"));
    }
    posterior_mean(&pop, sample.values()?)
}

/// Closed-form estimator for Gaussian, uniform and exponential populations.
pub fn pitman_closed(spec: &DistributionSpec, sample: &Sample) -> Result<Option<f64>> {
    let xs = sample.values()?;
    Ok(closed::estimate(&spec.compile()?.family(), xs))
}

/// Residual-class enumeration on a lattice.
pub fn pitman_discrete(spec: &DistributionSpec, sample: &Sample) -> Result<f64> {
    let pop = spec.compile()?;
    let lattice = pop
        .lattice()
        .ok_or_else(|| Error::capability("discrete path needs a lattice population"))?;
    lattice_estimate(lattice, sample.values()?)
}

/// Best available evaluation path.
pub fn pitman_estimate(spec: &DistributionSpec, sample: &Sample) -> Result<f64> {
    Evaluator::new(spec)?.estimate(sample.values()?)
}

/// Monte Carlo variance of `t_n` with a block-jackknife interval.
pub fn pitman_variance_mc(spec: &DistributionSpec, n: usize, reps: usize, stream: &SeededStream) -> Result<VarianceEstimate> {
    if reps < 100 {
        return Err(Error::Domain(format!("Monte Carlo needs at least 100 replications, got {reps}")));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let pop = spec.compile()?;
    let eval = Evaluator::from_population(pop.clone());
    let reps_out = run_replicates(reps, stream, 1, |rng| {
        let xs = pop.sample_n(rng, n);
        Ok(vec![eval.estimate(&xs)?])
    })?;
    Ok(VarianceEstimate::monte_carlo(reps_out.jackknife(|s| s.variance(0)), reps))
}

/// Exact when possible (closed form, then lattice enumeration), else Monte Carlo.
pub fn pitman_variance(spec: &DistributionSpec, n: usize, reps: usize, stream: &SeededStream) -> Result<VarianceEstimate> {
    if let Some(v) = closed_form_variance(spec, n)? {
        return Ok(VarianceEstimate::exact(v, Method::ClosedForm));
    }
    let pop = spec.compile()?;
    if let Some(l) = pop.lattice() {
        if let Ok(v) = pitman_variance_exact(l, n) {
            return Ok(VarianceEstimate::exact(v.variance, Method::ExactEnumeration));
        }
    }
    pitman_variance_mc(spec, n, reps, stream)
}

/// Multivariate evaluation path.
#[derive(Debug, Clone)]
pub enum MultiEvaluator {
    Product(Vec<Evaluator>),
    Lattice(MultiLattice),
}

impl MultiEvaluator {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        Ok(match spec.compile_multi()? {
            MultiPopulation::Product(c) => MultiEvaluator::Product(c.into_iter().map(Evaluator::from_population).collect()),
            MultiPopulation::Lattice(l) => MultiEvaluator::Lattice(l),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            MultiEvaluator::Product(c) => c.len(),
            MultiEvaluator::Lattice(l) => l.dim(),
        }
    }

    pub fn estimate(&self, sample: &Sample) -> Result<Vec<f64>> {
        if sample.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "sample dimension {} does not match population dimension {}",
                sample.dim(),
                self.dim()
            )));
        }
        match self {
            MultiEvaluator::Product(c) => c
                .iter()
                .enumerate()
                .map(|(j, e)| e.estimate(&sample.coordinate(j)))
                .collect(),
            MultiEvaluator::Lattice(l) => multi_lattice_estimate(l, sample),
        }
    }
}

/// Minimum-covariance equivariant estimator of a location vector.
pub fn pitman_multivariate(spec: &DistributionSpec, sample: &Sample) -> Result<Vec<f64>> {
    MultiEvaluator::new(spec)?.estimate(sample)
}

/// Covariance matrix `V_n`: closed form for Gaussian products, enumeration
/// for lattices, Monte Carlo otherwise.
pub fn pitman_covariance(spec: &DistributionSpec, n: usize, reps: usize, stream: &SeededStream) -> Result<CovarianceEstimate> {
    let mp = spec.compile_multi()?;
    let s = mp.dim();
    if let MultiPopulation::Product(c) = &mp {
        let vars: Option<Vec<f64>> = c
            .iter()
            .map(|p| match p.family() {
                Family::Gaussian { sd, .. } => Some(sd * sd / n as f64),
                _ => None,
            })
            .collect();
        if let Some(v) = vars {
            let mut m = vec![0.0; s * s];
            for j in 0..s {
                m[j * s + j] = v[j];
            }
            return Ok(CovarianceEstimate {
                dim: s,
                value: m,
                stderr: 0.0,
                method: Method::ClosedForm,
                reps: 0,
            });
        }
    }
    if let Some(l) = mp.as_lattice() {
        if let Ok(m) = multi_lattice_covariance_exact(&l, n) {
            return Ok(CovarianceEstimate {
                dim: s,
                value: m,
                stderr: 0.0,
                method: Method::ExactEnumeration,
                reps: 0,
            });
        }
    }
    if reps < 100 {
        return Err(Error::Domain(format!("Monte Carlo needs at least 100 replications, got {reps}")));
    }
    let eval = MultiEvaluator::new(spec)?;
    let rows = run_replicates(reps, stream, s, |rng| {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| mp.sample(rng)).collect();
        eval.estimate(&Sample::multivariate(pts)?)
    })?;
    let mut value = vec![0.0; s * s];
    let mut stderr: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            let est = rows.jackknife(|st| st.covariance(i, j));
            value[i * s + j] = est.value;
            stderr = stderr.max(est.stderr);
        }
    }
    Ok(CovarianceEstimate {
        dim: s,
        value,
        stderr,
        method: Method::MonteCarlo,
        reps,
    })
}

/// One-step score estimator `x̄ + (1/(nI)) Σ J(x_i - x̄)` with `J = -f'/f`
/// evaluated at centred residuals. `J` is taken as 0 at kinks.
pub fn score_estimator(spec: &DistributionSpec, sample: &Sample) -> Result<f64> {
    let pop = spec.compile()?;
    let info = pop.fisher_information()?;
    score_estimate_with(&pop, info, sample.values()?)
}

pub(crate) fn score_estimate_with(pop: &Population, info: f64, xs: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let c = pop.center();
    let xbar = mean(xs);
    let mut total = 0.0;
    for &x in xs {
        match pop.score(x - xbar + c) {
            Ok(j) => total += j,
            Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(xbar - c + total / (n * info))
}

/// Monte Carlo variance of the score estimator.
pub fn score_variance_mc(spec: &DistributionSpec, n: usize, reps: usize, stream: &SeededStream) -> Result<VarianceEstimate> {
    let pop = spec.compile()?;
    let info = pop.fisher_information()?;
    let rows = run_replicates(reps, stream, 1, |rng| {
        let xs = pop.sample_n(rng, n);
        Ok(vec![score_estimate_with(&pop, info, &xs)?])
    })?;
    Ok(VarianceEstimate::monte_carlo(rows.jackknife(|s| s.variance(0)), reps))
}
