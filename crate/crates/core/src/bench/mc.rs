//! Shared machinery: exact variance lookup, paired Monte Carlo runs and
//! verdict construction.

use std::ops::Range;

use serde_json::Value;

use crate::dist::{DistributionSpec, Family, Population};
use crate::error::{Error, Result};
use crate::pitman::{closed_form_variance, pitman_variance_exact, Evaluator};
use crate::rng::SeededStream;
use crate::stats::{run_replicates, ColumnStats, Replicates};
use crate::verdict::{Claim, InequalityVerdict};

/// `var(t_n)` from a closed form or lattice enumeration, `None` when neither
/// applies (or the enumeration exceeds its guard).
pub fn exact_variance(spec: &DistributionSpec, n: usize) -> Result<Option<f64>> {
    require_finite_variance(spec)?;
    if let Some(v) = closed_form_variance(spec, n)? {
        return Ok(Some(v));
    }
    let pop = spec.compile()?;
    if let Some(l) = pop.lattice() {
        match pitman_variance_exact(l, n) {
            Ok(v) => return Ok(Some(v.variance)),
            Err(Error::Size { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// All of `specs` at the given sizes, or `None` if any lacks an exact path.
pub(super) fn exact_all(items: &[(DistributionSpec, usize)]) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(items.len());
    for (s, n) in items {
        match exact_variance(s, *n)? {
            Some(v) => out.push(v),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

pub(super) fn require_finite_variance(spec: &DistributionSpec) -> Result<()> {
    if spec.compile()?.variance().is_none() {
        return Err(Error::capability(format!(
            "{} has no finite variance; variance inequalities do not apply",
            spec.label()
        )));
    }
    Ok(())
}

pub(super) fn is_gaussian(spec: &DistributionSpec) -> bool {
    matches!(spec.compile().map(|p| p.family()), Ok(Family::Gaussian { .. }))
}

/// Equality is claimed exactly for Gaussian instances.
pub(super) fn claim_for(gaussian: bool) -> Claim {
    if gaussian {
        Claim::Equality
    } else {
        Claim::AtLeast
    }
}

/// Midpoint lattice with `cells` points approximating a law with bounded
/// support; cell probabilities come from the cdf.
pub fn discretize(spec: &DistributionSpec, cells: usize) -> Result<DistributionSpec> {
    let pop = spec.compile()?;
    if pop.is_lattice() {
        return Ok(spec.clone());
    }
    let (lo, hi) = pop.support();
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::capability(format!("{} has unbounded support; cannot discretize", spec.label())));
    }
    if cells < 2 {
        return Err(Error::Domain("discretization needs at least two cells".into()));
    }
    let h = (hi - lo) / cells as f64;
    let points: Vec<f64> = (0..cells).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let mut probs: Vec<f64> = (0..cells)
        .map(|i| pop.cdf(lo + (i + 1) as f64 * h) - pop.cdf(lo + i as f64 * h))
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let spec = DistributionSpec::lattice(&points, &probs);
    spec.validate()?;
    Ok(spec)
}

/// An estimator applied to `Σ_j coeff_j · draws[base_j][i]` for `i` in `range`.
pub(super) struct SumColumn {
    pub eval: Evaluator,
    pub terms: Vec<(usize, f64)>,
    pub range: Range<usize>,
}

impl SumColumn {
    pub fn new(spec: &DistributionSpec, terms: Vec<(usize, f64)>, range: Range<usize>) -> Result<Self> {
        Ok(Self {
            eval: Evaluator::new(spec)?,
            terms,
            range,
        })
    }
}

/// Paired run: each replicate draws every base population once per index
/// and feeds all columns from the same draws.
pub(super) fn run_sums(base: &[Population], cols: &[SumColumn], reps: usize, stream: &SeededStream) -> Result<Replicates> {
    let len = cols.iter().map(|c| c.range.end).max().unwrap_or(0);
    run_replicates(reps, stream, cols.len(), |rng| {
        let draws: Vec<Vec<f64>> = base.iter().map(|p| p.sample_n(rng, len)).collect();
        cols.iter()
            .map(|c| {
                let xs: Vec<f64> = c
                    .range
                    .clone()
                    .map(|i| c.terms.iter().map(|&(b, w)| w * draws[b][i]).sum())
                    .collect();
                c.eval.estimate(&xs)
            })
            .collect()
    })
}

/// One estimator column: `spec` is the law of the summed draws.
pub(super) struct Item {
    pub spec: DistributionSpec,
    pub terms: Vec<(usize, f64)>,
    pub range: Range<usize>,
}

impl Item {
    pub fn new(spec: DistributionSpec, terms: Vec<(usize, f64)>, range: Range<usize>) -> Self {
        Self { spec, terms, range }
    }

    /// `spec` itself on indices `range` of base population 0.
    pub fn single(spec: DistributionSpec, range: Range<usize>) -> Self {
        Self::new(spec, vec![(0, 1.0)], range)
    }
}

/// Variances of a set of estimator columns, exact or from one paired run.
pub(super) enum Vars {
    Exact(Vec<f64>),
    Mc(Replicates),
}

/// Exact when every item has an exact path, else paired Monte Carlo.
pub(super) fn variances(
    base: &[DistributionSpec],
    items: &[Item],
    reps: impl FnOnce() -> Result<usize>,
    stream: &SeededStream,
) -> Result<Vars> {
    let keyed: Vec<(DistributionSpec, usize)> = items.iter().map(|i| (i.spec.clone(), i.range.len())).collect();
    if let Some(v) = exact_all(&keyed)? {
        return Ok(Vars::Exact(v));
    }
    variances_mc(base, items, reps()?, stream)
}

pub(super) fn variances_mc(base: &[DistributionSpec], items: &[Item], reps: usize, stream: &SeededStream) -> Result<Vars> {
    let pops: Vec<Population> = base.iter().map(DistributionSpec::compile).collect::<Result<_>>()?;
    let cols: Vec<SumColumn> = items
        .iter()
        .map(|i| SumColumn::new(&i.spec, i.terms.clone(), i.range.clone()))
        .collect::<Result<_>>()?;
    Ok(Vars::Mc(run_sums(&pops, &cols, reps, stream)?))
}

impl Vars {
    /// Verdict on `lhs(var) - rhs(var)`, `var(i)` being the variance of item `i`.
    pub fn verdict<L, R>(&self, name: &str, instance: Value, lhs: L, rhs: R, tol: f64, claim: Claim) -> InequalityVerdict
    where
        L: Fn(&dyn Fn(usize) -> f64) -> f64,
        R: Fn(&dyn Fn(usize) -> f64) -> f64,
    {
        match self {
            Vars::Exact(v) => {
                let get = |i: usize| v[i];
                exact_verdict(name, instance, lhs(&get), rhs(&get), tol, claim)
            }
            Vars::Mc(rows) => mc_verdict(
                name,
                instance,
                rows,
                |st| lhs(&|i| st.variance(i)),
                |st| rhs(&|i| st.variance(i)),
                tol,
                claim,
            ),
        }
    }
}

pub(super) fn exact_verdict(
    name: &str,
    instance: Value,
    lhs: f64,
    rhs: f64,
    tol: f64,
    claim: Claim,
) -> InequalityVerdict {
    InequalityVerdict::new(name, instance, lhs, rhs, lhs - rhs, 0.0, tol, claim)
}

/// Verdict on `lhs(stats) - rhs(stats)` with a block-jackknife standard error.
pub(super) fn mc_verdict<L, R>(
    name: &str,
    instance: Value,
    rows: &Replicates,
    lhs: L,
    rhs: R,
    tol: f64,
    claim: Claim,
) -> InequalityVerdict
where
    L: Fn(&ColumnStats) -> f64,
    R: Fn(&ColumnStats) -> f64,
{
    let l = rows.jackknife(&lhs);
    let r = rows.jackknife(&rhs);
    let s = rows.jackknife(|st| lhs(st) - rhs(st));
    InequalityVerdict::new(name, instance, l.value, r.value, s.value, s.stderr, tol, claim)
}

pub(super) fn labels(specs: &[DistributionSpec]) -> Vec<String> {
    specs.iter().map(DistributionSpec::label).collect()
}

/// Convolution of the listed specs; a single spec is returned as is.
pub(super) fn convolve(specs: &[&DistributionSpec]) -> DistributionSpec {
    if specs.len() == 1 {
        specs[0].clone()
    } else {
        DistributionSpec::convolution(specs.iter().map(|s| (*s).clone()).collect())
    }
}
