//! Experiments on univariate populations.

use serde_json::json;

use super::mc::{
    claim_for, convolve, discretize, exact_variance, is_gaussian, labels, mc_verdict, require_finite_variance,
    variances, variances_mc, Item, Vars,
};
use super::ExperimentConfig;
use crate::anova::{binomial, subsets};
use crate::dist::{DistributionSpec, Family, Population};
use crate::error::{Error, Result};
use crate::pitman::{pooled_estimate, Evaluator};
use crate::rng::SeededStream;
use crate::stats::run_replicates;
use crate::verdict::{Claim, InequalityVerdict};

fn all_indices(n: usize) -> Vec<(usize, f64)> {
    (0..n).map(|j| (j, 1.0)).collect()
}

pub(super) fn convolution_superadditivity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let m = cfg.m.ok_or_else(|| Error::config("/m", "required"))?;
    superadditivity(cfg, stream, m, "convolution_superadditivity")
}

pub(super) fn additive_superadditivity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    superadditivity(cfg, stream, 1, "additive_superadditivity")
}

/// `var(t_n(F_1*...*F_N)) ≥ C(N-1, m-1)^{-1} Σ_s var(t_n(F_s))`.
fn superadditivity(cfg: &ExperimentConfig, stream: &SeededStream, m: usize, name: &str) -> Result<Vec<InequalityVerdict>> {
    let pops = &cfg.populations;
    let big_n = pops.len();
    if big_n == 0 {
        return Err(Error::config("/populations", "at least one population required"));
    }
    if m == 0 || m > big_n {
        return Err(Error::config("/m", format!("must lie in [1, {big_n}]")));
    }
    pops.iter().try_for_each(require_finite_variance)?;
    let subs = subsets(big_n, m);
    let c = binomial(big_n - 1, m - 1);
    let refs: Vec<&DistributionSpec> = pops.iter().collect();
    let full = convolve(&refs);
    let claim = claim_for(pops.iter().all(is_gaussian));
    let mut out = Vec::new();
    for n in cfg.n_list()? {
        let mut items = vec![Item::new(full.clone(), all_indices(big_n), 0..n)];
        for s in &subs {
            let members: Vec<&DistributionSpec> = s.iter().map(|&j| &pops[j]).collect();
            items.push(Item::new(convolve(&members), s.iter().map(|&j| (j, 1.0)).collect(), 0..n));
        }
        let vars = variances(pops, &items, || cfg.require_mc_reps(), &stream.fork(n as u64))?;
        let k = items.len();
        let instance = json!({ "populations": labels(pops), "N": big_n, "m": m, "n": n });
        out.push(vars.verdict(name, instance, |v| v(0), |v| (1..k).map(v).sum::<f64>() / c, cfg.tol, claim));
    }
    Ok(out)
}

/// Variances of `t_n` for `H^{*N}`, `N` in `ns`, sharing the draws of `H`.
fn group_variances(
    cfg: &ExperimentConfig,
    stream: &SeededStream,
    h: &DistributionSpec,
    n: usize,
    ns: &[usize],
) -> Result<Vars> {
    require_finite_variance(h)?;
    let max = ns.iter().copied().max().unwrap_or(1);
    let base = vec![h.clone(); max];
    let items: Vec<Item> = ns
        .iter()
        .map(|&big| Item::new(h.convolution_power(big), all_indices(big), 0..n))
        .collect();
    variances(&base, &items, || cfg.require_mc_reps(), stream)
}

/// `N` values needed for consecutive comparisons `N-1 → N`.
fn group_pairs(cfg: &ExperimentConfig) -> Result<(Vec<usize>, Vec<(usize, usize)>)> {
    let list = cfg.big_n_list()?;
    let mut needed = Vec::new();
    let mut pairs = Vec::new();
    for &big in list.iter().filter(|&&b| b >= 2) {
        needed.push(big - 1);
        needed.push(big);
    }
    needed.sort_unstable();
    needed.dedup();
    for &big in list.iter().filter(|&&b| b >= 2) {
        let a = needed.binary_search(&(big - 1)).expect("present");
        let b = needed.binary_search(&big).expect("present");
        pairs.push((a, b));
    }
    if pairs.is_empty() {
        return Err(Error::config("/N_values", "need some N >= 2"));
    }
    Ok((needed, pairs))
}

/// `var(t_n^{*N})/N ≥ var(t_n^{*(N-1)})/(N-1)`.
pub(super) fn group_monotonicity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let (needed, pairs) = group_pairs(cfg)?;
    let mut out = Vec::new();
    for (pi, h) in cfg.populations.iter().enumerate() {
        let claim = claim_for(is_gaussian(h));
        for n in cfg.n_list()? {
            let vars = group_variances(cfg, &stream.fork(pi as u64).fork(n as u64), h, n, &needed)?;
            for &(a, b) in &pairs {
                let (na, nb) = (needed[a] as f64, needed[b] as f64);
                let instance = json!({ "population": h.label(), "n": n, "N": needed[b] });
                out.push(vars.verdict("group_monotonicity", instance, |v| v(b) / nb, |v| v(a) / na, cfg.tol, claim));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config("/populations", "at least one population required"));
    }
    Ok(out)
}

/// `(N-1) var E(x̄_1 | R_1+...+R_{N-1}) ≥ N var E(x̄_1 | R_1+...+R_N)`, using
/// `N var E(x̄_1 | ΣR) = σ²/n - var(t_n^{*N})/N`.
pub(super) fn dissipation(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let (needed, pairs) = group_pairs(cfg)?;
    let mut out = Vec::new();
    for (pi, h) in cfg.populations.iter().enumerate() {
        let sigma2 = h.variance()?;
        let claim = claim_for(is_gaussian(h));
        for n in cfg.n_list()? {
            let vars = group_variances(cfg, &stream.fork(pi as u64).fork(n as u64), h, n, &needed)?;
            let base = sigma2 / n as f64;
            for &(a, b) in &pairs {
                let (na, nb) = (needed[a] as f64, needed[b] as f64);
                let instance = json!({ "population": h.label(), "n": n, "N": needed[b] });
                out.push(vars.verdict(
                    "dissipation",
                    instance,
                    |v| base - v(a) / na,
                    |v| base - v(b) / nb,
                    cfg.tol,
                    claim,
                ));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::config("/populations", "at least one population required"));
    }
    Ok(out)
}

fn prefix_variances(cfg: &ExperimentConfig, stream: &SeededStream, spec: &DistributionSpec, ns: &[usize]) -> Result<Vars> {
    require_finite_variance(spec)?;
    let items: Vec<Item> = ns.iter().map(|&n| Item::single(spec.clone(), 0..n)).collect();
    variances(std::slice::from_ref(spec), &items, || cfg.require_mc_reps(), stream)
}

/// `n var(t_n) ≥ (n+1) var(t_{n+1})` over consecutive entries of `n_values`.
pub(super) fn sample_monotonicity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let ns = cfg.n_list()?;
    if ns.len() < 2 {
        return Err(Error::config("/n_values", "need at least two sample sizes"));
    }
    let mut out = Vec::new();
    for (pi, spec) in cfg.populations.iter().enumerate() {
        let vars = prefix_variances(cfg, &stream.fork(pi as u64), spec, &ns)?;
        let claim = claim_for(is_gaussian(spec));
        for i in 0..ns.len() - 1 {
            let (a, b) = (ns[i] as f64, ns[i + 1] as f64);
            let instance = json!({ "population": spec.label(), "n": ns[i], "n_next": ns[i + 1] });
            out.push(vars.verdict("sample_monotonicity", instance, |v| a * v(i), |v| b * v(i + 1), cfg.tol, claim));
        }
    }
    if out.is_empty() {
        return Err(Error::config("/populations", "at least one population required"));
    }
    Ok(out)
}

/// `(n+1) var E(x̄_{n+1} | R) ≥ n var E(x̄_n | R)` with
/// `var E(x̄_n | R) = σ²/n - var(t_n)`.
pub(super) fn final_corollary(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let ns = cfg.n_list()?;
    if ns.len() < 2 {
        return Err(Error::config("/n_values", "need at least two sample sizes"));
    }
    let mut out = Vec::new();
    for (pi, spec) in cfg.populations.iter().enumerate() {
        let sigma2 = spec.variance()?;
        let vars = prefix_variances(cfg, &stream.fork(pi as u64), spec, &ns)?;
        let claim = claim_for(is_gaussian(spec));
        for i in 0..ns.len() - 1 {
            let (a, b) = (ns[i] as f64, ns[i + 1] as f64);
            let instance = json!({ "population": spec.label(), "n": ns[i], "n_next": ns[i + 1] });
            out.push(vars.verdict(
                "final_corollary",
                instance,
                |v| b * (sigma2 / b - v(i + 1)),
                |v| a * (sigma2 / a - v(i)),
                cfg.tol,
                claim,
            ));
        }
    }
    if out.is_empty() {
        return Err(Error::config("/populations", "at least one population required"));
    }
    Ok(out)
}

/// `var(t_n)` of `F * λG` is nondecreasing in `λ > 0` and nonincreasing in
/// `λ < 0`; `±λ` give the same variance.
pub(super) fn lambda_monotonicity(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let f = cfg.population(0)?;
    let g = cfg.population(1)?;
    if !is_gaussian(g) {
        return Err(Error::capability(format!(
            "{} is not in the self-decomposable registry (Gaussian laws only on variance paths)",
            g.label()
        )));
    }
    require_finite_variance(f)?;
    let n = cfg.require_n()?;
    let mut grid = cfg.lambda_grid.clone();
    if grid.len() < 2 || grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::config("/lambda_grid", "need at least two finite values"));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let items: Vec<Item> = grid
        .iter()
        .map(|&l| Item::new(DistributionSpec::convolution(vec![f.clone(), g.clone().scaled(l)]), vec![(0, 1.0), (1, l)], 0..n))
        .collect();
    let vars = variances(&[f.clone(), g.clone()], &items, || cfg.require_mc_reps(), stream)?;
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let instance = json!({ "F": f.label(), "G": g.label(), "n": n, "lambda": a, "lambda_next": b });
        if a >= 0.0 {
            out.push(vars.verdict("lambda_monotonicity", instance, |v| v(i + 1), |v| v(i), cfg.tol, Claim::AtLeast));
        } else if b <= 0.0 {
            out.push(vars.verdict("lambda_monotonicity", instance, |v| v(i), |v| v(i + 1), cfg.tol, Claim::AtLeast));
        }
    }
    for (i, &l) in grid.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        if let Some(j) = grid.iter().position(|&x| x == -l) {
            let instance = json!({ "F": f.label(), "G": g.label(), "n": n, "lambda": l });
            out.push(vars.verdict("lambda_symmetry", instance, |v| v(i), |v| v(j), cfg.tol, Claim::Equality));
        }
    }
    Ok(out)
}

/// `var` of the pooled estimator for the groups in `set`, when exact.
fn pooled_exact(pops: &[DistributionSpec], sizes: &[usize], set: &[usize]) -> Result<Option<f64>> {
    let mut info = 0.0;
    let mut all_gaussian = true;
    for &j in set {
        match pops[j].compile()?.family() {
            Family::Gaussian { sd, .. } => info += sizes[j] as f64 / (sd * sd),
            _ => all_gaussian = false,
        }
    }
    if all_gaussian {
        return Ok(Some(1.0 / info));
    }
    if set.iter().all(|&j| pops[j] == pops[set[0]]) {
        return exact_variance(&pops[set[0]], set.iter().map(|&j| sizes[j]).sum());
    }
    Ok(None)
}

enum PoolColumn {
    /// Identical populations: the ordinary estimator on the concatenation.
    Same(Evaluator, Vec<usize>),
    Mixed(Vec<usize>),
}

fn pooled_mc(
    pops: &[DistributionSpec],
    sizes: &[usize],
    sets: &[Vec<usize>],
    reps: usize,
    stream: &SeededStream,
) -> Result<crate::stats::Replicates> {
    let compiled: Vec<Population> = pops.iter().map(DistributionSpec::compile).collect::<Result<_>>()?;
    let cols: Vec<PoolColumn> = sets
        .iter()
        .map(|s| {
            if s.iter().all(|&j| pops[j] == pops[s[0]]) {
                Ok(PoolColumn::Same(Evaluator::from_population(compiled[s[0]].clone()), s.clone()))
            } else {
                Ok(PoolColumn::Mixed(s.clone()))
            }
        })
        .collect::<Result<_>>()?;
    run_replicates(reps, stream, cols.len(), |rng| {
        let draws: Vec<Vec<f64>> = compiled.iter().zip(sizes).map(|(p, &n)| p.sample_n(rng, n)).collect();
        cols.iter()
            .map(|c| match c {
                PoolColumn::Same(e, s) => {
                    let xs: Vec<f64> = s.iter().flat_map(|&j| draws[j].iter().copied()).collect();
                    e.estimate(&xs)
                }
                PoolColumn::Mixed(s) => {
                    let groups: Vec<(&Population, &[f64])> =
                        s.iter().map(|&j| (&compiled[j], draws[j].as_slice())).collect();
                    pooled_estimate(&groups)
                }
            })
            .collect()
    })
}

/// `1/var(t^{(1..N)}) ≥ C(N-1, m-1)^{-1} Σ_s 1/var(t^{(s)})` for pooled samples.
pub(super) fn combine(cfg: &ExperimentConfig, stream: &SeededStream) -> Result<Vec<InequalityVerdict>> {
    let pops = &cfg.populations;
    let big_n = pops.len();
    if big_n == 0 {
        return Err(Error::config("/populations", "at least one population required"));
    }
    if cfg.sizes.len() != big_n || cfg.sizes.contains(&0) {
        return Err(Error::config("/sizes", "one positive sample size per population required"));
    }
    let m = cfg.m.unwrap_or(1);
    if m == 0 || m > big_n {
        return Err(Error::config("/m", format!("must lie in [1, {big_n}]")));
    }
    pops.iter().try_for_each(require_finite_variance)?;
    let mut sets = vec![(0..big_n).collect::<Vec<_>>()];
    sets.extend(subsets(big_n, m));
    let c = binomial(big_n - 1, m - 1);
    let k = sets.len();
    let claim = claim_for(pops.iter().all(is_gaussian));
    let instance = json!({ "populations": labels(pops), "sizes": cfg.sizes, "m": m });

    let mut exact = Vec::with_capacity(k);
    for s in &sets {
        match pooled_exact(pops, &cfg.sizes, s)? {
            Some(v) => exact.push(v),
            None => break,
        }
    }
    let mut out = Vec::new();
    let have_exact = exact.len() == k;
    if have_exact {
        let rhs = exact[1..].iter().map(|v| 1.0 / v).sum::<f64>() / c;
        out.push(super::mc::exact_verdict("combine", instance.clone(), 1.0 / exact[0], rhs, cfg.tol, claim));
    }
    if !have_exact || cfg.confirm_mc {
        let rows = pooled_mc(pops, &cfg.sizes, &sets, cfg.require_mc_reps()?, stream)?;
        let name = if have_exact { "combine_mc" } else { "combine" };
        out.push(mc_verdict(
            name,
            instance,
            &rows,
            |st| 1.0 / st.variance(0),
            |st| (1..k).map(|j| 1.0 / st.variance(j)).sum::<f64>() / c,
            cfg.tol,
            claim,
        ));
    }
    Ok(out)
}

/// Both characterizations: `var(t_n(F*F)) ≥ 2 var(t_n(F))` and
/// `1/var(t_{n_1+n_2}) ≥ 1/var(t_{n_1}) + 1/var(t_{n_2})`, with equality
/// claimed for Gaussian `F` and a strict gap claimed otherwise.
pub(super) fn gaussian_equality_characterization(
    cfg: &ExperimentConfig,
    stream: &SeededStream,
) -> Result<Vec<InequalityVerdict>> {
    let n = cfg.require_n()?;
    let (n1, n2) = match cfg.sizes.as_slice() {
        [a, b] if *a > 0 && *b > 0 => (*a, *b),
        [] => (n.div_ceil(2), n / 2),
        _ => return Err(Error::config("/sizes", "two positive group sizes required")),
    };
    if cfg.populations.is_empty() {
        return Err(Error::config("/populations", "at least one population required"));
    }
    let mut out = Vec::new();
    for (pi, original) in cfg.populations.iter().enumerate() {
        require_finite_variance(original)?;
        let gaussian = is_gaussian(original);
        let f = match cfg.discretize {
            Some(cells) if !gaussian => discretize(original, cells).unwrap_or_else(|_| original.clone()),
            _ => original.clone(),
        };
        let claim = if gaussian { Claim::Equality } else { Claim::Strict };
        let label = f.label();
        let s = stream.fork(pi as u64);

        let ff = DistributionSpec::convolution(vec![f.clone(), f.clone()]);
        let items = [
            Item::new(ff, vec![(0, 1.0), (1, 1.0)], 0..n),
            Item::new(f.clone(), vec![(0, 1.0)], 0..n),
            Item::new(f.clone(), vec![(1, 1.0)], 0..n),
        ];
        let vars = variances(&[f.clone(), f.clone()], &items, || cfg.require_mc_reps(), &s.fork(0))?;
        let instance = json!({ "population": label, "n": n, "discretize": cfg.discretize.filter(|_| !gaussian) });
        out.push(vars.verdict("characterization_convolution", instance, |v| v(0), |v| v(1) + v(2), cfg.tol, claim));

        if n1 + n2 >= 2 {
            let items = [
                Item::single(f.clone(), 0..n1 + n2),
                Item::single(f.clone(), 0..n1),
                Item::single(f.clone(), n1..n1 + n2),
            ];
            let vars = variances(std::slice::from_ref(&f), &items, || cfg.require_mc_reps(), &s.fork(1))?;
            let instance = json!({ "population": label, "sizes": [n1, n2], "discretize": cfg.discretize.filter(|_| !gaussian) });
            out.push(vars.verdict(
                "characterization_combine",
                instance,
                |v| 1.0 / v(0),
                |v| 1.0 / v(1) + 1.0 / v(2),
                cfg.tol,
                claim,
            ));
        }
    }
    Ok(out)
}

/// Forced Monte Carlo variances of `t_n` for `spec` at each size in `ns`,
/// from shared prefixes of one stream of draws.
pub(super) fn prefix_variances_mc(spec: &DistributionSpec, ns: &[usize], reps: usize, stream: &SeededStream) -> Result<Vars> {
    let items: Vec<Item> = ns.iter().map(|&n| Item::single(spec.clone(), 0..n)).collect();
    variances_mc(std::slice::from_ref(spec), &items, reps, stream)
}
