//! Exact computations on lattice populations.
//!
//! Samples with the same residual vector are lattice translates of one
//! another, so `E(x̄ | R)` is a finite weighted average over the admissible
//! shifts of the residual class.

use crate::dist::{Lattice, MultiLattice};
use crate::error::{Error, Result};

use super::Sample;

/// Bound on the number of multisets visited by an exact enumeration.
pub const ENUMERATION_GUARD: f64 = 1e7;

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn lattice_indices(l: &Lattice, xs: &[f64]) -> Result<Vec<i64>> {
    xs.iter()
        .map(|&x| l.index_of(x).ok_or_else(|| Error::Domain(format!("observation {x} is not on the lattice"))))
        .collect()
}

/// Pitman estimate for a sample from a lattice population.
pub fn lattice_estimate(l: &Lattice, xs: &[f64]) -> Result<f64> {
    let k = lattice_indices(l, xs)?;
    let q = *k.iter().min().expect("nonempty sample");
    let top = *k.iter().max().expect("nonempty sample");
    let span = l.probs().len() as i64;
    let mut num = 0.0;
    let mut den = 0.0;
    // Class member `j` has indices `k_i - q + j`.
    for j in 0..(span - (top - q)).max(0) {
        let w: f64 = k.iter().map(|&ki| l.prob_at_index(ki - q + j)).product();
        num += w * j as f64;
        den += w;
    }
    if !(den > 0.0) {
        return Err(Error::Domain("sample has zero probability under every shift of the lattice".into()));
    }
    Ok(l.step() * (q as f64 - num / den))
}

/// Number of multisets of size `n` from `k` items, `C(k + n - 1, n)`.
fn multiset_count(k: usize, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * (k + i - 1) as f64 / i as f64)
}

fn factorials(n: usize) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] * i as f64;
    }
    out
}

/// Visits every nondecreasing sequence `v` of length `n` over `first..k` with
/// `v[0] = first`, passing the distinct values with their counts.
fn for_each_class<F: FnMut(&[(usize, usize)])>(first: usize, k: usize, n: usize, f: &mut F) {
    fn rec<F: FnMut(&[(usize, usize)])>(k: usize, left: usize, counts: &mut Vec<(usize, usize)>, f: &mut F) {
        if left == 0 {
            f(counts);
            return;
        }
        let (last, _) = *counts.last().expect("seeded");
        // Repeat the last value.
        counts.last_mut().expect("seeded").1 += 1;
        rec(k, left - 1, counts, f);
        counts.last_mut().expect("seeded").1 -= 1;
        for v in last + 1..k {
            counts.push((v, 1));
            rec(k, left - 1, counts, f);
            counts.pop();
        }
    }
    let mut counts = vec![(first, 1)];
    rec(k, n - 1, &mut counts, f);
}

/// Exact second-order quantities of the Pitman estimator on a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactVariance {
    pub n: usize,
    /// `var(t_n)`.
    pub variance: f64,
    /// `var E(x̄ | R)`.
    pub conditional_mean_variance: f64,
    /// Population variance `σ²`.
    pub sigma2: f64,
    /// `|var(t_n) - (σ²/n - var E(x̄|R))|`.
    pub identity_residual: f64,
    /// Residual classes visited.
    pub classes: usize,
}

/// Exact `var(t_n)` by enumerating residual classes.
pub fn pitman_variance_exact(l: &Lattice, n: usize) -> Result<ExactVariance> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let p = l.probs();
    let k = p.len();
    let size = multiset_count(k, n);
    if size > ENUMERATION_GUARD {
        return Err(Error::Size {
            size,
            limit: ENUMERATION_GUARD,
        });
    }
    let h = l.step();
    let mu = l.mean();
    let sigma2 = l.variance();
    let fact = factorials(n);
    let nf = n as f64;

    let mut var_t = Acc::default();
    let mut var_c = Acc::default();
    let mut classes = 0usize;
    let mut w = vec![0.0; k];
    for_each_class(0, k, n, &mut |counts: &[(usize, usize)]| {
        let top = counts.last().expect("nonempty").0;
        let shifts = k - top;
        let mut mult = fact[n];
        let mut dsum = 0.0;
        for &(v, c) in counts {
            mult /= fact[c];
            dsum += (v * c) as f64;
        }
        let mut total = 0.0;
        let mut first = 0.0;
        for j in 0..shifts {
            let mut wj = 1.0;
            for &(v, c) in counts {
                wj *= p[v + j].powi(c as i32);
            }
            w[j] = wj;
            total += wj;
            first += wj * j as f64;
        }
        if total == 0.0 {
            return;
        }
        classes += 1;
        let ej = first / total;
        let mut second = 0.0;
        for (j, wj) in w.iter().enumerate().take(shifts) {
            let d = j as f64 - ej;
            second += wj * d * d;
        }
        var_t.add(mult * h * h * second);
        let cond = l.origin() + h * (dsum / nf + ej) - mu;
        var_c.add(mult * total * cond * cond);
    });
    let variance = var_t.value();
    let conditional_mean_variance = var_c.value();
    Ok(ExactVariance {
        n,
        variance,
        conditional_mean_variance,
        sigma2,
        identity_residual: (variance - (sigma2 / nf - conditional_mean_variance)).abs(),
        classes,
    })
}

fn multi_indices(l: &MultiLattice, sample: &Sample) -> Result<Vec<Vec<i64>>> {
    (0..sample.len())
        .map(|i| {
            l.index_of(sample.point(i))
                .ok_or_else(|| Error::Domain(format!("observation {:?} is not on the lattice", sample.point(i))))
        })
        .collect()
}

fn multi_estimate_indices(l: &MultiLattice, k: &[Vec<i64>]) -> Result<Vec<f64>> {
    let s = l.dim();
    let mut num = vec![0.0; s];
    let mut den = 0.0;
    for (a, _) in l.atoms() {
        let tau: Vec<i64> = k[0].iter().zip(a).map(|(x, y)| x - y).collect();
        let mut w = 1.0;
        for ki in k {
            let idx: Vec<i64> = ki.iter().zip(&tau).map(|(x, t)| x - t).collect();
            w *= l.prob_at(&idx);
            if w == 0.0 {
                break;
            }
        }
        if w > 0.0 {
            for d in 0..s {
                num[d] += w * tau[d] as f64;
            }
            den += w;
        }
    }
    if !(den > 0.0) {
        return Err(Error::Domain("sample has zero probability under every lattice shift".into()));
    }
    Ok((0..s).map(|d| l.step()[d] * num[d] / den).collect())
}

/// Pitman estimate of a location vector for a multivariate lattice.
pub fn multi_lattice_estimate(l: &MultiLattice, sample: &Sample) -> Result<Vec<f64>> {
    if sample.dim() != l.dim() {
        return Err(Error::Shape("sample and lattice dimensions differ".into()));
    }
    multi_estimate_indices(l, &multi_indices(l, sample)?)
}

/// Exact covariance matrix (row-major) of the Pitman estimator on a
/// multivariate lattice.
pub fn multi_lattice_covariance_exact(l: &MultiLattice, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let atoms = l.atoms();
    let a = atoms.len();
    let size = multiset_count(a, n);
    if size > ENUMERATION_GUARD {
        return Err(Error::Size {
            size,
            limit: ENUMERATION_GUARD,
        });
    }
    let s = l.dim();
    let fact = factorials(n);
    let mut first = vec![Acc::default(); s];
    let mut second = vec![Acc::default(); s * s];
    let mut err = None;
    for start in 0..a {
        for_each_class(start, a, n, &mut |counts: &[(usize, usize)]| {
            if err.is_some() {
                return;
            }
            let mut weight = fact[n];
            let mut idx = Vec::with_capacity(n);
            for &(v, c) in counts {
                weight *= atoms[v].1.powi(c as i32) / fact[c];
                for _ in 0..c {
                    idx.push(atoms[v].0.clone());
                }
            }
            match multi_estimate_indices(l, &idx) {
                Ok(t) => {
                    for i in 0..s {
                        first[i].add(weight * t[i]);
                        for j in 0..s {
                            second[i * s + j].add(weight * t[i] * t[j]);
                        }
                    }
                }
                Err(e) => err = Some(e),
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    let m: Vec<f64> = first.iter().map(Acc::value).collect();
    Ok((0..s * s).map(|ij| second[ij].value() - m[ij / s] * m[ij % s]).collect())
}
