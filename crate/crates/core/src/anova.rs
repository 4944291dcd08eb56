//! Hoeffding (ANOVA) decomposition over finite product spaces and the
//! variance drop inequality for weighted sums of functions of subsets.

use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::json;

use crate::error::{Error, Result};
use crate::verdict::{Claim, InequalityVerdict, Quantity};

/// Largest product space handled by enumeration.
pub const PRODUCT_GUARD: usize = 1_000_000;

/// Component variances below this are treated as zero.
pub const EQUALITY_TOL: f64 = 1e-10;

/// A function of the coordinates `subset` (sorted, zero-based), tabulated on
/// the product of their supports. Values are vectors of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFunction {
    pub subset: Vec<usize>,
    pub sizes: Vec<usize>,
    pub dim: usize,
    /// Row-major over the coordinates of `subset` (last fastest), then `dim`.
    pub table: Vec<f64>,
}

impl SubsetFunction {
    pub fn new(subset: Vec<usize>, sizes: Vec<usize>, dim: usize, table: Vec<f64>) -> Result<Self> {
        if subset.len() != sizes.len() {
            return Err(Error::Shape("one support size per coordinate is required".into()));
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("subset indices must be strictly increasing".into()));
        }
        let cells: usize = sizes.iter().product();
        if cells * dim != table.len() || dim == 0 {
            return Err(Error::Shape(format!(
                "table has {} entries, expected {} cells of dimension {dim}",
                table.len(),
                cells
            )));
        }
        Ok(Self {
            subset,
            sizes,
            dim,
            table,
        })
    }

    pub fn scalar(subset: Vec<usize>, sizes: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        Self::new(subset, sizes, 1, table)
    }

    /// Tabulates `f` on the supports of the given coordinates.
    pub fn from_fn<F: Fn(&[usize]) -> f64>(subset: Vec<usize>, sizes: Vec<usize>, f: F) -> Result<Self> {
        let cells: usize = sizes.iter().product();
        let table = (0..cells).map(|c| f(&unravel(c, &sizes))).collect();
        Self::scalar(subset, sizes, table)
    }

    pub fn cells(&self) -> usize {
        self.sizes.iter().product()
    }

    fn value(&self, cell: usize) -> &[f64] {
        &self.table[cell * self.dim..(cell + 1) * self.dim]
    }
}

fn unravel(mut cell: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for a in (0..sizes.len()).rev() {
        idx[a] = cell % sizes[a];
        cell /= sizes[a];
    }
    idx
}

fn check_dists(f: &SubsetFunction, dists: &[Vec<f64>]) -> Result<()> {
    for (a, &i) in f.subset.iter().enumerate() {
        let p = dists
            .get(i)
            .ok_or_else(|| Error::Shape(format!("no distribution for coordinate {i}")))?;
        if p.len() != f.sizes[a] {
            return Err(Error::Shape(format!(
                "coordinate {i} has {} support points but the table uses {}",
                p.len(),
                f.sizes[a]
            )));
        }
    }
    if f.cells() > PRODUCT_GUARD {
        return Err(Error::Size {
            size: f.cells() as f64,
            limit: PRODUCT_GUARD as f64,
        });
    }
    Ok(())
}

fn cell_weights(sizes: &[usize], probs: &[&[f64]]) -> Vec<f64> {
    let cells: usize = sizes.iter().product();
    (0..cells)
        .map(|c| unravel(c, sizes).iter().zip(probs).map(|(&k, p)| p[k]).product())
        .collect()
}

/// Hoeffding components of one function, indexed by subsets `T` of its
/// coordinates.
#[derive(Debug, Clone)]
pub struct AnovaDecomposition {
    pub subset: Vec<usize>,
    pub sizes: Vec<usize>,
    pub dim: usize,
    /// `(T, table)` with `T` a sorted list of coordinates; tables span the
    /// full product of `subset` and are constant along coordinates outside `T`.
    pub components: Vec<(Vec<usize>, Vec<f64>)>,
    /// `E|g_T|²` (trace for vector values); 0 for `T = ∅`.
    pub component_variance: Vec<f64>,
    /// `E g_T g_Tᵀ`, row-major `dim × dim`.
    pub component_covariance: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl AnovaDecomposition {
    pub fn variance(&self) -> f64 {
        self.component_variance.iter().sum()
    }

    pub fn component(&self, t: &[usize]) -> Option<&[f64]> {
        self.components.iter().find(|(s, _)| s == t).map(|(_, v)| v.as_slice())
    }

    pub fn component_variance_of(&self, t: &[usize]) -> Option<f64> {
        self.components.iter().position(|(s, _)| s == t).map(|i| self.component_variance[i])
    }

    /// Largest `|E⟨g_T, g_U⟩|` over `T ≠ U`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.components.len() {
            for b in a + 1..self.components.len() {
                let ip: f64 = self
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(c, w)| {
                        let ga = &self.components[a].1[c * self.dim..(c + 1) * self.dim];
                        let gb = &self.components[b].1[c * self.dim..(c + 1) * self.dim];
                        w * ga.iter().zip(gb).map(|(x, y)| x * y).sum::<f64>()
                    })
                    .sum();
                worst = worst.max(ip.abs());
            }
        }
        worst
    }

    /// Largest entrywise `|Σ_T g_T - f|`.
    pub fn reconstruction_error(&self, f: &SubsetFunction) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in f.table.iter().enumerate() {
            let s: f64 = self.components.iter().map(|(_, g)| g[k]).sum();
            worst = worst.max((s - v).abs());
        }
        worst
    }
}

/// Decomposes `f` into orthogonal components `g_T = Σ_{U ⊆ T} (-1)^{|T\U|} E(f | X_U)`.
/// `dists[i]` is the probability vector of coordinate `i`.
pub fn hoeffding_decompose(f: &SubsetFunction, dists: &[Vec<f64>]) -> Result<AnovaDecomposition> {
    check_dists(f, dists)?;
    let r = f.subset.len();
    let probs: Vec<&[f64]> = f.subset.iter().map(|&i| dists[i].as_slice()).collect();
    let cells = f.cells();
    let dim = f.dim;
    let full = (1usize << r) - 1;

    // cond[mask] = E(f | X_U), U = coordinates in `mask`, broadcast to full shape.
    let mut cond: Vec<Option<Vec<f64>>> = vec![None; 1 << r];
    cond[full] = Some(f.table.clone());
    let strides: Vec<usize> = (0..r).map(|a| f.sizes[a + 1..].iter().product()).collect();
    let mut masks: Vec<usize> = (0..full).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for mask in masks {
        let a = (0..r).find(|a| mask & (1 << a) == 0).expect("mask is not full");
        let parent = cond[mask | (1 << a)].as_ref().expect("parent computed first");
        let mut out = vec![0.0; cells * dim];
        for c in 0..cells {
            let k = (c / strides[a]) % f.sizes[a];
            let base = c - k * strides[a];
            for d in 0..dim {
                let mut s = 0.0;
                for (v, p) in probs[a].iter().enumerate() {
                    s += p * parent[(base + v * strides[a]) * dim + d];
                }
                out[c * dim + d] = s;
            }
        }
        cond[mask] = Some(out);
    }

    let weights = cell_weights(&f.sizes, &probs);
    let mut components = Vec::with_capacity(1 << r);
    let mut component_variance = Vec::with_capacity(1 << r);
    let mut component_covariance = Vec::with_capacity(1 << r);
    for t in 0..=full {
        let mut g = vec![0.0; cells * dim];
        let mut u = t;
        loop {
            let sign = if (t ^ u).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let cu = cond[u].as_ref().expect("all masks computed");
            for (x, y) in g.iter_mut().zip(cu) {
                *x += sign * y;
            }
            if u == 0 {
                break;
            }
            u = (u - 1) & t;
        }
        let mut cov = vec![0.0; dim * dim];
        if t != 0 {
            for (c, w) in weights.iter().enumerate() {
                let gc = &g[c * dim..(c + 1) * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        cov[i * dim + j] += w * gc[i] * gc[j];
                    }
                }
            }
        }
        let trace = (0..dim).map(|i| cov[i * dim + i]).sum();
        let coords: Vec<usize> = (0..r).filter(|a| t & (1 << a) != 0).map(|a| f.subset[a]).collect();
        components.push((coords, g));
        component_variance.push(trace);
        component_covariance.push(cov);
    }
    Ok(AnovaDecomposition {
        subset: f.subset.clone(),
        sizes: f.sizes.clone(),
        dim,
        components,
        component_variance,
        component_covariance,
        weights,
    })
}

/// True iff every component of order at least 2 has variance below
/// [`EQUALITY_TOL`].
pub fn decomposability_test(f: &SubsetFunction, dists: &[Vec<f64>]) -> Result<bool> {
    let d = hoeffding_decompose(f, dists)?;
    Ok(d.components
        .iter()
        .zip(&d.component_variance)
        .all(|((t, _), v)| t.len() < 2 || *v < EQUALITY_TOL))
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Both sides of the variance drop inequality.
#[derive(Debug, Clone)]
pub struct VarianceDrop {
    pub n_coords: usize,
    pub m: usize,
    /// `Cov(Σ w_s φ_s)`, row-major.
    pub lhs: Vec<f64>,
    /// `C(N-1, m-1) Σ w_s² Cov(φ_s)`, row-major.
    pub rhs: Vec<f64>,
    /// Smallest eigenvalue of `rhs - lhs` (the difference itself for scalars).
    pub gap: f64,
    /// Every `φ_s` passes [`decomposability_test`].
    pub all_decomposable: bool,
    /// Exact equality condition: for `m < N`, decomposability together with
    /// `w_s g_{s,{i}}` not depending on `s ∋ i`; for `m = N` equality always holds.
    pub equality_predicted: bool,
    pub verdict: InequalityVerdict,
}

fn min_eigenvalue(dim: usize, m: &[f64]) -> f64 {
    if dim == 1 {
        return m[0];
    }
    let a = DMatrix::from_row_slice(dim, dim, m);
    let sym = (&a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Checks the variance drop inequality exactly. `functions[k]` must be the
/// function of the `k`-th `m`-subset in [`subsets`] order.
pub fn variance_drop_check(
    functions: &[SubsetFunction],
    weights: &[f64],
    dists: &[Vec<f64>],
) -> Result<VarianceDrop> {
    let n = dists.len();
    let first = functions.first().ok_or_else(|| Error::Shape("no functions given".into()))?;
    let m = first.subset.len();
    let dim = first.dim;
    let expected = subsets(n, m);
    if functions.len() != expected.len() || weights.len() != functions.len() {
        return Err(Error::Shape(format!(
            "need one function and one weight per {m}-subset of {n} coordinates ({} subsets)",
            expected.len()
        )));
    }
    for (f, s) in functions.iter().zip(&expected) {
        if &f.subset != s || f.dim != dim {
            return Err(Error::Shape(format!("function for subset {s:?} has subset {:?}", f.subset)));
        }
        check_dists(f, dists)?;
    }
    if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("weights must be positive and sum to 1".into()));
    }
    let sizes: Vec<usize> = dists.iter().map(Vec::len).collect();
    let cells: usize = sizes.iter().product();
    if cells > PRODUCT_GUARD {
        return Err(Error::Size {
            size: cells as f64,
            limit: PRODUCT_GUARD as f64,
        });
    }

    // lhs by direct enumeration of the full product space.
    let probs: Vec<&[f64]> = dists.iter().map(Vec::as_slice).collect();
    let w_cells = cell_weights(&sizes, &probs);
    let mut mean = vec![0.0; dim];
    let mut second = vec![0.0; dim * dim];
    let mut value = vec![0.0; dim];
    for (c, wc) in w_cells.iter().enumerate() {
        let idx = unravel(c, &sizes);
        value.iter_mut().for_each(|v| *v = 0.0);
        for (f, w) in functions.iter().zip(weights) {
            let local = f.subset.iter().fold(0, |acc, i| acc * sizes[*i] + idx[*i]);
            for (v, x) in value.iter_mut().zip(f.value(local)) {
                *v += w * x;
            }
        }
        for i in 0..dim {
            mean[i] += wc * value[i];
            for j in 0..dim {
                second[i * dim + j] += wc * value[i] * value[j];
            }
        }
    }
    let lhs: Vec<f64> = (0..dim * dim).map(|ij| second[ij] - mean[ij / dim] * mean[ij % dim]).collect();

    let decomps: Vec<AnovaDecomposition> = functions
        .iter()
        .map(|f| hoeffding_decompose(f, dists))
        .collect::<Result<_>>()?;
    let c = binomial(n - 1, m - 1);
    let mut rhs = vec![0.0; dim * dim];
    for (d, w) in decomps.iter().zip(weights) {
        for (t, cov) in d.component_covariance.iter().enumerate() {
            if t == 0 {
                continue;
            }
            for (r, x) in rhs.iter_mut().zip(cov) {
                *r += c * w * w * x;
            }
        }
    }
    let diff: Vec<f64> = rhs.iter().zip(&lhs).map(|(r, l)| r - l).collect();
    let gap = min_eigenvalue(dim, &diff);

    let all_decomposable = decomps.iter().all(|d| {
        d.components
            .iter()
            .zip(&d.component_variance)
            .all(|((t, _), v)| t.len() < 2 || *v < EQUALITY_TOL)
    });
    let equality_predicted = if m == n { true } else { all_decomposable && singletons_aligned(&decomps, weights, dists) };

    let scale = lhs.iter().chain(&rhs).fold(1.0_f64, |a, x| a.max(x.abs()));
    let instance = json!({ "N": n, "m": m, "dim": dim, "sizes": sizes });
    let (lq, rq) = if dim == 1 {
        (Quantity::Scalar(lhs[0]), Quantity::Scalar(rhs[0]))
    } else {
        (Quantity::matrix(dim, &lhs), Quantity::matrix(dim, &rhs))
    };
    let verdict = InequalityVerdict::new("variance_drop", instance, rq, lq, gap, 0.0, EQUALITY_TOL * scale, Claim::AtLeast);
    Ok(VarianceDrop {
        n_coords: n,
        m,
        lhs,
        rhs,
        gap,
        all_decomposable,
        equality_predicted,
        verdict,
    })
}

/// For each coordinate `i`, `w_s g_{s,{i}}` agrees across all subsets `s ∋ i`.
fn singletons_aligned(decomps: &[AnovaDecomposition], weights: &[f64], dists: &[Vec<f64>]) -> bool {
    for i in 0..dists.len() {
        let mut reference: Option<Vec<f64>> = None;
        for (d, w) in decomps.iter().zip(weights) {
            let Some(a) = d.subset.iter().position(|&c| c == i) else {
                continue;
            };
            let g = d.component(&[i]).expect("singleton component present");
            // Read g along coordinate i with the other coordinates at 0.
            let stride: usize = d.sizes[a + 1..].iter().product();
            let vals: Vec<f64> = (0..d.sizes[a])
                .flat_map(|v| g[v * stride * d.dim..v * stride * d.dim + d.dim].iter().map(move |x| w * x))
                .collect();
            match &reference {
                None => reference = Some(vals),
                Some(r) => {
                    let diff: f64 = r
                        .iter()
                        .zip(&vals)
                        .enumerate()
                        .map(|(k, (a, b))| dists[i][k / d.dim] * (a - b) * (a - b))
                        .sum();
                    if diff > EQUALITY_TOL {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Smallest eigenvalue of `A - B` for symmetric `A`, `B`.
pub fn loewner_slack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("cannot compare {:?} with {:?}", a.shape(), b.shape())));
    }
    let d = a - b;
    let sym = (&d + d.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `A ⪰ B` in the Loewner order, up to `tol`.
pub fn loewner_ge(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(loewner_slack(a, b)? >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1() -> Vec<f64> {
        vec![0.5, 0.5]
    }

    fn val(k: usize) -> f64 {
        if k == 0 {
            -1.0
        } else {
            1.0
        }
    }

    #[test]
    fn additive_function_has_only_singletons() {
        let f = SubsetFunction::from_fn(vec![0, 1], vec![2, 2], |i| val(i[0]) + val(i[1])).unwrap();
        let d = hoeffding_decompose(&f, &[pm1(), pm1()]).unwrap();
        assert!(d.component_variance_of(&[0, 1]).unwrap() < 1e-15);
        assert!((d.component_variance_of(&[0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(decomposability_test(&f, &[pm1(), pm1()]).unwrap());
    }

    #[test]
    fn product_function_is_pure_interaction() {
        let f = SubsetFunction::from_fn(vec![0, 1], vec![2, 2], |i| val(i[0]) * val(i[1])).unwrap();
        let d = hoeffding_decompose(&f, &[pm1(), pm1()]).unwrap();
        assert!((d.component_variance_of(&[0, 1]).unwrap() - 1.0).abs() < 1e-15);
        assert!(d.component_variance_of(&[0]).unwrap() < 1e-15);
        assert!(!decomposability_test(&f, &[pm1(), pm1()]).unwrap());
    }

    #[test]
    fn constant_coordinate_makes_product_decomposable() {
        let f = SubsetFunction::from_fn(vec![0, 1], vec![2, 1], |i| val(i[0]) * 3.0).unwrap();
        assert!(decomposability_test(&f, &[pm1(), vec![1.0]]).unwrap());
    }

    #[test]
    fn constant_function_lives_in_empty_component() {
        let f = SubsetFunction::from_fn(vec![0, 1], vec![2, 3], |_| 4.0).unwrap();
        let d = hoeffding_decompose(&f, &[pm1(), vec![0.2, 0.3, 0.5]]).unwrap();
        assert!(d.variance() < 1e-15);
        assert!(d.component(&[]).unwrap().iter().all(|&x| (x - 4.0).abs() < 1e-15));
    }

    #[test]
    fn independent_singletons_give_equality() {
        let fs = vec![
            SubsetFunction::from_fn(vec![0], vec![2], |i| val(i[0])).unwrap(),
            SubsetFunction::from_fn(vec![1], vec![2], |i| 3.0 * val(i[0])).unwrap(),
        ];
        let r = variance_drop_check(&fs, &[0.3, 0.7], &[pm1(), pm1()]).unwrap();
        assert!(r.gap.abs() < 1e-14);
        assert!(r.verdict.passed());
    }

    #[test]
    fn pair_products_drop_strictly() {
        let fs: Vec<SubsetFunction> = subsets(3, 2)
            .into_iter()
            .map(|s| SubsetFunction::from_fn(s, vec![2, 2], |i| val(i[0]) * val(i[1])).unwrap())
            .collect();
        let r = variance_drop_check(&fs, &[1.0 / 3.0; 3], &[pm1(), pm1(), pm1()]).unwrap();
        assert!((r.lhs[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.rhs[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(!r.all_decomposable && !r.equality_predicted);
    }

    #[test]
    fn misaligned_additive_functions_drop_strictly() {
        // Additive but with w_s g_{s,{i}} differing across subsets.
        let fs: Vec<SubsetFunction> = subsets(3, 2)
            .into_iter()
            .enumerate()
            .map(|(k, s)| {
                SubsetFunction::from_fn(s, vec![2, 2], move |i| (k as f64 + 1.0) * val(i[0]) - val(i[1])).unwrap()
            })
            .collect();
        let r = variance_drop_check(&fs, &[1.0 / 3.0; 3], &[pm1(), pm1(), pm1()]).unwrap();
        assert!(r.all_decomposable);
        assert!(!r.equality_predicted);
        assert!(r.gap > 0.1);
    }

    #[test]
    fn loewner_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert!(loewner_ge(&i, &DMatrix::zeros(2, 2), 0.0).unwrap());
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0]));
        assert!(!loewner_ge(&a, &b, 1e-12).unwrap());
        assert!(loewner_ge(&(&i * 2.0), &i, 0.0).unwrap());
        assert!(matches!(loewner_ge(&i, &DMatrix::zeros(3, 3), 0.0), Err(Error::Shape(_))));
    }
}
