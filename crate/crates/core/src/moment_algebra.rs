//! Exact expectations of polynomials in iid coordinates.
//!
//! A [`SymPoly`] is a polynomial with rational coefficients in `x_1..x_n`.
//! Under iid sampling every monomial `Π x_i^{a_i}` has expectation
//! `Π μ_{a_i}`, so expectations reduce to raw-moment lookups.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dist::MomentTable;
use crate::error::{Error, Result};

/// Relative eigenvalue cutoff for the Gram pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPoly {
    n_vars: usize,
    /// Exponent vector (length `n_vars`) to nonzero coefficient.
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl SymPoly {
    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, BigRational::one())
    }

    /// The coordinate `x_{i+1}` (zero-based `i`).
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index out of range");
        let mut e = vec![0; n_vars];
        e[i] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, BigRational::one());
        p
    }

    /// Sample mean `x̄`.
    pub fn mean(n_vars: usize) -> Self {
        let w = BigRational::new(BigInt::one(), BigInt::from(n_vars));
        (0..n_vars).fold(Self::zero(n_vars), |acc, i| &acc + &Self::var(n_vars, i).scale(&w))
    }

    /// Residual `x_{i+1} - x̄`.
    pub fn residual(n_vars: usize, i: usize) -> Self {
        &Self::var(n_vars, i) - &Self::mean(n_vars)
    }

    /// Sample central moment `m_j = (1/n) Σ (x_i - x̄)^j`.
    pub fn central_moment(n_vars: usize, j: u32) -> Self {
        let w = BigRational::new(BigInt::one(), BigInt::from(n_vars));
        (0..n_vars)
            .fold(Self::zero(n_vars), |acc, i| &acc + &Self::residual(n_vars, i).pow(j))
            .scale(&w)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        Self {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.n_vars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest exponent of any single variable.
    pub fn max_var_degree(&self) -> u32 {
        self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0)
    }

    /// Relabels variables: `x_i` becomes `x_{perm[i]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n_vars);
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            let mut f = vec![0; self.n_vars];
            for (i, &a) in e.iter().enumerate() {
                f[perm[i]] = a;
            }
            out.add_term(f, c.clone());
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_vars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(&a, &v)| v.powi(a as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    fn check_vars(&self, other: &Self) {
        assert_eq!(self.n_vars, other.n_vars, "polynomials over different variable sets");
    }
}

impl Add for &SymPoly {
    type Output = SymPoly;
    fn add(self, rhs: &SymPoly) -> SymPoly {
        self.check_vars(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &SymPoly {
    type Output = SymPoly;
    fn sub(self, rhs: &SymPoly) -> SymPoly {
        self + &(-rhs)
    }
}

impl Neg for &SymPoly {
    type Output = SymPoly;
    fn neg(self) -> SymPoly {
        SymPoly {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &SymPoly {
    type Output = SymPoly;
    // Monomials multiply by adding exponents.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &SymPoly) -> SymPoly {
        self.check_vars(rhs);
        let mut out = SymPoly::zero(self.n_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// Canonical dump: terms in decreasing exponent-vector order.
impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            write!(f, "{}", c.abs())?;
            for (i, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, a)?,
                }
            }
        }
        Ok(())
    }
}

/// `E p(X_1..X_n)` for iid `X_i` with the given raw moments.
pub fn expect_iid_exact(p: &SymPoly, moments: &MomentTable) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for (e, c) in &p.terms {
        let mut term = c.clone();
        for &a in e {
            if a > 0 {
                term *= moments.exact(a as usize)?;
            }
        }
        total += term;
    }
    Ok(total)
}

pub fn expect_iid(p: &SymPoly, moments: &MomentTable) -> Result<f64> {
    Ok(expect_iid_exact(p, moments)?.to_f64().unwrap_or(f64::NAN))
}

/// Exponent vectors over the free residuals `r_1..r_{n-1}` of total degree
/// at most `k`, ordered by degree and then lexicographically (descending).
pub fn residual_exponents(n: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(slots: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(slots - 1, left - a, prefix, out);
            prefix.pop();
        }
    }
    let free = n.saturating_sub(1);
    let mut out = Vec::new();
    for d in 0..=k {
        rec(free, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Spanning set of polynomials of degree `≤ k` in the residuals; the first
/// element is the constant.
pub fn residual_basis(n: usize, k: u32) -> Vec<SymPoly> {
    assert!(n >= 2, "residual basis needs n >= 2");
    let residuals: Vec<SymPoly> = (0..n - 1).map(|i| SymPoly::residual(n, i)).collect();
    residual_exponents(n, k)
        .into_iter()
        .map(|e| {
            e.iter()
                .enumerate()
                .fold(SymPoly::one(n), |acc, (i, &a)| &acc * &residuals[i].pow(a))
        })
        .collect()
}

/// `{1, m_2, ..., m_k}`.
pub fn central_moment_basis(n: usize, k: u32) -> Vec<SymPoly> {
    let mut out = vec![SymPoly::one(n)];
    out.extend((2..=k).map(|j| SymPoly::central_moment(n, j)));
    out
}

/// Normal equations for projecting `target` on `span(basis)` in `L²`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub basis: Vec<SymPoly>,
    pub gram: Vec<Vec<BigRational>>,
    pub rhs: Vec<BigRational>,
    /// `E target²`.
    pub target_norm: BigRational,
    pub effective_rank: usize,
    pub min_eigenvalue: f64,
}

/// Least-squares solution of a [`GramSystem`].
#[derive(Debug, Clone)]
pub struct GramSolution {
    pub coefficients: Vec<f64>,
    /// `E (projection)²` = `rhsᵀ c`.
    pub projection_norm: f64,
    pub effective_rank: usize,
    /// `‖G c - rhs‖ / ‖rhs‖` (0 when `rhs = 0`).
    pub relative_residual: f64,
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn build_gram(basis: &[SymPoly], target: &SymPoly, moments: &MomentTable) -> Result<GramSystem> {
    let m = basis.len();
    if basis.iter().any(|q| q.n_vars() != target.n_vars()) {
        return Err(Error::Shape("basis and target use different variables".into()));
    }
    let mut gram = vec![vec![BigRational::zero(); m]; m];
    for a in 0..m {
        for b in a..m {
            let v = expect_iid_exact(&(&basis[a] * &basis[b]), moments)?;
            gram[a][b] = v.clone();
            gram[b][a] = v;
        }
    }
    let rhs = basis
        .iter()
        .map(|q| expect_iid_exact(&(target * q), moments))
        .collect::<Result<Vec<_>>>()?;
    let target_norm = expect_iid_exact(&(target * target), moments)?;
    let (scaled, _) = scaled_gram(&gram);
    let (rank, min_eig) = match &scaled {
        Some(s) => {
            let eig = SymmetricEigen::new(s.clone());
            let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let rank = eig.eigenvalues.iter().filter(|&&l| l > PINV_CUTOFF * max).count();
            (rank, min)
        }
        None => (0, 0.0),
    };
    Ok(GramSystem {
        basis: basis.to_vec(),
        gram,
        rhs,
        target_norm,
        effective_rank: rank,
        min_eigenvalue: min_eig,
    })
}

/// Unit-diagonal rescaling `D G D` with `D = diag(G_ii^{-1/2})`; zero diagonal
/// entries get `D_ii = 0`.
fn scaled_gram(gram: &[Vec<BigRational>]) -> (Option<DMatrix<f64>>, Vec<f64>) {
    let m = gram.len();
    if m == 0 {
        return (None, Vec::new());
    }
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let g = to_f64(&gram[i][i]);
            if g > 0.0 {
                1.0 / g.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let s = DMatrix::from_fn(m, m, |i, j| to_f64(&gram[i][j]) * d[i] * d[j]);
    (Some(s), d)
}

impl GramSystem {
    pub fn gram_f64(&self) -> DMatrix<f64> {
        let m = self.gram.len();
        DMatrix::from_fn(m, m, |i, j| to_f64(&self.gram[i][j]))
    }

    pub fn rhs_f64(&self) -> DVector<f64> {
        DVector::from_iterator(self.rhs.len(), self.rhs.iter().map(to_f64))
    }

    /// Pseudo-inverse solve with relative cutoff [`PINV_CUTOFF`].
    pub fn solve(&self) -> GramSolution {
        let m = self.gram.len();
        let (scaled, d) = scaled_gram(&self.gram);
        let Some(s) = scaled else {
            return GramSolution {
                coefficients: Vec::new(),
                projection_norm: 0.0,
                effective_rank: 0,
                relative_residual: 0.0,
            };
        };
        let eig = SymmetricEigen::new(s);
        let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let b = DVector::from_iterator(m, (0..m).map(|i| to_f64(&self.rhs[i]) * d[i]));
        let mut y = DVector::zeros(m);
        let mut rank = 0;
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l > PINV_CUTOFF * max {
                rank += 1;
                let v = eig.eigenvectors.column(k);
                y += v * (v.dot(&b) / l);
            }
        }
        let c: Vec<f64> = (0..m).map(|i| y[i] * d[i]).collect();
        let rhs = self.rhs_f64();
        let cv = DVector::from_vec(c.clone());
        let resid = self.gram_f64() * &cv - &rhs;
        let rn = rhs.norm();
        GramSolution {
            projection_norm: rhs.dot(&cv),
            coefficients: c,
            effective_rank: rank,
            relative_residual: if rn > 0.0 { resid.norm() / rn } else { resid.norm() },
        }
    }
}
