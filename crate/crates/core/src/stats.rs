//! Replicate bookkeeping for Monte Carlo work: order-stable reductions and
//! delete-one-block jackknife standard errors for smooth functions of the
//! column covariance matrix.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::SeededStream;

/// Number of jackknife blocks used for every Monte Carlo standard error.
pub const JACKKNIFE_BLOCKS: usize = 100;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Pairwise summation in a fixed binary-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Row-major table of per-replicate outputs.
#[derive(Debug, Clone)]
pub struct Replicates {
    columns: usize,
    data: Vec<f64>,
}

impl Replicates {
    pub fn from_rows(columns: usize, rows: Vec<Vec<f64>>) -> Self {
        let mut data = Vec::with_capacity(rows.len() * columns);
        for row in rows {
            assert_eq!(row.len(), columns, "ragged replicate row");
            data.extend(row);
        }
        Self { columns, data }
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.columns).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.columns).copied().collect()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.columns..(r + 1) * self.columns]
    }

    /// Column statistics over all replicates.
    pub fn stats(&self) -> ColumnStats {
        let blocks = self.block_sums(self.len().clamp(1, JACKKNIFE_BLOCKS));
        ColumnStats::total(&blocks, self.columns)
    }

    fn block_sums(&self, blocks: usize) -> Vec<BlockSums> {
        let n = self.len();
        let shift: Vec<f64> = (0..self.columns).map(|c| pairwise_sum(&self.column(c)) / n as f64).collect();
        (0..blocks)
            .map(|b| {
                let lo = b * n / blocks;
                let hi = (b + 1) * n / blocks;
                let k = self.columns;
                let mut sum = vec![0.0; k];
                let mut cross = vec![0.0; k * k];
                let mut col_buf: Vec<f64> = Vec::with_capacity(hi - lo);
                for i in 0..k {
                    col_buf.clear();
                    col_buf.extend((lo..hi).map(|r| self.data[r * k + i] - shift[i]));
                    sum[i] = pairwise_sum(&col_buf);
                    for j in i..k {
                        let prod: Vec<f64> = (lo..hi)
                            .map(|r| (self.data[r * k + i] - shift[i]) * (self.data[r * k + j] - shift[j]))
                            .collect();
                        let s = pairwise_sum(&prod);
                        cross[i * k + j] = s;
                        cross[j * k + i] = s;
                    }
                }
                BlockSums {
                    count: (hi - lo) as f64,
                    sum,
                    cross,
                    shift: shift.clone(),
                }
            })
            .collect()
    }

    /// Delete-one-block jackknife of `statistic`, evaluated on column statistics.
    pub fn jackknife<F>(&self, statistic: F) -> JackknifeEstimate
    where
        F: Fn(&ColumnStats) -> f64,
    {
        let n = self.len();
        let blocks = n.clamp(1, JACKKNIFE_BLOCKS);
        let sums = self.block_sums(blocks);
        let full = ColumnStats::total(&sums, self.columns);
        let value = statistic(&full);
        if blocks < 2 {
            return JackknifeEstimate::exact(value);
        }
        let leave_out: Vec<f64> = (0..blocks)
            .map(|b| statistic(&full.without(&sums[b])))
            .collect();
        let mean = pairwise_sum(&leave_out) / blocks as f64;
        let dev: Vec<f64> = leave_out.iter().map(|v| (v - mean) * (v - mean)).collect();
        let b = blocks as f64;
        let stderr = ((b - 1.0) / b * pairwise_sum(&dev)).sqrt();
        JackknifeEstimate {
            value,
            stderr,
            ci_low: value - Z_95 * stderr,
            ci_high: value + Z_95 * stderr,
        }
    }
}

#[derive(Debug, Clone)]
struct BlockSums {
    count: f64,
    sum: Vec<f64>,
    cross: Vec<f64>,
    shift: Vec<f64>,
}

/// Sufficient statistics (count, first and second moments) of replicate columns.
#[derive(Debug, Clone)]
pub struct ColumnStats {
    count: f64,
    columns: usize,
    sum: Vec<f64>,
    cross: Vec<f64>,
    shift: Vec<f64>,
}

impl ColumnStats {
    fn total(blocks: &[BlockSums], columns: usize) -> Self {
        let count = blocks.iter().map(|b| b.count).sum();
        let sum = (0..columns)
            .map(|i| pairwise_sum(&blocks.iter().map(|b| b.sum[i]).collect::<Vec<_>>()))
            .collect();
        let cross = (0..columns * columns)
            .map(|i| pairwise_sum(&blocks.iter().map(|b| b.cross[i]).collect::<Vec<_>>()))
            .collect();
        let shift = blocks.first().map(|b| b.shift.clone()).unwrap_or_else(|| vec![0.0; columns]);
        Self {
            count,
            columns,
            sum,
            cross,
            shift,
        }
    }

    fn without(&self, block: &BlockSums) -> Self {
        Self {
            count: self.count - block.count,
            columns: self.columns,
            sum: self.sum.iter().zip(&block.sum).map(|(a, b)| a - b).collect(),
            cross: self.cross.iter().zip(&block.cross).map(|(a, b)| a - b).collect(),
            shift: self.shift.clone(),
        }
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.shift[c] + self.sum[c] / self.count
    }

    /// Unbiased covariance of columns `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let n = self.count;
        (self.cross[i * self.columns + j] - self.sum[i] * self.sum[j] / n) / (n - 1.0)
    }

    pub fn variance(&self, c: usize) -> f64 {
        self.covariance(c, c)
    }

    /// Second raw moment about zero.
    pub fn second_moment(&self, c: usize) -> f64 {
        let n = self.count;
        let m = self.mean(c);
        self.variance(c) * (n - 1.0) / n + m * m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JackknifeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl JackknifeEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
        }
    }
}

/// Runs `reps` independent replicates in parallel. Replicate `r` receives the
/// generator `stream.replicate(r)`; rows come back in replicate order, so any
/// reduction over them is independent of the worker count.
pub fn run_replicates<F>(reps: usize, stream: &SeededStream, columns: usize, f: F) -> Result<Replicates>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    let rows: Result<Vec<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.replicate(r as u64);
            f(&mut rng)
        })
        .collect();
    Ok(Replicates::from_rows(columns, rows?))
}
