//! Kernel evaluation, Gram assembly and greedy pivoted-Cholesky low-rank
//! approximation of the Gram matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::SparseVector;
use crate::error::{input, Error, Result};

/// Default upper bound on the sample count for which a dense Gram matrix is built.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Residual diagonals below this (relative to the largest kernel diagonal) end
/// the factorization: the remaining columns are numerically dependent.
const PIVOT_FLOOR: f64 = 1e-12;
/// Negative residual diagonals above this are rounding noise and clamped to 0.
const CLAMP_FLOOR: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `exp(-gamma ||x - z||^2)`
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return input(format!("kernel gamma must be positive and finite, got {gamma}"));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            gamma,
        })
    }

    /// `kappa(x, z)`. Sparse vectors are aligned by feature index.
    #[inline]
    pub fn eval(&self, x: &SparseVector, z: &SparseVector) -> f64 {
        match self.kind {
            KernelKind::Gaussian => (-self.gamma * x.squared_distance(z)).exp(),
        }
    }

    /// `kappa(x, z)` on dense coordinates of equal length.
    pub fn eval_dense(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return input(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                z.len()
            ));
        }
        let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(match self.kind {
            KernelKind::Gaussian => (-self.gamma * d2).exp(),
        })
    }
}

/// Dense symmetric Gram matrix `K[i][j] = kappa(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps a matrix, checking it is square and exactly symmetric.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return input("Gram matrix must be square and nonempty");
        }
        let m = values.nrows();
        for j in 0..m {
            for i in 0..j {
                if values[(i, j)] != values[(j, i)] {
                    return input("Gram matrix is not symmetric");
                }
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Assembles the full Gram matrix from its upper triangle.
pub fn gram_full(spec: &KernelSpec, samples: &[SparseVector], cap: usize) -> Result<GramMatrix> {
    let m = samples.len();
    if m == 0 {
        return input("Gram matrix needs at least one sample");
    }
    if m > cap {
        return Err(Error::Capacity { m, cap });
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| spec.eval(&samples[i], &samples[j])).collect())
        .collect();
    let mut values = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &k) in row.iter().enumerate() {
            values[(i, i + offset)] = k;
            values[(i + offset, i)] = k;
        }
    }
    Ok(GramMatrix { values })
}

/// `|queries| x |support|` matrix of kernel values.
pub fn gram_cross(
    spec: &KernelSpec,
    support: &[SparseVector],
    queries: &[SparseVector],
) -> Result<DMatrix<f64>> {
    if support.is_empty() || queries.is_empty() {
        return input("cross-kernel needs nonempty support and query lists");
    }
    let rows: Vec<Vec<f64>> = queries
        .par_iter()
        .map(|q| support.iter().map(|s| spec.eval(s, q)).collect())
        .collect();
    Ok(DMatrix::from_fn(queries.len(), support.len(), |i, j| rows[i][j]))
}

/// Low-rank factor `P` (m x r) with pivot set `B` such that `P P^T ~ K` and the
/// pivot rows `K_B = P_B P^T` are reproduced exactly.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    p: DMatrix<f64>,
    pivots: Vec<usize>,
    trace_residual: f64,
    trace_history: Vec<f64>,
}

impl LowRankFactor {
    /// Builds a factor from an explicit matrix and pivot list (no trace information).
    pub fn from_parts(p: DMatrix<f64>, pivots: Vec<usize>) -> Result<Self> {
        let r = p.ncols();
        if r == 0 || pivots.len() != r || r > p.nrows() {
            return input("low-rank factor needs 1 <= r <= m columns and one pivot per column");
        }
        if pivots.iter().any(|&b| b >= p.nrows()) {
            return input("pivot index out of range");
        }
        Ok(Self {
            p,
            pivots,
            trace_residual: f64::NAN,
            trace_history: Vec::new(),
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    pub fn rows(&self) -> usize {
        self.p.nrows()
    }

    /// `trace(K - P P^T)` after the last pivot.
    pub fn trace_residual(&self) -> f64 {
        self.trace_residual
    }

    /// Trace residual before any pivot, then after each one.
    pub fn trace_history(&self) -> &[f64] {
        &self.trace_history
    }

    /// The `r x r` block of pivot rows.
    pub fn p_b(&self) -> DMatrix<f64> {
        self.p.select_rows(self.pivots.iter())
    }
}

/// Greedy pivoted Cholesky: at each step the sample with the largest residual
/// diagonal (lowest index on ties) becomes a pivot. Stops once
/// `trace(K - P P^T) < trace_tol * m`, after `rank_budget` pivots, or when no
/// residual diagonal is left above round-off. Only the `r` pivot columns of
/// `K` are ever evaluated.
pub fn pivoted_cholesky(
    spec: &KernelSpec,
    samples: &[SparseVector],
    rank_budget: usize,
    trace_tol: f64,
) -> Result<LowRankFactor> {
    let m = samples.len();
    if m == 0 {
        return input("pivoted Cholesky needs at least one sample");
    }
    if rank_budget == 0 {
        return input("rank budget must be at least 1");
    }
    if !(trace_tol >= 0.0) {
        return input(format!("trace tolerance must be nonnegative, got {trace_tol}"));
    }
    let budget = rank_budget.min(m);
    let mut diag: Vec<f64> = samples.iter().map(|x| spec.eval(x, x)).collect();
    let floor = PIVOT_FLOOR * diag.iter().cloned().fold(0.0, f64::max);
    let mut trace: f64 = diag.iter().sum();
    let mut history = vec![trace];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(budget);
    let mut pivots = Vec::with_capacity(budget);

    while cols.len() < budget && !(trace < trace_tol * m as f64) {
        let (j, dj) = diag
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        if dj <= floor {
            break;
        }
        let pivot = &samples[j];
        let root = dj.sqrt();
        let mut col: Vec<f64> = samples.par_iter().map(|x| spec.eval(x, pivot)).collect();
        col.par_chunks_mut(4096).enumerate().for_each(|(chunk, out)| {
            let start = chunk * 4096;
            let end = start + out.len();
            for prev in &cols {
                let lj = prev[j];
                for (c, &l) in out.iter_mut().zip(&prev[start..end]) {
                    *c -= l * lj;
                }
            }
            for c in out.iter_mut() {
                *c /= root;
            }
        });
        for (i, (d, &c)) in diag.iter_mut().zip(&col).enumerate() {
            *d -= c * c;
            if *d < 0.0 {
                if *d < CLAMP_FLOOR {
                    return Err(Error::Numeric(format!(
                        "pivoted Cholesky breakdown: residual diagonal {d:e} at sample {i} after {} pivots",
                        cols.len() + 1
                    )));
                }
                *d = 0.0;
            }
        }
        diag[j] = 0.0;
        trace = diag.iter().sum();
        history.push(trace);
        cols.push(col);
        pivots.push(j);
    }

    if cols.is_empty() {
        return Err(Error::Numeric(
            "pivoted Cholesky selected no pivot: the kernel diagonal is zero".into(),
        ));
    }
    let r = cols.len();
    let p = DMatrix::from_fn(m, r, |i, k| cols[k][i]);
    Ok(LowRankFactor {
        p,
        pivots,
        trace_residual: trace,
        trace_history: history,
    })
}
