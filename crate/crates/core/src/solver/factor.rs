//! One-time factorizations of the DCA linear system and the kernel
//! representations they act on.

use std::cell::Cell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::{input, Error, Result};
use crate::kernel_approx::{GramMatrix, LowRankFactor};

thread_local! {
    static FACTORIZATIONS: Cell<usize> = const { Cell::new(0) };
}

/// Number of solve factorizations formed on the current thread so far.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.with(Cell::get)
}

fn count_factorization() {
    FACTORIZATIONS.with(|c| c.set(c.get() + 1));
}

/// How the kernel matrix enters the objective: the exact Gram matrix, a
/// low-rank `P P^T` with coefficients on all samples, or `P P^T` with
/// coefficients restricted to the pivot set.
#[derive(Debug, Clone, Copy)]
pub enum Representation<'a> {
    Dense(&'a DMatrix<f64>),
    LowRank(&'a DMatrix<f64>),
    Pivoted {
        p: &'a DMatrix<f64>,
        pivots: &'a [usize],
    },
}

impl<'a> Representation<'a> {
    pub fn full(k: &'a GramMatrix) -> Self {
        Representation::Dense(k.values())
    }

    pub fn low_rank(f: &'a LowRankFactor) -> Self {
        Representation::LowRank(f.p())
    }

    pub fn sparse(f: &'a LowRankFactor) -> Self {
        Representation::Pivoted {
            p: f.p(),
            pivots: f.pivots(),
        }
    }

    /// Number of training samples.
    pub fn samples(&self) -> usize {
        match self {
            Representation::Dense(k) => k.nrows(),
            Representation::LowRank(p) | Representation::Pivoted { p, .. } => p.nrows(),
        }
    }

    /// Length of the coefficient vector.
    pub fn coefficients(&self) -> usize {
        match self {
            Representation::Pivoted { pivots, .. } => pivots.len(),
            _ => self.samples(),
        }
    }

    /// Fitted values `xi = K alpha` on the training samples.
    pub fn fitted(&self, alpha: &DVector<f64>) -> DVector<f64> {
        match self {
            Representation::Dense(k) => *k * alpha,
            Representation::LowRank(p) => *p * (p.tr_mul(alpha)),
            Representation::Pivoted { p, pivots } => {
                let mut t = DVector::zeros(p.ncols());
                for (&b, &a) in pivots.iter().zip(alpha.iter()) {
                    t += p.row(b).transpose() * a;
                }
                *p * t
            }
        }
    }

    /// Coefficients scattered into a length-`m` vector (zeros off the pivots).
    pub fn embed(&self, alpha: &DVector<f64>) -> DVector<f64> {
        match self {
            Representation::Pivoted { p, pivots } => {
                let mut full = DVector::zeros(p.nrows());
                for (&b, &a) in pivots.iter().zip(alpha.iter()) {
                    full[b] = a;
                }
                full
            }
            _ => alpha.clone(),
        }
    }

    /// `K w` for a length-`m` vector `w`.
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        match self {
            Representation::Dense(k) => *k * w,
            Representation::LowRank(p) | Representation::Pivoted { p, .. } => *p * (p.tr_mul(w)),
        }
    }

    pub(crate) fn check(&self, alpha: &DVector<f64>) -> Result<()> {
        if alpha.len() != self.coefficients() {
            return input(format!(
                "coefficient vector has length {}, representation expects {}",
                alpha.len(),
                self.coefficients()
            ));
        }
        Ok(())
    }
}

enum FactorKind {
    Full {
        k: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    Smw {
        p: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
    Sparse {
        p: DMatrix<f64>,
        pivots: Vec<usize>,
        lu: LU<f64, Dyn, Dyn>,
    },
}

/// Factorized solver for `((lambda m / A) I + K) alpha = rhs` (or its low-rank
/// analogs), formed once per training run.
pub struct SolveFactor {
    kind: FactorKind,
    lambda: f64,
    lsdc_constant: f64,
    ridge: f64,
}

impl std::fmt::Debug for SolveFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolveFactor")
            .field("variant", &self.variant())
            .field("samples", &self.samples())
            .field("lambda", &self.lambda)
            .field("lsdc_constant", &self.lsdc_constant)
            .finish()
    }
}

fn ridge_of(lambda: f64, m: usize, a: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return input(format!("lambda must be positive, got {lambda}"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return input(format!("LS-DC constant must be positive, got {a}"));
    }
    if m == 0 {
        return input("no samples");
    }
    Ok(lambda * m as f64 / a)
}

fn check_factor(factor: &LowRankFactor, m: usize) -> Result<()> {
    if factor.rank() == 0 {
        return input("low-rank factor has no columns");
    }
    if factor.rows() != m {
        return input(format!(
            "low-rank factor has {} rows but m = {m}",
            factor.rows()
        ));
    }
    Ok(())
}

/// Cholesky factor of `(lambda m / A) I + K`.
pub fn prepare_full(k: GramMatrix, lambda: f64, m: usize, a: f64) -> Result<SolveFactor> {
    if k.len() != m {
        return input(format!("Gram matrix is {}x{0} but m = {m}", k.len()));
    }
    let ridge = ridge_of(lambda, m, a)?;
    let k = k.values().clone();
    let mut shifted = k.clone();
    for i in 0..m {
        shifted[(i, i)] += ridge;
    }
    let chol = Cholesky::new(shifted).ok_or_else(|| {
        Error::Numeric("(lambda m / A) I + K is not numerically positive definite".into())
    })?;
    count_factorization();
    Ok(SolveFactor {
        kind: FactorKind::Full { k, chol },
        lambda,
        lsdc_constant: a,
        ridge,
    })
}

/// Sherman-Morrison-Woodbury form: Cholesky of the `r x r` matrix
/// `(lambda m / A) I + P^T P`, applied as
/// `alpha = (A / lambda m) (rhs - P Qhat P^T rhs)`.
pub fn prepare_smw(factor: &LowRankFactor, lambda: f64, m: usize, a: f64) -> Result<SolveFactor> {
    check_factor(factor, m)?;
    let ridge = ridge_of(lambda, m, a)?;
    let p_b = factor.p_b();
    if (0..p_b.nrows()).any(|i| !(p_b[(i, i)] > 0.0)) {
        return Err(Error::Numeric(
            "pivot block P_B must have a positive diagonal".into(),
        ));
    }
    let p = factor.p().clone();
    let mut inner = p.tr_mul(&p);
    for i in 0..inner.nrows() {
        inner[(i, i)] += ridge;
    }
    let chol = Cholesky::new(inner).ok_or_else(|| {
        Error::Numeric("(lambda m / A) I + P^T P is not numerically positive definite".into())
    })?;
    count_factorization();
    Ok(SolveFactor {
        kind: FactorKind::Smw { p, chol },
        lambda,
        lsdc_constant: a,
        ridge,
    })
}

/// Sparse form: LU of `((lambda m / A) I + P^T P) P_B^T`, giving coefficients
/// on the pivot samples only.
pub fn prepare_sparse(
    factor: &LowRankFactor,
    lambda: f64,
    m: usize,
    a: f64,
) -> Result<SolveFactor> {
    check_factor(factor, m)?;
    let ridge = ridge_of(lambda, m, a)?;
    let p_b = factor.p_b();
    if (0..p_b.nrows()).any(|i| !(p_b[(i, i)] > 0.0)) {
        return Err(Error::Numeric(
            "pivot block P_B must have a positive diagonal".into(),
        ));
    }
    let p = factor.p().clone();
    let mut inner = p.tr_mul(&p);
    for i in 0..inner.nrows() {
        inner[(i, i)] += ridge;
    }
    let system = &inner * p_b.transpose();
    let mut lu = LU::new(system.clone());
    if !lu.is_invertible() {
        let bump = 1e-12 * system.trace().abs().max(f64::MIN_POSITIVE);
        let mut retry = system;
        for i in 0..retry.nrows() {
            retry[(i, i)] += bump;
        }
        lu = LU::new(retry);
        if !lu.is_invertible() {
            return Err(Error::Numeric(
                "pivot block P_B is singular; raise the approximation tolerance or lower the rank"
                    .into(),
            ));
        }
    }
    count_factorization();
    Ok(SolveFactor {
        kind: FactorKind::Sparse {
            p,
            pivots: factor.pivots().to_vec(),
            lu,
        },
        lambda,
        lsdc_constant: a,
        ridge,
    })
}

impl SolveFactor {
    pub fn variant(&self) -> &'static str {
        match self.kind {
            FactorKind::Full { .. } => "full",
            FactorKind::Smw { .. } => "smw",
            FactorKind::Sparse { .. } => "sparse",
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lsdc_constant(&self) -> f64 {
        self.lsdc_constant
    }

    /// `lambda m / A`.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn samples(&self) -> usize {
        self.representation().samples()
    }

    /// Rank of the low-rank factor, `None` for the dense variant.
    pub fn rank(&self) -> Option<usize> {
        match &self.kind {
            FactorKind::Full { .. } => None,
            FactorKind::Smw { p, .. } | FactorKind::Sparse { p, .. } => Some(p.ncols()),
        }
    }

    pub fn pivots(&self) -> Option<&[usize]> {
        match &self.kind {
            FactorKind::Sparse { pivots, .. } => Some(pivots),
            _ => None,
        }
    }

    pub fn representation(&self) -> Representation<'_> {
        match &self.kind {
            FactorKind::Full { k, .. } => Representation::Dense(k),
            FactorKind::Smw { p, .. } => Representation::LowRank(p),
            FactorKind::Sparse { p, pivots, .. } => Representation::Pivoted { p, pivots },
        }
    }

    /// Coefficients solving the system for a length-`m` right-hand side.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        if rhs.len() != self.samples() {
            return input(format!(
                "right-hand side has length {}, expected {}",
                rhs.len(),
                self.samples()
            ));
        }
        Ok(match &self.kind {
            FactorKind::Full { chol, .. } => chol.solve(rhs),
            FactorKind::Smw { p, chol } => {
                let inner = chol.solve(&p.tr_mul(rhs));
                (rhs - p * inner) / self.ridge
            }
            FactorKind::Sparse { p, lu, .. } => lu
                .solve(&p.tr_mul(rhs))
                .ok_or_else(|| Error::Numeric("singular sparse system".into()))?,
        })
    }
}
