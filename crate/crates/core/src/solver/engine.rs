//! The DCA iteration.
//!
//! With `v = -y . psi'(1 - y . xi)` (classification) or `v = -psi'(y - xi)`
//! (regression), each step solves
//!
//! ```text
//! ((lambda m / A) I + K) alpha' = xi - v / (2A),    xi' = K alpha'
//! ```
//!
//! which exactly minimizes the convex majorizer of
//! `F(alpha) = lambda alpha^T K alpha + (1/m) sum psi(r_i)` built at the current
//! iterate. The first step uses `xi = y`, `v = 0`, i.e. the ridged LSSVM solve.

use nalgebra::DVector;

use crate::error::{input, Error, Result};
use crate::losses::LossSpec;

use super::factor::{Representation, SolveFactor};

/// One DCA iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DcState {
    /// Coefficients (length `m`, or `r` for the sparse representation).
    /// Empty before the first step.
    pub alpha: DVector<f64>,
    /// Fitted values `K alpha` on the training samples (`y` before the first step).
    pub xi: DVector<f64>,
    /// Working vector that produced `alpha`.
    pub v: DVector<f64>,
    /// Number of linear solves performed.
    pub iter: usize,
    /// `F(alpha)` after every step.
    pub objective_trace: Vec<f64>,
}

impl DcState {
    /// Warm start `xi = y`, `v = 0`.
    pub fn initial(y: &[f64]) -> Self {
        Self {
            alpha: DVector::zeros(0),
            xi: DVector::from_column_slice(y),
            v: DVector::zeros(y.len()),
            iter: 0,
            objective_trace: Vec::new(),
        }
    }

    pub fn objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

fn check_inputs(factor: &SolveFactor, loss: &LossSpec, y: &[f64]) -> Result<()> {
    if y.len() != factor.samples() {
        return input(format!(
            "{} labels for a factor over {} samples",
            y.len(),
            factor.samples()
        ));
    }
    if loss.lsdc_constant() != factor.lsdc_constant() {
        return input(format!(
            "loss constant A = {} differs from the factor's A = {}",
            loss.lsdc_constant(),
            factor.lsdc_constant()
        ));
    }
    Ok(())
}

/// Working vector at the state's fitted values (`0` before the first step).
pub fn working_vector(state: &DcState, loss: &LossSpec, y: &[f64]) -> DVector<f64> {
    let mut v = DVector::zeros(y.len());
    if state.iter > 0 {
        loss.working_vector_into(y, state.xi.as_slice(), v.as_mut_slice());
    }
    v
}

/// One DCA step from `state`.
pub fn dca_step(
    factor: &SolveFactor,
    state: &DcState,
    loss: &LossSpec,
    y: &[f64],
) -> Result<DcState> {
    check_inputs(factor, loss, y)?;
    let v = working_vector(state, loss, y);
    advance(factor, state, v, loss, y)
}

/// Solves for the next iterate using a precomputed working vector.
pub(crate) fn advance(
    factor: &SolveFactor,
    state: &DcState,
    v: DVector<f64>,
    loss: &LossSpec,
    y: &[f64],
) -> Result<DcState> {
    let iter = state.iter + 1;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite working vector at iteration {iter}"
        )));
    }
    let rhs = &state.xi - &v * (0.5 / loss.lsdc_constant());
    let alpha = factor.solve(&rhs)?;
    if alpha.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite coefficients at iteration {iter}"
        )));
    }
    let rep = factor.representation();
    let xi = rep.fitted(&alpha);
    let objective = objective_at(&rep, &alpha, &xi, loss, factor.lambda(), y);
    let mut objective_trace = state.objective_trace.clone();
    objective_trace.push(objective);
    Ok(DcState {
        alpha,
        xi,
        v,
        iter,
        objective_trace,
    })
}

fn objective_at(
    rep: &Representation<'_>,
    alpha: &DVector<f64>,
    xi: &DVector<f64>,
    loss: &LossSpec,
    lambda: f64,
    y: &[f64],
) -> f64 {
    let quad = match rep {
        Representation::Pivoted { pivots, .. } => {
            pivots.iter().zip(alpha.iter()).map(|(&b, &a)| a * xi[b]).sum::<f64>()
        }
        _ => alpha.dot(xi),
    };
    lambda * quad + loss.mean_loss(y, xi.as_slice())
}

/// `F(alpha) = lambda alpha^T K alpha + (1/m) sum psi(r_i)` under `rep`.
pub fn objective(
    rep: &Representation<'_>,
    alpha: &DVector<f64>,
    loss: &LossSpec,
    lambda: f64,
    y: &[f64],
) -> Result<f64> {
    rep.check(alpha)?;
    if y.len() != rep.samples() {
        return input("label count does not match the representation");
    }
    let xi = rep.fitted(alpha);
    Ok(objective_at(rep, alpha, &xi, loss, lambda, y))
}

/// Gradient of `F` with respect to the embedded length-`m` coefficient
/// vector: `K (2 lambda alpha + v / m)`.
pub fn gradient(
    rep: &Representation<'_>,
    alpha: &DVector<f64>,
    loss: &LossSpec,
    lambda: f64,
    y: &[f64],
) -> Result<DVector<f64>> {
    rep.check(alpha)?;
    if y.len() != rep.samples() {
        return input("label count does not match the representation");
    }
    let m = y.len();
    let xi = rep.fitted(alpha);
    let mut v = DVector::zeros(m);
    loss.working_vector_into(y, xi.as_slice(), v.as_mut_slice());
    let w = rep.embed(alpha) * (2.0 * lambda) + v / m as f64;
    Ok(rep.apply(&w))
}

/// `||K (2 lambda alpha + v / m)||_inf`; zero exactly at critical points of `F`.
pub fn stationarity_residual(
    rep: &Representation<'_>,
    alpha: &DVector<f64>,
    loss: &LossSpec,
    lambda: f64,
    y: &[f64],
) -> Result<f64> {
    Ok(gradient(rep, alpha, loss, lambda, y)?.amax())
}
