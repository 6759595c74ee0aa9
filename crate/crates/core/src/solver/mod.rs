//! Training: strategy selection, one-time factorization and the DCA loop.

mod engine;
mod factor;
mod model;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;

pub use engine::{
    dca_step, gradient, objective, stationarity_residual, working_vector, DcState,
};
pub use factor::{
    factorization_count, prepare_full, prepare_smw, prepare_sparse, Representation, SolveFactor,
};
pub use model::Model;

use crate::data::Dataset;
use crate::error::{input, Error, Result};
use crate::kernel_approx::{gram_full, pivoted_cholesky, KernelSpec, DEFAULT_DENSE_CAP};
use crate::losses::LossSpec;

/// Rank cap of the pivoted Cholesky factor when none is requested.
pub const DEFAULT_RANK_BUDGET: usize = 1000;
/// Default stopping threshold `trace(K - P P^T) < trace_tol * m`.
pub const DEFAULT_TRACE_TOL: f64 = 1e-3;
/// `auto` uses the dense Gram matrix up to this many samples.
pub const AUTO_FULL_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Auto,
    Full,
    Smw,
    Sparse,
}

impl Strategy {
    /// Concrete strategy for `m` samples. `auto` picks `full` for small
    /// problems unless a rank was requested explicitly.
    pub fn resolve(self, m: usize, rank_requested: bool) -> Strategy {
        match self {
            Strategy::Auto if m <= AUTO_FULL_LIMIT && !rank_requested => Strategy::Full,
            Strategy::Auto => Strategy::Sparse,
            s => s,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Auto => "auto",
            Strategy::Full => "full",
            Strategy::Smw => "smw",
            Strategy::Sparse => "sparse",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "full" => Ok(Strategy::Full),
            "smw" => Ok(Strategy::Smw),
            "sparse" => Ok(Strategy::Sparse),
            other => input(format!("unknown solver `{other}` (auto, full, smw, sparse)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Regularizer `lambda > 0`.
    pub lambda: f64,
    /// Stop once `||v_k - v_{k-1}|| / max(1, ||v_k||) < tol`.
    pub tol: f64,
    /// Maximum number of linear solves.
    pub max_iter: usize,
    pub strategy: Strategy,
    /// Rank cap for the low-rank strategies; `None` means [`DEFAULT_RANK_BUDGET`].
    pub rank_budget: Option<usize>,
    pub trace_tol: f64,
    /// Largest `m` for which the dense Gram matrix may be built.
    pub dense_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            tol: 1e-6,
            max_iter: 100,
            strategy: Strategy::Auto,
            rank_budget: None,
            trace_tol: DEFAULT_TRACE_TOL,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return input(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.tol > 0.0) {
            return input(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return input("max_iter must be at least 1");
        }
        if self.rank_budget == Some(0) {
            return input("rank must be at least 1");
        }
        if !(self.trace_tol >= 0.0) {
            return input(format!("trace tolerance must be nonnegative, got {}", self.trace_tol));
        }
        Ok(())
    }
}

/// Summary of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub strategy: Strategy,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub train_seconds: f64,
    /// Rank of the low-rank factor, if one was used.
    pub rank: Option<usize>,
    /// `false` when `max_iter` was hit before the tolerance was met.
    pub converged: bool,
    /// Relative working-vector change at the last check.
    pub final_v_change: f64,
    /// Linear-system factorizations formed during the run.
    pub factorizations: usize,
}

impl TrainReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Builds the factor for `strategy` (which must already be resolved).
pub fn prepare(
    strategy: Strategy,
    config: &TrainConfig,
    data: &Dataset,
    loss: &LossSpec,
    kernel: &KernelSpec,
) -> Result<SolveFactor> {
    let m = data.len();
    let a = loss.lsdc_constant();
    let rank = config.rank_budget.unwrap_or(DEFAULT_RANK_BUDGET);
    match strategy {
        Strategy::Full => {
            let k = gram_full(kernel, data.samples(), config.dense_cap)?;
            prepare_full(k, config.lambda, m, a)
        }
        Strategy::Smw => {
            let f = pivoted_cholesky(kernel, data.samples(), rank, config.trace_tol)?;
            prepare_smw(&f, config.lambda, m, a)
        }
        Strategy::Sparse => {
            let f = pivoted_cholesky(kernel, data.samples(), rank, config.trace_tol)?;
            prepare_sparse(&f, config.lambda, m, a)
        }
        Strategy::Auto => input("strategy must be resolved before preparing a factor"),
    }
}

fn relative_change(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    (new - old).norm() / new.norm().max(1.0)
}

/// Runs the DCA loop on a prepared factor until the working vector settles
/// or `max_iter` solves have been done. Returns the final state, whether the
/// tolerance was met, and the last relative change.
pub fn run_dca(
    factor: &SolveFactor,
    loss: &LossSpec,
    y: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(DcState, bool, f64)> {
    let mut state = dca_step(factor, &DcState::initial(y), loss, y)?;
    loop {
        let v = working_vector(&state, loss, y);
        let change = relative_change(&v, &state.v);
        if change < tol {
            return Ok((state, true, change));
        }
        if state.iter >= max_iter {
            log::warn!(
                "DCA stopped at max_iter = {max_iter} with relative v change {change:e}"
            );
            return Ok((state, false, change));
        }
        state = engine::advance(factor, &state, v, loss, y)?;
    }
}

/// Trains a model on `data`.
pub fn train(
    config: &TrainConfig,
    data: &Dataset,
    loss: &LossSpec,
    kernel: &KernelSpec,
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if loss.task() != data.task() {
        return input(format!(
            "loss is for {} but the data is {}",
            loss.task(),
            data.task()
        ));
    }
    let start = Instant::now();
    let factorizations_before = factorization_count();
    let strategy = config
        .strategy
        .resolve(data.len(), config.rank_budget.is_some());
    let factor = prepare(strategy, config, data, loss, kernel)?;
    let (state, converged, final_v_change) =
        run_dca(&factor, loss, data.labels(), config.tol, config.max_iter)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let support = match factor.pivots() {
        Some(pivots) => pivots.iter().map(|&b| data.samples()[b].clone()).collect(),
        None => data.samples().to_vec(),
    };
    let model = Model::new(
        *kernel,
        support,
        state.alpha.iter().copied().collect(),
        data.dim(),
        *loss,
        config.lambda,
    )?;
    let report = TrainReport {
        strategy,
        iterations: state.iter,
        objective_trace: state.objective_trace,
        train_seconds,
        rank: factor.rank(),
        converged,
        final_v_change,
        factorizations: factorization_count() - factorizations_before,
    };
    Ok((model, report))
}
