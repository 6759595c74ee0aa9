use rayon::prelude::*;

use crate::data::{SparseVector, Task};
use crate::error::{input, Result};
use crate::kernel_approx::KernelSpec;
use crate::losses::LossSpec;

/// Trained predictor `f(x) = sum_i coefficient_i kappa(support_i, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    task: Task,
    kernel: KernelSpec,
    support: Vec<SparseVector>,
    coefficients: Vec<f64>,
    dim: usize,
    loss: LossSpec,
    lambda: f64,
}

impl Model {
    /// `dim` is the feature dimension of the training data; queries may not exceed it.
    pub fn new(
        kernel: KernelSpec,
        support: Vec<SparseVector>,
        coefficients: Vec<f64>,
        dim: usize,
        loss: LossSpec,
        lambda: f64,
    ) -> Result<Self> {
        if support.is_empty() || support.len() != coefficients.len() {
            return input(format!(
                "model needs matching, nonempty support ({}) and coefficient ({}) lists",
                support.len(),
                coefficients.len()
            ));
        }
        if let Some(s) = support.iter().find(|s| s.dim() > dim) {
            return input(format!(
                "support point of dimension {} exceeds model dimension {dim}",
                s.dim()
            ));
        }
        Ok(Self {
            task: loss.task(),
            kernel,
            support,
            coefficients,
            dim,
            loss,
            lambda,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support(&self) -> &[SparseVector] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Raw decision values; classification callers take the sign.
    pub fn predict(&self, queries: &[SparseVector]) -> Result<Vec<f64>> {
        if let Some(q) = queries.iter().find(|q| q.dim() > self.dim) {
            return input(format!(
                "query has feature index {} but the model was trained on dimension {}",
                q.dim(),
                self.dim
            ));
        }
        Ok(queries
            .par_iter()
            .map(|q| {
                self.support
                    .iter()
                    .zip(&self.coefficients)
                    .map(|(s, c)| c * self.kernel.eval(s, q))
                    .sum()
            })
            .collect())
    }
}
