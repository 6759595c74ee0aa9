//! Benchmark sweep specifications (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use unisvm::losses::{LossKind, LossSpec};
use unisvm::solver::{Strategy, TrainConfig, DEFAULT_TRACE_TOL};
use unisvm::Task;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub task: String,
    pub losses: Vec<String>,
    pub seeds: Vec<u64>,
    /// Training-set sizes; ignored for file data.
    #[serde(default)]
    pub sizes: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default = "default_solver")]
    pub solver: String,
    pub rank: Option<usize>,
    pub approx_tol: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub data: DataSource,
}

fn default_solver() -> String {
    "auto".into()
}

fn default_grid() -> usize {
    2
}

fn default_noise() -> f64 {
    unisvm::data::SINC_NOISE_STD
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh training and test draws per seed; `flip` applies to training labels.
    Checkerboard {
        #[serde(default = "default_grid")]
        grid: usize,
        test_size: usize,
        #[serde(default)]
        flip: f64,
    },
    /// The sinc grid split into `size` training points and the rest for testing.
    Sinc {
        #[serde(default = "default_noise")]
        noise: f64,
        test_size: Option<usize>,
    },
    /// Fixed LIBSVM files; relative paths resolve against the sweep file.
    Files {
        train: PathBuf,
        test: PathBuf,
        #[serde(default)]
        flip: f64,
    },
}

/// One cell of the cross-product.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub loss: LossSpec,
    pub loss_label: String,
    pub seed: u64,
    pub size: Option<usize>,
}

impl Sweep {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut sweep: Sweep =
            toml::from_str(&text).with_context(|| format!("parsing sweep {}", path.display()))?;
        if let DataSource::Files { train, test, .. } = &mut sweep.data {
            let base = path.parent().unwrap_or(Path::new("."));
            *train = base.join(&*train);
            *test = base.join(&*test);
        }
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn task(&self) -> Result<Task> {
        Ok(self.task.parse()?)
    }

    fn validate(&self) -> Result<()> {
        ensure!(!self.losses.is_empty(), "sweep lists no losses");
        ensure!(!self.seeds.is_empty(), "sweep lists no seeds");
        let needs_sizes = !matches!(self.data, DataSource::Files { .. });
        ensure!(!needs_sizes || !self.sizes.is_empty(), "sweep lists no sizes");
        self.config()?.validate()?;
        self.runs()?;
        Ok(())
    }

    pub fn config(&self) -> Result<TrainConfig> {
        let strategy: Strategy = self.solver.parse()?;
        let defaults = TrainConfig::default();
        Ok(TrainConfig {
            lambda: self.lambda,
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            strategy,
            rank_budget: self.rank,
            trace_tol: self.approx_tol.unwrap_or(DEFAULT_TRACE_TOL),
            dense_cap: defaults.dense_cap,
        })
    }

    /// Cross-product in loss, size, seed order.
    pub fn runs(&self) -> Result<Vec<Run>> {
        let task = self.task()?;
        let sizes: Vec<Option<usize>> = match self.data {
            DataSource::Files { .. } => vec![None],
            _ => self.sizes.iter().copied().map(Some).collect(),
        };
        let mut runs = Vec::new();
        for name in &self.losses {
            let kind: LossKind = name.parse()?;
            let loss = LossSpec::new(kind, task)?;
            for &size in &sizes {
                for &seed in &self.seeds {
                    runs.push(Run {
                        loss,
                        loss_label: name.clone(),
                        seed,
                        size,
                    });
                }
            }
        }
        if runs.is_empty() {
            bail!("sweep is empty");
        }
        Ok(runs)
    }
}
