//! Datasets: LIBSVM text I/O, the synthetic generators used for benchmarking
//! (checkerboard/XOR tiling and noisy sinc), label-flip contamination, seeded
//! train/test splitting and evaluation metrics.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{input, Error, Result};
use crate::solver::Model;

/// Learning task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classification => f.write_str("class"),
            Task::Regression => f.write_str("reg"),
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class" | "classification" => Ok(Task::Classification),
            "reg" | "regression" => Ok(Task::Regression),
            other => input(format!("unknown task `{other}` (expected class or reg)")),
        }
    }
}

/// Sparse feature vector with 1-based, strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return input("sparse vector index/value length mismatch");
        }
        if indices.first() == Some(&0) {
            return input("feature indices are 1-based");
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return input("feature indices must be strictly increasing");
        }
        Ok(Self { indices, values })
    }

    /// Stores every coordinate explicitly, zeros included.
    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            indices: (1..=values.len() as u32).collect(),
            values: values.to_vec(),
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Largest feature index, 0 for the empty vector.
    pub fn dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize)
    }

    /// Value at a 1-based feature index.
    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// `||self - other||^2`, merging the two index lists.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (a_idx, a_val) = (&self.indices, &self.values);
        let (b_idx, b_val) = (&other.indices, &other.values);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a_idx.len() && j < b_idx.len() {
            match a_idx[i].cmp(&b_idx[j]) {
                std::cmp::Ordering::Equal => {
                    let d = a_val[i] - b_val[j];
                    sum += d * d;
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => {
                    sum += a_val[i] * a_val[i];
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += b_val[j] * b_val[j];
                    j += 1;
                }
            }
        }
        sum += a_val[i..].iter().map(|v| v * v).sum::<f64>();
        sum += b_val[j..].iter().map(|v| v * v).sum::<f64>();
        sum
    }
}

/// Labeled samples for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<SparseVector>,
    labels: Vec<f64>,
    task: Task,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<SparseVector>, labels: Vec<f64>, task: Task) -> Result<Self> {
        if samples.is_empty() {
            return input("dataset has no samples");
        }
        if samples.len() != labels.len() {
            return input(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            ));
        }
        if let Some(bad) = labels.iter().find(|y| !y.is_finite()) {
            return input(format!("non-finite label {bad}"));
        }
        if task == Task::Classification {
            if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return input(format!("classification label {bad} is not -1 or +1"));
            }
        }
        let dim = samples.iter().map(SparseVector::dim).max().unwrap_or(0);
        Ok(Self {
            samples,
            labels,
            task,
            dim,
        })
    }

    pub fn samples(&self) -> &[SparseVector] {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Largest feature index over all samples.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| self.samples[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.task,
        )
    }
}

/// Reads LIBSVM text: `<label> <idx>:<val> ...`, one sample per line.
///
/// Blank lines and `#` comments are skipped. For classification any positive
/// label maps to +1 and everything else to -1.
pub fn parse_libsvm<R: BufRead>(reader: R, task: Task) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut warned = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line.as_str(),
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let raw: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("bad label `{label_tok}`")))?;
        if !raw.is_finite() {
            return Err(parse_err(format!("non-finite label `{label_tok}`")));
        }
        let label = match task {
            Task::Classification => {
                if !warned && ![-1.0, 0.0, 1.0].contains(&raw) {
                    log::warn!("line {line_no}: label {raw} mapped by sign to +/-1");
                    warned = true;
                }
                if raw > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Task::Regression => raw,
        };

        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected idx:value, got `{tok}`")))?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| parse_err(format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err("feature indices are 1-based".into()));
            }
            if indices.last().is_some_and(|&prev| prev >= idx) {
                return Err(parse_err(format!(
                    "feature index {idx} does not increase"
                )));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite feature value `{val}`")));
            }
            indices.push(idx);
            values.push(val);
        }
        samples.push(SparseVector { indices, values });
        labels.push(label);
    }
    Dataset::new(samples, labels, task)
}

/// Writes LIBSVM text that [`parse_libsvm`] reads back exactly.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    for (x, y) in data.samples.iter().zip(&data.labels) {
        write!(out, "{y}")?;
        for (i, v) in x.indices.iter().zip(&x.values) {
            write!(out, " {i}:{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tile-parity label of a point in the unit square: +1 when
/// `floor(grid x1) + floor(grid x2)` is even.
pub fn checkerboard_label(x1: f64, x2: f64, grid: usize) -> f64 {
    let g = grid as f64;
    let tile = (g * x1).floor() as i64 + (g * x2).floor() as i64;
    if tile % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `n` points drawn uniformly on `[0,1]^2`, labeled by a `grid x grid` XOR tiling.
/// `grid = 2` is the plain XOR problem.
pub fn gen_checkerboard(n: usize, grid: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return input("checkerboard needs n >= 1");
    }
    if grid < 2 || grid % 2 != 0 {
        return input(format!("checkerboard grid must be even and >= 2, got {grid}"));
    }
    let mut rng = rng(seed);
    let mut samples = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = rng.random();
        let x2: f64 = rng.random();
        samples.push(SparseVector::from_dense(&[x1, x2]));
        labels.push(checkerboard_label(x1, x2, grid));
    }
    Dataset::new(samples, labels, Task::Classification)
}

pub const SINC_X_MIN: f64 = -4.0 * std::f64::consts::PI;
pub const SINC_X_MAX: f64 = 4.0 * std::f64::consts::PI;
pub const SINC_STEP: f64 = 0.01;
pub const SINC_NOISE_STD: f64 = 0.05;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Regression data on the grid `x_min, x_min + step, ...` up to `x_max`, with
/// targets `sinc(x)` plus Gaussian noise of standard deviation `noise_std`.
pub fn gen_sinc(x_min: f64, x_max: f64, step: f64, noise_std: f64, seed: u64) -> Result<Dataset> {
    if !(x_min < x_max) || !(step > 0.0) || !(noise_std >= 0.0) {
        return input("sinc needs x_min < x_max, step > 0 and noise_std >= 0");
    }
    let count = ((x_max - x_min) / step + 1e-9).floor() as usize + 1;
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::Input(e.to_string()))?;
    let mut rng = rng(seed);
    let mut samples = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let x = x_min + i as f64 * step;
        let zeta = if noise_std > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        samples.push(SparseVector::from_dense(&[x]));
        labels.push(sinc(x) + zeta);
    }
    Dataset::new(samples, labels, Task::Regression)
}

fn count_of(fraction: f64, m: usize) -> usize {
    ((fraction * m as f64) * (1.0 + 1e-12)).floor() as usize
}

/// Negates the labels of exactly `floor(fraction m)` distinct samples chosen
/// uniformly without replacement. Applying it twice with the same seed is the identity.
pub fn flip_labels(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if data.task != Task::Classification {
        return input("label flipping applies to classification data only");
    }
    if !(0.0..1.0).contains(&fraction) {
        return input(format!("flip fraction must lie in [0, 1), got {fraction}"));
    }
    let m = data.len();
    let k = count_of(fraction, m);
    let mut out = data.clone();
    let mut rng = rng(seed);
    for i in rand::seq::index::sample(&mut rng, m, k) {
        out.labels[i] = -out.labels[i];
    }
    Ok(out)
}

/// Seeded shuffle split; the first part gets `floor(train_fraction m)` samples.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return input(format!("split fraction must lie in (0, 1), got {train_fraction}"));
    }
    let m = data.len();
    let n_train = count_of(train_fraction, m);
    if n_train == 0 || n_train == m {
        return input(format!(
            "split fraction {train_fraction} leaves an empty part of {m} samples"
        ));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng(seed));
    Ok((data.subset(&idx[..n_train])?, data.subset(&idx[n_train..])?))
}

/// Test-set quality of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub task: Task,
    /// Fraction of correctly signed scores (classification only).
    pub accuracy: Option<f64>,
    /// Mean squared error (regression only).
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub support_size: usize,
    pub train_seconds: f64,
}

impl Metrics {
    /// Accuracy for classification, RMSE for regression.
    pub fn headline(&self) -> f64 {
        match self.task {
            Task::Classification => self.accuracy.unwrap_or(f64::NAN),
            Task::Regression => self.rmse.unwrap_or(f64::NAN),
        }
    }

    /// Scores the raw decision values against labels; `sign(0)` counts as +1.
    pub fn from_scores(task: Task, scores: &[f64], labels: &[f64]) -> Result<Self> {
        if scores.len() != labels.len() || scores.is_empty() {
            return input("scores and labels must be nonempty and of equal length");
        }
        let n = scores.len() as f64;
        let mut metrics = Metrics {
            task,
            accuracy: None,
            mse: None,
            rmse: None,
            support_size: 0,
            train_seconds: 0.0,
        };
        match task {
            Task::Classification => {
                let correct = scores
                    .iter()
                    .zip(labels)
                    .filter(|(&s, &y)| (if s >= 0.0 { 1.0 } else { -1.0 }) == y)
                    .count();
                metrics.accuracy = Some(correct as f64 / n);
            }
            Task::Regression => {
                let mse = scores
                    .iter()
                    .zip(labels)
                    .map(|(s, y)| (s - y) * (s - y))
                    .sum::<f64>()
                    / n;
                metrics.mse = Some(mse);
                metrics.rmse = Some(mse.sqrt());
            }
        }
        Ok(metrics)
    }
}

/// Predicts `data` with `model` and scores the result.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<Metrics> {
    if model.task() != data.task() {
        return input(format!(
            "model task {} does not match data task {}",
            model.task(),
            data.task()
        ));
    }
    let scores = model.predict(data.samples())?;
    let mut metrics = Metrics::from_scores(data.task(), &scores, data.labels())?;
    metrics.support_size = model.coefficients().len();
    Ok(metrics)
}
