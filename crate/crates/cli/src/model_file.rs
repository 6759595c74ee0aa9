//! Model persistence.
//!
//! The binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic   b"UNISVMMF"
//! u32     format version
//! u8      task (0 = class, 1 = reg)
//! u8      kernel kind (0 = gaussian)
//! f64     gamma
//! u32 n + n bytes   loss, canonical `name:k=v,...` text
//! f64     A
//! f64     lambda
//! u64     feature dimension
//! u64     support count
//! per support point: f64 coefficient, u32 nnz, nnz x (u32 index, f64 value)
//! ```
//!
//! The text format carries the same fields one per line. Floats are written
//! with Rust's shortest round-trip formatting, so both formats are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use unisvm::kernel_approx::{KernelKind, KernelSpec};
use unisvm::losses::{LossKind, LossSpec};
use unisvm::solver::Model;
use unisvm::{SparseVector, Task};

pub const MAGIC: &[u8; 8] = b"UNISVMMF";
pub const TEXT_HEADER: &str = "unisvm-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Binary,
    Text,
}

pub fn save(model: &Model, path: &Path, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Binary => to_bytes(model),
        Format::Text => to_text(model).into_bytes(),
    };
    fs::write(path, bytes).with_context(|| format!("writing model {}", path.display()))
}

/// Loads either format, detected from the first bytes.
pub fn load(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    if bytes.starts_with(MAGIC) {
        from_bytes(&bytes)
    } else if bytes.starts_with(TEXT_HEADER.as_bytes()) {
        from_text(std::str::from_utf8(&bytes).context("model text is not UTF-8")?)
    } else {
        bail!("{} is not a unisvm model file", path.display())
    }
    .with_context(|| format!("loading model {}", path.display()))
}

fn task_code(task: Task) -> u8 {
    match task {
        Task::Classification => 0,
        Task::Regression => 1,
    }
}

fn build(
    task: Task,
    gamma: f64,
    loss: &str,
    a: f64,
    lambda: f64,
    dim: usize,
    support: Vec<SparseVector>,
    coefficients: Vec<f64>,
) -> Result<Model> {
    let kind: LossKind = loss.parse()?;
    let loss = LossSpec::new(kind, task)?.with_lsdc_constant(a)?;
    let kernel = KernelSpec::gaussian(gamma)?;
    Ok(Model::new(kernel, support, coefficients, dim, loss, lambda)?)
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(task_code(model.task()));
    out.push(match model.kernel().kind {
        KernelKind::Gaussian => 0,
    });
    out.extend_from_slice(&model.kernel().gamma.to_le_bytes());
    let loss = model.loss().kind().to_string();
    out.extend_from_slice(&(loss.len() as u32).to_le_bytes());
    out.extend_from_slice(loss.as_bytes());
    out.extend_from_slice(&model.loss().lsdc_constant().to_le_bytes());
    out.extend_from_slice(&model.lambda().to_le_bytes());
    out.extend_from_slice(&(model.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(model.support().len() as u64).to_le_bytes());
    for (x, c) in model.support().iter().zip(model.coefficients()) {
        out.extend_from_slice(&c.to_le_bytes());
        out.extend_from_slice(&(x.nnz() as u32).to_le_bytes());
        for (i, v) in x.indices().iter().zip(x.values()) {
            out.extend_from_slice(&i.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| anyhow!("model file truncated at byte {}", self.pos))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into()?))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    ensure!(r.take(8)? == MAGIC, "bad magic");
    let version = r.u32()?;
    ensure!(version == FORMAT_VERSION, "unsupported model format version {version}");
    let task = match r.u8()? {
        0 => Task::Classification,
        1 => Task::Regression,
        t => bail!("unknown task code {t}"),
    };
    ensure!(r.u8()? == 0, "unknown kernel kind");
    let gamma = r.f64()?;
    let len = r.u32()? as usize;
    let loss = std::str::from_utf8(r.take(len)?)?.to_string();
    let a = r.f64()?;
    let lambda = r.f64()?;
    let dim = usize::try_from(r.u64()?)?;
    let n = usize::try_from(r.u64()?)?;
    // Every support point needs at least 12 bytes; reject absurd counts early.
    ensure!(n <= bytes.len() / 12, "support count {n} exceeds file size");
    let mut support = Vec::with_capacity(n);
    let mut coefficients = Vec::with_capacity(n);
    for _ in 0..n {
        coefficients.push(r.f64()?);
        let nnz = r.u32()? as usize;
        let mut idx = Vec::with_capacity(nnz.min(bytes.len()));
        let mut val = Vec::with_capacity(nnz.min(bytes.len()));
        for _ in 0..nnz {
            idx.push(r.u32()?);
            val.push(r.f64()?);
        }
        support.push(SparseVector::new(idx, val)?);
    }
    ensure!(r.pos == bytes.len(), "{} trailing bytes", bytes.len() - r.pos);
    build(task, gamma, &loss, a, lambda, dim, support, coefficients)
}

pub fn to_text(model: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TEXT_HEADER} {FORMAT_VERSION}");
    let _ = writeln!(s, "task {}", model.task());
    let _ = writeln!(s, "kernel gaussian {}", model.kernel().gamma);
    let _ = writeln!(s, "loss {}", model.loss().kind());
    let _ = writeln!(s, "A {}", model.loss().lsdc_constant());
    let _ = writeln!(s, "lambda {}", model.lambda());
    let _ = writeln!(s, "dim {}", model.dim());
    let _ = writeln!(s, "support {}", model.support().len());
    for (x, c) in model.support().iter().zip(model.coefficients()) {
        s.push_str(&c.to_string());
        for (i, v) in x.indices().iter().zip(x.values()) {
            let _ = write!(s, " {i}:{v}");
        }
        s.push('\n');
    }
    s
}

pub fn from_text(text: &str) -> Result<Model> {
    let mut lines = text.lines().enumerate();
    let mut field = |key: &str| -> Result<String> {
        let (n, line) = lines.next().ok_or_else(|| anyhow!("missing `{key}` line"))?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| anyhow!("line {}: expected `{key} ...`, got `{line}`", n + 1))?;
        Ok(rest.trim().to_string())
    };
    let version: u32 = field(TEXT_HEADER)?.parse()?;
    ensure!(version == FORMAT_VERSION, "unsupported model format version {version}");
    let task: Task = field("task")?.parse()?;
    let gamma: f64 = field("kernel gaussian")?.parse()?;
    let loss = field("loss")?;
    let a: f64 = field("A")?.parse()?;
    let lambda: f64 = field("lambda")?.parse()?;
    let dim: usize = field("dim")?.parse()?;
    let n: usize = field("support")?.parse()?;
    let mut support = Vec::new();
    let mut coefficients = Vec::new();
    for (lineno, line) in lines.by_ref().take(n) {
        let mut parts = line.split_whitespace();
        let c: f64 = parts
            .next()
            .ok_or_else(|| anyhow!("line {}: empty support line", lineno + 1))?
            .parse()?;
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for pair in parts {
            let (i, v) = pair
                .split_once(':')
                .ok_or_else(|| anyhow!("line {}: bad feature `{pair}`", lineno + 1))?;
            idx.push(i.parse()?);
            val.push(v.parse()?);
        }
        coefficients.push(c);
        support.push(SparseVector::new(idx, val)?);
    }
    ensure!(coefficients.len() == n, "expected {n} support lines, found {}", coefficients.len());
    ensure!(lines.all(|(_, l)| l.trim().is_empty()), "unexpected content after support lines");
    build(task, gamma, &loss, a, lambda, dim, support, coefficients)
}
