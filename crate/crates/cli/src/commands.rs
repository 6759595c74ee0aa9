use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use unisvm::data::{
    evaluate, flip_labels, gen_checkerboard, gen_sinc, parse_libsvm, split, write_libsvm,
};
use unisvm::kernel_approx::KernelSpec;
use unisvm::losses::{LossKind, LossSpec};
use unisvm::solver::{train, Strategy, TrainConfig};
use unisvm::{Dataset, Task};

use crate::args::{
    BenchArgs, Cli, Command, EvalArgs, Generator, PredictArgs, SynthArgs, TrainArgs,
};
use crate::model_file;
use crate::sweep::{DataSource, Run, Sweep};

pub const TRAIN_CSV_HEADER: &str = "loss,task,m,r,iterations,objective,train_seconds,converged";
pub const EVAL_CSV_HEADER: &str = "model,data,task,n,support_size,accuracy,rmse,mse";
pub const BENCH_CSV_HEADER: &str = "loss,seed,m,r,iterations,train_seconds,metric,error";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

/// Float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV-safe field: commas become `;`, line breaks become spaces.
pub fn field(s: &str) -> String {
    s.replace(',', ";").replace(['\n', '\r'], " ")
}

pub fn read_data(path: &Path, task: Task) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_libsvm(BufReader::new(file), task).with_context(|| format!("reading {}", path.display()))
}

fn write_data(path: &Path, data: &Dataset) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_libsvm(data, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Appends `row` to a CSV file, writing `header` first if the file is new or empty.
fn append_csv(path: &Path, header: &str, row: &str) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(file, "{header}")?;
    }
    writeln!(file, "{row}")?;
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Joins `--loss name[:k=v]` with `--loss-params k=v`.
pub fn loss_kind(loss: &str, params: Option<&str>) -> Result<LossKind> {
    let text = match params.map(str::trim).filter(|p| !p.is_empty()) {
        None => loss.to_string(),
        Some(p) if loss.contains(':') => format!("{loss},{p}"),
        Some(p) => format!("{loss}:{p}"),
    };
    Ok(text.parse()?)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let task: Task = a.task.into();
    let kind = loss_kind(&a.loss, a.loss_params.as_deref())?;
    let mut loss = LossSpec::new(kind, task)?;
    if let Some(value) = a.lsdc_constant {
        loss = loss.with_lsdc_constant(value)?;
    }
    let kernel = KernelSpec::gaussian(a.gamma)?;
    let config = TrainConfig {
        lambda: a.lambda,
        tol: a.tol,
        max_iter: a.max_iter,
        strategy: a.solver.parse::<Strategy>()?,
        rank_budget: a.rank,
        trace_tol: a.approx_tol,
        dense_cap: a.dense_cap,
    };
    config.validate()?;
    let data = read_data(&a.data, task)?;
    let (model, report) = train(&config, &data, &loss, &kernel)?;
    model_file::save(&model, &a.model, a.format)?;
    let rank = report.rank.map_or("full".to_string(), |r| r.to_string());
    println!(
        "iterations={} objective={} train_seconds={:.6} rank={} strategy={} converged={}",
        report.iterations,
        num(report.final_objective()),
        report.train_seconds,
        rank,
        report.strategy,
        report.converged
    );
    if let Some(path) = &a.metrics {
        let row = format!(
            "{},{},{},{},{},{},{},{}",
            field(&kind.to_string()),
            task,
            data.len(),
            report.rank.map_or(String::new(), |r| r.to_string()),
            report.iterations,
            num(report.final_objective()),
            num(report.train_seconds),
            report.converged
        );
        append_csv(path, TRAIN_CSV_HEADER, &row)?;
    }
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = model_file::load(&a.model)?;
    let data = read_data(&a.data, Task::Regression)?;
    let scores = model.predict(data.samples())?;
    let mut out = output(a.out.as_deref())?;
    match model.task() {
        Task::Classification => {
            writeln!(out, "index,score,label")?;
            for (i, s) in scores.iter().enumerate() {
                writeln!(out, "{i},{},{}", num(*s), if *s >= 0.0 { 1 } else { -1 })?;
            }
        }
        Task::Regression => {
            writeln!(out, "index,score")?;
            for (i, s) in scores.iter().enumerate() {
                writeln!(out, "{i},{}", num(*s))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = model_file::load(&a.model)?;
    let data = read_data(&a.data, model.task())?;
    let metrics = evaluate(&model, &data)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    match model.task() {
        Task::Classification => println!("accuracy={}", opt(metrics.accuracy)),
        Task::Regression => println!("rmse={} mse={}", opt(metrics.rmse), opt(metrics.mse)),
    }
    if let Some(path) = &a.metrics {
        let row = format!(
            "{},{},{},{},{},{},{},{}",
            field(&a.model.display().to_string()),
            field(&a.data.display().to_string()),
            model.task(),
            data.len(),
            metrics.support_size,
            opt(metrics.accuracy),
            opt(metrics.rmse),
            opt(metrics.mse)
        );
        append_csv(path, EVAL_CSV_HEADER, &row)?;
    }
    Ok(())
}

/// `dir/name.ext` -> `dir/name.<tag>.ext`.
pub fn tagged_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let data = match a.generator {
        Generator::Checkerboard => gen_checkerboard(a.n, a.grid, a.seed)?,
        Generator::Sinc => gen_sinc(a.x_min, a.x_max, a.step, a.noise, a.seed)?,
    };
    // Distinct streams for splitting and flipping.
    let split_seed = a.seed ^ 0x5EED_0001;
    let flip_seed = a.seed ^ 0x5EED_0002;
    let flip = |d: &Dataset| -> Result<Dataset> {
        Ok(match a.flip {
            Some(f) => flip_labels(d, f, flip_seed)?,
            None => d.clone(),
        })
    };
    match a.split {
        Some(fraction) => {
            let (train_set, test_set) = split(&data, fraction, split_seed)?;
            let train_set = flip(&train_set)?;
            let (tp, vp) = (tagged_path(&a.out, "train"), tagged_path(&a.out, "test"));
            write_data(&tp, &train_set)?;
            write_data(&vp, &test_set)?;
            println!("wrote {} ({}) and {} ({})", tp.display(), train_set.len(), vp.display(), test_set.len());
        }
        None => {
            let data = flip(&data)?;
            write_data(&a.out, &data)?;
            println!("wrote {} ({})", a.out.display(), data.len());
        }
    }
    Ok(())
}

/// Training and test data for one sweep cell.
fn bench_data(sweep: &Sweep, task: Task, run: &Run) -> Result<(Dataset, Dataset)> {
    let seed = run.seed;
    match &sweep.data {
        DataSource::Checkerboard { grid, test_size, flip } => {
            ensure!(task == Task::Classification, "checkerboard data is for classification");
            let size = run.size.expect("sizes are set for generated data");
            let train_set = gen_checkerboard(size, *grid, 2 * seed)?;
            let test_set = gen_checkerboard(*test_size, *grid, 2 * seed + 1)?;
            Ok((flip_labels(&train_set, *flip, seed)?, test_set))
        }
        DataSource::Sinc { noise, test_size } => {
            ensure!(task == Task::Regression, "sinc data is for regression");
            let size = run.size.expect("sizes are set for generated data");
            let pool = gen_sinc(
                unisvm::data::SINC_X_MIN,
                unisvm::data::SINC_X_MAX,
                unisvm::data::SINC_STEP,
                *noise,
                seed,
            )?;
            ensure!(size < pool.len(), "size {size} leaves no test points out of {}", pool.len());
            let (train_set, test_set) = split(&pool, size as f64 / pool.len() as f64, seed)?;
            ensure!(train_set.len() == size, "split produced {} training points", train_set.len());
            if let Some(n) = test_size {
                ensure!(test_set.len() == *n, "test_size {n} but {} points remain", test_set.len());
            }
            Ok((train_set, test_set))
        }
        DataSource::Files { train, test, flip } => {
            let train_set = read_data(train, task)?;
            let test_set = read_data(test, task)?;
            let train_set = if *flip > 0.0 { flip_labels(&train_set, *flip, seed)? } else { train_set };
            Ok((train_set, test_set))
        }
    }
}

/// One CSV row and whether the run succeeded.
fn bench_row(
    sweep: &Sweep,
    config: &TrainConfig,
    kernel: &KernelSpec,
    task: Task,
    run: &Run,
) -> (String, bool) {
    let label = field(&run.loss_label);
    let result = bench_data(sweep, task, run).and_then(|(train_set, test_set)| {
        let (model, report) = train(config, &train_set, &run.loss, kernel)?;
        let metrics = evaluate(&model, &test_set)?;
        Ok((train_set.len(), report, metrics.headline()))
    });
    match result {
        Ok((m, report, metric)) => (
            format!(
                "{label},{},{m},{},{},{},{},",
                run.seed,
                report.rank.map_or(String::new(), |r| r.to_string()),
                report.iterations,
                num(report.train_seconds),
                num(metric)
            ),
            true,
        ),
        Err(e) => {
            let m = run.size.map_or(String::new(), |s| s.to_string());
            let row = format!("{label},{},{m},,,,,{}", run.seed, field(&format!("{e:#}")));
            (row, false)
        }
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    ensure!(a.jobs >= 1, "--jobs must be at least 1");
    let sweep = Sweep::load(&a.sweep)?;
    let task = sweep.task()?;
    let config = sweep.config()?;
    let kernel = KernelSpec::gaussian(sweep.gamma)?;
    let runs = sweep.runs()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let rows: Vec<(String, bool)> = pool.install(|| {
        runs.par_iter()
            .map(|run| bench_row(&sweep, &config, &kernel, task, run))
            .collect()
    });
    let failures = rows.iter().filter(|(_, ok)| !ok).count();
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "{BENCH_CSV_HEADER}")?;
    for (row, _) in &rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    if failures == rows.len() {
        bail!("all {} sweep runs failed", rows.len());
    }
    if failures > 0 {
        log::warn!("{failures} of {} sweep runs failed", rows.len());
    }
    Ok(())
}
