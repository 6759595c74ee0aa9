//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unisvm::data::{
    evaluate, flip_labels, gen_checkerboard, gen_sinc, split, SINC_NOISE_STD, SINC_STEP,
    SINC_X_MAX, SINC_X_MIN,
};
use unisvm::kernel_approx::{gram_full, pivoted_cholesky, KernelSpec};
use unisvm::losses::{m_abc, LossKind, LossSpec};
use unisvm::solver::{
    dca_step, gradient, objective, prepare_full, prepare_smw, prepare_sparse,
    stationarity_residual, train, DcState, Representation, Strategy, TrainConfig,
};
use unisvm::{Dataset, SparseVector, Task};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn within_budget(start: Instant, budget: Duration, detail: String) -> Outcome {
    let elapsed = start.elapsed();
    ensure!(
        elapsed <= budget,
        "{detail}; took {:.1}s, budget {}s",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    Ok(format!("{detail} ({:.2}s)", elapsed.as_secs_f64()))
}

fn spec(kind: LossKind, task: Task) -> LossSpec {
    LossSpec::new(kind, task).unwrap()
}

fn losses_for(task: Task) -> Vec<LossKind> {
    common::catalog()
        .into_iter()
        .filter(|(_, t)| *t == task)
        .map(|(k, _)| k)
        .collect()
}

/// Dense 2-d coordinates of a sample.
fn coords(x: &SparseVector) -> [f64; 2] {
    [x.get(1), x.get(2)]
}

/// Gram matrix assembled directly from the kernel formula.
fn oracle_gram(samples: &[SparseVector], gamma: f64) -> DMatrix<f64> {
    let m = samples.len();
    DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (coords(&samples[i]), coords(&samples[j]));
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        (-gamma * d2).exp()
    })
}

fn sinc_points(m_target: usize, seed: u64) -> Dataset {
    // Grid of exactly `m_target` points.
    let step = (SINC_X_MAX - SINC_X_MIN) / (m_target as f64 - 0.5);
    gen_sinc(SINC_X_MIN, SINC_X_MAX, step, SINC_NOISE_STD, seed).unwrap()
}

fn xor_train_test(seed: u64, flip: f64) -> (Dataset, Dataset) {
    let train = gen_checkerboard(400, 2, 2 * seed).unwrap();
    let test = gen_checkerboard(400, 2, 2 * seed + 1).unwrap();
    (flip_labels(&train, flip, seed).unwrap(), test)
}

fn is_nonincreasing(trace: &[f64], slack: f64) -> Option<(usize, f64)> {
    trace
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, w[1] - w[0]))
        .find(|&(_, d)| d > slack)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn c1_m_abc() -> Outcome {
    let m222 = m_abc(2.0, 2.0, 2.0).unwrap();
    let m224 = m_abc(2.0, 2.0, 4.0).unwrap();
    let m234 = m_abc(2.0, 3.0, 4.0).unwrap();
    ensure!(m222 == 2.0, "M(2,2,2) = {m222}");
    ensure!((m224 - 4.5707).abs() <= 1e-3, "M(2,2,4) = {m224}");
    ensure!((m234 - 3.7319).abs() <= 1e-3, "M(2,3,4) = {m234}");
    Ok(format!("M(2,2,2)={m222}, M(2,2,4)={m224:.5}, M(2,3,4)={m234:.5}"))
}

fn c2_dc_convexity() -> Outcome {
    let start = Instant::now();
    let h = 1e-3;
    let mut worst_d2 = f64::INFINITY;
    let mut worst_g = f64::INFINITY;
    let catalog = common::catalog();
    for (kind, _) in &catalog {
        let a = kind.lsdc_bound();
        let f = |u: f64| a * u * u - kind.psi(u);
        let g = |u: f64| 2.0 * a * u - kind.dpsi(u);
        for u in common::grid() {
            let d2 = f(u + h) - 2.0 * f(u) + f(u - h);
            let dg = g(u + h) - g(u);
            ensure!(d2 >= -1e-8, "{kind}: second difference {d2:e} at u = {u}");
            ensure!(dg >= -1e-8, "{kind}: g decreases by {dg:e} at u = {u}");
            worst_d2 = worst_d2.min(d2);
            worst_g = worst_g.min(dg);
        }
    }
    within_budget(
        start,
        Duration::from_secs(5),
        format!(
            "{} losses, min second difference {worst_d2:.2e}, min g step {worst_g:.2e}",
            catalog.len()
        ),
    )
}

fn c3_lssvm_first_iterate() -> Outcome {
    let start = Instant::now();
    let gamma = 1.0;
    let lambda = 1e-2;
    let kernel = KernelSpec::gaussian(gamma).unwrap();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for trial in 0..5u64 {
        let m = 40 + 40 * trial as usize;
        let class = flip_labels(&gen_checkerboard(m, 2, 100 + trial).unwrap(), 0.1, trial).unwrap();
        let reg = sinc_points(m, 200 + trial);
        for (data, task) in [(&class, Task::Classification), (&reg, Task::Regression)] {
            ensure!(data.len() <= 200, "problem too large: {}", data.len());
            let k_oracle = oracle_gram(data.samples(), gamma);
            for kind in losses_for(task) {
                let loss = spec(kind, task);
                let a = loss.lsdc_constant();
                let n = data.len();
                let mut system = k_oracle.clone();
                for i in 0..n {
                    system[(i, i)] += lambda * n as f64 / a;
                }
                let expected = system
                    .lu()
                    .solve(&DVector::from_column_slice(data.labels()))
                    .ok_or("oracle system singular")?;
                let k = gram_full(&kernel, data.samples(), 1000).unwrap();
                let factor = prepare_full(k, lambda, n, a).map_err(|e| e.to_string())?;
                let y = data.labels();
                let first = dca_step(&factor, &DcState::initial(y), &loss, y)
                    .map_err(|e| e.to_string())?;
                let diff = (&first.alpha - &expected).amax();
                ensure!(diff <= 1e-10, "{kind} (m = {n}): |alpha1 - lssvm| = {diff:e}");
                worst = worst.max(diff);
                runs += 1;
            }
        }
    }
    within_budget(
        start,
        Duration::from_secs(10),
        format!("{runs} problem/loss pairs, max deviation {worst:.2e}"),
    )
}

fn c4_monotone_objective() -> Outcome {
    let start = Instant::now();
    let (train_class, _) = xor_train_test(0, 0.1);
    let reg = Dataset::new(
        train_class.samples().to_vec(),
        train_class.labels().to_vec(),
        Task::Regression,
    )
    .unwrap();
    let kernel = KernelSpec::gaussian(0.5).unwrap();
    let mut runs = 0;
    let mut worst = f64::NEG_INFINITY;
    for (data, task) in [(&train_class, Task::Classification), (&reg, Task::Regression)] {
        for kind in losses_for(task) {
            for strategy in [Strategy::Full, Strategy::Smw, Strategy::Sparse] {
                let config = TrainConfig {
                    lambda: 1e-5,
                    strategy,
                    rank_budget: (strategy != Strategy::Full).then_some(10),
                    trace_tol: 0.0,
                    ..Default::default()
                };
                let (_, report) =
                    train(&config, data, &spec(kind, task), &kernel).map_err(|e| e.to_string())?;
                if let Some((i, d)) = is_nonincreasing(&report.objective_trace, 1e-10) {
                    return Err(format!("{kind} / {strategy}: objective rose by {d:e} at step {i}"));
                }
                let rises = report
                    .objective_trace
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(rises);
                runs += 1;
            }
        }
    }
    within_budget(
        start,
        Duration::from_secs(30),
        format!("{runs} loss/strategy runs on m = 400, largest step change {worst:.2e}"),
    )
}

/// Twelve distinct points repeated eight times: the Gram matrix has rank 12,
/// so the pivoted Cholesky factor is exact.
fn exact_rank_problem(task: Task, seed: u64) -> Dataset {
    let base = gen_checkerboard(12, 2, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for i in 0..96 {
        let x = &base.samples()[i % 12];
        samples.push(x.clone());
        let label = match task {
            Task::Classification => {
                let flip = rng.random::<f64>() < 0.15;
                if flip { -base.labels()[i % 12] } else { base.labels()[i % 12] }
            }
            Task::Regression => {
                let [a, b] = coords(x);
                (6.0 * a).sin() - b + 0.05 * (rng.random::<f64>() - 0.5)
            }
        };
        labels.push(label);
    }
    Dataset::new(samples, labels, task).unwrap()
}

fn c5_strategy_equivalence() -> Outcome {
    let start = Instant::now();
    let kernel = KernelSpec::gaussian(10.0).unwrap();
    let lambda = 1e-3;
    let mut worst = 0.0f64;
    let mut steps = 0;
    for (task, seed) in [(Task::Classification, 3), (Task::Regression, 4)] {
        let data = exact_rank_problem(task, seed);
        let m = data.len();
        let y = data.labels();
        let f = pivoted_cholesky(&kernel, data.samples(), m, 0.0).map_err(|e| e.to_string())?;
        ensure!(f.rank() == 12, "factor rank {} on a rank-12 Gram matrix", f.rank());
        for kind in losses_for(task) {
            let loss = spec(kind, task);
            let a = loss.lsdc_constant();
            let k = gram_full(&kernel, data.samples(), 1000).unwrap();
            let factors = [
                prepare_full(k, lambda, m, a),
                prepare_smw(&f, lambda, m, a),
                prepare_sparse(&f, lambda, m, a),
            ]
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
            let mut states: Vec<DcState> = vec![DcState::initial(y); 3];
            for iter in 1..=30 {
                for (state, factor) in states.iter_mut().zip(&factors) {
                    *state = dca_step(factor, state, &loss, y).map_err(|e| e.to_string())?;
                }
                for (name, other) in [("smw", &states[1]), ("sparse", &states[2])] {
                    let diff = (&other.xi - &states[0].xi).amax();
                    ensure!(diff <= 1e-6, "{kind}: {name} vs full differ by {diff:e} at iteration {iter}");
                    worst = worst.max(diff);
                }
                steps += 1;
            }
        }
    }
    within_budget(
        start,
        Duration::from_secs(10),
        format!("{steps} iterations compared, max prediction gap {worst:.2e}"),
    )
}

fn c6_stationarity() -> Outcome {
    let start = Instant::now();
    let gamma = 1.0;
    let lambda = 1e-3;
    let kernel = KernelSpec::gaussian(gamma).unwrap();
    let class = flip_labels(&gen_checkerboard(300, 2, 11).unwrap(), 0.1, 11).unwrap();
    let reg = sinc_points(300, 12);
    let mut worst_res = 0.0f64;
    let mut worst_fd = 0.0f64;
    let mut runs = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (data, task) in [(&class, Task::Classification), (&reg, Task::Regression)] {
        ensure!(data.len() <= 500, "problem too large");
        let y = data.labels();
        let m = data.len();
        let y_inf = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let k = gram_full(&kernel, data.samples(), 1000).unwrap();
        let rep = Representation::full(&k);
        for kind in losses_for(task).into_iter().filter(|k| k.is_smooth()) {
            let loss = spec(kind, task);
            let config = TrainConfig {
                lambda,
                strategy: Strategy::Full,
                max_iter: 5000,
                ..Default::default()
            };
            let (model, report) = train(&config, data, &loss, &kernel).map_err(|e| e.to_string())?;
            ensure!(report.converged, "{kind}: no convergence in {} iterations", report.iterations);
            let alpha = DVector::from_column_slice(model.coefficients());
            let res = stationarity_residual(&rep, &alpha, &loss, lambda, y).map_err(|e| e.to_string())?;
            let bound = 1e-4 * (1.0 + y_inf);
            ensure!(res <= bound, "{kind}: residual {res:e} > {bound:e}");
            worst_res = worst_res.max(res / bound);

            // Finite-difference check of the gradient at a non-stationary point.
            let probe = DVector::from_fn(m, |i, _| 0.5 * alpha[i] + 0.05 * (rng.random::<f64>() - 0.5));
            let g = gradient(&rep, &probe, &loss, lambda, y).map_err(|e| e.to_string())?;
            for _ in 0..3 {
                let d = DVector::from_fn(m, |_, _| rng.random::<f64>() - 0.5).normalize();
                let h = 1e-6 * probe.norm().max(1.0);
                let fp = objective(&rep, &(&probe + &d * h), &loss, lambda, y).unwrap();
                let fm = objective(&rep, &(&probe - &d * h), &loss, lambda, y).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let an = g.dot(&d);
                let scale = an.abs().max(1e-2 * g.norm());
                let rel = (fd - an).abs() / scale;
                ensure!(rel <= 1e-3, "{kind}: finite-difference gradient off by {rel:e} (fd {fd:e}, analytic {an:e})");
                worst_fd = worst_fd.max(rel);
            }
            runs += 1;
        }
    }
    within_budget(
        start,
        Duration::from_secs(30),
        format!(
            "{runs} smooth losses, max residual/bound {worst_res:.2e}, max gradient error {worst_fd:.2e}"
        ),
    )
}

fn c7_sinc() -> Outcome {
    let start = Instant::now();
    let kernel = KernelSpec::gaussian(0.5).unwrap();
    let loss = spec(LossKind::SmoothedEpsInsensitive { p: 100.0, eps: 0.01 }, Task::Regression);
    let config = TrainConfig {
        lambda: 1e-4,
        strategy: Strategy::Sparse,
        rank_budget: Some(50),
        trace_tol: 0.0,
        ..Default::default()
    };
    let mut mses = Vec::new();
    let mut iterations = Vec::new();
    for seed in 0..5u64 {
        let pool = gen_sinc(SINC_X_MIN, SINC_X_MAX, SINC_STEP, SINC_NOISE_STD, seed).unwrap();
        let (train_set, test_set) = split(&pool, 0.597, seed).unwrap();
        ensure!(
            train_set.len() == 1500 && test_set.len() == 1014,
            "split sizes {}/{}",
            train_set.len(),
            test_set.len()
        );
        let (model, report) = train(&config, &train_set, &loss, &kernel).map_err(|e| e.to_string())?;
        ensure!(report.rank == Some(50), "rank {:?}", report.rank);
        mses.push(evaluate(&model, &test_set).unwrap().mse.unwrap());
        iterations.push(report.iterations as f64);
    }
    let mean_mse = mses.iter().sum::<f64>() / mses.len() as f64;
    let med = median(&mut iterations);
    ensure!(mean_mse <= 0.004, "mean test MSE {mean_mse:.5} > 0.004 ({mses:?})");
    ensure!(med <= 10.0, "mean test MSE {mean_mse:.5} ok, but median iterations {med} > 10 at tol {:e}", config.tol);
    within_budget(
        start,
        Duration::from_secs(60),
        format!("mean test MSE {mean_mse:.5}, median iterations {med}"),
    )
}

fn c8_xor_robustness() -> Outcome {
    let start = Instant::now();
    let kernel = KernelSpec::gaussian(0.5).unwrap();
    let config = TrainConfig {
        lambda: 1e-5,
        strategy: Strategy::Sparse,
        rank_budget: Some(10),
        trace_tol: 0.0,
        ..Default::default()
    };
    let truncated = spec(LossKind::TruncatedSqHinge { a: 2.0 }, Task::Classification);
    let convex = spec(LossKind::SquaredHinge, Task::Classification);
    let (mut acc_t, mut acc_c) = (0.0, 0.0);
    let trials = 10;
    for seed in 0..trials {
        let (train_set, test_set) = xor_train_test(seed, 0.1);
        for (loss, acc) in [(&truncated, &mut acc_t), (&convex, &mut acc_c)] {
            let (model, report) = train(&config, &train_set, loss, &kernel).map_err(|e| e.to_string())?;
            ensure!(report.rank == Some(10), "rank {:?}", report.rank);
            *acc += evaluate(&model, &test_set).unwrap().accuracy.unwrap() / trials as f64;
        }
    }
    ensure!(acc_t >= 0.93, "truncated squared hinge accuracy {acc_t:.4} < 0.93");
    ensure!(acc_t >= acc_c, "truncated {acc_t:.4} below squared hinge {acc_c:.4}");
    within_budget(
        start,
        Duration::from_secs(60),
        format!("mean accuracy truncated {acc_t:.4}, squared hinge {acc_c:.4}"),
    )
}

/// Median wall time of `steps` DCA iterations after the first.
fn per_iteration_seconds(
    factor: &unisvm::solver::SolveFactor,
    loss: &LossSpec,
    y: &[f64],
    steps: usize,
) -> Result<f64, String> {
    let mut state = dca_step(factor, &DcState::initial(y), loss, y).map_err(|e| e.to_string())?;
    let mut times = Vec::with_capacity(steps);
    for _ in 0..steps {
        let t = Instant::now();
        state = dca_step(factor, &state, loss, y).map_err(|e| e.to_string())?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(&mut times))
}

fn c9_scaling() -> Outcome {
    let start = Instant::now();
    let kernel = KernelSpec::gaussian(16.0).unwrap();
    let loss = spec(LossKind::TruncatedSqHinge { a: 2.0 }, Task::Classification);
    let lambda = 1e-5;

    let big = gen_checkerboard(20_000, 4, 91).unwrap();
    let f = pivoted_cholesky(&kernel, big.samples(), 200, 0.0).map_err(|e| e.to_string())?;
    ensure!(f.rank() == 200, "factor rank {}", f.rank());
    let sparse = prepare_sparse(&f, lambda, big.len(), loss.lsdc_constant()).map_err(|e| e.to_string())?;
    let t_sparse = per_iteration_seconds(&sparse, &loss, big.labels(), 9)?;

    let small = gen_checkerboard(4_000, 4, 92).unwrap();
    let k = gram_full(&kernel, small.samples(), 20_000).map_err(|e| e.to_string())?;
    let full = prepare_full(k, lambda, small.len(), loss.lsdc_constant()).map_err(|e| e.to_string())?;
    let t_full = per_iteration_seconds(&full, &loss, small.labels(), 5)?;

    let ratio = t_full / t_sparse;
    let detail = format!(
        "sparse m=20000 r=200: {:.2} ms/iter, full m=4000: {:.2} ms/iter, ratio {ratio:.1}",
        t_sparse * 1e3,
        t_full * 1e3
    );
    ensure!(ratio >= 10.0, "{detail} < 10");
    within_budget(start, Duration::from_secs(300), detail)
}

fn c10_bench_sweep() -> Outcome {
    let expected: Vec<LossKind> = [
        "least_squares",
        "smoothed_hinge:p=10",
        "squared_hinge",
        "truncated_sq_hinge:a=2",
        "truncated_ls:a=2",
        "smoothed_ramp1:a=2",
        "smoothed_ramp2:p=10",
        "gen_nonconvex:a=2,b=2,c=2",
        "gen_nonconvex:a=2,b=2,c=4",
        "gen_nonconvex:a=2,b=3,c=4",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/sweeps");
    for name in ["checkerboard.toml", "checkerboard_flip20.toml"] {
        let text = std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let doc: toml::Table = toml::from_str(&text).map_err(|e| format!("{name}: {e}"))?;
        let losses: Vec<LossKind> = doc["losses"]
            .as_array()
            .ok_or("losses must be an array")?
            .iter()
            .map(|v| v.as_str().unwrap().parse().unwrap())
            .collect();
        ensure!(losses == expected, "{name}: loss list {losses:?}");
        ensure!(
            losses.iter().all(|k| k.supports(Task::Classification)),
            "{name}: non-classification loss"
        );
    }
    Ok("full-scale benchmark tables are out of desk scope; covered by criteria 7-9 and the bundled ten-loss sweep files".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("M(a,b,c) golden values", c1_m_abc),
        ("DC-part convexity suite", c2_dc_convexity),
        ("LSSVM first-iterate equivalence", c3_lssvm_first_iterate),
        ("objective monotonicity", c4_monotone_objective),
        ("strategy equivalence oracle", c5_strategy_equivalence),
        ("stationarity oracle", c6_stationarity),
        ("sinc regression reproduction", c7_sinc),
        ("robustness on xor with outliers", c8_xor_robustness),
        ("scaling sanity", c9_scaling),
        ("desk-scale substitutes for benchmark tables", c10_bench_sweep),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if only.is_some_and(|n| n != number) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS criterion {number:>2}: {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {number:>2}: {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
