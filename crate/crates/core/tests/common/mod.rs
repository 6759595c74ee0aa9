#![allow(dead_code)]

use proptest::prelude::*;
use unisvm::losses::LossKind;
use unisvm::Task;

/// Every catalog loss at the parameters used throughout the tests.
pub fn catalog() -> Vec<(LossKind, Task)> {
    use LossKind::*;
    let c = Task::Classification;
    let r = Task::Regression;
    vec![
        (LeastSquares, c),
        (TruncatedLs { a: 2.0 }, c),
        (SquaredHinge, c),
        (TruncatedSqHinge { a: 2.0 }, c),
        (SmoothedHinge { p: 10.0 }, c),
        (SmoothedRamp1 { a: 2.0 }, c),
        (SmoothedRamp2 { a: 2.0, p: 10.0 }, c),
        (GenNonconvex { a: 2.0, b: 2.0, c: 2.0 }, c),
        (GenNonconvex { a: 2.0, b: 3.0, c: 4.0 }, c),
        (LeastSquares, r),
        (TruncatedLs { a: 0.5 }, r),
        (SmoothedEpsInsensitive { p: 100.0, eps: 0.01 }, r),
        (Huber { delta: 0.1 }, r),
        (SmoothedAbsolute { p: 100.0 }, r),
        (TruncatedHuber { delta: 0.1, a: 1.0 }, r),
    ]
}

/// Random parameterizations of every loss family.
pub fn any_loss() -> impl Strategy<Value = LossKind> {
    use LossKind::*;
    let a = 0.5..5.0f64;
    let p = 1.0..200.0f64;
    prop_oneof![
        Just(LeastSquares),
        a.clone().prop_map(|a| TruncatedLs { a }),
        Just(SquaredHinge),
        a.clone().prop_map(|a| TruncatedSqHinge { a }),
        p.clone().prop_map(|p| SmoothedHinge { p }),
        a.clone().prop_map(|a| SmoothedRamp1 { a }),
        (a.clone(), p.clone()).prop_map(|(a, p)| SmoothedRamp2 { a, p }),
        (a.clone(), 0.5..5.0f64, 2.0..6.0f64).prop_map(|(a, b, c)| GenNonconvex { a, b, c }),
        (p.clone(), 0.001..0.5f64).prop_map(|(p, eps)| SmoothedEpsInsensitive { p, eps }),
        (0.01..2.0f64).prop_map(|delta| Huber { delta }),
        p.prop_map(|p| SmoothedAbsolute { p }),
        (0.01..1.0f64, 0.0..3.0f64).prop_map(|(delta, extra)| TruncatedHuber { delta, a: delta + extra }),
    ]
}

/// `u` in `[-5, 5]` with step `1e-3`.
pub fn grid() -> impl Iterator<Item = f64> {
    (-5000..=5000).map(|i| i as f64 * 1e-3)
}

/// Points where `kind` has a kink or a parameter-dependent breakpoint.
pub fn breakpoints(kind: &LossKind) -> Vec<f64> {
    use LossKind::*;
    match *kind {
        TruncatedLs { a } => vec![a.sqrt(), -a.sqrt()],
        TruncatedSqHinge { a } => vec![0.0, a.sqrt()],
        SquaredHinge => vec![0.0],
        SmoothedRamp1 { a } => vec![0.0, a / 2.0, a],
        GenNonconvex { .. } => vec![0.0],
        Huber { delta } => vec![delta, -delta],
        TruncatedHuber { delta, a } => vec![delta, -delta, a, -a],
        _ => vec![],
    }
}
