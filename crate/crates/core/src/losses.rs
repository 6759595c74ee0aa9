//! Catalog of LS-DC losses.
//!
//! A margin loss `psi` is LS-DC with constant `A` when `A u^2 - psi(u)` is
//! convex. Classification losses are evaluated at `u = 1 - y f(x)`, regression
//! losses at `u = y - f(x)`. Non-LS-DC losses (hinge, ramp, epsilon-insensitive,
//! absolute) are represented only by their smoothed surrogates.

use std::fmt;
use std::str::FromStr;

use crate::data::Task;
use crate::error::{input, Error, Result};

/// A loss together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `u^2`
    LeastSquares,
    /// `min(u^2, a)`
    TruncatedLs { a: f64 },
    /// `u_+^2`
    SquaredHinge,
    /// `min(u_+^2, a)`
    TruncatedSqHinge { a: f64 },
    /// `log(1 + e^{pu}) / p`, a smooth hinge.
    SmoothedHinge { p: f64 },
    /// Piecewise-quadratic ramp with the ramp's support.
    SmoothedRamp1 { a: f64 },
    /// `log((1 + e^{pu}) / (1 + e^{p(u-a)})) / p`
    SmoothedRamp2 { a: f64, p: f64 },
    /// `a (1 - exp(-u_+^c / b))`
    GenNonconvex { a: f64, b: f64, c: f64 },
    /// `(log(1 + e^{-p(u+eps)}) + log(1 + e^{p(u-eps)})) / p`
    SmoothedEpsInsensitive { p: f64, eps: f64 },
    /// `u^2/(2 delta)` inside `|u| < delta`, `|u| - delta/2` outside.
    Huber { delta: f64 },
    /// `(log(1 + e^{-pu}) + log(1 + e^{pu})) / p`
    SmoothedAbsolute { p: f64 },
    /// Huber loss truncated at `|u| = a`: constant `huber(a)` beyond.
    TruncatedHuber { delta: f64, a: f64 },
}

/// Names accepted by [`LossKind::from_str`].
pub const LOSS_NAMES: [&str; 12] = [
    "least_squares",
    "truncated_ls",
    "squared_hinge",
    "truncated_sq_hinge",
    "smoothed_hinge",
    "smoothed_ramp1",
    "smoothed_ramp2",
    "gen_nonconvex",
    "smoothed_eps_insensitive",
    "huber",
    "smoothed_absolute",
    "truncated_huber",
];

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn huber(delta: f64, u: f64) -> f64 {
    let t = u.abs();
    if t < delta {
        u * u / (2.0 * delta)
    } else {
        t - delta / 2.0
    }
}

#[inline]
fn dhuber(delta: f64, u: f64) -> f64 {
    if u.abs() < delta {
        u / delta
    } else {
        u.signum()
    }
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::LeastSquares => "least_squares",
            LossKind::TruncatedLs { .. } => "truncated_ls",
            LossKind::SquaredHinge => "squared_hinge",
            LossKind::TruncatedSqHinge { .. } => "truncated_sq_hinge",
            LossKind::SmoothedHinge { .. } => "smoothed_hinge",
            LossKind::SmoothedRamp1 { .. } => "smoothed_ramp1",
            LossKind::SmoothedRamp2 { .. } => "smoothed_ramp2",
            LossKind::GenNonconvex { .. } => "gen_nonconvex",
            LossKind::SmoothedEpsInsensitive { .. } => "smoothed_eps_insensitive",
            LossKind::Huber { .. } => "huber",
            LossKind::SmoothedAbsolute { .. } => "smoothed_absolute",
            LossKind::TruncatedHuber { .. } => "truncated_huber",
        }
    }

    /// Parameters as `(key, value)` pairs in canonical order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            LossKind::LeastSquares | LossKind::SquaredHinge => vec![],
            LossKind::TruncatedLs { a }
            | LossKind::TruncatedSqHinge { a }
            | LossKind::SmoothedRamp1 { a } => vec![("a", a)],
            LossKind::SmoothedHinge { p } | LossKind::SmoothedAbsolute { p } => vec![("p", p)],
            LossKind::SmoothedRamp2 { a, p } => vec![("a", a), ("p", p)],
            LossKind::GenNonconvex { a, b, c } => vec![("a", a), ("b", b), ("c", c)],
            LossKind::SmoothedEpsInsensitive { p, eps } => vec![("p", p), ("eps", eps)],
            LossKind::Huber { delta } => vec![("delta", delta)],
            LossKind::TruncatedHuber { delta, a } => vec![("delta", delta), ("a", a)],
        }
    }

    pub fn supports(&self, task: Task) -> bool {
        match self {
            LossKind::LeastSquares | LossKind::TruncatedLs { .. } => true,
            LossKind::SquaredHinge
            | LossKind::TruncatedSqHinge { .. }
            | LossKind::SmoothedHinge { .. }
            | LossKind::SmoothedRamp1 { .. }
            | LossKind::SmoothedRamp2 { .. }
            | LossKind::GenNonconvex { .. } => task == Task::Classification,
            LossKind::SmoothedEpsInsensitive { .. }
            | LossKind::Huber { .. }
            | LossKind::SmoothedAbsolute { .. }
            | LossKind::TruncatedHuber { .. } => task == Task::Regression,
        }
    }

    /// Whether `psi` has a continuous derivative everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            LossKind::LeastSquares
            | LossKind::SquaredHinge
            | LossKind::SmoothedHinge { .. }
            | LossKind::SmoothedRamp1 { .. }
            | LossKind::SmoothedRamp2 { .. }
            | LossKind::SmoothedEpsInsensitive { .. }
            | LossKind::Huber { .. }
            | LossKind::SmoothedAbsolute { .. } => true,
            LossKind::GenNonconvex { c, .. } => *c >= 2.0,
            LossKind::TruncatedLs { .. }
            | LossKind::TruncatedSqHinge { .. }
            | LossKind::TruncatedHuber { .. } => false,
        }
    }

    fn validate(&self) -> Result<()> {
        for (key, value) in self.params() {
            if !(value > 0.0 && value.is_finite()) {
                return input(format!(
                    "{}: parameter {key} must be positive and finite, got {value}",
                    self.name()
                ));
            }
        }
        if let LossKind::GenNonconvex { c, .. } = self {
            if *c < 2.0 {
                return input(format!("gen_nonconvex: c must be >= 2, got {c}"));
            }
        }
        Ok(())
    }

    /// `psi(u)`.
    pub fn psi(&self, u: f64) -> f64 {
        match *self {
            LossKind::LeastSquares => u * u,
            LossKind::TruncatedLs { a } => (u * u).min(a),
            LossKind::SquaredHinge => {
                let t = u.max(0.0);
                t * t
            }
            LossKind::TruncatedSqHinge { a } => {
                let t = u.max(0.0);
                (t * t).min(a)
            }
            LossKind::SmoothedHinge { p } => softplus(p * u) / p,
            LossKind::SmoothedRamp1 { a } => {
                if u <= a / 2.0 {
                    let t = u.max(0.0);
                    2.0 / a * t * t
                } else {
                    let t = (a - u).max(0.0);
                    a - 2.0 / a * t * t
                }
            }
            LossKind::SmoothedRamp2 { a, p } => {
                if u <= a / 2.0 {
                    (softplus(p * u) - softplus(p * (u - a))) / p
                } else {
                    // softplus(x) = x + softplus(-x) keeps the plateau exact.
                    a + (softplus(-p * u) - softplus(p * (a - u))) / p
                }
            }
            LossKind::GenNonconvex { a, b, c } => {
                let t = u.max(0.0);
                -a * (-t.powf(c) / b).exp_m1()
            }
            LossKind::SmoothedEpsInsensitive { p, eps } => {
                (softplus(-p * (u + eps)) + softplus(p * (u - eps))) / p
            }
            LossKind::Huber { delta } => huber(delta, u),
            LossKind::SmoothedAbsolute { p } => (softplus(-p * u) + softplus(p * u)) / p,
            LossKind::TruncatedHuber { delta, a } => huber(delta, u.abs().min(a)),
        }
    }

    /// One element of the subdifferential of `psi` at `u`. Truncated losses
    /// return 0 on and beyond the truncation boundary.
    pub fn dpsi(&self, u: f64) -> f64 {
        match *self {
            LossKind::LeastSquares => 2.0 * u,
            LossKind::TruncatedLs { a } => {
                if u.abs() < a.sqrt() {
                    2.0 * u
                } else {
                    0.0
                }
            }
            LossKind::SquaredHinge => 2.0 * u.max(0.0),
            LossKind::TruncatedSqHinge { a } => {
                if u > 0.0 && u < a.sqrt() {
                    2.0 * u
                } else {
                    0.0
                }
            }
            LossKind::SmoothedHinge { p } => sigmoid(p * u),
            LossKind::SmoothedRamp1 { a } => {
                if u <= a / 2.0 {
                    4.0 / a * u.max(0.0)
                } else {
                    4.0 / a * (a - u).max(0.0)
                }
            }
            LossKind::SmoothedRamp2 { a, p } => sigmoid(p * u) - sigmoid(p * (u - a)),
            LossKind::GenNonconvex { a, b, c } => {
                if u <= 0.0 {
                    0.0
                } else {
                    a * c / b * u.powf(c - 1.0) * (-u.powf(c) / b).exp()
                }
            }
            LossKind::SmoothedEpsInsensitive { p, eps } => {
                sigmoid(p * (u - eps)) - sigmoid(-p * (u + eps))
            }
            LossKind::Huber { delta } => dhuber(delta, u),
            LossKind::SmoothedAbsolute { p } => sigmoid(p * u) - sigmoid(-p * u),
            LossKind::TruncatedHuber { delta, a } => {
                if u.abs() >= a {
                    0.0
                } else {
                    dhuber(delta, u)
                }
            }
        }
    }

    /// Smallest `A` for which `A u^2 - psi(u)` is convex.
    pub fn lsdc_bound(&self) -> f64 {
        match *self {
            LossKind::LeastSquares
            | LossKind::TruncatedLs { .. }
            | LossKind::SquaredHinge
            | LossKind::TruncatedSqHinge { .. } => 1.0,
            LossKind::SmoothedHinge { p } | LossKind::SmoothedRamp2 { p, .. } => p / 8.0,
            LossKind::SmoothedRamp1 { a } => 2.0 / a,
            LossKind::GenNonconvex { a, b, c } => {
                // c >= 2 is enforced on construction.
                m_abc(a, b, c).map(|m| m / 2.0).unwrap_or(f64::NAN)
            }
            LossKind::SmoothedEpsInsensitive { p, .. } | LossKind::SmoothedAbsolute { p } => {
                p / 4.0
            }
            LossKind::Huber { delta } | LossKind::TruncatedHuber { delta, .. } => {
                1.0 / (2.0 * delta)
            }
        }
    }
}

/// Peak curvature `M(a, b, c) = max_u psi''(u)` of the generalized nonconvex
/// loss `a (1 - exp(-u_+^c / b))`.
pub fn m_abc(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return input(format!("M(a,b,c) needs a, b > 0, got a={a}, b={b}"));
    }
    if !(c >= 2.0) || !c.is_finite() {
        return input(format!("M(a,b,c) needs c >= 2, got {c}"));
    }
    if c == 2.0 {
        // h(2) = 0: the curvature peaks at u = 0+ with value 2a/b.
        return Ok(2.0 * a / b);
    }
    let h = (3.0 * (c - 1.0) - (5.0 * c * c - 6.0 * c + 1.0).sqrt()) / (2.0 * c);
    Ok(a * c / b.powf(2.0 / c)
        * ((c - 1.0) * h.powf(1.0 - 2.0 / c) - c * h.powf(2.0 - 2.0 / c))
        * (-h).exp())
}

impl fmt::Display for LossKind {
    /// Canonical `name:key=value,...` form accepted by `from_str`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        for (i, (key, value)) in self.params().iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{key}={value}")?;
        }
        Ok(())
    }
}

fn unknown_loss(name: &str) -> Error {
    let hint = match name {
        "hinge" => " (hinge is not LS-DC; use smoothed_hinge)",
        "ramp" => " (ramp is not LS-DC; use smoothed_ramp1 or smoothed_ramp2)",
        "eps_insensitive" | "epsilon_insensitive" => {
            " (epsilon-insensitive is not LS-DC; use smoothed_eps_insensitive)"
        }
        "absolute" => " (absolute is not LS-DC; use huber or smoothed_absolute)",
        _ => "",
    };
    Error::Input(format!(
        "unknown loss `{name}`{hint}; available: {}",
        LOSS_NAMES.join(", ")
    ))
}

impl FromStr for LossKind {
    type Err = Error;

    /// Parses `name[:key=value,...]`. Missing parameters take the defaults
    /// of the benchmark loss list (`a = 2`, `p = 10` for classification
    /// smoothing, `p = 100` for regression smoothing, `delta = 0.1`,
    /// `eps = 0.01`, `b = 2`, `c = 2`). `;` is accepted as a separator too.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut given: Vec<(String, f64)> = Vec::new();
        for pair in rest.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("loss parameter `{pair}` is not key=value")))?;
            let key = match key.trim() {
                "epsilon" => "eps",
                k => k,
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("loss parameter {key} has bad value `{value}`")))?;
            if given.iter().any(|(k, _)| k == key) {
                return input(format!("loss parameter {key} given twice"));
            }
            given.push((key.to_string(), value));
        }
        let mut take = |key: &str, default: f64| -> f64 {
            match given.iter().position(|(k, _)| k == key) {
                Some(i) => given.remove(i).1,
                None => default,
            }
        };
        let kind = match name {
            "least_squares" => LossKind::LeastSquares,
            "truncated_ls" => LossKind::TruncatedLs { a: take("a", 2.0) },
            "squared_hinge" => LossKind::SquaredHinge,
            "truncated_sq_hinge" => LossKind::TruncatedSqHinge { a: take("a", 2.0) },
            "smoothed_hinge" => LossKind::SmoothedHinge { p: take("p", 10.0) },
            "smoothed_ramp1" => LossKind::SmoothedRamp1 { a: take("a", 2.0) },
            "smoothed_ramp2" => LossKind::SmoothedRamp2 {
                a: take("a", 2.0),
                p: take("p", 10.0),
            },
            "gen_nonconvex" => LossKind::GenNonconvex {
                a: take("a", 2.0),
                b: take("b", 2.0),
                c: take("c", 2.0),
            },
            "smoothed_eps_insensitive" => LossKind::SmoothedEpsInsensitive {
                p: take("p", 100.0),
                eps: take("eps", 0.01),
            },
            "huber" => LossKind::Huber {
                delta: take("delta", 0.1),
            },
            "smoothed_absolute" => LossKind::SmoothedAbsolute { p: take("p", 100.0) },
            "truncated_huber" => LossKind::TruncatedHuber {
                delta: take("delta", 0.1),
                a: take("a", 2.0),
            },
            other => return Err(unknown_loss(other)),
        };
        if let Some((key, _)) = given.first() {
            return input(format!("loss {name} has no parameter `{key}`"));
        }
        kind.validate()?;
        Ok(kind)
    }
}

/// A loss bound to a task and an LS-DC constant `A >= lsdc_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    lsdc_constant: f64,
    task: Task,
}

impl LossSpec {
    /// Uses the smallest valid constant `A = lsdc_bound`.
    pub fn new(kind: LossKind, task: Task) -> Result<Self> {
        kind.validate()?;
        if !kind.supports(task) {
            return input(format!("loss {} is not available for {task} tasks", kind.name()));
        }
        Ok(Self {
            kind,
            lsdc_constant: kind.lsdc_bound(),
            task,
        })
    }

    /// Raises `A`; values below the loss's bound are rejected.
    pub fn with_lsdc_constant(mut self, a: f64) -> Result<Self> {
        let bound = self.kind.lsdc_bound();
        if !(a.is_finite() && a >= bound) {
            return input(format!(
                "LS-DC constant A = {a} is below the bound {bound} of {}",
                self.kind
            ));
        }
        self.lsdc_constant = a;
        Ok(self)
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// The constant `A`.
    pub fn lsdc_constant(&self) -> f64 {
        self.lsdc_constant
    }

    pub fn psi(&self, u: f64) -> f64 {
        self.kind.psi(u)
    }

    pub fn dpsi(&self, u: f64) -> f64 {
        self.kind.dpsi(u)
    }

    /// Writes the working vector `v` for fitted values `xi` into `out`
    /// (labels are assumed valid for the task).
    pub(crate) fn working_vector_into(&self, y: &[f64], xi: &[f64], out: &mut [f64]) {
        match self.task {
            Task::Classification => {
                for ((o, &yi), &fi) in out.iter_mut().zip(y).zip(xi) {
                    *o = -yi * self.kind.dpsi(1.0 - yi * fi);
                }
            }
            Task::Regression => {
                for ((o, &yi), &fi) in out.iter_mut().zip(y).zip(xi) {
                    *o = -self.kind.dpsi(yi - fi);
                }
            }
        }
    }

    /// Mean loss `(1/m) sum psi(u_i)` at fitted values `xi`.
    pub(crate) fn mean_loss(&self, y: &[f64], xi: &[f64]) -> f64 {
        let total: f64 = match self.task {
            Task::Classification => y.iter().zip(xi).map(|(&yi, &fi)| self.psi(1.0 - yi * fi)).sum(),
            Task::Regression => y.iter().zip(xi).map(|(&yi, &fi)| self.psi(yi - fi)).sum(),
        };
        total / y.len() as f64
    }
}

fn check_pair(task: Task, y: &[f64], xi: &[f64]) -> Result<()> {
    if y.len() != xi.len() {
        return input(format!("{} labels but {} fitted values", y.len(), xi.len()));
    }
    if task == Task::Classification {
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return input(format!("classification label {bad} is not -1 or +1"));
        }
    }
    Ok(())
}

/// `u_i = 1 - y_i xi_i` (classification) or `u_i = y_i - xi_i` (regression).
pub fn residual(task: Task, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    check_pair(task, y, xi)?;
    Ok(match task {
        Task::Classification => y.iter().zip(xi).map(|(a, f)| 1.0 - a * f).collect(),
        Task::Regression => y.iter().zip(xi).map(|(a, f)| a - f).collect(),
    })
}

/// Working vector `v_i = -y_i psi'(1 - y_i xi_i)` (classification) or
/// `v_i = -psi'(y_i - xi_i)` (regression).
pub fn v_update(loss: &LossSpec, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    check_pair(loss.task, y, xi)?;
    let mut v = vec![0.0; y.len()];
    loss.working_vector_into(y, xi, &mut v);
    Ok(v)
}
