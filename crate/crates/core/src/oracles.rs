//! Function-value oracles, query accounting and the instrumented test suite.
//!
//! A [`ProblemSpec`] pairs an objective with the analytic constants the
//! schedules and bounds need. The level-set radius is attached only when it
//! has a closed form.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::sampling::{dot, norm_sq};

/// Which of the three guarantees a problem is meant to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[serde(alias = "sc")]
    StronglyConvex,
    #[serde(alias = "cvx")]
    Convex,
    #[serde(alias = "nc")]
    Nonconvex,
}

impl Regime {
    pub fn short_name(self) -> &'static str {
        match self {
            Regime::StronglyConvex => "sc",
            Regime::Convex => "cvx",
            Regime::Nonconvex => "nc",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::StronglyConvex => "strongly_convex",
            Regime::Convex => "convex",
            Regime::Nonconvex => "nonconvex",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = ZoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc" | "strongly_convex" | "strongly-convex" => Ok(Regime::StronglyConvex),
            "cvx" | "convex" => Ok(Regime::Convex),
            "nc" | "nonconvex" | "non-convex" => Ok(Regime::Nonconvex),
            other => Err(ZoError::invalid(format!("unknown regime `{other}`"))),
        }
    }
}

/// A smooth objective on `R^d` with an analytic gradient.
pub trait SmoothObjective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `sup { dist(x, X*) : f(x) - f* <= gap }`, when it has a closed form.
    fn sublevel_radius(&self, _gap: f64) -> Option<f64> {
        None
    }

    /// `dist(x, X*)`, when it has a closed form.
    fn distance_to_solutions(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// `f(x) = ½ Σ λ_i x_i²` with `λ_i >= 0`.
///
/// Covers the isotropic, anisotropic and singular suite members. The
/// solution set is the null space of `diag(λ)`, so distances ignore the
/// coordinates with `λ_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    lambda: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(ZoError::InvalidDimension);
        }
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(ZoError::invalid("quadratic spectrum must be finite and nonnegative"));
        }
        if lambda.iter().all(|l| *l == 0.0) {
            return Err(ZoError::invalid("quadratic spectrum must have a positive entry"));
        }
        Ok(Self { lambda })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.lambda
    }

    pub fn largest(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    pub fn smallest(&self) -> f64 {
        self.lambda.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn smallest_positive(&self) -> f64 {
        self.lambda
            .iter()
            .copied()
            .filter(|l| *l > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

impl SmoothObjective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.lambda.iter().zip(x).map(|(l, v)| l * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.lambda.iter().zip(x).map(|(l, v)| l * v).collect()
    }

    // dist(x, X*)² = Σ_{λ_i>0} x_i² <= 2 f(x) / λ_min⁺, with equality along
    // the eigenvector of the smallest positive eigenvalue.
    fn sublevel_radius(&self, gap: f64) -> Option<f64> {
        Some((2.0 * gap.max(0.0) / self.smallest_positive()).sqrt())
    }

    fn distance_to_solutions(&self, x: &[f64]) -> Option<f64> {
        Some(
            self.lambda
                .iter()
                .zip(x)
                .filter(|(l, _)| **l > 0.0)
                .map(|(_, v)| v * v)
                .sum::<f64>()
                .sqrt(),
        )
    }
}

/// `f(x) = log Σ_i exp(a_i·x + b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExp {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl LogSumExp {
    pub fn new(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(ZoError::InvalidDimension);
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(ZoError::invalid("log-sum-exp rows must share one length"));
        }
        if offsets.len() != rows.len() {
            return Err(ZoError::invalid("log-sum-exp needs one offset per row"));
        }
        Ok(Self { rows, offsets })
    }

    /// `log Σ_i (e^{x_i} + e^{-x_i})`: rows `[I; -I]`, zero offsets.
    /// Minimized uniquely at the origin with value `log(2d)`.
    pub fn symmetric(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(ZoError::InvalidDimension);
        }
        let mut rows = Vec::with_capacity(2 * d);
        for sign in [1.0, -1.0] {
            for i in 0..d {
                let mut r = vec![0.0; d];
                r[i] = sign;
                rows.push(r);
            }
        }
        Self::new(rows, vec![0.0; 2 * d])
    }

    /// Conservative smoothness constant `σ_max(A)²`.
    pub fn lipschitz_bound(&self) -> f64 {
        let m = self.rows.len();
        let d = self.rows[0].len();
        let a = nalgebra::DMatrix::from_fn(m, d, |i, j| self.rows[i][j]);
        a.singular_values().max().powi(2)
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offsets)
            .map(|(r, b)| dot(r, x) + b)
            .collect()
    }
}

impl SmoothObjective for LogSumExp {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let z = self.logits(x);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let z = self.logits(x);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut g = vec![0.0; self.dim()];
        for (row, wi) in self.rows.iter().zip(&w) {
            let p = wi / total;
            for (gj, aj) in g.iter_mut().zip(row) {
                *gj += p * aj;
            }
        }
        g
    }
}

/// `f(x) = (w/2) ‖x‖² + Σ_i cos(x_i)`.
///
/// The Hessian is `diag(w - cos x_i)`, so `L = w + 1`. With `w = 1` the
/// infimum is `d`, attained at the origin; for `w < 1` the function is
/// genuinely nonconvex and the per-coordinate minimizer is found numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineRegularized {
    d: usize,
    weight: f64,
    coord_min: f64,
    coord_argmin: f64,
}

impl CosineRegularized {
    pub fn new(d: usize, weight: f64) -> Result<Self> {
        if d == 0 {
            return Err(ZoError::InvalidDimension);
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ZoError::invalid("cosine weight must be positive"));
        }
        let (coord_argmin, coord_min) = minimize_coordinate(weight);
        Ok(Self {
            d,
            weight,
            coord_min,
            coord_argmin,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn infimum(&self) -> f64 {
        self.d as f64 * self.coord_min
    }

    pub fn minimizer(&self) -> Vec<f64> {
        vec![self.coord_argmin; self.d]
    }
}

// Global minimum of g(t) = w t²/2 + cos t. Since g(t) >= w t²/2 - 1 and
// g(0) = 1, every minimizer satisfies |t| <= 2/sqrt(w); g is even, so scan
// [0, 2/sqrt(w)] and polish with Newton on g'(t) = w t - sin t.
fn minimize_coordinate(w: f64) -> (f64, f64) {
    let g = |t: f64| 0.5 * w * t * t + t.cos();
    if w >= 1.0 {
        return (0.0, 1.0);
    }
    let hi = 2.0 / w.sqrt();
    let steps = 20_000;
    let (mut best_t, mut best_g) = (0.0, g(0.0));
    for i in 1..=steps {
        let t = hi * i as f64 / steps as f64;
        let v = g(t);
        if v < best_g {
            best_t = t;
            best_g = v;
        }
    }
    let mut t = best_t;
    for _ in 0..50 {
        let curv = w - t.cos();
        if curv <= 0.0 {
            break;
        }
        let next = t - (w * t - t.sin()) / curv;
        if (next - t).abs() < 1e-15 {
            t = next;
            break;
        }
        t = next;
    }
    if g(t) <= best_g {
        (t, g(t))
    } else {
        (best_t, best_g)
    }
}

impl SmoothObjective for CosineRegularized {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| 0.5 * self.weight * v * v + v.cos()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.weight * v - v.sin()).collect()
    }
}

/// An objective plus the analytic metadata the theory layer consumes.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub smoothness_l: f64,
    /// Zero means "not strongly convex".
    pub strong_convexity_mu: f64,
    pub regime: Regime,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub x0: Vec<f64>,
    objective: Arc<dyn SmoothObjective>,
}

impl ProblemSpec {
    /// Assembles a problem from any objective, validating the metadata.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn SmoothObjective>,
        smoothness_l: f64,
        strong_convexity_mu: f64,
        regime: Regime,
        f_star: Option<f64>,
        x_star: Option<Vec<f64>>,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let d = objective.dim();
        if d == 0 {
            return Err(ZoError::InvalidDimension);
        }
        if !(smoothness_l.is_finite() && smoothness_l > 0.0) {
            return Err(ZoError::invalid("smoothness constant L must be positive"));
        }
        if !(strong_convexity_mu.is_finite() && strong_convexity_mu >= 0.0) {
            return Err(ZoError::invalid("strong convexity modulus must be nonnegative"));
        }
        if regime == Regime::StronglyConvex
            && !(strong_convexity_mu > 0.0 && strong_convexity_mu <= smoothness_l)
        {
            return Err(ZoError::invalid(
                "a strongly convex problem needs 0 < mu <= L",
            ));
        }
        if x0.len() != d {
            return Err(ZoError::invalid(format!(
                "x0 has length {} but the objective has dimension {d}",
                x0.len()
            )));
        }
        if let Some(xs) = &x_star {
            if xs.len() != d {
                return Err(ZoError::invalid("x_star has the wrong length"));
            }
        }
        check_finite(&x0)?;
        Ok(Self {
            name: name.into(),
            smoothness_l,
            strong_convexity_mu,
            regime,
            f_star,
            x_star,
            x0,
            objective,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn objective(&self) -> &dyn SmoothObjective {
        self.objective.as_ref()
    }

    /// Uncharged function value, for diagnostics only.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// `Δ₀ = f(x₀) - f*`, when `f*` is known.
    pub fn initial_gap(&self) -> Option<f64> {
        self.f_star.map(|fs| (self.value(&self.x0) - fs).max(0.0))
    }

    /// Replaces the starting point, keeping every other field.
    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(ZoError::invalid("x0 has the wrong length"));
        }
        check_finite(&x0)?;
        self.x0 = x0;
        Ok(self)
    }

    /// Moves the start to `x* + s·1` with `s >= 0` chosen so that
    /// `f(x₀) - f* = gap` (bisection on the ray).
    pub fn with_initial_gap(self, gap: f64) -> Result<Self> {
        if !(gap.is_finite() && gap >= 0.0) {
            return Err(ZoError::invalid("initial gap must be nonnegative"));
        }
        let (Some(xs), Some(fs)) = (self.x_star.clone(), self.f_star) else {
            return Err(ZoError::invalid(
                "an initial gap needs a known minimizer; give x0 explicitly",
            ));
        };
        let at = |s: f64| -> Vec<f64> { xs.iter().map(|v| v + s).collect() };
        let h = |s: f64| self.value(&at(s)) - fs;
        if gap == 0.0 {
            return self.with_x0(xs);
        }
        let mut hi = 1.0;
        while h(hi) < gap {
            hi *= 2.0;
            if hi > 1e150 {
                return Err(ZoError::invalid("initial gap not reachable along the ray"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.with_x0(at(hi))
    }
}

/// Counts charged function evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub count: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }
}

fn check_point(problem: &ProblemSpec, x: &[f64]) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(ZoError::invalid(format!(
            "point has length {} but the problem has dimension {}",
            x.len(),
            problem.dim()
        )));
    }
    check_finite(x)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ZoError::invalid("point has non-finite coordinates"))
    }
}

/// Charged oracle call: returns `f(x)` and adds one query to the ledger.
pub fn evaluate(problem: &ProblemSpec, x: &[f64], ledger: &mut QueryLedger) -> Result<f64> {
    check_point(problem, x)?;
    ledger.count += 1;
    let value = problem.objective.value(x);
    if !value.is_finite() {
        return Err(ZoError::OracleOverflow {
            point: x.to_vec(),
            value,
        });
    }
    Ok(value)
}

/// Analytic gradient for instrumentation. Never charged.
pub fn gradient_reference(problem: &ProblemSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_point(problem, x)?;
    let g = problem.objective.gradient(x);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(ZoError::OracleOverflow {
            point: x.to_vec(),
            value: norm_sq(&g),
        });
    }
    Ok(g)
}

/// `R(B) = sup { dist(x, X*) : f(x) <= f(x₀) + B }`; `None` when the problem
/// has no closed form for it.
pub fn level_radius(problem: &ProblemSpec, enlargement: f64) -> Result<Option<f64>> {
    if !(enlargement.is_finite() && enlargement >= 0.0) {
        return Err(ZoError::invalid("level-set enlargement B must be nonnegative"));
    }
    let Some(gap) = problem.initial_gap() else {
        return Ok(None);
    };
    Ok(problem.objective.sublevel_radius(gap + enlargement))
}

/// `dist(x, X*)` when available in closed form.
pub fn distance_to_solutions(problem: &ProblemSpec, x: &[f64]) -> Option<f64> {
    problem.objective.distance_to_solutions(x)
}

/// Named constructors for the built-in test functions.
pub mod suite {
    use super::*;

    /// `½ x²` in one dimension started at `x₀ = 1`.
    pub fn quad1d() -> ProblemSpec {
        let mut p = isotropic_quadratic(1, 1.0)
            .and_then(|p| p.with_x0(vec![1.0]))
            .expect("fixed parameters are valid");
        p.name = "quad1d".into();
        p
    }

    /// `½ c ‖x‖²`, so `L = mu = c`. Starts at `Δ₀ = 1`.
    pub fn isotropic_quadratic(d: usize, curvature: f64) -> Result<ProblemSpec> {
        if !(curvature.is_finite() && curvature > 0.0) {
            return Err(ZoError::invalid("curvature must be positive"));
        }
        quadratic("isotropic_quadratic", vec![curvature; d])
    }

    /// `½ xᵀ diag(λ) x` with `λ` evenly spaced over `[mu, L]`.
    pub fn anisotropic_quadratic(d: usize, mu: f64, l: f64) -> Result<ProblemSpec> {
        if !(mu > 0.0 && mu <= l && l.is_finite()) {
            return Err(ZoError::invalid("anisotropic quadratic needs 0 < mu <= L"));
        }
        quadratic("anisotropic_quadratic", spaced(d, mu, l))
    }

    /// `½ xᵀ diag(0, λ₂, …, λ_d) x` with the positive part evenly spaced over
    /// `[nu, L]`: convex, not strongly convex, solution set the first axis.
    pub fn singular_quadratic(d: usize, nu: f64, l: f64) -> Result<ProblemSpec> {
        if d < 2 {
            return Err(ZoError::invalid("singular quadratic needs d >= 2"));
        }
        if !(nu > 0.0 && nu <= l && l.is_finite()) {
            return Err(ZoError::invalid("singular quadratic needs 0 < nu <= L"));
        }
        let mut lambda = vec![0.0];
        lambda.extend(spaced(d - 1, nu, l));
        quadratic("singular_quadratic", lambda)
    }

    /// Quadratic with an explicit diagonal spectrum. The regime is strongly
    /// convex when every entry is positive and convex otherwise.
    pub fn quadratic(name: &str, lambda: Vec<f64>) -> Result<ProblemSpec> {
        let q = DiagonalQuadratic::new(lambda)?;
        let d = q.dim();
        let (l, mu) = (q.largest(), q.smallest());
        let regime = if mu > 0.0 {
            Regime::StronglyConvex
        } else {
            Regime::Convex
        };
        ProblemSpec::new(
            name,
            Arc::new(q),
            l,
            mu,
            regime,
            Some(0.0),
            Some(vec![0.0; d]),
            vec![0.0; d],
        )?
        .with_initial_gap(1.0)
    }

    /// Symmetric log-sum-exp `log Σ (e^{x_i} + e^{-x_i})`, `f* = log 2d`.
    pub fn log_sum_exp(d: usize) -> Result<ProblemSpec> {
        let f = LogSumExp::symmetric(d)?;
        let l = f.lipschitz_bound();
        ProblemSpec::new(
            "log_sum_exp",
            Arc::new(f),
            l,
            0.0,
            Regime::Convex,
            Some((2.0 * d as f64).ln()),
            Some(vec![0.0; d]),
            vec![0.0; d],
        )?
        .with_initial_gap(1.0)
    }

    /// Log-sum-exp over arbitrary affine forms. `f*` is unknown, so an
    /// explicit `x0` is required and schedules need user-supplied constants.
    pub fn log_sum_exp_affine(
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        x0: Vec<f64>,
    ) -> Result<ProblemSpec> {
        let f = LogSumExp::new(rows, offsets)?;
        let l = f.lipschitz_bound();
        ProblemSpec::new("log_sum_exp", Arc::new(f), l, 0.0, Regime::Convex, None, None, x0)
    }

    /// `(w/2)‖x‖² + Σ cos x_i` with `L = w + 1`, tagged nonconvex.
    pub fn cosine_regularized(d: usize, weight: f64) -> Result<ProblemSpec> {
        let f = CosineRegularized::new(d, weight)?;
        let (f_star, x_star) = (f.infimum(), f.minimizer());
        ProblemSpec::new(
            "cosine_regularized",
            Arc::new(f),
            weight + 1.0,
            0.0,
            Regime::Nonconvex,
            Some(f_star),
            Some(x_star.clone()),
            x_star,
        )?
        .with_initial_gap(1.0)
    }

    fn spaced(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![hi],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Names accepted in experiment configuration files.
    pub const NAMES: &[&str] = &[
        "quad1d",
        "isotropic_quadratic",
        "anisotropic_quadratic",
        "singular_quadratic",
        "quadratic",
        "log_sum_exp",
        "cosine_regularized",
    ];
}
