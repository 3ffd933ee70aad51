//! Two-point Gaussian zeroth-order gradient descent with the normalized
//! stepsize `η_t = 1 / (4 L ‖u_t‖²)`, instrumented per iteration.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::oracles::{evaluate, gradient_reference, ProblemSpec, QueryLedger};
use crate::sampling::{norm_sq, projection_ratio, sample_direction, Direction, SeedStream};

/// Gradients with a smaller norm are treated as zero when defining `ζ_t`.
pub const ZERO_GRADIENT_NORM: f64 = 1e-14;

/// Everything one run of the method needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub horizon: u64,
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// The `L` fed to the stepsize.
    pub l_used: f64,
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RunParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(ZoError::invalid("horizon T must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(ZoError::invalid("smoothing radius alpha must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ZoError::invalid("confidence delta must lie in (0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ZoError::invalid("target epsilon must be positive"));
        }
        if !(self.l_used.is_finite() && self.l_used > 0.0) {
            return Err(ZoError::invalid("stepsize constant L must be positive"));
        }
        Ok(())
    }

    pub fn stream(&self) -> SeedStream {
        SeedStream::new(self.master_seed, self.stream_index)
    }
}

/// Diagnostics for iteration `t`, all measured at `x_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub f_before: f64,
    /// `‖∇f(x_t)‖²`.
    pub grad_norm_sq: f64,
    pub zeta: f64,
    pub u_norm_sq: f64,
    /// Finite-difference residual `β_t`.
    pub beta: f64,
    /// Smoothing error `Δ_{α,t} = η β²/2 + L η² β² ‖u‖²`.
    pub delta_alpha: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub steps: Vec<StepRecord>,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub queries: QueryLedger,
    pub rejections: u64,
    /// Set when the oracle overflowed; the record then holds the completed
    /// prefix only.
    pub aborted: Option<String>,
}

impl TrajectoryRecord {
    /// `f(x_{t+1})` for step `t`.
    pub fn f_after(&self, t: usize) -> f64 {
        self.steps
            .get(t + 1)
            .map(|s| s.f_before)
            .unwrap_or(self.f_final)
    }

    /// `(1/T) Σ ‖∇f(x_t)‖²`.
    pub fn average_grad_norm_sq(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.grad_norm_sq).sum::<f64>() / self.steps.len() as f64
    }

    pub fn min_grad_norm_sq(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.grad_norm_sq)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }
}

/// Difference quotient `(f(x+αu) - f(x-αu)) / (2α)`, charging two queries.
fn difference_quotient(
    problem: &ProblemSpec,
    x: &[f64],
    u: &Direction,
    alpha: f64,
    ledger: &mut QueryLedger,
) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ZoError::invalid("smoothing radius alpha must be positive"));
    }
    if u.dim() != x.len() {
        return Err(ZoError::invalid("direction and point differ in length"));
    }
    let plus: Vec<f64> = x.iter().zip(u.as_slice()).map(|(a, b)| a + alpha * b).collect();
    let minus: Vec<f64> = x.iter().zip(u.as_slice()).map(|(a, b)| a - alpha * b).collect();
    let f_plus = evaluate(problem, &plus, ledger)?;
    let f_minus = evaluate(problem, &minus, ledger)?;
    Ok((f_plus - f_minus) / (2.0 * alpha))
}

/// The two-point estimator `g(x) = ((f(x+αu) - f(x-αu)) / (2α)) u`.
pub fn two_point_gradient(
    problem: &ProblemSpec,
    x: &[f64],
    u: &Direction,
    alpha: f64,
    ledger: &mut QueryLedger,
) -> Result<Vec<f64>> {
    let c = difference_quotient(problem, x, u, alpha, ledger)?;
    Ok(u.as_slice().iter().map(|v| c * v).collect())
}

/// `β = (f(x+αu) - f(x-αu)) / (2α) - u·∇f(x)`. Not charged to any run.
pub fn finite_difference_residual(
    problem: &ProblemSpec,
    x: &[f64],
    u: &Direction,
    alpha: f64,
) -> Result<f64> {
    let mut scratch = QueryLedger::new();
    let c = difference_quotient(problem, x, u, alpha, &mut scratch)?;
    let g = gradient_reference(problem, x)?;
    Ok(c - crate::sampling::dot(u.as_slice(), &g))
}

/// `x - g / (4 L ‖u‖²)`.
pub fn step(x: &[f64], g: &[f64], u: &Direction, l_used: f64) -> Result<Vec<f64>> {
    if x.len() != g.len() || x.len() != u.dim() {
        return Err(ZoError::invalid("step operands differ in length"));
    }
    if !(l_used.is_finite() && l_used > 0.0) {
        return Err(ZoError::invalid("stepsize constant L must be positive"));
    }
    let eta = 1.0 / (4.0 * l_used * u.norm_sq());
    Ok(x.iter().zip(g).map(|(a, b)| a - eta * b).collect())
}

/// Runs `T` iterations from `problem.x0`.
///
/// Parameter errors are returned as `Err`. An oracle overflow mid-run yields
/// `Ok` with the completed prefix and `aborted` set.
pub fn run_trajectory(problem: &ProblemSpec, params: &RunParams) -> Result<TrajectoryRecord> {
    params.validate()?;
    let d = problem.dim();
    let l = params.l_used;
    let alpha = params.alpha;
    let mut stream = params.stream();
    let mut ledger = QueryLedger::new();
    let mut x = problem.x0.clone();
    let mut steps = Vec::with_capacity(params.horizon as usize);
    let mut aborted = None;

    for t in 0..params.horizon {
        let f_before = problem.value(&x);
        let grad = match gradient_reference(problem, &x) {
            Ok(g) => g,
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        };
        let grad_norm_sq = norm_sq(&grad);
        let u = sample_direction(&mut stream, d)?;
        let u_norm_sq = u.norm_sq();

        let zeta = if grad_norm_sq.sqrt() >= ZERO_GRADIENT_NORM {
            projection_ratio(u.as_slice(), &grad, u_norm_sq, grad_norm_sq)
        } else {
            // first standard basis vector
            let u0 = u.as_slice()[0];
            if d == 1 {
                1.0
            } else {
                (u0 * u0 / u_norm_sq).clamp(0.0, 1.0)
            }
        };

        let coef = match difference_quotient(problem, &x, &u, alpha, &mut ledger) {
            Ok(c) => c,
            Err(e @ ZoError::OracleOverflow { .. }) => {
                aborted = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let beta = coef - crate::sampling::dot(u.as_slice(), &grad);
        let eta = 1.0 / (4.0 * l * u_norm_sq);
        let delta_alpha = eta * beta * beta / 2.0 + l * eta * eta * beta * beta * u_norm_sq;

        let scale = eta * coef;
        for (xi, ui) in x.iter_mut().zip(u.as_slice()) {
            *xi -= scale * ui;
        }

        steps.push(StepRecord {
            t,
            f_before,
            grad_norm_sq,
            zeta,
            u_norm_sq,
            beta,
            delta_alpha,
            eta,
        });

        if x.iter().any(|v| !v.is_finite()) {
            aborted = Some("iterate became non-finite".to_string());
            break;
        }
    }

    let f_final = problem.value(&x);
    Ok(TrajectoryRecord {
        steps,
        x_final: x,
        f_final,
        queries: ledger,
        rejections: stream.rejections(),
        aborted,
    })
}

pub const TRAJECTORY_CSV_HEADER: [&str; 8] = [
    "t",
    "f",
    "grad_norm_sq",
    "zeta",
    "u_norm_sq",
    "beta",
    "delta_alpha",
    "eta",
];

/// One row per step, header first.
pub fn write_trajectory_csv<W: Write>(record: &TrajectoryRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| ZoError::Serialization(e.to_string());
    w.write_record(TRAJECTORY_CSV_HEADER).map_err(ser)?;
    for s in &record.steps {
        w.write_record(&[
            s.t.to_string(),
            s.f_before.to_string(),
            s.grad_norm_sq.to_string(),
            s.zeta.to_string(),
            s.u_norm_sq.to_string(),
            s.beta.to_string(),
            s.delta_alpha.to_string(),
            s.eta.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| ZoError::Serialization(e.to_string()))
}

pub fn save_trajectory_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| ZoError::io(path, e))?;
    write_trajectory_csv(record, std::io::BufWriter::new(file)).map_err(|e| match e {
        ZoError::Serialization(msg) => ZoError::io(path, std::io::Error::other(msg)),
        other => other,
    })
}
