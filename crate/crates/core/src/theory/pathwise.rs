//! Deterministic per-iteration inequalities that must hold on every run.

use serde::{Deserialize, Serialize};

use crate::optimizer::TrajectoryRecord;

pub const DESCENT_REL_TOL: f64 = 1e-8;
pub const ABS_TOL: f64 = 1e-9;
pub const ETA_REL_TOL: f64 = 1e-12;

/// Constants the checks need. `l` is the value fed to the stepsize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwiseInputs {
    pub l: f64,
    pub alpha: f64,
    /// Enables the contraction check (together with `f_star`).
    pub mu: Option<f64>,
    pub f_star: Option<f64>,
}

/// Violation counts per inequality. `steps_checked` counts iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathwiseReport {
    pub steps_checked: u64,
    pub descent: u64,
    pub beta: u64,
    pub delta_alpha: u64,
    pub telescoping: u64,
    pub contraction: u64,
    pub stepsize: u64,
}

impl PathwiseReport {
    pub fn total_violations(&self) -> u64 {
        self.descent + self.beta + self.delta_alpha + self.telescoping + self.contraction + self.stepsize
    }

    pub fn merge(&mut self, other: &PathwiseReport) {
        self.steps_checked += other.steps_checked;
        self.descent += other.descent;
        self.beta += other.beta;
        self.delta_alpha += other.delta_alpha;
        self.telescoping += other.telescoping;
        self.contraction += other.contraction;
        self.stepsize += other.stepsize;
    }
}

/// Checks, for each recorded step `t`:
///
/// * descent: `f(x_{t+1}) ≤ f(x_t) - ζ_t ‖∇f(x_t)‖²/(16L) + Δ_{α,t} + 1e-8(1+|f(x_t)|)`;
/// * `|β_t| ≤ Lα‖u_t‖²/2 + 1e-9`;
/// * `Δ_{α,t} ≤ Lα²‖u_t‖²/16 + 1e-9`;
/// * telescoping: `f(x_{t+1}) ≤ f(x_t) + Δ_{α,t} + 1e-9`;
/// * contraction (when `μ` and `f*` are known):
///   `f(x_{t+1}) - f* ≤ (1 - μζ_t/(8L))(f(x_t) - f*) + Δ_{α,t} + 1e-8(1+|f(x_t)|)`;
/// * `4 L η_t ‖u_t‖² = 1` to `1e-12` relative.
pub fn check_pathwise(record: &TrajectoryRecord, inputs: &PathwiseInputs) -> PathwiseReport {
    let l = inputs.l;
    let alpha = inputs.alpha;
    let mut report = PathwiseReport::default();
    for (t, s) in record.steps.iter().enumerate() {
        let f_now = s.f_before;
        let f_next = record.f_after(t);
        let rel = DESCENT_REL_TOL * (1.0 + f_now.abs());
        report.steps_checked += 1;

        if f_next > f_now - s.zeta * s.grad_norm_sq / (16.0 * l) + s.delta_alpha + rel {
            report.descent += 1;
        }
        if s.beta.abs() > l * alpha * s.u_norm_sq / 2.0 + ABS_TOL {
            report.beta += 1;
        }
        if s.delta_alpha > l * alpha * alpha * s.u_norm_sq / 16.0 + ABS_TOL {
            report.delta_alpha += 1;
        }
        if f_next > f_now + s.delta_alpha + ABS_TOL {
            report.telescoping += 1;
        }
        if let (Some(mu), Some(fs)) = (inputs.mu, inputs.f_star) {
            let factor = 1.0 - mu * s.zeta / (8.0 * l);
            if f_next - fs > factor * (f_now - fs) + s.delta_alpha + rel {
                report.contraction += 1;
            }
        }
        if ((4.0 * l * s.eta * s.u_norm_sq) - 1.0).abs() > ETA_REL_TOL {
            report.stepsize += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{run_trajectory, RunParams};
    use crate::oracles::suite;

    #[test]
    fn suite_runs_are_clean() {
        let problems = [
            suite::anisotropic_quadratic(5, 0.2, 1.0).unwrap(),
            suite::log_sum_exp(4).unwrap(),
            suite::cosine_regularized(6, 1.0).unwrap(),
            suite::cosine_regularized(3, 0.5).unwrap(),
        ];
        for p in &problems {
            let params = RunParams {
                horizon: 300,
                alpha: 1e-2,
                delta: 0.1,
                epsilon: 0.1,
                l_used: p.smoothness_l,
                master_seed: 11,
                stream_index: 2,
            };
            let rec = run_trajectory(p, &params).unwrap();
            let mu = (p.strong_convexity_mu > 0.0).then_some(p.strong_convexity_mu);
            let report = check_pathwise(
                &rec,
                &PathwiseInputs {
                    l: p.smoothness_l,
                    alpha: 1e-2,
                    mu,
                    f_star: p.f_star,
                },
            );
            assert_eq!(report.steps_checked, 300);
            assert_eq!(report.total_violations(), 0, "{}: {report:?}", p.name);
        }
    }

    #[test]
    fn inflated_values_are_flagged() {
        let p = suite::quad1d();
        let params = RunParams {
            horizon: 3,
            alpha: 1e-3,
            delta: 0.1,
            epsilon: 0.1,
            l_used: 1.0,
            master_seed: 0,
            stream_index: 0,
        };
        let mut rec = run_trajectory(&p, &params).unwrap();
        rec.f_final += 1.0;
        rec.steps[0].beta = 1e6;
        let r = check_pathwise(
            &rec,
            &PathwiseInputs {
                l: 1.0,
                alpha: 1e-3,
                mu: Some(1.0),
                f_star: Some(0.0),
            },
        );
        assert_eq!(r.descent, 1);
        assert_eq!(r.telescoping, 1);
        assert_eq!(r.contraction, 1);
        assert_eq!(r.beta, 1);
    }
}
