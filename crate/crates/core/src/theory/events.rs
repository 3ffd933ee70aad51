//! The probabilistic events the theorems condition on, evaluated on a
//! recorded trajectory.
//!
//! Failure probabilities are split as in the proofs. When `mu` is given the
//! strongly convex split applies (`δ/3` for each of `E_{ρ,1}`, `E_{ρ,2}`,
//! `E_α`); otherwise every event gets `δ/2`. `E_α^cvx` is always checked
//! against `A_{α,T}(δ)`, which holds with probability `1 - δ/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::optimizer::TrajectoryRecord;

use super::bounds::BoundInputs;
use super::concentration::{projection_floor, rho_weights, suffix_event_floor, FloorMode};

/// Failure probability allotted to each event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventShares {
    pub rho1: f64,
    pub rho2: f64,
    pub alpha: Option<f64>,
    pub alpha_cvx: f64,
    pub weighted: Option<f64>,
}

impl EventShares {
    pub fn for_inputs(inputs: &BoundInputs) -> Self {
        let half = inputs.delta / 2.0;
        match inputs.mu {
            Some(_) => {
                let third = inputs.delta / 3.0;
                Self {
                    rho1: third,
                    rho2: third,
                    alpha: Some(third),
                    alpha_cvx: half,
                    weighted: None,
                }
            }
            None => Self {
                rho1: half,
                rho2: half,
                alpha: None,
                alpha_cvx: half,
                weighted: Some(half),
            },
        }
    }
}

/// Signed slack of each event: nonnegative exactly when the event holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMargins {
    pub rho1: f64,
    /// Smallest slack over all suffixes; 0 when `T = 1` (no suffix to check).
    pub rho2: f64,
    pub alpha: Option<f64>,
    pub alpha_cvx: f64,
    pub weighted: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub holds_rho1: bool,
    pub holds_rho2: bool,
    /// `None` when `mu` is absent.
    pub holds_alpha: Option<bool>,
    pub holds_alpha_cvx: bool,
    /// Weighted projection lower bound with weights `‖∇f(x_t)‖²` truncated at
    /// `B = 2L(Δ₀ + A_{α,T}(δ))`. `None` when `mu` is given.
    pub holds_weighted: Option<bool>,
    pub margins: EventMargins,
}

pub fn check_events(trajectory: &TrajectoryRecord, inputs: &BoundInputs) -> Result<EventReport> {
    inputs.validate()?;
    let steps = &trajectory.steps;
    if steps.len() as u64 != inputs.horizon {
        return Err(ZoError::invalid(format!(
            "trajectory has {} steps but T = {}",
            steps.len(),
            inputs.horizon
        )));
    }
    let shares = EventShares::for_inputs(inputs);
    let d = inputs.d;
    let t = inputs.horizon;

    let zeta_sum: f64 = steps.iter().map(|s| s.zeta).sum();
    let rho1 = zeta_sum - projection_floor(t, d, shares.rho1, FloorMode::Unweighted)?;

    let mut rho2 = if t >= 2 { f64::INFINITY } else { 0.0 };
    let mut suffix = 0.0;
    for k in (0..t.saturating_sub(1)).rev() {
        suffix += steps[k as usize + 1].zeta;
        rho2 = rho2.min(suffix - suffix_event_floor(t, k, d, shares.rho2));
    }

    let alpha = match (inputs.mu, shares.alpha) {
        (Some(mu), Some(share)) => {
            let rho = rho_weights(t, d, mu, inputs.l, shares.rho2)?;
            let weighted: f64 = rho.iter().zip(steps).map(|(r, s)| r * s.u_norm_sq).sum();
            let df = d as f64;
            let cap = df
                * (1004.0
                    + 1000.0 * ((1.0 / shares.rho2).ln() + (2.0 * t as f64).ln().ln())
                    + 32.0 * df * inputs.l / mu
                    + 3.0 * (1.0 / share).ln());
            Some(cap - weighted)
        }
        _ => None,
    };

    let scale = inputs.accumulation()?;
    let delta_sum: f64 = steps.iter().map(|s| s.delta_alpha).sum();
    let alpha_cvx = scale.a_alpha_t - delta_sum;

    let weighted = match shares.weighted {
        Some(share) => {
            let b = 2.0 * inputs.l * (inputs.delta0 + scale.a_alpha_t);
            let (mut sum_w, mut sum_wz) = (0.0, 0.0);
            for s in steps {
                let w = s.grad_norm_sq.min(b);
                sum_w += w;
                sum_wz += w * s.zeta;
            }
            Some(sum_wz - projection_floor(t, d, share, FloorMode::Weighted { sum_w, bound: b })?)
        }
        None => None,
    };

    Ok(EventReport {
        holds_rho1: rho1 >= 0.0,
        holds_rho2: rho2 >= 0.0,
        holds_alpha: alpha.map(|m| m >= 0.0),
        holds_alpha_cvx: alpha_cvx >= 0.0,
        holds_weighted: weighted.map(|m| m >= 0.0),
        margins: EventMargins {
            rho1,
            rho2,
            alpha,
            alpha_cvx,
            weighted,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{run_trajectory, RunParams};
    use crate::oracles::suite;

    fn params(horizon: u64, alpha: f64) -> RunParams {
        RunParams {
            horizon,
            alpha,
            delta: 0.1,
            epsilon: 0.1,
            l_used: 1.0,
            master_seed: 5,
            stream_index: 0,
        }
    }

    #[test]
    fn one_dimensional_runs_satisfy_projection_events() {
        let p = suite::quad1d();
        for horizon in [1, 2, 50, 700] {
            let rec = run_trajectory(&p, &params(horizon, 1e-3)).unwrap();
            let inputs = BoundInputs {
                d: 1,
                l: 1.0,
                mu: Some(1.0),
                alpha: 1e-3,
                horizon,
                delta: 0.1,
                delta0: 0.5,
                radius: None,
            };
            let r = check_events(&rec, &inputs).unwrap();
            assert!(r.holds_rho1 && r.holds_rho2);
            assert!(r.margins.rho1 >= 0.0 && r.margins.rho2 >= 0.0);
        }
    }

    #[test]
    fn zero_smoothing_errors_meet_zero_cap() {
        let p = suite::isotropic_quadratic(3, 1.0).unwrap();
        let mut rec = run_trajectory(&p, &params(20, 1e-3)).unwrap();
        for s in &mut rec.steps {
            s.delta_alpha = 0.0;
        }
        let inputs = BoundInputs {
            d: 3,
            l: 1.0,
            mu: None,
            alpha: 0.0,
            horizon: 20,
            delta: 0.1,
            delta0: 1.0,
            radius: Some(1.0),
        };
        let r = check_events(&rec, &inputs).unwrap();
        assert!(r.holds_alpha_cvx);
        assert_eq!(r.margins.alpha_cvx, 0.0);
        assert_eq!(r.holds_alpha, None);
        assert!(r.holds_weighted.is_some());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let p = suite::quad1d();
        let rec = run_trajectory(&p, &params(3, 1e-3)).unwrap();
        let inputs = BoundInputs {
            d: 1,
            l: 1.0,
            mu: None,
            alpha: 1e-3,
            horizon: 4,
            delta: 0.1,
            delta0: 0.5,
            radius: None,
        };
        assert!(check_events(&rec, &inputs).is_err());
    }

    #[test]
    fn flags_agree_with_margins() {
        let p = suite::anisotropic_quadratic(10, 0.1, 1.0).unwrap();
        for seed in 0..5 {
            let rec = run_trajectory(
                &p,
                &RunParams {
                    master_seed: seed,
                    ..params(40, 1e-2)
                },
            )
            .unwrap();
            let inputs = BoundInputs {
                d: 10,
                l: 1.0,
                mu: Some(0.1),
                alpha: 1e-2,
                horizon: 40,
                delta: 0.1,
                delta0: 1.0,
                radius: None,
            };
            let r = check_events(&rec, &inputs).unwrap();
            assert_eq!(r.holds_rho1, r.margins.rho1 >= 0.0);
            assert_eq!(r.holds_rho2, r.margins.rho2 >= 0.0);
            assert_eq!(r.holds_alpha, r.margins.alpha.map(|m| m >= 0.0));
            assert_eq!(r.holds_alpha_cvx, r.margins.alpha_cvx >= 0.0);
        }
    }
}
