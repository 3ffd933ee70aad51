//! Right-hand sides of the three high-probability convergence theorems.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::oracles::Regime;
use crate::schedules::{
    accumulation_scale, check_delta, check_nonnegative, check_positive, sc_smoothing_factor,
    AccumulationScale,
};

/// Symbols shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: Option<f64>,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub delta: f64,
    #[serde(rename = "Delta0")]
    pub delta0: f64,
    /// Level-set radius `R_{α,T}(δ)`.
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(ZoError::InvalidDimension);
        }
        if self.horizon < 1 {
            return Err(ZoError::invalid("horizon T must be at least 1"));
        }
        check_positive("L", self.l)?;
        check_nonnegative("alpha", self.alpha)?;
        check_delta(self.delta)?;
        check_nonnegative("Delta0", self.delta0)?;
        if let Some(mu) = self.mu {
            check_positive("mu", mu)?;
        }
        if let Some(r) = self.radius {
            check_nonnegative("R", r)?;
        }
        Ok(())
    }

    /// `τ_δ`, `U_T(δ)` and `A_{α,T}(δ)` at these inputs.
    pub fn accumulation(&self) -> Result<AccumulationScale> {
        accumulation_scale(self.d, self.horizon, self.delta, self.l, self.alpha)
    }
}

/// The two summands of the strongly convex bound: contraction of `Δ₀` and the
/// accumulated smoothing error.
pub fn sc_bound_terms(inputs: &BoundInputs) -> Result<(f64, f64)> {
    inputs.validate()?;
    let mu = inputs
        .mu
        .ok_or_else(|| ZoError::invalid("the strongly convex bound needs mu"))?;
    if mu > inputs.l {
        return Err(ZoError::invalid(format!("mu = {mu} exceeds L = {}", inputs.l)));
    }
    let d = inputs.d as f64;
    let t = inputs.horizon as f64;
    let exponent = -(mu / (8.0 * inputs.l)) * (t / (2.0 * d) - 6.0 * (3.0 / inputs.delta).ln() / d);
    let contraction = exponent.exp() * inputs.delta0;
    let smoothing = d * inputs.l * inputs.alpha * inputs.alpha / 16.0
        * sc_smoothing_factor(inputs.d, inputs.l, mu, inputs.horizon, inputs.delta);
    Ok((contraction, smoothing))
}

/// Final-gap bound for a `μ`-strongly convex objective.
pub fn sc_bound(inputs: &BoundInputs) -> Result<f64> {
    let (a, b) = sc_bound_terms(inputs)?;
    Ok(a + b)
}

/// Final-gap bound for a convex objective. `simple` drops the `1/(Δ₀+A)`
/// term from the harmonic combination.
pub fn cvx_bound(inputs: &BoundInputs, simple: bool) -> Result<f64> {
    inputs.validate()?;
    let r = inputs
        .radius
        .ok_or_else(|| ZoError::invalid("the convex bound needs a level-set radius R"))?;
    let scale = inputs.accumulation()?;
    let minimum = 12.0 * scale.tau_delta;
    let t = inputs.horizon as f64;
    if t <= minimum {
        return Err(ZoError::HorizonTooShort {
            horizon: inputs.horizon,
            minimum,
        });
    }
    let a = scale.a_alpha_t;
    let d = inputs.d as f64;
    let curvature = 128.0 * d * inputs.l * r * r;
    let effective = t - minimum;

    let tail = if simple {
        curvature / effective
    } else if inputs.delta0 + a == 0.0 || curvature == 0.0 {
        0.0
    } else {
        1.0 / (1.0 / (inputs.delta0 + a) + effective / curvature)
    };
    Ok(2.0 * a + tail)
}

/// Bound on the trajectory average `(1/T) Σ ‖∇f(x_t)‖²` for a smooth objective.
pub fn nc_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let scale = inputs.accumulation()?;
    let d = inputs.d as f64;
    Ok(inputs.l * (32.0 * d + 16.0 * scale.tau_delta) * (inputs.delta0 + scale.a_alpha_t)
        / inputs.horizon as f64)
}

/// The bound certified for `regime`: the simple convex form for convex runs.
pub fn bound_for_regime(regime: Regime, inputs: &BoundInputs) -> Result<f64> {
    match regime {
        Regime::StronglyConvex => sc_bound(inputs),
        Regime::Convex => cvx_bound(inputs, true),
        Regime::Nonconvex => nc_bound(inputs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{cvx_schedule, nc_schedule, sc_schedule};

    fn base() -> BoundInputs {
        BoundInputs {
            d: 10,
            l: 1.0,
            mu: Some(0.1),
            alpha: 0.0,
            horizon: 12203,
            delta: 0.1,
            delta0: 1.0,
            radius: None,
        }
    }

    #[test]
    fn sc_bound_without_smoothing_is_pure_exponential() {
        let (a, b) = sc_bound_terms(&base()).unwrap();
        assert_eq!(b, 0.0);
        let expo = -(0.1 / 8.0) * (12203.0 / 20.0 - 6.0 * 30f64.ln() / 10.0);
        assert!((a - expo.exp()).abs() < 1e-18);
    }

    #[test]
    fn sc_bound_with_scheduled_alpha() {
        let s = sc_schedule(10, 1.0, 0.1, 1.0, 1e-3, 0.1).unwrap();
        let b = sc_bound(&BoundInputs {
            alpha: s.alpha,
            horizon: s.horizon,
            ..base()
        })
        .unwrap();
        assert!(b <= 1e-3);
    }

    #[test]
    fn sc_bound_zero_exponent() {
        // 12 log(3/δ) = 24 at δ = 3e^{-2}
        let delta = 3.0 * (-2.0f64).exp();
        let (a, _) = sc_bound_terms(&BoundInputs {
            d: 3,
            horizon: 24,
            delta,
            delta0: 2.5,
            ..base()
        })
        .unwrap();
        assert!((a - 2.5).abs() < 1e-13);
    }

    #[test]
    fn sc_bound_requires_mu_and_horizon() {
        assert!(sc_bound(&BoundInputs { mu: None, ..base() }).is_err());
        assert!(sc_bound(&BoundInputs { horizon: 0, ..base() }).is_err());
    }

    #[test]
    fn cvx_bound_conventions() {
        let inputs = BoundInputs {
            d: 2,
            mu: None,
            alpha: 0.01,
            horizon: 1000,
            radius: Some(0.0),
            ..base()
        };
        let a = inputs.accumulation().unwrap().a_alpha_t;
        assert!((cvx_bound(&inputs, false).unwrap() - 2.0 * a).abs() < 1e-15);
        let zero = BoundInputs {
            alpha: 0.0,
            delta0: 0.0,
            radius: Some(1.0),
            ..inputs
        };
        assert_eq!(cvx_bound(&zero, false).unwrap(), 0.0);
    }

    #[test]
    fn cvx_bound_short_horizon() {
        let inputs = BoundInputs {
            d: 2,
            mu: None,
            alpha: 0.01,
            horizon: 30,
            radius: Some(1.0),
            ..base()
        };
        assert!(matches!(
            cvx_bound(&inputs, true),
            Err(ZoError::HorizonTooShort { .. })
        ));
        assert!(cvx_bound(&BoundInputs { radius: None, ..inputs }, true).is_err());
    }

    #[test]
    fn cvx_bound_with_schedule() {
        let s = cvx_schedule(2, 1.0, 1.0, 0.5, 0.1).unwrap();
        let inputs = BoundInputs {
            d: 2,
            l: 1.0,
            mu: None,
            alpha: s.alpha,
            horizon: s.horizon,
            delta: 0.1,
            delta0: 1.0,
            radius: Some(1.0),
        };
        let simple = cvx_bound(&inputs, true).unwrap();
        let full = cvx_bound(&inputs, false).unwrap();
        assert!(simple <= 0.5);
        assert!(full <= simple);
    }

    #[test]
    fn nc_bound_examples() {
        let zero = BoundInputs {
            d: 2,
            mu: None,
            delta0: 0.0,
            ..base()
        };
        assert_eq!(nc_bound(&zero).unwrap(), 0.0);

        let delta = 2.0 / std::f64::consts::E;
        let s = nc_schedule(2, 1.0, 1.0, 1.0, delta).unwrap();
        let b = nc_bound(&BoundInputs {
            d: 2,
            l: 1.0,
            mu: None,
            alpha: s.alpha,
            horizon: 160,
            delta,
            delta0: 1.0,
            radius: None,
        })
        .unwrap();
        assert!(b <= 1.0 + 1e-12);
    }

    #[test]
    fn nc_bound_halves_when_horizon_doubles_with_fixed_accumulation() {
        let i = BoundInputs {
            d: 3,
            mu: None,
            alpha: 0.0,
            horizon: 100,
            ..base()
        };
        let a = nc_bound(&i).unwrap();
        let b = nc_bound(&BoundInputs { horizon: 200, ..i }).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-14 * a);
    }
}
