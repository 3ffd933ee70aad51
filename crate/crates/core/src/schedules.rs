//! Horizon and smoothing-radius schedules for the three regimes, the shared
//! finite-difference accumulation scale, and order-level baselines obtained by
//! Markov-converting expectation guarantees.
//!
//! Unspecified universal constants are never guessed. Each schedule instead
//! solves the displayed sufficient condition with equality:
//!
//! * strongly convex: the smoothing term of the final-gap bound equals `ε/2`;
//! * convex: `A_{α,T}(δ) = ε/4`;
//! * nonconvex: `A_{α,T}(δ) = Δ₀`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::oracles::Regime;

/// `τ_δ = log(2/δ)`, `U_T = dT + 2 sqrt(dT τ_δ) + 2 τ_δ`, `A = L α² U_T / 16`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulationScale {
    pub tau_delta: f64,
    #[serde(rename = "U_T")]
    pub u_t: f64,
    #[serde(rename = "A_alpha_T")]
    pub a_alpha_t: f64,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(ZoError::invalid(format!("confidence delta must lie in (0, 1), got {delta}")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ZoError::invalid(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ZoError::invalid(format!("{name} must be nonnegative, got {v}")))
    }
}

/// `U_T(δ)` alone.
pub fn horizon_scale(d: usize, horizon: f64, delta: f64) -> f64 {
    let tau = (2.0 / delta).ln();
    let dt = d as f64 * horizon;
    dt + 2.0 * (dt * tau).sqrt() + 2.0 * tau
}

pub fn accumulation_scale(
    d: usize,
    horizon: u64,
    delta: f64,
    l: f64,
    alpha: f64,
) -> Result<AccumulationScale> {
    if d == 0 {
        return Err(ZoError::InvalidDimension);
    }
    if horizon == 0 {
        return Err(ZoError::invalid("horizon T must be at least 1"));
    }
    check_delta(delta)?;
    check_positive("L", l)?;
    check_nonnegative("alpha", alpha)?;
    let tau_delta = (2.0 / delta).ln();
    let u_t = horizon_scale(d, horizon as f64, delta);
    Ok(AccumulationScale {
        tau_delta,
        u_t,
        a_alpha_t: l * alpha * alpha * u_t / 16.0,
    })
}

/// The bracket multiplying `dLα²/16` in the strongly convex final-gap bound:
/// `1004 + 1000 (log(3/δ) + loglog(2T)) + 32 dL/μ + 3 log(3/δ)`.
pub fn sc_smoothing_factor(d: usize, l: f64, mu: f64, horizon: u64, delta: f64) -> f64 {
    let log3 = (3.0 / delta).ln();
    let loglog = (2.0 * horizon as f64).ln().ln();
    1004.0 + 1000.0 * (log3 + loglog) + 32.0 * d as f64 * l / mu + 3.0 * log3
}

/// An order-level `(N, α)` pair with every hidden constant set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePair {
    #[serde(rename = "N")]
    pub n: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub regime: Regime,
    /// Nothing to run: the target is met at `x₀`.
    pub trivial: bool,
    #[serde(rename = "T_raw")]
    pub t_raw: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub alpha: f64,
    #[serde(flatten)]
    pub scale: AccumulationScale,
    #[serde(rename = "baseline_N")]
    pub baseline_n: f64,
    pub baseline_alpha: f64,
    /// Regime-specific intermediates (`R_eps`, `Delta0`, `B_alpha_T`, caps).
    pub terms: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ScheduleReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ZoError::Serialization(e.to_string()))
    }

    pub fn queries(&self) -> u64 {
        2 * self.horizon
    }
}

fn check_common(d: usize, l: f64, epsilon: f64, delta: f64) -> Result<()> {
    if d == 0 {
        return Err(ZoError::InvalidDimension);
    }
    check_positive("L", l)?;
    check_positive("epsilon", epsilon)?;
    check_delta(delta)
}

fn ceil_horizon(t_raw: f64) -> Result<u64> {
    if !t_raw.is_finite() || t_raw > 1e15 {
        return Err(ZoError::invalid(format!("horizon {t_raw} is not representable")));
    }
    Ok((t_raw.ceil() as u64).max(1))
}

/// Strongly convex schedule.
///
/// `T = ceil(16 (dL/μ) log(2Δ₀/ε) + 12 log(3/δ))`; `α` makes the smoothing
/// term equal `ε/2` at that `T`, then is capped by `sqrt(εμ)/(dL)`.
pub fn sc_schedule(
    d: usize,
    l: f64,
    mu: f64,
    delta0: f64,
    epsilon: f64,
    delta: f64,
) -> Result<ScheduleReport> {
    check_common(d, l, epsilon, delta)?;
    check_positive("mu", mu)?;
    if mu > l {
        return Err(ZoError::invalid(format!("mu = {mu} exceeds L = {l}")));
    }
    check_positive("Delta0", delta0)?;
    let df = d as f64;

    let t_raw = 16.0 * df * l / mu * (2.0 * delta0 / epsilon).ln() + 12.0 * (3.0 / delta).ln();
    let horizon = ceil_horizon(t_raw)?;

    let factor = sc_smoothing_factor(d, l, mu, horizon, delta);
    let alpha_solved = (8.0 * epsilon / (df * l * factor)).sqrt();
    let cap_leading = (epsilon * mu).sqrt() / (df * l);
    let alpha = alpha_solved.min(cap_leading);

    let mut terms = BTreeMap::new();
    terms.insert("Delta0".into(), delta0);
    terms.insert("smoothing_factor".into(), factor);
    terms.insert("alpha_solved".into(), alpha_solved);
    terms.insert("alpha_cap_leading".into(), cap_leading);
    let second_den = df * l * (1.0 + (1.0 / delta).ln() + (horizon as f64).ln().ln());
    if second_den.is_finite() && second_den > 0.0 {
        terms.insert("alpha_cap_log".into(), (epsilon / second_den).sqrt());
    }
    let baseline = markov_baseline(Regime::StronglyConvex, d, l, mu, delta0, epsilon, delta)?;

    let mut notes = vec![
        "alpha solved so the smoothing term equals eps/2 at the ceiled T".to_string(),
        "alpha capped by sqrt(eps*mu)/(dL) with unit constant; the smaller value is used".into(),
        "baseline is order-level with unit constants".into(),
    ];
    if t_raw <= 1.0 {
        notes.push("T_raw below 1; T clamped to 1".into());
    }

    Ok(ScheduleReport {
        regime: Regime::StronglyConvex,
        trivial: false,
        t_raw,
        horizon,
        alpha,
        scale: accumulation_scale(d, horizon, delta, l, alpha)?,
        baseline_n: baseline.n,
        baseline_alpha: baseline.alpha,
        terms,
        notes,
    })
}

/// Convex schedule.
///
/// `T = ceil(512 dL R_ε² / ε + 24 log(2/δ))`; `α` makes `A_{α,T}(δ) = ε/4`.
pub fn cvx_schedule(
    d: usize,
    l: f64,
    r_eps: f64,
    epsilon: f64,
    delta: f64,
) -> Result<ScheduleReport> {
    check_common(d, l, epsilon, delta)?;
    check_nonnegative("R_eps", r_eps)?;
    let baseline = markov_baseline(Regime::Convex, d, l, 0.0, r_eps, epsilon, delta)?;
    let mut terms = BTreeMap::new();
    terms.insert("R_eps".into(), r_eps);

    if r_eps == 0.0 {
        return Ok(ScheduleReport {
            regime: Regime::Convex,
            trivial: true,
            t_raw: 0.0,
            horizon: 0,
            alpha: 0.0,
            scale: AccumulationScale {
                tau_delta: (2.0 / delta).ln(),
                u_t: 0.0,
                a_alpha_t: 0.0,
            },
            baseline_n: baseline.n,
            baseline_alpha: baseline.alpha,
            terms,
            notes: vec!["R_eps = 0: the enlarged level set lies in X*, no queries needed".into()],
        });
    }

    let df = d as f64;
    let t_raw = 512.0 * df * l * r_eps * r_eps / epsilon + 24.0 * (2.0 / delta).ln();
    let horizon = ceil_horizon(t_raw)?;
    let u_t = horizon_scale(d, horizon as f64, delta);
    let alpha = 2.0 * (epsilon / (l * u_t)).sqrt();
    terms.insert(
        "alpha_cap_order".into(),
        (epsilon / (df * l * horizon as f64)).sqrt(),
    );

    Ok(ScheduleReport {
        regime: Regime::Convex,
        trivial: false,
        t_raw,
        horizon,
        alpha,
        scale: accumulation_scale(d, horizon, delta, l, alpha)?,
        baseline_n: baseline.n,
        baseline_alpha: baseline.alpha,
        terms,
        notes: vec![
            "alpha solved so that A_alpha_T(delta) = eps/4".into(),
            "baseline is order-level with unit constants".into(),
        ],
    })
}

/// Nonconvex schedule.
///
/// `T = ceil(2L (32d + 16 log(2/δ)) Δ₀ / ε)`; `α = 4 sqrt(Δ₀ / (L U_T(δ)))`,
/// which makes `A_{α,T}(δ) = Δ₀`.
pub fn nc_schedule(
    d: usize,
    l: f64,
    delta0: f64,
    epsilon: f64,
    delta: f64,
) -> Result<ScheduleReport> {
    check_common(d, l, epsilon, delta)?;
    check_nonnegative("Delta0", delta0)?;
    let baseline = markov_baseline(Regime::Nonconvex, d, l, 0.0, delta0, epsilon, delta)?;
    let mut terms = BTreeMap::new();
    terms.insert("Delta0".into(), delta0);

    if delta0 == 0.0 {
        return Ok(ScheduleReport {
            regime: Regime::Nonconvex,
            trivial: true,
            t_raw: 0.0,
            horizon: 0,
            alpha: 0.0,
            scale: AccumulationScale {
                tau_delta: (2.0 / delta).ln(),
                u_t: 0.0,
                a_alpha_t: 0.0,
            },
            baseline_n: baseline.n,
            baseline_alpha: baseline.alpha,
            terms,
            notes: vec!["Delta0 = 0: x0 is a global minimizer and already stationary".into()],
        });
    }

    let df = d as f64;
    let tau = (2.0 / delta).ln();
    let t_raw = 2.0 * l * (32.0 * df + 16.0 * tau) * delta0 / epsilon;
    let horizon = ceil_horizon(t_raw)?;
    let u_t = horizon_scale(d, horizon as f64, delta);
    let alpha = 4.0 * (delta0 / (l * u_t)).sqrt();
    let scale = accumulation_scale(d, horizon, delta, l, alpha)?;
    terms.insert("B_alpha_T".into(), 2.0 * l * (delta0 + scale.a_alpha_t));

    Ok(ScheduleReport {
        regime: Regime::Nonconvex,
        trivial: false,
        t_raw,
        horizon,
        alpha,
        scale,
        baseline_n: baseline.n,
        baseline_alpha: baseline.alpha,
        terms,
        notes: vec![
            "alpha = 4 sqrt(Delta0 / (L U_T)), so A_alpha_T(delta) = Delta0".into(),
            "baseline is order-level with unit constants".into(),
        ],
    })
}

/// Markov conversion of the expectation guarantees: replace `ε` by `δε`.
///
/// `size` is `R` for the convex regime and `Δ₀` for the nonconvex one; it is
/// unused for the strongly convex regime.
pub fn markov_baseline(
    regime: Regime,
    d: usize,
    l: f64,
    mu: f64,
    size: f64,
    epsilon: f64,
    delta: f64,
) -> Result<BaselinePair> {
    check_common(d, l, epsilon, delta)?;
    expectation_pair(regime, d, l, mu, size, delta * epsilon)
}

/// The expectation-level `(N, α)` at accuracy `target`.
pub fn expectation_pair(
    regime: Regime,
    d: usize,
    l: f64,
    mu: f64,
    size: f64,
    target: f64,
) -> Result<BaselinePair> {
    let df = d as f64;
    Ok(match regime {
        Regime::StronglyConvex => {
            check_positive("mu", mu)?;
            BaselinePair {
                n: df * l / mu * (1.0 / target).ln(),
                alpha: (target * mu).sqrt() / (df * l),
            }
        }
        Regime::Convex => {
            check_nonnegative("R", size)?;
            BaselinePair {
                n: df * l * size * size / target,
                alpha: (target / l).sqrt() / df,
            }
        }
        Regime::Nonconvex => {
            check_nonnegative("Delta0", size)?;
            BaselinePair {
                n: df * l * size / target,
                alpha: target.sqrt() / (df.powf(1.5) * l),
            }
        }
    })
}

/// Parameters shared by every row of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareInputs {
    pub d: usize,
    pub l: f64,
    pub mu: f64,
    pub radius: f64,
    pub delta0: f64,
    pub epsilon: f64,
    pub delta: f64,
}

/// One row of the query-complexity comparison. Numbers are order-level with
/// unit constants unless `method` says "explicit".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub regime: Regime,
    pub method: String,
    pub guarantee: String,
    pub queries_per_iteration: u32,
    /// Iteration count (order-level `N`, or explicit `T`).
    pub iterations: f64,
    pub alpha: f64,
    /// This row's radius divided by the order-level radius of the direct
    /// high-probability method in the same regime.
    pub alpha_over_ours: f64,
    pub condition: String,
}

/// The expectation, Markov-converted and direct rows for all three regimes,
/// plus the explicit schedules.
pub fn comparison_table(p: &CompareInputs) -> Result<Vec<ComparisonRow>> {
    check_common(p.d, p.l, p.epsilon, p.delta)?;
    check_positive("mu", p.mu)?;
    check_nonnegative("R", p.radius)?;
    check_positive("Delta0", p.delta0)?;
    let df = p.d as f64;
    let ell = (1.0 / p.delta).ln();
    let eps = p.epsilon;
    let mut rows = Vec::new();

    let mut push_regime = |regime: Regime,
                           size: f64,
                           ours: BaselinePair,
                           ours_condition: &str,
                           explicit: ScheduleReport|
     -> Result<()> {
        let exp = expectation_pair(regime, p.d, p.l, p.mu, size, eps)?;
        let mkv = markov_baseline(regime, p.d, p.l, p.mu, size, eps, p.delta)?;
        rows.push(ComparisonRow {
            regime,
            method: "expectation (Gaussian smoothing)".into(),
            guarantee: "expectation".into(),
            queries_per_iteration: 2,
            iterations: exp.n,
            alpha: exp.alpha,
            alpha_over_ours: exp.alpha / ours.alpha,
            condition: "smoothing radius from the expectation analysis".into(),
        });
        rows.push(ComparisonRow {
            regime,
            method: "Markov conversion".into(),
            guarantee: "high probability".into(),
            queries_per_iteration: 2,
            iterations: mkv.n,
            alpha: mkv.alpha,
            alpha_over_ours: mkv.alpha / ours.alpha,
            condition: "expectation result at accuracy delta*eps".into(),
        });
        rows.push(ComparisonRow {
            regime,
            method: "normalized two-point (order-level)".into(),
            guarantee: "high probability".into(),
            queries_per_iteration: 2,
            iterations: ours.n,
            alpha: ours.alpha,
            alpha_over_ours: 1.0,
            condition: ours_condition.into(),
        });
        rows.push(ComparisonRow {
            regime,
            method: "normalized two-point (explicit schedule)".into(),
            guarantee: "high probability".into(),
            queries_per_iteration: 2,
            iterations: explicit.horizon as f64,
            alpha: explicit.alpha,
            alpha_over_ours: explicit.alpha / ours.alpha,
            condition: "constants resolved by the schedule".into(),
        });
        Ok(())
    };

    let sc_ours = BaselinePair {
        n: df * p.l / p.mu * (1.0 / eps).ln() + ell,
        alpha: (eps * p.mu).sqrt() / (df * p.l),
    };
    push_regime(
        Regime::StronglyConvex,
        0.0,
        sc_ours,
        "normalized stepsize; explicit alpha cap",
        sc_schedule(p.d, p.l, p.mu, p.delta0, eps, p.delta)?,
    )?;

    let cvx_n = df * p.l * p.radius * p.radius / eps + ell;
    let cvx_ours = BaselinePair {
        n: cvx_n,
        alpha: (eps / (df * p.l * cvx_n)).sqrt(),
    };
    push_regime(
        Regime::Convex,
        p.radius,
        cvx_ours,
        "level-set radius; alpha = sqrt(eps/(dLT))",
        cvx_schedule(p.d, p.l, p.radius, eps, p.delta)?,
    )?;

    let nc_ours = BaselinePair {
        n: p.l * p.delta0 * (df + ell) / eps,
        alpha: eps.sqrt() / (p.l * df),
    };
    push_regime(
        Regime::Nonconvex,
        p.delta0,
        nc_ours,
        "trajectory average; alpha = sqrt(eps)/(Ld) at fixed delta",
        nc_schedule(p.d, p.l, p.delta0, eps, p.delta)?,
    )?;

    Ok(rows)
}

pub const COMPARISON_CSV_HEADER: [&str; 8] = [
    "regime",
    "method",
    "guarantee",
    "queries_per_iteration",
    "iterations",
    "alpha",
    "alpha_over_ours",
    "condition",
];

pub fn write_comparison_csv<W: std::io::Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let ser = |e: csv::Error| ZoError::Serialization(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_CSV_HEADER).map_err(ser)?;
    for r in rows {
        w.write_record(&[
            r.regime.to_string(),
            r.method.clone(),
            r.guarantee.clone(),
            r.queries_per_iteration.to_string(),
            r.iterations.to_string(),
            r.alpha.to_string(),
            r.alpha_over_ours.to_string(),
            r.condition.clone(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| ZoError::Serialization(e.to_string()))
}
