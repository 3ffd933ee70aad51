//! Weight sequences and the concentration inequalities behind the theorems,
//! as plain formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::schedules::{check_delta, check_nonnegative, check_positive};

fn check_mu_l(mu: f64, l: f64) -> Result<()> {
    check_positive("mu", mu)?;
    check_positive("L", l)?;
    if mu > l {
        return Err(ZoError::invalid(format!("mu = {mu} exceeds L = {l}")));
    }
    Ok(())
}

/// `ρ_k` for `k = 0..T-1`.
///
/// `ρ_k = min{1, exp(-(μ/8L)((T-k-501)/(2d) - (250/d)(log(1/δ₂) + loglog(2(T-k)))))}`.
pub fn rho_weights(horizon: u64, d: usize, mu: f64, l: f64, delta2: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(ZoError::InvalidDimension);
    }
    check_mu_l(mu, l)?;
    check_delta(delta2)?;
    let df = d as f64;
    let log_inv = (1.0 / delta2).ln();
    Ok((0..horizon)
        .map(|k| {
            let m = (horizon - k) as f64;
            let inner = (m - 501.0) / (2.0 * df) - 250.0 / df * (log_inv + (2.0 * m).ln().ln());
            (-(mu / (8.0 * l)) * inner).exp().min(1.0)
        })
        .collect())
}

/// Closed-form caps on `Σρ_k` and `Σρ_k²`:
/// `502 + 500 log(1/δ₂) + 500 loglog(2T) + c Ld/μ` with `c = 16` and `c = 8`.
pub fn rho_sum_caps(horizon: u64, d: usize, mu: f64, l: f64, delta2: f64) -> Result<(f64, f64)> {
    check_mu_l(mu, l)?;
    check_delta(delta2)?;
    if horizon == 0 {
        return Err(ZoError::invalid("horizon T must be at least 1"));
    }
    let head = 502.0 + 500.0 * (1.0 / delta2).ln() + 500.0 * (2.0 * horizon as f64).ln().ln();
    let ratio = l * d as f64 / mu;
    Ok((head + 16.0 * ratio, head + 8.0 * ratio))
}

/// `(k + 2√(kτ) + 2τ, k - 2√(kτ))`: two-sided tail caps for `χ²(k)`, each
/// exceeded with probability at most `e^{-τ}`.
pub fn chi_square_caps(k_dof: f64, tau: f64) -> Result<(f64, f64)> {
    check_positive("degrees of freedom", k_dof)?;
    check_nonnegative("tau", tau)?;
    let root = 2.0 * (k_dof * tau).sqrt();
    Ok((k_dof + root + 2.0 * tau, k_dof - root))
}

/// Upper cap on `Σ w_i X_i` with `X_i ~ χ²(1)` i.i.d., holding with
/// probability `1 - δ`.
pub fn weighted_chi_square_cap(weights: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(ZoError::invalid("weights must be finite and nonnegative"));
    }
    let log_inv = (1.0 / delta).ln();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let max = weights.iter().copied().fold(0.0, f64::max);
    Ok(sum + 2.0 * (sum_sq * log_inv).sqrt() + 2.0 * max * log_inv)
}

/// Linear form of Freedman's inequality: with probability `1 - δ`, a
/// martingale with increments bounded by `R` and predictable variance `W`
/// stays below `λW / (2(1 - λR/3)) + log(1/δ)/λ`, for `0 < λ < 3/R`.
pub fn freedman_linear_cap(w: f64, r: f64, lambda: f64, delta: f64) -> Result<f64> {
    check_nonnegative("W", w)?;
    check_positive("R", r)?;
    check_delta(delta)?;
    if !(lambda > 0.0 && lambda < 3.0 / r) {
        return Err(ZoError::invalid(format!(
            "lambda must lie in (0, 3/R) = (0, {}), got {lambda}",
            3.0 / r
        )));
    }
    Ok(lambda * w / (2.0 * (1.0 - lambda * r / 3.0)) + (1.0 / delta).ln() / lambda)
}

/// `exp(-τ² / (2(σ² + Rτ)))`.
pub fn freedman_tail(tau: f64, sigma2: f64, r: f64) -> Result<f64> {
    check_nonnegative("tau", tau)?;
    check_nonnegative("sigma2", sigma2)?;
    check_nonnegative("R", r)?;
    if tau == 0.0 {
        return Ok(1.0);
    }
    Ok((-tau * tau / (2.0 * (sigma2 + r * tau))).exp())
}

/// `exp(-x² / (2(N v² + b x)))`: tail of the running maximum of a martingale
/// whose `N` increments have conditional variance at most `v²` and satisfy
/// the Bernstein moment condition with scale `b`.
pub fn maximal_bernstein_tail(n: u64, v2: f64, b: f64, x: f64) -> Result<f64> {
    check_positive("v2", v2)?;
    check_positive("b", b)?;
    check_nonnegative("x", x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok((-x * x / (2.0 * (n as f64 * v2 + b * x))).exp())
}

/// `E[X^m]` for `X ~ Beta(a, b)`: `Π_{k<m} (a+k)/(a+b+k)`.
pub fn beta_raw_moment(a: f64, b: f64, m: u32) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    if m == 0 {
        return Err(ZoError::invalid("moment order must be at least 1"));
    }
    Ok((0..m)
        .map(|k| (a + k as f64) / (a + b + k as f64))
        .product())
}

/// `2E + (1/(h₀+E) + Σa_t/4)⁻¹` with `E = Σε_t`; the inverse term is zero when
/// `h₀ + E = 0`.
pub fn perturbed_recursion_cap(h0: f64, a_seq: &[f64], eps_seq: &[f64]) -> Result<f64> {
    check_nonnegative("h0", h0)?;
    if a_seq.len() != eps_seq.len() {
        return Err(ZoError::invalid("a and eps sequences differ in length"));
    }
    for v in a_seq.iter().chain(eps_seq) {
        check_nonnegative("recursion coefficient", *v)?;
    }
    let e: f64 = eps_seq.iter().sum();
    let a: f64 = a_seq.iter().sum();
    let inverse = if h0 + e == 0.0 {
        0.0
    } else {
        1.0 / (1.0 / (h0 + e) + a / 4.0)
    };
    Ok(2.0 * e + inverse)
}

/// Which projection-sum lower bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum FloorMode {
    /// `T/(2d) - 6 log(1/δ)/d` for `Σ_{t<T} ζ_t`.
    Unweighted,
    /// `(T-k-1)/(2d) - 250(1 + log(1/δ) + loglog(2(T-k)))/d` for the suffix
    /// `Σ_{t=k+1}^{T-1} ζ_t`, simultaneously over `k`.
    Suffix { k: u64 },
    /// `Σw/(2d) - 4B log(1/δ)/d` for `Σ w_t ζ_t` with `0 ≤ w_t ≤ B`.
    Weighted { sum_w: f64, bound: f64 },
}

pub fn projection_floor(horizon: u64, d: usize, delta: f64, mode: FloorMode) -> Result<f64> {
    if d == 0 {
        return Err(ZoError::InvalidDimension);
    }
    check_delta(delta)?;
    let df = d as f64;
    let log_inv = (1.0 / delta).ln();
    match mode {
        FloorMode::Unweighted => Ok(horizon as f64 / (2.0 * df) - 6.0 * log_inv / df),
        FloorMode::Suffix { k } => {
            if k >= horizon {
                return Err(ZoError::invalid(format!("suffix index {k} must be below T = {horizon}")));
            }
            let m = (horizon - k) as f64;
            Ok((m - 1.0) / (2.0 * df) - 250.0 * (1.0 + log_inv + (2.0 * m).ln().ln()) / df)
        }
        FloorMode::Weighted { sum_w, bound } => {
            check_nonnegative("sum of weights", sum_w)?;
            check_nonnegative("weight bound B", bound)?;
            Ok(sum_w / (2.0 * df) - 4.0 * bound * log_inv / df)
        }
    }
}

/// The suffix floor in the form used by the strongly convex events:
/// `(T-k-501)/(2d) - (250/d)(log(1/δ) + loglog(2(T-k)))`.
pub fn suffix_event_floor(horizon: u64, k: u64, d: usize, delta: f64) -> f64 {
    let df = d as f64;
    let m = (horizon - k) as f64;
    (m - 501.0) / (2.0 * df) - 250.0 / df * ((1.0 / delta).ln() + (2.0 * m).ln().ln())
}
