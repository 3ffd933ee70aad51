//! Browser bindings: one trajectory, one schedule, one projection histogram.
//!
//! The plain functions do the work and are tested natively; the
//! `#[wasm_bindgen]` wrappers only translate errors.

use statrs::distribution::{Beta, ContinuousCDF};
use wasm_bindgen::prelude::*;
use zogd::optimizer::{run_trajectory, RunParams};
use zogd::oracles::{suite, ProblemSpec, Regime};
use zogd::sampling::{sample_direction, squared_normalized_projection, SeedStream};
use zogd::schedules::{cvx_schedule, nc_schedule, sc_schedule};

const MAX_HORIZON: u32 = 200_000;
const MAX_SAMPLES: u32 = 2_000_000;

fn demo_problem(name: &str, d: usize) -> Result<ProblemSpec, String> {
    let p = match name {
        "isotropic_quadratic" => suite::isotropic_quadratic(d, 1.0),
        "anisotropic_quadratic" => suite::anisotropic_quadratic(d, 0.1, 1.0),
        "singular_quadratic" => suite::singular_quadratic(d, 0.5, 1.0),
        "log_sum_exp" => suite::log_sum_exp(d),
        "cosine_regularized" => suite::cosine_regularized(d, 1.0),
        other => return Err(format!("unknown problem `{other}`")),
    };
    p.map_err(|e| e.to_string())
}

/// `f(x_t) - f*` for `t = 0..=T`.
pub fn gap_curve(
    problem: &str,
    d: usize,
    horizon: u32,
    alpha: f64,
    seed: u32,
) -> Result<Vec<f64>, String> {
    if horizon > MAX_HORIZON {
        return Err(format!("T is capped at {MAX_HORIZON} in the demo"));
    }
    let p = demo_problem(problem, d)?;
    let params = RunParams {
        horizon: u64::from(horizon),
        alpha,
        delta: 0.1,
        epsilon: 1e-3,
        l_used: p.smoothness_l,
        master_seed: u64::from(seed),
        stream_index: 0,
    };
    let rec = run_trajectory(&p, &params).map_err(|e| e.to_string())?;
    let f_star = p.f_star.unwrap_or(0.0);
    let mut gaps: Vec<f64> = rec.steps.iter().map(|s| s.f_before - f_star).collect();
    gaps.push(rec.f_final - f_star);
    Ok(gaps)
}

/// Schedule report as JSON. `size` is `Δ₀` (strongly convex, nonconvex) or
/// `R_ε` (convex).
pub fn schedule_report(
    regime: &str,
    d: usize,
    l: f64,
    mu: f64,
    size: f64,
    epsilon: f64,
    delta: f64,
) -> Result<String, String> {
    let regime: Regime = regime.parse().map_err(|e: zogd::ZoError| e.to_string())?;
    let report = match regime {
        Regime::StronglyConvex => sc_schedule(d, l, mu, size, epsilon, delta),
        Regime::Convex => cvx_schedule(d, l, size, epsilon, delta),
        Regime::Nonconvex => nc_schedule(d, l, size, epsilon, delta),
    }
    .map_err(|e| e.to_string())?;
    report.to_json().map_err(|e| e.to_string())
}

/// Empirical bin masses of `ζ` over `samples` draws followed by the
/// `Beta(1/2, (d-1)/2)` masses of the same bins (`2·bins` values).
pub fn zeta_bins(d: usize, samples: u32, bins: usize, seed: u32) -> Result<Vec<f64>, String> {
    if d < 2 {
        return Err("the histogram needs d >= 2".into());
    }
    if bins == 0 || samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("need bins >= 1 and 1 <= samples <= {MAX_SAMPLES}"));
    }
    let mut stream = SeedStream::new(u64::from(seed), 0);
    let mut target = vec![0.0; d];
    target[0] = 1.0;
    let mut counts = vec![0.0; bins];
    for _ in 0..samples {
        let u = sample_direction(&mut stream, d).map_err(|e| e.to_string())?;
        let z = squared_normalized_projection(&u, &target).map_err(|e| e.to_string())?;
        counts[((z * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let law = Beta::new(0.5, (d as f64 - 1.0) / 2.0).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = counts.iter().map(|c| c / f64::from(samples)).collect();
    out.extend((0..bins).map(|i| {
        let (lo, hi) = (i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
        law.cdf(hi) - law.cdf(lo)
    }));
    Ok(out)
}

#[wasm_bindgen]
pub fn trajectory(
    problem: &str,
    d: usize,
    horizon: u32,
    alpha: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    gap_curve(problem, d, horizon, alpha, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn schedule(
    regime: &str,
    d: usize,
    l: f64,
    mu: f64,
    size: f64,
    epsilon: f64,
    delta: f64,
) -> Result<String, JsError> {
    schedule_report(regime, d, l, mu, size, epsilon, delta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zeta_histogram(d: usize, samples: u32, bins: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    zeta_bins(d, samples, bins, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_starts_at_unit_gap_and_descends_on_quadratics() {
        let g = gap_curve("anisotropic_quadratic", 5, 300, 1e-2, 1).unwrap();
        assert_eq!(g.len(), 301);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn unknown_problem_is_reported() {
        assert!(gap_curve("rosenbrock", 2, 10, 1e-2, 0)
            .unwrap_err()
            .contains("rosenbrock"));
    }

    #[test]
    fn schedule_json_carries_horizon() {
        let text = schedule_report("sc", 10, 1.0, 0.1, 1.0, 1e-3, 0.1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["T"], 12203);
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let h = zeta_bins(3, 20_000, 10, 5).unwrap();
        let (emp, law) = h.split_at(10);
        assert!((emp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (e, t) in emp.iter().zip(law) {
            assert!((e - t).abs() < 0.02);
        }
    }
}
