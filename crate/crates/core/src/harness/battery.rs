//! Distributional and inequality test batteries.
//!
//! Each check compares an empirical statistic with a threshold and reports
//! pass or fail; nothing here panics on a failed check. Monte Carlo
//! thresholds carry a `3σ` binomial or normal margin.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Result, ZoError};
use crate::oracles::Regime;
use crate::sampling::{sample_direction, squared_normalized_projection, SeedStream};
use crate::theory::{
    beta_raw_moment, chi_square_caps, maximal_bernstein_tail, perturbed_recursion_cap,
    projection_floor, rho_sum_caps, rho_weights, FloorMode,
};

use super::config::{ExperimentConfig, ProblemConfig};
use super::montecarlo::{run_monte_carlo, three_sigma_threshold, EventFrequency};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `statistic ≤ threshold`.
    fn at_most(name: impl Into<String>, statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic <= threshold,
            detail: detail.into(),
        }
    }

    /// Passes when `statistic ≥ threshold`.
    fn at_least(name: impl Into<String>, statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic >= threshold,
            detail: detail.into(),
        }
    }
}

/// Asymptotic Kolmogorov tail `P(K > λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS statistic `D` and its p-value (Stephens' small-sample
/// correction to the asymptotic law).
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in samples.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    let root = n.sqrt();
    (d, kolmogorov_tail((root + 0.12 + 0.11 / root) * d))
}

pub fn sample_zeta(d: usize, n: u64, stream: &mut SeedStream) -> Result<Vec<f64>> {
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    (0..n)
        .map(|_| squared_normalized_projection(&sample_direction(stream, d)?, &e1))
        .collect()
}

/// KS against `Beta(1/2, (d-1)/2)` at the 1% level, the mean against `1/d`,
/// and raw moments `m = 1, 2, 3` against the closed form.
pub fn zeta_distribution(d: usize, n: u64, seed: u64) -> Result<Vec<Check>> {
    if d < 2 {
        return Err(ZoError::invalid("the Beta law needs d >= 2"));
    }
    let (a, b) = (0.5, (d as f64 - 1.0) / 2.0);
    let mut stream = SeedStream::new(seed, d as u64);
    let mut zeta = sample_zeta(d, n, &mut stream)?;
    let nf = n as f64;
    let mut checks = Vec::new();

    for m in 1..=3u32 {
        let moment = beta_raw_moment(a, b, m)?;
        let var = beta_raw_moment(a, b, 2 * m)? - moment * moment;
        let empirical = zeta.iter().map(|z| z.powi(m as i32)).sum::<f64>() / nf;
        let name = if m == 1 {
            format!("zeta mean vs 1/d (d={d})")
        } else {
            format!("zeta raw moment m={m} (d={d})")
        };
        checks.push(Check::at_most(
            name,
            (empirical - moment).abs(),
            3.0 * (var / nf).sqrt(),
            format!("empirical {empirical:.6e}, exact {moment:.6e}"),
        ));
    }

    let beta = Beta::new(a, b).map_err(|e| ZoError::invalid(e.to_string()))?;
    let (stat, p) = ks_test(&mut zeta, |x| beta.cdf(x));
    checks.push(Check::at_least(
        format!("zeta KS vs Beta(1/2,(d-1)/2) (d={d})"),
        p,
        0.01,
        format!("D = {stat:.3e}, n = {n}"),
    ));
    Ok(checks)
}

/// Frequencies of `χ²(k)` falling outside its caps at `τ`, against `e^{-τ} + 3σ`.
pub fn chi_square_exceedance(k: usize, tau: f64, n: u64, seed: u64) -> Result<Vec<Check>> {
    let (upper, lower) = chi_square_caps(k as f64, tau)?;
    let mut stream = SeedStream::new(seed, 1_000 + k as u64);
    let (mut above, mut below) = (0u64, 0u64);
    for _ in 0..n {
        let x: f64 = (0..k).map(|_| stream.standard_normal().powi(2)).sum();
        above += u64::from(x > upper);
        below += u64::from(x < lower);
    }
    let p = (-tau).exp();
    let threshold = three_sigma_threshold(p, n);
    Ok(vec![
        Check::at_most(
            format!("chi2({k}) upper cap, tau={tau:.4}"),
            above as f64 / n as f64,
            threshold,
            format!("cap {upper:.4}"),
        ),
        Check::at_most(
            format!("chi2({k}) lower cap, tau={tau:.4}"),
            below as f64 / n as f64,
            threshold,
            format!("cap {lower:.4}"),
        ),
    ])
}

/// Running maximum of a martingale with i.i.d. `U[-1, 1]` increments
/// (`v² = 1/3`, `b = 1`) against the maximal Bernstein tail at each `x`.
pub fn maximal_bernstein(steps: u64, xs: &[f64], reps: u64, seed: u64) -> Result<Vec<Check>> {
    let v2 = 1.0 / 3.0;
    let mut stream = SeedStream::new(seed, 2_000);
    let mut hits = vec![0u64; xs.len()];
    for _ in 0..reps {
        let mut s = 0.0f64;
        let mut max = 0.0f64;
        for _ in 0..steps {
            s += 2.0 * stream.uniform() - 1.0;
            max = max.max(s);
        }
        for (h, x) in hits.iter_mut().zip(xs) {
            *h += u64::from(max >= *x);
        }
    }
    xs.iter()
        .zip(hits)
        .map(|(x, h)| {
            let p = maximal_bernstein_tail(steps, v2, 1.0, *x)?;
            Ok(Check::at_most(
                format!("maximal Bernstein, N={steps}, x={x}"),
                h as f64 / reps as f64,
                three_sigma_threshold(p, reps),
                format!("formula {p:.4e}"),
            ))
        })
        .collect()
}

/// Frequency of `Σ_{t<T} ζ_t` falling below the unweighted floor.
pub fn unweighted_floor(d: usize, horizon: u64, delta: f64, reps: u64, seed: u64) -> Result<Check> {
    let floor = projection_floor(horizon, d, delta, FloorMode::Unweighted)?;
    let mut stream = SeedStream::new(seed, 3_000 + d as u64);
    let mut violations = 0u64;
    for _ in 0..reps {
        let sum: f64 = sample_zeta(d, horizon, &mut stream)?.iter().sum();
        violations += u64::from(sum < floor);
    }
    Ok(Check::at_most(
        format!("unweighted projection floor, d={d}, T={horizon}"),
        violations as f64 / reps as f64,
        three_sigma_threshold(delta, reps),
        format!("floor {floor:.4}"),
    ))
}

/// Iterates `h_{t+1} = h_t - a_t h_t² + ε_t` on random nonnegative data,
/// shrinking `a_t` where needed so that `h_{t+1} ≥ 0`, and counts instances
/// where `h_T` exceeds the closed-form cap.
pub fn perturbed_recursion(count: u64, seed: u64) -> Result<Check> {
    let mut stream = SeedStream::new(seed, 4_000);
    let mut violations = 0u64;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let len = 1 + (stream.uniform() * 20.0) as usize;
        let scale = 10f64.powf(4.0 * stream.uniform() - 2.0);
        let mut h = if stream.uniform() < 0.1 { 0.0 } else { scale * stream.uniform() };
        let h0 = h;
        let (mut a_seq, mut eps_seq) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for _ in 0..len {
            let eps = if stream.uniform() < 0.2 { 0.0 } else { scale * 0.1 * stream.uniform() };
            let mut a = 4.0 * stream.uniform() / scale;
            if h > 0.0 {
                a = a.min((h + eps) / (h * h));
            }
            h = (h - a * h * h + eps).max(0.0);
            a_seq.push(a);
            eps_seq.push(eps);
        }
        let cap = perturbed_recursion_cap(h0, &a_seq, &eps_seq)?;
        let gap = h - cap * (1.0 + 1e-12);
        worst = worst.max(h - cap);
        violations += u64::from(gap > 0.0);
    }
    Ok(Check::at_most(
        format!("perturbed recursion cap over {count} instances"),
        violations as f64,
        0.0,
        format!("largest h_T - cap = {worst:.3e}"),
    ))
}

/// `Σρ_k` and `Σρ_k²` against their closed-form caps on random tuples.
pub fn rho_caps(tuples: u64, seed: u64) -> Result<Check> {
    let mut stream = SeedStream::new(seed, 5_000);
    let mut violations = 0u64;
    let mut tightest = f64::INFINITY;
    for _ in 0..tuples {
        let horizon = 1 + (10f64.powf(5.0 * stream.uniform())) as u64;
        let d = 1 + (stream.uniform() * 100.0) as usize;
        let l = 10f64.powf(2.0 * stream.uniform() - 1.0);
        let mu = l * 10f64.powf(-3.0 * stream.uniform());
        let delta2 = 10f64.powf(-4.0 * stream.uniform()).min(0.999);
        let rho = rho_weights(horizon, d, mu, l, delta2)?;
        let (cap, cap_sq) = rho_sum_caps(horizon, d, mu, l, delta2)?;
        let sum: f64 = rho.iter().sum();
        let sum_sq: f64 = rho.iter().map(|r| r * r).sum();
        violations += u64::from(sum > cap) + u64::from(sum_sq > cap_sq);
        tightest = tightest.min(cap - sum).min(cap_sq - sum_sq);
    }
    Ok(Check::at_most(
        format!("rho sums within closed-form caps over {tuples} tuples"),
        violations as f64,
        0.0,
        format!("smallest slack {tightest:.3e}"),
    ))
}

fn frequency_check(name: String, f: &EventFrequency) -> Check {
    Check::at_most(
        name,
        f.frequency,
        f.threshold,
        format!("{} failures, share {:.4}", f.failures, f.share),
    )
}

/// Event failure frequencies on an anisotropic quadratic, evaluated under
/// both the strongly convex and the convex splits of `δ`.
pub fn event_frequencies(d: usize, horizon: u64, trials: u64, delta: f64, seed: u64) -> Result<Vec<Check>> {
    let mut problem = ProblemConfig::named("anisotropic_quadratic");
    problem.d = Some(d);
    problem.mu = Some(0.1);
    let mut checks = Vec::new();
    for regime in [Regime::StronglyConvex, Regime::Convex] {
        let mut cfg = ExperimentConfig::new(problem.clone(), 1e-2, delta, trials);
        cfg.regime = Some(regime);
        cfg.master_seed = seed;
        cfg.overrides.horizon = Some(horizon);
        cfg.overrides.alpha = Some(1e-2);
        cfg.check_pathwise = false;
        let summary = run_monte_carlo(&cfg)?;
        let freq = summary
            .event_frequencies
            .ok_or_else(|| ZoError::invalid("no event reports were produced"))?;
        let tag = format!("d={d}, {} split", regime.short_name());
        checks.push(frequency_check(format!("event E_rho1, {tag}"), &freq.rho1));
        checks.push(frequency_check(format!("event E_rho2, {tag}"), &freq.rho2));
        if let Some(f) = &freq.alpha {
            checks.push(frequency_check(format!("event E_alpha, {tag}"), f));
        }
        checks.push(frequency_check(format!("event E_alpha_cvx, {tag}"), &freq.alpha_cvx));
        if let Some(f) = &freq.weighted {
            checks.push(frequency_check(format!("weighted projection event, {tag}"), f));
        }
    }
    Ok(checks)
}

/// Sample sizes for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryOptions {
    pub seed: u64,
    /// Draws for the distributional and chi-square checks.
    pub samples: u64,
    /// Trajectories per event-frequency experiment.
    pub trajectories: u64,
    /// Random instances for the recursion check.
    pub recursions: u64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            samples: 100_000,
            trajectories: 1_000,
            recursions: 10_000,
        }
    }
}

pub fn run_all(opts: &BatteryOptions) -> Result<Vec<Check>> {
    let seed = opts.seed;
    let mut checks = Vec::new();
    for d in [2, 3, 10, 100] {
        checks.extend(zeta_distribution(d, opts.samples, seed)?);
    }
    for tau in [1.0, 20f64.ln()] {
        checks.extend(chi_square_exceedance(100, tau, opts.samples, seed)?);
    }
    checks.extend(maximal_bernstein(100, &[5.0, 10.0, 15.0], opts.samples, seed)?);
    checks.push(unweighted_floor(5, 2000, 0.1, (opts.samples / 10).max(1), seed)?);
    for d in [2, 10] {
        checks.extend(event_frequencies(d, 1000, opts.trajectories, 0.1, seed)?);
    }
    checks.push(perturbed_recursion(opts.recursions, seed)?);
    checks.push(rho_caps(50, seed)?);
    Ok(checks)
}
