//! Independent trials of the method with deterministic aggregation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::optimizer::{run_trajectory, RunParams, TrajectoryRecord};
use crate::oracles::{level_radius, ProblemSpec, Regime};
use crate::schedules::{cvx_schedule, nc_schedule, sc_schedule, ScheduleReport};
use crate::theory::{
    bound_for_regime, check_events, check_pathwise, BoundInputs, EventReport, EventShares,
    PathwiseInputs, PathwiseReport,
};

use super::config::ExperimentConfig;

/// Largest fraction of aborted runs tolerated before the experiment fails.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

/// What a trial's certificate is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certified {
    /// `f(x_T) - f*`.
    FinalGap,
    /// `(1/T) Σ ‖∇f(x_t)‖²`.
    AverageGradNormSq,
}

impl Certified {
    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::StronglyConvex | Regime::Convex => Certified::FinalGap,
            Regime::Nonconvex => Certified::AverageGradNormSq,
        }
    }
}

/// The reduced result of one trajectory; the full record is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub completed: bool,
    /// The certified quantity; `None` for aborted runs.
    pub final_quantity: Option<f64>,
    pub final_gap: Option<f64>,
    pub average_grad_norm_sq: f64,
    pub events: Option<EventReport>,
    pub pathwise: PathwiseReport,
    pub queries: u64,
    pub rejections: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q50: f64,
    pub q90: f64,
    /// At level `1 - δ`.
    pub q_conf: f64,
}

/// Empirical failure frequency of each event over completed trials, with the
/// allotted share and the `share + 3σ` threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventFrequency {
    pub failures: u64,
    pub frequency: f64,
    pub share: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventFrequencies {
    pub rho1: EventFrequency,
    pub rho2: EventFrequency,
    pub alpha: Option<EventFrequency>,
    pub alpha_cvx: EventFrequency,
    pub weighted: Option<EventFrequency>,
}

impl EventFrequencies {
    pub fn all_within(&self) -> bool {
        [Some(self.rho1), Some(self.rho2), self.alpha, Some(self.alpha_cvx), self.weighted]
            .into_iter()
            .flatten()
            .all(|e| e.frequency <= e.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub problem: String,
    pub regime: Regime,
    pub certified: Certified,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub alpha: f64,
    pub overridden: bool,
    pub schedule: Option<ScheduleReport>,
    pub bound_inputs: BoundInputs,
    pub bound: f64,
    pub notes: Vec<String>,
    pub quantiles: Option<Quantiles>,
    /// Fraction of trials whose certified quantity exceeds `ε`. Aborted runs
    /// count as failures.
    pub failure_rate: f64,
    /// Wilson 95% interval for the failure probability.
    pub failure_ci: [f64; 2],
    /// `δ + 3 sqrt(δ(1-δ)/n)`.
    pub failure_threshold: f64,
    pub event_frequencies: Option<EventFrequencies>,
    pub pathwise: PathwiseReport,
    /// `q_{1-δ} ≤ bound`.
    pub dominated: bool,
    pub failed_runs: u64,
    pub total_queries: u64,
    pub wall_time_seconds: f64,
    pub per_trial: Vec<TrialOutcome>,
}

impl McSummary {
    /// The `montecarlo --assert` criterion.
    pub fn passes(&self) -> bool {
        self.dominated && self.failure_rate <= self.failure_threshold
    }

    /// Equality ignoring wall time.
    pub fn same_content(&self, other: &McSummary) -> bool {
        let mut a = self.clone();
        a.wall_time_seconds = other.wall_time_seconds;
        a == *other
    }
}

/// `k`-th order statistic at `ceil(level·n)` (1-indexed) of sorted data.
pub fn order_statistic(sorted: &[f64], level: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

/// `p + 3 sqrt(p(1-p)/n)`.
pub fn three_sigma_threshold(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    p + 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval at 95%.
pub fn wilson_interval(failures: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = failures as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if failures == n { 1.0 } else { (centre + half).min(1.0) };
    [lo, hi]
}

/// Everything fixed before trials start.
#[derive(Debug, Clone)]
pub struct Plan {
    pub problem: ProblemSpec,
    pub regime: Regime,
    pub schedule: Option<ScheduleReport>,
    pub horizon: u64,
    pub alpha: f64,
    pub bound_inputs: BoundInputs,
    pub bound: f64,
    pub notes: Vec<String>,
}

/// Builds the problem, resolves `(T, α)` and evaluates the matching bound.
pub fn plan(config: &ExperimentConfig) -> Result<Plan> {
    config.validate()?;
    let problem = config.problem.build()?;
    let regime = config.regime.unwrap_or(problem.regime);
    let d = problem.dim();
    let l = problem.smoothness_l;
    let mu = problem.strong_convexity_mu;
    let (eps, delta) = (config.epsilon, config.delta);
    let mut notes = Vec::new();

    match (regime, problem.regime) {
        (Regime::StronglyConvex, _) if mu <= 0.0 => {
            return Err(ZoError::Config(format!(
                "problem '{}' is not strongly convex",
                problem.name
            )))
        }
        (Regime::Convex, Regime::Nonconvex) => {
            return Err(ZoError::Config(format!(
                "problem '{}' is tagged nonconvex; the convex analysis does not apply",
                problem.name
            )))
        }
        _ => {}
    }

    let delta0 = problem.initial_gap().ok_or_else(|| {
        ZoError::Config(format!("problem '{}' has no known optimal value", problem.name))
    })?;

    let radius_at = |b: f64, notes: &mut Vec<String>| -> Result<f64> {
        match level_radius(&problem, b)? {
            Some(r) => Ok(r),
            None => match config.problem.radius {
                Some(r) => {
                    notes.push(format!(
                        "level-set radius R = {r} supplied by hand; the convex bound is conditional on it"
                    ));
                    Ok(r)
                }
                None => Err(ZoError::Config(format!(
                    "problem '{}' has no analytic level-set radius; supply problem.R",
                    problem.name
                ))),
            },
        }
    };

    let scheduled = match regime {
        Regime::StronglyConvex => sc_schedule(d, l, mu, delta0, eps, delta),
        Regime::Convex => radius_at(eps / 4.0, &mut notes)
            .and_then(|r_eps| cvx_schedule(d, l, r_eps, eps, delta)),
        Regime::Nonconvex => nc_schedule(d, l, delta0, eps, delta),
    };
    let fully_overridden = config.overrides.horizon.is_some() && config.overrides.alpha.is_some();
    let schedule = match scheduled {
        Ok(s) => Some(s).filter(|s| !s.trivial),
        Err(e) if fully_overridden => {
            notes.push(format!("no reference schedule: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let horizon = match (config.overrides.horizon, &schedule) {
        (Some(t), _) => t,
        (None, Some(s)) => s.horizon,
        (None, None) => {
            return Err(ZoError::Config(
                "the schedule needs no iterations at this start; give overrides.T to run anyway"
                    .into(),
            ))
        }
    };
    let alpha = match (config.overrides.alpha, &schedule) {
        (Some(a), _) => a,
        (None, Some(s)) => s.alpha,
        (None, None) => {
            return Err(ZoError::Config(
                "no scheduled alpha at this start; give overrides.alpha".into(),
            ))
        }
    };

    let mut bound_inputs = BoundInputs {
        d,
        l,
        mu: (regime == Regime::StronglyConvex).then_some(mu),
        alpha,
        horizon,
        delta,
        delta0,
        radius: None,
    };
    if regime == Regime::Convex {
        let a = bound_inputs.accumulation()?.a_alpha_t;
        bound_inputs.radius = Some(radius_at(a, &mut notes)?);
    }
    notes.dedup();
    let bound = bound_for_regime(regime, &bound_inputs)?;
    if !bound.is_finite() {
        return Err(ZoError::invalid(format!(
            "the {regime} bound is not finite at T = {horizon}, alpha = {alpha}"
        )));
    }

    Ok(Plan {
        problem,
        regime,
        schedule,
        horizon,
        alpha,
        bound_inputs,
        bound,
        notes,
    })
}

fn reduce(
    plan: &Plan,
    config: &ExperimentConfig,
    index: u64,
    record: Result<TrajectoryRecord>,
) -> TrialOutcome {
    let record = match record {
        Ok(r) => r,
        Err(e) => {
            return TrialOutcome {
                trial_index: index,
                completed: false,
                final_quantity: None,
                final_gap: None,
                average_grad_norm_sq: 0.0,
                events: None,
                pathwise: PathwiseReport::default(),
                queries: 0,
                rejections: 0,
                error: Some(e.to_string()),
            }
        }
    };
    let problem = &plan.problem;
    let pathwise = if config.check_pathwise {
        check_pathwise(
            &record,
            &PathwiseInputs {
                l: problem.smoothness_l,
                alpha: plan.alpha,
                mu: (problem.strong_convexity_mu > 0.0).then_some(problem.strong_convexity_mu),
                f_star: problem.f_star,
            },
        )
    } else {
        PathwiseReport::default()
    };
    let completed = record.is_complete();
    let final_gap = problem.f_star.map(|fs| record.f_final - fs);
    let average = record.average_grad_norm_sq();
    let final_quantity = completed
        .then(|| match Certified::for_regime(plan.regime) {
            Certified::FinalGap => final_gap,
            Certified::AverageGradNormSq => Some(average),
        })
        .flatten();
    let events = if completed && config.check_events {
        check_events(&record, &plan.bound_inputs).ok()
    } else {
        None
    };
    TrialOutcome {
        trial_index: index,
        completed,
        final_quantity,
        final_gap,
        average_grad_norm_sq: average,
        events,
        pathwise,
        queries: record.queries.count,
        rejections: record.rejections,
        error: record.aborted,
    }
}

/// Runs trial `i` on stream `(master_seed, i)` for every `i < trials`.
///
/// Outcomes are stored by trial index, so every aggregated number is
/// independent of the worker count and completion order.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<McSummary> {
    let plan = plan(config)?;
    let started = Instant::now();
    let trials = config.trials as usize;
    let workers = config.worker_count().clamp(1, trials);

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TrialOutcome>>> = Mutex::new(vec![None; trials]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= trials {
                    break;
                }
                let params = RunParams {
                    horizon: plan.horizon,
                    alpha: plan.alpha,
                    delta: config.delta,
                    epsilon: config.epsilon,
                    l_used: plan.problem.smoothness_l,
                    master_seed: config.master_seed,
                    stream_index: i as u64,
                };
                let outcome = reduce(&plan, config, i as u64, run_trajectory(&plan.problem, &params));
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(outcome);
            });
        }
    });
    let outcomes: Vec<TrialOutcome> = slots
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|o| o.expect("every trial index is visited"))
        .collect();

    let failed_runs = outcomes.iter().filter(|o| !o.completed).count() as u64;
    failed_run_guard(failed_runs, trials as u64)?;

    let mut summary = aggregate(config, plan, outcomes);
    summary.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(summary)
}

/// Errors when more than 1% of the trials aborted.
pub fn failed_run_guard(failed: u64, trials: u64) -> Result<()> {
    if failed as f64 > MAX_FAILED_FRACTION * trials as f64 {
        return Err(ZoError::TooManyFailedRuns { failed, trials });
    }
    Ok(())
}

fn event_frequency(failures: u64, n: u64, share: f64) -> EventFrequency {
    EventFrequency {
        failures,
        frequency: if n == 0 { 0.0 } else { failures as f64 / n as f64 },
        share,
        threshold: three_sigma_threshold(share, n),
    }
}

fn aggregate(config: &ExperimentConfig, plan: Plan, outcomes: Vec<TrialOutcome>) -> McSummary {
    let n = outcomes.len() as u64;
    let mut values: Vec<f64> = outcomes.iter().filter_map(|o| o.final_quantity).collect();
    values.sort_by(f64::total_cmp);
    let quantiles = (!values.is_empty()).then(|| Quantiles {
        q50: order_statistic(&values, 0.5).unwrap_or(f64::NAN),
        q90: order_statistic(&values, 0.9).unwrap_or(f64::NAN),
        q_conf: order_statistic(&values, 1.0 - config.delta).unwrap_or(f64::NAN),
    });

    let failures = outcomes
        .iter()
        .filter(|o| o.final_quantity.is_none_or(|v| v > config.epsilon))
        .count() as u64;

    let reports: Vec<&EventReport> = outcomes.iter().filter_map(|o| o.events.as_ref()).collect();
    let event_frequencies = (config.check_events && !reports.is_empty()).then(|| {
        let m = reports.len() as u64;
        let shares = EventShares::for_inputs(&plan.bound_inputs);
        let count = |f: &dyn Fn(&EventReport) -> bool| reports.iter().filter(|r| f(r)).count() as u64;
        EventFrequencies {
            rho1: event_frequency(count(&|r| !r.holds_rho1), m, shares.rho1),
            rho2: event_frequency(count(&|r| !r.holds_rho2), m, shares.rho2),
            alpha: shares
                .alpha
                .map(|s| event_frequency(count(&|r| r.holds_alpha == Some(false)), m, s)),
            alpha_cvx: event_frequency(count(&|r| !r.holds_alpha_cvx), m, shares.alpha_cvx),
            weighted: shares
                .weighted
                .map(|s| event_frequency(count(&|r| r.holds_weighted == Some(false)), m, s)),
        }
    });

    let mut pathwise = PathwiseReport::default();
    for o in &outcomes {
        pathwise.merge(&o.pathwise);
    }

    let dominated = quantiles.is_some_and(|q| q.q_conf <= plan.bound);
    let failure_rate = if n == 0 { 0.0 } else { failures as f64 / n as f64 };
    McSummary {
        problem: plan.problem.name.clone(),
        regime: plan.regime,
        certified: Certified::for_regime(plan.regime),
        d: plan.problem.dim(),
        epsilon: config.epsilon,
        delta: config.delta,
        trials: config.trials,
        master_seed: config.master_seed,
        horizon: plan.horizon,
        alpha: plan.alpha,
        overridden: config.overrides.horizon.is_some() || config.overrides.alpha.is_some(),
        schedule: plan.schedule,
        bound_inputs: plan.bound_inputs,
        bound: plan.bound,
        notes: plan.notes,
        quantiles,
        failure_rate,
        failure_ci: wilson_interval(failures, n),
        failure_threshold: three_sigma_threshold(config.delta, n),
        event_frequencies,
        pathwise,
        dominated,
        failed_runs: outcomes.iter().filter(|o| !o.completed).count() as u64,
        total_queries: outcomes.iter().map(|o| o.queries).sum(),
        wall_time_seconds: 0.0,
        per_trial: outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ProblemConfig;

    #[test]
    fn order_statistic_convention() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(order_statistic(&v, 0.9), Some(9.0));
        assert_eq!(order_statistic(&v, 0.91), Some(10.0));
        assert_eq!(order_statistic(&v, 0.5), Some(5.0));
        assert_eq!(order_statistic(&v, 0.0), Some(1.0));
        assert_eq!(order_statistic(&[], 0.5), None);
    }

    #[test]
    fn wilson_contains_estimate() {
        let [lo, hi] = wilson_interval(10, 100);
        assert!(lo < 0.1 && 0.1 < hi);
        assert_eq!(wilson_interval(0, 50)[0], 0.0);
    }

    #[test]
    fn single_deterministic_trial() {
        let mut cfg = ExperimentConfig::new(ProblemConfig::named("quad1d"), 1e-3, 0.1, 1);
        cfg.overrides.horizon = Some(2);
        cfg.overrides.alpha = Some(1e-3);
        let s = run_monte_carlo(&cfg).unwrap();
        let gap = s.per_trial[0].final_gap.unwrap();
        assert!((gap - 0.5 * 0.5625f64.powi(2)).abs() < 1e-12, "{gap}");
        assert_eq!(s.total_queries, 4);
        assert_eq!(s.pathwise.total_violations(), 0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut p = ProblemConfig::named("anisotropic_quadratic");
        p.d = Some(5);
        p.mu = Some(0.2);
        let mut cfg = ExperimentConfig::new(p, 1e-2, 0.1, 24);
        cfg.overrides.horizon = Some(300);
        cfg.master_seed = 3;
        cfg.workers = 1;
        let a = run_monte_carlo(&cfg).unwrap();
        cfg.workers = 5;
        let b = run_monte_carlo(&cfg).unwrap();
        assert!(a.same_content(&b));
        assert_eq!(a.total_queries, 24 * 600);
        let q = a.quantiles.unwrap();
        assert!(q.q50 <= q.q90 && q.q90 <= q.q_conf);
    }

    #[test]
    fn regime_mismatch_is_a_config_error() {
        let mut p = ProblemConfig::named("cosine_regularized");
        p.d = Some(3);
        let mut cfg = ExperimentConfig::new(p, 0.5, 0.1, 1);
        cfg.regime = Some(Regime::StronglyConvex);
        assert!(matches!(plan(&cfg), Err(ZoError::Config(_))));
        cfg.regime = Some(Regime::Convex);
        assert!(plan(&cfg).is_err());
    }

    #[test]
    fn failed_run_tolerance() {
        assert!(failed_run_guard(5, 500).is_ok());
        assert!(failed_run_guard(6, 500).is_err());
        assert!(matches!(
            failed_run_guard(1, 4),
            Err(ZoError::TooManyFailedRuns { failed: 1, trials: 4 })
        ));
    }

    #[test]
    fn non_finite_bound_is_rejected() {
        let mut p = ProblemConfig::named("isotropic_quadratic");
        p.d = Some(2);
        let mut cfg = ExperimentConfig::new(p, 1e-3, 0.1, 4);
        cfg.overrides.alpha = Some(1e200);
        assert!(run_monte_carlo(&cfg).is_err());
    }
}
