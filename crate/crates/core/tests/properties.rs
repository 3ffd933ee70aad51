use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use zogd::optimizer::{finite_difference_residual, run_trajectory, RunParams};
use zogd::oracles::{gradient_reference, level_radius, suite, ProblemSpec, Regime};
use zogd::sampling::{sample_direction, squared_normalized_projection, Direction, SeedStream};
use zogd::schedules::{cvx_schedule, nc_schedule, sc_schedule, ScheduleReport};
use zogd::theory::{
    beta_raw_moment, bound_for_regime, perturbed_recursion_cap, rho_sum_caps, rho_weights,
    sc_bound_terms, BoundInputs,
};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn members() -> Vec<ProblemSpec> {
    vec![
        suite::quad1d(),
        suite::isotropic_quadratic(5, 2.0).unwrap(),
        suite::anisotropic_quadratic(10, 0.1, 1.0).unwrap(),
        suite::singular_quadratic(10, 0.5, 1.0).unwrap(),
        suite::log_sum_exp(5).unwrap(),
        suite::cosine_regularized(6, 1.0).unwrap(),
    ]
}

fn random_point(rng: &mut ChaCha12Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}

// ---- sampling ----

#[test]
fn norm_sq_mean_matches_chi_square() {
    let mut s = SeedStream::new(11, 0);
    let n = 100_000;
    let mean = (0..n)
        .map(|_| sample_direction(&mut s, 4).unwrap().norm_sq())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 4.0).abs() <= 0.03, "mean {mean}");
}

#[test]
fn coordinates_have_unit_variance() {
    let mut s = SeedStream::new(12, 0);
    let n = 100_000;
    let mut sum = [0.0f64; 8];
    let mut sum_sq = [0.0f64; 8];
    for _ in 0..n {
        let u = sample_direction(&mut s, 8).unwrap();
        for (i, v) in u.as_slice().iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    for i in 0..8 {
        let m = sum[i] / n as f64;
        let var = sum_sq[i] / n as f64 - m * m;
        assert!((var - 1.0).abs() <= 0.02, "coordinate {i}: {var}");
    }
}

#[test]
fn projection_mean_is_one_over_d() {
    let mut s = SeedStream::new(13, 0);
    let n = 1_000_000;
    let mut a = vec![0.0; 10];
    a[3] = 1.0;
    let mean = (0..n)
        .map(|_| squared_normalized_projection(&sample_direction(&mut s, 10).unwrap(), &a).unwrap())
        .sum::<f64>()
        / n as f64;
    let tol = 3.0 * (2.0 * 9.0 / (100.0 * 12.0) / n as f64).sqrt();
    assert!((mean - 0.1).abs() <= tol, "mean {mean}, tol {tol}");
}

fn householder(v: &[f64], x: &[f64]) -> Vec<f64> {
    let c = 2.0 * dot(v, x) / norm_sq(v);
    x.iter().zip(v).map(|(xi, vi)| xi - c * vi).collect()
}

proptest! {
    #[test]
    fn projection_is_in_unit_interval_and_rotation_invariant(
        seed in any::<u64>(),
        d in 1usize..40,
        reflect in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let mut s = SeedStream::new(seed, 0);
        let u = sample_direction(&mut s, d).unwrap();
        let raw = sample_direction(&mut s, d).unwrap();
        let a: Vec<f64> = raw.as_slice().iter().map(|v| v / raw.norm_sq().sqrt()).collect();
        let z = squared_normalized_projection(&u, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&z));
        if d == 1 {
            prop_assert_eq!(z, 1.0);
        }

        let v = &reflect[..d];
        prop_assume!(norm_sq(v) > 1e-6);
        let qu = Direction::from_vec(householder(v, u.as_slice())).unwrap();
        let qa = householder(v, &a);
        let qa_norm = norm_sq(&qa).sqrt();
        let qa: Vec<f64> = qa.iter().map(|x| x / qa_norm).collect();
        let zq = squared_normalized_projection(&qu, &qa).unwrap();
        prop_assert!((z - zq).abs() <= 1e-10);
    }
}

// ---- oracles ----

#[test]
fn descent_lemma_and_two_sided_bound() {
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    for p in members() {
        let d = p.dim();
        let l = p.smoothness_l;
        for _ in 0..10_000 {
            let x = random_point(&mut rng, d, 5.0);
            let y = random_point(&mut rng, d, 5.0);
            let g = gradient_reference(&p, &x).unwrap();
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let (fx, fy) = (p.value(&x), p.value(&y));
            let lin = fy - fx - dot(&g, &diff);
            let cap = l / 2.0 * norm_sq(&diff);
            let tol = 1e-9 * (1.0 + fx.abs() + fy.abs() + cap);
            assert!(lin <= cap + tol, "{}: {lin} > {cap}", p.name);
            assert!(-lin <= cap + tol, "{}: {} > {cap}", p.name, -lin);
        }
    }
}

#[test]
fn strong_convexity_and_polyak_lojasiewicz() {
    let mut rng = ChaCha12Rng::seed_from_u64(22);
    for p in members().into_iter().filter(|p| p.regime == Regime::StronglyConvex) {
        let (d, mu) = (p.dim(), p.strong_convexity_mu);
        let f_star = p.f_star.unwrap();
        for _ in 0..10_000 {
            let x = random_point(&mut rng, d, 5.0);
            let y = random_point(&mut rng, d, 5.0);
            let g = gradient_reference(&p, &x).unwrap();
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let (fx, fy) = (p.value(&x), p.value(&y));
            let lower = fx + dot(&g, &diff) + mu / 2.0 * norm_sq(&diff);
            assert!(fy >= lower - 1e-9 * (1.0 + fy.abs()), "{}", p.name);
            assert!(norm_sq(&g) >= 2.0 * mu * (fx - f_star) - 1e-9 * (1.0 + fx.abs()));
        }
    }
}

#[test]
fn values_respect_declared_infimum() {
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    for p in members() {
        let f_star = p.f_star.unwrap();
        let n = if p.regime == Regime::Nonconvex { 100_000 } else { 10_000 };
        for _ in 0..n {
            let x = random_point(&mut rng, p.dim(), 10.0);
            assert!(p.value(&x) >= f_star - 1e-9 * (1.0 + f_star.abs()), "{}", p.name);
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(24);
    let h = 1e-6;
    for p in members() {
        let d = p.dim();
        for _ in 0..100 {
            let x = random_point(&mut rng, d, 3.0);
            let g = gradient_reference(&p, &x).unwrap();
            for i in 0..d {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()),
                    "{} coordinate {i}: {fd} vs {}",
                    p.name,
                    g[i]
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn level_radius_is_nondecreasing(b1 in 0.0f64..10.0, b2 in 0.0f64..10.0) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        for p in members() {
            if let (Some(r_lo), Some(r_hi)) = (
                level_radius(&p, lo).unwrap(),
                level_radius(&p, hi).unwrap(),
            ) {
                prop_assert!(r_lo <= r_hi * (1.0 + 1e-12), "{}", p.name);
            }
        }
    }
}

// ---- optimizer ----

proptest! {
    #[test]
    fn quadratic_differences_are_exact(
        seed in any::<u64>(),
        x in prop::collection::vec(-10.0f64..10.0, 10),
        alpha in 1e-4f64..1.0,
    ) {
        let p = suite::anisotropic_quadratic(10, 0.1, 1.0).unwrap();
        let u = sample_direction(&mut SeedStream::new(seed, 0), 10).unwrap();
        let beta = finite_difference_residual(&p, &x, &u, alpha).unwrap();
        let scale = 1.0 + norm_sq(&x).sqrt() + u.norm_sq().sqrt();
        prop_assert!(beta.abs() <= 1e-10 * scale * scale);
    }

    #[test]
    fn quadratic_trajectories_descend(seed in any::<u64>(), horizon in 1u64..200) {
        let p = suite::anisotropic_quadratic(6, 0.2, 1.0).unwrap();
        let params = RunParams {
            horizon,
            alpha: 1e-2,
            delta: 0.1,
            epsilon: 1e-3,
            l_used: p.smoothness_l,
            master_seed: seed,
            stream_index: 0,
        };
        let rec = run_trajectory(&p, &params).unwrap();
        prop_assert_eq!(rec.queries.count, 2 * horizon);
        for (t, s) in rec.steps.iter().enumerate() {
            prop_assert!(s.delta_alpha <= 1e-12);
            prop_assert!(rec.f_after(t) <= s.f_before);
        }
        prop_assert_eq!(run_trajectory(&p, &params).unwrap(), rec);
    }
}

#[test]
fn log_sum_exp_residual_within_smoothness_cap() {
    let p = suite::log_sum_exp(5).unwrap();
    let x = [0.3, -1.2, 0.8, 2.0, -0.4];
    let u = Direction::from_vec(vec![0.9, -0.2, 1.4, 0.5, -1.1]).unwrap();
    let alpha = 1e-3;
    let beta = finite_difference_residual(&p, &x, &u, alpha).unwrap();
    assert!(beta.abs() <= p.smoothness_l * alpha * u.norm_sq() / 2.0);
}

#[test]
fn cosine_residual_within_smoothness_cap() {
    let p = suite::cosine_regularized(4, 1.0).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let mut s = SeedStream::new(31, 0);
    for i in 0..1_000 {
        let alpha = if i % 2 == 0 { 1e-1 } else { 1e-3 };
        let x = random_point(&mut rng, 4, 5.0);
        let u = sample_direction(&mut s, 4).unwrap();
        let beta = finite_difference_residual(&p, &x, &u, alpha).unwrap();
        assert!(beta.abs() <= p.smoothness_l * alpha * u.norm_sq() / 2.0 + 1e-12);
    }
}

#[test]
fn residual_shrinks_with_alpha() {
    let p = suite::cosine_regularized(3, 1.0).unwrap();
    let x = [0.7, -1.3, 2.1];
    let u = Direction::from_vec(vec![0.6, 1.1, -0.8]).unwrap();
    let coarse = finite_difference_residual(&p, &x, &u, 1e-2).unwrap().abs();
    let fine = finite_difference_residual(&p, &x, &u, 1e-3).unwrap().abs();
    assert!(fine * 5.0 <= coarse, "{coarse} -> {fine}");
}

#[test]
fn isotropic_median_contraction() {
    let d = 10;
    let p = suite::isotropic_quadratic(d, 1.0).unwrap();
    let horizon = 200;
    let mut rates: Vec<f64> = (0..1_000)
        .map(|k| {
            let params = RunParams {
                horizon,
                alpha: 1e-3,
                delta: 0.1,
                epsilon: 1e-3,
                l_used: 1.0,
                master_seed: 41,
                stream_index: k,
            };
            let rec = run_trajectory(&p, &params).unwrap();
            (rec.f_final / rec.steps[0].f_before).powf(1.0 / horizon as f64)
        })
        .collect();
    rates.sort_by(f64::total_cmp);
    let median = rates[rates.len() / 2];
    let df = d as f64;
    assert!(median >= 1.0 - 3.0 / (2.0 * df) && median <= 1.0 - 1.0 / (8.0 * df), "{median}");
}

// ---- schedules ----

#[test]
fn strongly_convex_horizon_matches_high_precision_values() {
    let mut reader = csv::Reader::from_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/sc_horizon.csv"
    ))
    .unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        let report = sc_schedule(v[0] as usize, v[1], v[2], v[3], v[4], v[5]).unwrap();
        assert_relative_eq!(report.t_raw, v[6], max_relative = 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 100);
}

fn schedule(regime: Regime, d: usize, size: f64, eps: f64, delta: f64) -> ScheduleReport {
    match regime {
        Regime::StronglyConvex => sc_schedule(d, 1.0, 0.1, size, eps, delta),
        Regime::Convex => cvx_schedule(d, 1.0, size, eps, delta),
        Regime::Nonconvex => nc_schedule(d, 1.0, size, eps, delta),
    }
    .unwrap()
}

fn regime_strategy() -> impl Strategy<Value = Regime> {
    prop_oneof![
        Just(Regime::StronglyConvex),
        Just(Regime::Convex),
        Just(Regime::Nonconvex)
    ]
}

proptest! {
    #[test]
    fn schedules_are_monotone(
        regime in regime_strategy(),
        d in 1usize..50,
        size in 0.1f64..10.0,
        eps in 1e-4f64..0.05,
        shrink in 0.1f64..1.0,
        delta in 1e-4f64..0.9,
    ) {
        let base = schedule(regime, d, size, eps, delta);
        prop_assert!(schedule(regime, d, size, eps * shrink, delta).horizon >= base.horizon);
        prop_assert!(schedule(regime, d, size, eps, delta * shrink).horizon >= base.horizon);
        prop_assert!(schedule(regime, d + 1, size, eps, delta).alpha <= base.alpha);
    }

    #[test]
    fn schedules_meet_their_bounds(
        regime in regime_strategy(),
        d in 1usize..50,
        size in 0.1f64..10.0,
        eps in 1e-4f64..0.05,
        delta in 1e-4f64..0.9,
    ) {
        let s = schedule(regime, d, size, eps, delta);
        let inputs = BoundInputs {
            d,
            l: 1.0,
            mu: (regime == Regime::StronglyConvex).then_some(0.1),
            alpha: s.alpha,
            horizon: s.horizon,
            delta,
            delta0: if regime == Regime::Convex { 1.0 } else { size },
            radius: (regime == Regime::Convex).then_some(size),
        };
        let bound = bound_for_regime(regime, &inputs).unwrap();
        prop_assert!(bound >= 0.0);
        prop_assert!(bound <= eps * (1.0 + 1e-9), "{bound} > {eps}");
    }

    #[test]
    fn halving_epsilon_doubles_nonconvex_horizon(
        d in 1usize..100,
        delta0 in 0.1f64..10.0,
        eps in 1e-4f64..1.0,
        delta in 1e-4f64..0.9,
    ) {
        let a = nc_schedule(d, 1.0, delta0, eps, delta).unwrap();
        let b = nc_schedule(d, 1.0, delta0, eps / 2.0, delta).unwrap();
        prop_assert!((b.t_raw / a.t_raw - 2.0).abs() <= 1e-12);
    }
}

// ---- theory ----

#[test]
fn beta_moments_reproduce_variance() {
    let mut rng = ChaCha12Rng::seed_from_u64(51);
    for _ in 0..20 {
        let a = 0.1 + 10.0 * rng.gen::<f64>();
        let b = 0.1 + 10.0 * rng.gen::<f64>();
        let m1 = beta_raw_moment(a, b, 1).unwrap();
        let m2 = beta_raw_moment(a, b, 2).unwrap();
        let s = a + b;
        assert_relative_eq!(m2 - m1 * m1, a * b / (s * s * (s + 1.0)), max_relative = 1e-10);
    }
}

proptest! {
    #[test]
    fn rho_weights_respect_caps(
        horizon in 1u64..20_000,
        d in 1usize..100,
        l in 0.1f64..10.0,
        ratio in 1e-3f64..1.0,
        delta2 in 1e-4f64..0.99,
    ) {
        let mu = l * ratio;
        let rho = rho_weights(horizon, d, mu, l, delta2).unwrap();
        let (cap, cap_sq) = rho_sum_caps(horizon, d, mu, l, delta2).unwrap();
        prop_assert!(rho.iter().all(|r| *r > 0.0 && *r <= 1.0));
        prop_assert!(rho.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(rho.iter().sum::<f64>() <= cap);
        prop_assert!(rho.iter().map(|r| r * r).sum::<f64>() <= cap_sq);
    }

    #[test]
    fn perturbed_recursion_stays_below_cap(
        h0 in 0.0f64..10.0,
        steps in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30),
    ) {
        let mut h = h0;
        let (mut a_seq, mut eps_seq) = (Vec::new(), Vec::new());
        for (a_frac, eps) in steps {
            let mut a = 4.0 * a_frac;
            if h > 0.0 {
                a = a.min((h + eps) / (h * h));
            }
            h = (h - a * h * h + eps).max(0.0);
            a_seq.push(a);
            eps_seq.push(eps);
        }
        let cap = perturbed_recursion_cap(h0, &a_seq, &eps_seq).unwrap();
        prop_assert!(h <= cap * (1.0 + 1e-12) + 1e-15, "{h} > {cap}");
    }

    #[test]
    fn bounds_are_nonnegative_and_contraction_decays(
        d in 1usize..50,
        horizon in 1u64..100_000,
        extra in 1u64..10_000,
        alpha in 0.0f64..1.0,
        delta in 1e-4f64..0.9,
        delta0 in 0.0f64..10.0,
    ) {
        let inputs = BoundInputs {
            d,
            l: 1.0,
            mu: Some(0.1),
            alpha,
            horizon,
            delta,
            delta0,
            radius: Some(1.0),
        };
        for regime in [Regime::StronglyConvex, Regime::Convex, Regime::Nonconvex] {
            if let Ok(b) = bound_for_regime(regime, &inputs) {
                prop_assert!(b >= 0.0 && !b.is_nan());
            }
        }
        let (first, _) = sc_bound_terms(&inputs).unwrap();
        let later = BoundInputs { horizon: horizon + extra, ..inputs };
        prop_assert!(sc_bound_terms(&later).unwrap().0 <= first);
    }
}
