//! Checks against independent oracles: enumeration, finite differences,
//! analytic solutions and dense grid search.

use wormald_core::coupon::{self, closed_form, exact_cover_tail, make_coupon_spec, CouponState, TruncationLevel};
use wormald_core::mc;
use wormald_core::ode::{self, convergence_order, integrate, IntegratorConfig};
use wormald_core::process::{DomainBox, ProcessSpec};

fn lv(l: usize) -> TruncationLevel {
    TruncationLevel::new(l).unwrap()
}

/// Counts draw sequences of length `k` over `n` types that miss some type,
/// i.e. `n^k * P(T > k)`.
fn count_uncovered(n: usize, k: u32) -> u64 {
    let total = (n as u64).pow(k);
    (0..total)
        .filter(|&code| {
            let mut seen = vec![false; n];
            let mut c = code;
            for _ in 0..k {
                seen[(c % n as u64) as usize] = true;
                c /= n as u64;
            }
            seen.iter().any(|s| !s)
        })
        .count() as u64
}

#[test]
fn enumeration_small_cases() {
    // T >= 3 at n = 2 iff the first two draws coincide.
    assert_eq!(count_uncovered(2, 2), 2);
    // 27 sequences of length 3, 6 of them onto.
    assert_eq!(count_uncovered(3, 3), 21);
}

#[test]
fn exact_tail_matches_enumeration() {
    for n in 1..=5usize {
        for k in 0..=8u32 {
            let expected = count_uncovered(n, k) as f64 / (n as f64).powi(k as i32);
            let got = exact_cover_tail(n, u64::from(k)).unwrap();
            assert!((got - expected).abs() < 1e-12, "n={n} k={k}: {got} vs {expected}");
        }
    }
}

#[test]
fn exact_tail_matches_occupancy_recursion() {
    // Markov chain on the number of distinct types seen: an independent
    // route to P(T > k) for moderate n.
    for &(n, k) in &[(10usize, 40u64), (50, 200), (200, 1000), (1000, 6908)] {
        let mut dist = vec![0.0f64; n + 1];
        dist[0] = 1.0;
        for _ in 0..k {
            let mut next = vec![0.0f64; n + 1];
            for (seen, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let stay = seen as f64 / n as f64;
                next[seen] += p * stay;
                if seen < n {
                    next[seen + 1] += p * (1.0 - stay);
                }
            }
            dist = next;
        }
        let expected = 1.0 - dist[n];
        let got = exact_cover_tail(n, k).unwrap();
        assert!((got - expected).abs() < 1e-10, "n={n} k={k}: {got} vs {expected}");
    }
}

#[test]
fn closed_form_is_a_fixed_point_of_the_dynamics() {
    let eps = 1e-5;
    for i in 0..20 {
        for step in 1..=1000 {
            let s = step as f64 * 0.01;
            let derivative = (closed_form(s + eps, i) - closed_form(s - eps, i)) / (2.0 * eps);
            let below = if i == 0 { 0.0 } else { closed_form(s, i - 1) };
            let rhs = below - closed_form(s, i);
            assert!((derivative - rhs).abs() <= 1e-8, "i={i} s={s}: {derivative} vs {rhs}");
        }
    }
}

#[test]
fn closed_form_agrees_with_fine_rk4() {
    let l = lv(10);
    let spec = make_coupon_spec(l, 1.0).unwrap();
    let traj = integrate(&spec, &coupon::initial_state(l), 1.0, IntegratorConfig::new(1e-4, 10_000).unwrap()).unwrap();
    assert!((traj.last().z[1] - closed_form(1.0, 1)).abs() < 1e-12);
}

#[test]
fn rk4_coupon_examples() {
    let l = lv(10);
    let spec = make_coupon_spec(l, 1.0).unwrap();
    let traj = integrate(&spec, &coupon::initial_state(l), 1.0, IntegratorConfig::new(1e-3, 1).unwrap()).unwrap();
    let end = traj.last();
    assert_eq!(end.s, 1.0);
    let e_inv = (-1.0f64).exp();
    assert!((end.z[0] - e_inv).abs() <= 1e-8);
    assert!((end.z[1] - e_inv).abs() <= 1e-8);
    assert!((end.z[2] - e_inv / 2.0).abs() <= 1e-8);
    // The rounded literals differ from e^-1 in the eighth digit.
    assert!((end.z[0] - 0.3678794).abs() < 1e-7);
    assert!((end.z[2] - 0.1839397).abs() < 1e-7);
}

#[test]
fn rk4_order_on_coupon_drift() {
    let l = lv(10);
    let spec = make_coupon_spec(l, 5.0).unwrap();
    let order = convergence_order(&spec, &coupon::initial_state(l), 5.0, 1e-2, |s, i| {
        coupon::closed_form_coordinate(s, i, l)
    })
    .unwrap();
    assert!((3.5..=4.5).contains(&order.order), "{order:?}");
}

#[test]
fn zero_drift_order_saturates() {
    let domain = DomainBox::uniform(-0.1, 5.1, -0.1, 1.1, 2).unwrap();
    let spec = ProcessSpec::new(2, |_s: f64, _z: &[f64], out: &mut [f64]| out.fill(0.0), 1.0, 1.0, domain).unwrap();
    let order = convergence_order(&spec, &[0.3, 0.7], 5.0, 1e-2, |_, l| [0.3, 0.7][l]).unwrap();
    assert!(order.saturated);
    assert_eq!(order.order, f64::INFINITY);
}

#[test]
fn coupon_lipschitz_dense_grid() {
    // Exhaustive pairs on a lattice of (s, z) for l = 1 (three coordinates).
    let l = lv(1);
    let spec = make_coupon_spec(l, 2.0).unwrap();
    let ticks: Vec<f64> = (0..5).map(|k| -0.05 + 0.28 * k as f64).collect();
    let mut points = Vec::new();
    for &s in &[0.0, 1.0] {
        for &a in &ticks {
            for &b in &ticks {
                for &c in &ticks {
                    points.push((s, [a, b, c]));
                }
            }
        }
    }
    let mut best = 0.0f64;
    for (su, u) in &points {
        let fu = spec.evaluate_drift(*su, u).unwrap();
        for (sv, v) in &points {
            let dist = (su - sv).abs() + u.iter().zip(v).map(|(x, y)| (x - y).abs()).sum::<f64>();
            if dist == 0.0 {
                continue;
            }
            let fv = spec.evaluate_drift(*sv, v).unwrap();
            for (x, y) in fu.iter().zip(&fv) {
                best = best.max((x - y).abs() / dist);
            }
        }
    }
    assert!(best <= 1.0 + 1e-12, "grid maximum {best}");
    // The bound is attained: moving z_0 alone changes f_0 by the same amount.
    assert!(best >= 1.0 - 1e-12);
    assert!(spec.estimate_lipschitz(20_000, 3).unwrap() <= 1.0 + 1e-9);
}

#[test]
fn one_step_expectation_by_enumeration() {
    // n = 4 with Y = (2, 2, 0, ...): average the bucket change over all four
    // equally likely draws.
    let l = lv(10);
    let state = CouponState::from_type_counts(vec![1, 1, 0, 0], l).unwrap();
    let mut mean = vec![0.0; l.coord_count()];
    for draw in 0..4 {
        let d = state.peek(draw);
        if d.from != d.to {
            mean[d.from] -= 0.25;
            mean[d.to] += 0.25;
        }
    }
    assert_eq!(mean[1], 0.0);
    assert_eq!(mean[2], 0.5);
    let spec = make_coupon_spec(l, 1.0).unwrap();
    assert_eq!(spec.evaluate_drift(0.5, &state.scaled_counts()).unwrap(), mean);

    let report = mc::empirical_drift(&state, 10_000, 99).unwrap();
    assert_eq!(report.coordinates[1].predicted, 0.0);
    assert_eq!(report.coordinates[2].predicted, 0.5);
    assert!(report.coordinates[2].z_score.abs() <= 3.0, "{:?}", report.coordinates[2]);
}

#[test]
fn cover_tail_monte_carlo_agrees_with_exact() {
    let (n, k, trials) = (10usize, 40u64, 100_000usize);
    let exceed = (0..trials)
        .filter(|&i| coupon::cover_time(n, wormald_core::rng::derive_seed(2024, i as u64)).unwrap() > k)
        .count();
    let p = exceed as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    let exact = exact_cover_tail(n, k).unwrap();
    assert!((p - exact).abs() <= 4.0 * se, "empirical {p} exact {exact} se {se}");
}

#[test]
fn ode_grid_matches_closed_form_on_long_horizon() {
    let l = lv(10);
    let spec = make_coupon_spec(l, 10.0).unwrap();
    let traj = integrate(&spec, &coupon::initial_state(l), 10.0, IntegratorConfig::new(1e-3, 10).unwrap()).unwrap();
    let err = ode::max_error(&traj, |s, i| coupon::closed_form_coordinate(s, i, l));
    assert!(err <= 1e-8, "max error {err}");
}
