mod common;

use merton_cov::adjoint::solve_adjoint;
use merton_cov::fokker_planck::{expected_utility, mollified_delta, solve_fp};
use merton_cov::montecarlo::{density_histogram, estimate_expected_utility, simulate_terminal_wealth, BoundaryPolicy, McEstimate, McOptions};
use merton_cov::{Error, FieldFrame, FieldTrajectory};
use std::f64::consts::PI;

fn linear(slope: f64) -> FieldTrajectory {
    FieldTrajectory::from_fn(common::grid(400), move |_, x| slope * x).unwrap()
}

fn mc(control: &FieldTrajectory, opts: &McOptions) -> (Vec<f64>, McEstimate) {
    let xs = simulate_terminal_wealth(control, &common::market(), 1.0, opts).unwrap();
    let est = estimate_expected_utility(&xs, &common::utility()).unwrap();
    (xs, est)
}

#[test]
fn cash_only_is_deterministic() {
    let opts = McOptions {
        n_paths: 2000,
        ..McOptions::default()
    };
    let (xs, est) = mc(&linear(0.0), &opts);
    for x in &xs {
        assert!((x - 0.03f64.exp()).abs() < 1e-5);
    }
    // Euler compounding undershoots e^{rT} by O(dt)
    let exact = 2.0 * 0.015f64.exp();
    assert!((est.mean - exact).abs() <= (3.0 * est.stderr).max(1e-5));
}

#[test]
fn merton_control_reaches_oracle() {
    let (_, est) = mc(&linear(2.5), &McOptions::default());
    assert!((est.mean - 2.0947).abs() <= (3.0 * est.stderr).max(0.01 * 2.0947));
}

#[test]
fn same_seed_same_samples_any_thread_count() {
    let opts = McOptions {
        n_paths: 5000,
        seed: 42,
        ..McOptions::default()
    };
    let (a, _) = mc(&linear(1.0), &opts);
    let (b, _) = mc(&linear(1.0), &opts);
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (c, _) = pool.install(|| mc(&linear(1.0), &opts));
    assert_eq!(a, c);
    let (d, _) = mc(&linear(1.0), &McOptions { seed: 43, ..opts });
    assert_ne!(a, d);
}

#[test]
fn error_bar_shrinks_like_root_n() {
    let small = McOptions {
        n_paths: 20_000,
        seed: 7,
        ..McOptions::default()
    };
    let big = McOptions { n_paths: 80_000, ..small };
    let (_, a) = mc(&linear(1.0), &small);
    let (_, b) = mc(&linear(1.0), &big);
    let ratio = a.stderr / b.stderr;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn gbm_histogram_is_lognormal() {
    let g = common::grid(400);
    let (xs, _) = mc(&linear(1.0), &McOptions::default());
    let h = density_histogram(&xs, &g).unwrap();
    assert!((h.total_mass() - 1.0).abs() < 1e-12);
    let (m, s2) = (0.08 - 0.02, 0.04);
    let exact: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&x| (-(x.ln() - m).powi(2) / (2.0 * s2)).exp() / (x * (2.0 * PI * s2).sqrt()))
        .collect();
    let err = common::l1(&g, h.values(), &exact);
    assert!(err <= 0.05, "L1 {err}");
    let (p, _) = solve_fp(&mollified_delta(1.0, &g).unwrap(), &linear(1.0), &common::market()).unwrap();
    let err = common::l1(&g, h.values(), p.terminal().values());
    assert!(err <= 0.05, "L1 {err}");
}

#[test]
fn consistency_triangle() {
    let g = common::grid(400);
    let (m, u) = (common::market(), common::utility());
    for slope in [0.5, 1.0, 2.5] {
        let control = linear(slope);
        let (p, _) = solve_fp(&mollified_delta(1.0, &g).unwrap(), &control, &m).unwrap();
        let pde = expected_utility(p.terminal(), &u);
        let (lam, _) = solve_adjoint(&control, &m, &u).unwrap();
        let adj = -lam.initial().interpolate(1.0);
        let (_, est) = mc(&control, &McOptions::default());
        let close = |a: f64, b: f64, se: f64| (a - b).abs() <= (3.0 * se).max(0.01 * b.abs());
        assert!(close(pde, adj, 0.0), "slope {slope}: {pde} vs {adj}");
        assert!(close(est.mean, pde, est.stderr), "slope {slope}: {} vs {pde}", est.mean);
        assert!(close(est.mean, adj, est.stderr), "slope {slope}: {} vs {adj}", est.mean);
    }
}

#[test]
fn feynman_kac_for_constant_holdings() {
    let g = common::grid(400);
    let (m, u) = (common::market(), common::utility());
    for c in [0.25, 0.5] {
        let control = FieldTrajectory::constant_in_time(FieldFrame::constant(g, c));
        let (lam, _) = solve_adjoint(&control, &m, &u).unwrap();
        let (_, est) = mc(&control, &McOptions::default());
        let v = -lam.initial().interpolate(1.0);
        assert!((v - est.mean).abs() <= 3.0 * est.stderr, "alpha {c}: {v} vs {} +- {}", est.mean, est.stderr);
    }
}

#[test]
fn absorbed_paths_stay_in_the_domain() {
    let g = common::grid(400);
    let opts = McOptions {
        n_paths: 5000,
        boundary_policy: BoundaryPolicy::Absorb,
        ..McOptions::default()
    };
    let (xs, _) = mc(&linear(4.0), &opts);
    assert!(xs.iter().all(|&x| x >= g.x_min() && x <= g.x_max()));
}

#[test]
fn start_outside_the_domain() {
    let opts = McOptions::default();
    assert!(matches!(
        simulate_terminal_wealth(&linear(1.0), &common::market(), 10.0, &opts),
        Err(Error::OutOfDomain { .. })
    ));
}
