mod common;

use common::{rel_diff, small_scenario};
use locpriv::benchmarks::crb_min_unconstrained;
use locpriv::design::DesignProblem;
use locpriv::pdd::{run_pdd_with, LiftedSolution, PddConfig};

fn setup() -> (DesignProblem, f64) {
    let p = DesignProblem::full_covariance(&small_scenario()).unwrap();
    let opt = crb_min_unconstrained(&p).unwrap();
    let eve = p.eve_crb(&opt.x).unwrap();
    (p, eve)
}

fn check_contract(sol: &LiftedSolution, cfg: &PddConfig) {
    assert!(sol.converged(), "status {:?}", sol.status);
    assert!(sol.h < cfg.outer_tol);
    for w in sol.trace.windows(2) {
        assert!(w[1].rho >= w[0].rho);
    }
    let accepted: Vec<f64> = sol.trace.iter().filter(|r| r.dual_step).map(|r| r.h).collect();
    for w in accepted.windows(2) {
        assert!(w[1] <= cfg.q * w[0] * (1.0 + 1e-12), "{accepted:?}");
    }
    for (k, obj) in sol.inner_objectives.iter().enumerate() {
        for w in obj.windows(2) {
            let slack = 10.0 * cfg.solver_tol * w[0].abs().max(1.0);
            assert!(w[1] <= w[0] + slack, "outer {k}: {obj:?}");
        }
    }
}

#[test]
fn zero_threshold_reproduces_benchmark_one() {
    let (p, _) = setup();
    let cfg = PddConfig::default();
    let sol = run_pdd_with(&p, 0.0, &cfg).unwrap();
    check_contract(&sol, &cfg);
    let opt = crb_min_unconstrained(&p).unwrap();
    assert!(rel_diff(sol.bob_crb, opt.bob_crb) < 1e-2);
}

#[test]
fn active_threshold_is_met_at_full_power() {
    let (p, eve) = setup();
    let cfg = PddConfig::default();
    let gamma = 4.0 * eve;
    let sol = run_pdd_with(&p, gamma, &cfg).unwrap();
    check_contract(&sol, &cfg);
    assert!(p.eve_bundle.crb(&sol.v).unwrap() >= gamma * (1.0 - 1e-3));
    assert!(rel_diff(p.bob_bundle.crb(&sol.v).unwrap(), sol.bob_crb) < 1e-9);
    let cap = p.power_cap * p.subcarriers as f64;
    assert!(rel_diff(p.total_power(&sol.v), cap) < 1e-4);
    // Privacy costs Bob something, but less than backing off the power.
    let opt = crb_min_unconstrained(&p).unwrap();
    assert!(sol.bob_crb >= opt.bob_crb * (1.0 - 1e-6));
    assert!(sol.bob_crb <= opt.bob_crb * 4.0 * (1.0 + 1e-6));
}

#[test]
fn runs_are_deterministic() {
    let (p, eve) = setup();
    let cfg = PddConfig::default();
    let a = run_pdd_with(&p, 2.0 * eve, &cfg).unwrap();
    let b = run_pdd_with(&p, 2.0 * eve, &cfg).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn iteration_cap_returns_the_least_violating_iterate() {
    let (p, eve) = setup();
    let cfg = PddConfig {
        outer_max: 2,
        ..Default::default()
    };
    let sol = run_pdd_with(&p, 10.0 * eve, &cfg).unwrap();
    assert!(sol.trace.len() <= 2);
    let min_h = sol.trace.iter().map(|r| r.h).fold(f64::INFINITY, f64::min);
    assert_eq!(sol.h, min_h);
}

#[test]
fn invalid_inputs_are_rejected() {
    let (p, _) = setup();
    assert!(run_pdd_with(&p, -1.0, &PddConfig::default()).is_err());
    let bad = PddConfig {
        q: 1.5,
        ..Default::default()
    };
    assert!(run_pdd_with(&p, 1.0, &bad).is_err());
}
