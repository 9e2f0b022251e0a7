//! Monte Carlo check of the closed-form bound on a tiny instance.

mod common;

use cwkbmf::inference::{VariationalProblem, WeightMode};

use common::oracle::monte_carlo_bound;
use common::{config, random_instance};

#[test]
fn analytic_bound_matches_monte_carlo() {
    let inst = random_instance(3, 4, 3, 1, 1, 1);
    let cfg = config(1, 3, WeightMode::ComponentWise);
    let problem = VariationalProblem::new(&cfg, &inst.kx, &inst.kz, &inst.y).unwrap();
    let mut state = problem.initialize();
    for _ in 0..5 {
        problem.update_sweep(&mut state).unwrap();
    }
    let analytic = problem.elbo(&state).unwrap();
    let (mc, se) = monte_carlo_bound(&inst, &state, &cfg.hyper, 100_000, 77);
    assert!(
        (analytic - mc).abs() <= 3.0 * se,
        "analytic {analytic}, Monte Carlo {mc} +- {se}"
    );
}

#[test]
fn monte_carlo_detects_a_wrong_bound() {
    // The same estimate must reject the bound of a different state.
    let inst = random_instance(3, 4, 3, 1, 1, 1);
    let cfg = config(1, 3, WeightMode::ComponentWise);
    let problem = VariationalProblem::new(&cfg, &inst.kx, &inst.kz, &inst.y).unwrap();
    let start = problem.initialize();
    let mut state = start.clone();
    for _ in 0..5 {
        problem.update_sweep(&mut state).unwrap();
    }
    let (mc, se) = monte_carlo_bound(&inst, &state, &cfg.hyper, 100_000, 77);
    let other = problem.elbo(&start).unwrap();
    assert!((other - mc).abs() > 3.0 * se);
}
