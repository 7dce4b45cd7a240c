mod common;

use common::{max_nodewise, study, with_alpha};
use endowment_hedge::fd::{solve_beta, solve_psi_single, solve_survival_factor, Grid1D};
use endowment_hedge::mc::{estimate_alpha0, estimate_beta, estimate_qforward_strike};
use endowment_hedge::{validate, HazardParams, MarketSpec, PopulationPair};

fn grid() -> Grid1D {
    Grid1D::default_for(10.0).unwrap()
}

#[test]
fn unloaded_single_life_matches_feynman_kac() {
    let m = with_alpha(&study(0.0, 0.0), 0.0);
    let psi = solve_psi_single(&m, &grid()).unwrap();
    let e = estimate_alpha0(&m, 0.05, 100_000, 250, 11).unwrap();
    let v = psi.lookup(0.05, 0.0).unwrap().value;
    assert!(e.agrees_with(v, 3.0), "{v} vs {e:?}");
    // discounted
    let p = psi.price(0.04, 0.05, 0.0).unwrap();
    assert!(((0.4f64).exp() * p - v).abs() < 1e-12);
}

#[test]
fn beta_matches_tilted_expectation() {
    let m = study(0.5, 0.05);
    let beta = solve_beta(&m, &grid()).unwrap();
    for (k, l0) in [0.04, 0.06, 0.08].into_iter().enumerate() {
        let e = estimate_beta(&m, l0, 100_000, 250, 20 + k as u64).unwrap();
        let v = beta.lookup(l0, 0.0).unwrap().value;
        assert!(e.agrees_with(v, 3.0), "l0 {l0}: {v} vs {e:?}");
    }
}

#[test]
fn survival_factor_matches_strike_estimate() {
    let spec = MarketSpec {
        rate: 0.04,
        q_mort: 0.1,
        alpha: 0.1,
        rho: 0.6,
        maturity: 10.0,
    };
    let reference = HazardParams::new(0.03, 0.15, 0.015);
    let pops = PopulationPair {
        insured: HazardParams::new(0.04, 0.1, 0.02),
        reference,
        initial_insured: 0.06,
        initial_reference: 0.05,
    };
    validate(spec, pops).unwrap();
    let phi = solve_survival_factor(&reference, &spec, &grid()).unwrap();
    let e = estimate_qforward_strike(&reference, &spec, 0.05, 100_000, 250, 5).unwrap();
    let v = phi.lookup(0.05, 0.0).unwrap().value;
    assert!(e.agrees_with(v, 3.0), "{v} vs {e:?}");
    let hi = phi.values().iter().copied().fold(f64::MIN, f64::max);
    let lo = phi.values().iter().copied().fold(f64::MAX, f64::min);
    assert!(lo >= 0.0 && hi <= 1.0 + 1e-12, "{lo} {hi}");
}

#[test]
fn survival_slope_has_monte_carlo_sign_and_size() {
    let m = study(0.0, 0.05);
    let phi = solve_survival_factor(m.reference(), m.spec(), &grid()).unwrap();
    let l = phi.lookup(0.06, 0.0).unwrap();
    assert!(l.dlambda < 0.0);
    // common random numbers: same seed at both ends
    let dl = 0.005;
    let up = estimate_qforward_strike(m.reference(), m.spec(), 0.06 + dl, 50_000, 200, 9).unwrap();
    let dn = estimate_qforward_strike(m.reference(), m.spec(), 0.06 - dl, 50_000, 200, 9).unwrap();
    let slope = (up.mean - dn.mean) / (2.0 * dl);
    assert!(slope < 0.0);
    assert!((slope - l.dlambda).abs() < 0.05 * l.dlambda.abs(), "{slope} vs {}", l.dlambda);
}

#[test]
fn pricing_time_step_bias_below_one_standard_error() {
    let m = with_alpha(&study(0.0, 0.0), 0.0);
    let coarse = estimate_alpha0(&m, 0.06, 200_000, 100, 77).unwrap();
    let fine = estimate_alpha0(&m, 0.06, 200_000, 200, 77).unwrap();
    assert!((coarse.mean - fine.mean).abs() < fine.std_error);
}

#[test]
fn perfect_correlation_removes_the_tilt() {
    let m = study(1.0, 0.15);
    let a = estimate_beta(&m, 0.06, 2_000, 50, 1).unwrap();
    let b = estimate_alpha0(&with_alpha(&m, 0.0), 0.06, 2_000, 50, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn effective_drift_orders_limit_prices() {
    // flipping the sign of rho q moves the effective drift by 2 rho |q| b
    let g = grid();
    let lo = study(0.5, 0.1);
    let hi = study(0.5, -0.1);
    assert!(lo.effective_limit_drift() < hi.effective_limit_drift());
    let b_lo = solve_beta(&lo, &g).unwrap();
    let b_hi = solve_beta(&hi, &g).unwrap();
    assert!(max_nodewise(&b_hi, &b_lo, |a, b| a - b) <= 1e-8);
}

#[test]
fn deterministic_limits() {
    let spec = MarketSpec {
        rate: 0.04,
        q_mort: 0.0,
        alpha: 0.0,
        rho: 0.0,
        maturity: 10.0,
    };
    let frozen = HazardParams::new(0.0, 1e-8, 0.02);
    let k = estimate_qforward_strike(&frozen, &spec, 0.05, 200, 100, 0).unwrap();
    assert!((k.mean - 0.60653).abs() < 1e-5);
    let m = validate(spec, PopulationPair::mirrored(frozen, 0.05)).unwrap();
    let e = estimate_alpha0(&m, 0.05, 200, 100, 0).unwrap();
    assert!((e.mean - 0.60653).abs() < 1e-5);
    assert!(e.std_error < 1e-9);
}
