#![allow(dead_code)]

use endowment_hedge::fd::PriceSurface;
use endowment_hedge::{study_defaults, validate, Model};

pub fn study(rho: f64, q: f64) -> Model {
    let (s, p) = study_defaults(rho, q, 0.06);
    validate(s, p).unwrap()
}

pub fn with_alpha(m: &Model, alpha: f64) -> Model {
    let mut s = *m.spec();
    s.alpha = alpha;
    m.with_spec(s).unwrap()
}

/// Largest nodewise `f(a, b)` over two surfaces on the same grid.
pub fn max_nodewise(a: &PriceSurface, b: &PriceSurface, f: impl Fn(f64, f64) -> f64) -> f64 {
    assert_eq!(a.grid(), b.grid());
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| f(x, y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest `psi^(k)(i, j) - k h(tau_j)`.
pub fn bound_excess(m: &Model, k: u32, s: &PriceSurface) -> f64 {
    let g = s.grid();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..=g.steps() {
        let cap = f64::from(k) * m.survivor_bound_tau(g.tau(j));
        for &v in s.slice(j) {
            worst = worst.max(v - cap);
        }
    }
    worst
}

/// Smallest node value.
pub fn min_value(s: &PriceSurface) -> f64 {
    s.values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest hazard derivative at interior nodes.
pub fn max_slope(s: &PriceSurface) -> f64 {
    let g = s.grid();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..=g.steps() {
        for i in 1..g.intervals() {
            worst = worst.max(s.dlambda_at(i, j));
        }
    }
    worst
}
