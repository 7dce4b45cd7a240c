//! Locally risk-minimizing hedge with q-forwards and a simulator of the
//! hedged liability portfolio under the physical measure.
//!
//! The insurer is short `n` pure endowments, holds `pi` q-forwards and keeps
//! the rest in the money market. With a constant short rate the T-bond
//! carries no risk, so `bond_units` is always zero.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::{solve_beta, solve_psi_n, solve_survival_factor, Grid1D, PriceSurface};
use crate::mc::{path_rng, JointHazard, McEstimate, Measure};
use crate::model::Model;

/// Largest pool marked with the exact multi-life surfaces; larger pools use
/// `n F beta`.
pub const EXACT_MARKING_LIMIT: u32 = 10;

/// Below this magnitude the q-forward cannot offset any exposure.
pub const MIN_SENSITIVITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgePosition {
    pub qforward_units: f64,
    pub bond_units: f64,
    pub money_market: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioState {
    pub time: f64,
    /// Portfolio value `Pi = V - P`, hedging wealth net of the liability.
    pub value: f64,
    pub alive_count: u32,
    pub lambda_p: f64,
    pub lambda_i: f64,
    /// Cumulative reference hazard since inception.
    pub cumulative_i: f64,
}

/// Value and reference-hazard sensitivity of one q-forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QForwardValue {
    pub value: f64,
    pub dlambda: f64,
}

/// `S = e^{-r(T-t)} (e^{-Lambda} phi(lambda, t) - K)`.
pub fn qforward_value(
    model: &Model,
    lambda_i: f64,
    cumulative_i: f64,
    t: f64,
    survival: &PriceSurface,
    strike: f64,
) -> Result<QForwardValue> {
    let l = survival.lookup(lambda_i, t)?;
    let disc = model.discount(t);
    let decay = (-cumulative_i).exp();
    Ok(QForwardValue {
        value: disc * (decay * l.value - strike),
        dlambda: disc * decay * l.dlambda,
    })
}

/// How the liability is marked to model.
#[derive(Debug, Clone, PartialEq)]
pub enum Marking {
    /// `P^(k)` from the solved recursion; element `k - 1` is level `k`.
    Exact(Vec<PriceSurface>),
    /// `P^(k) = k F beta`.
    PerContract(PriceSurface),
}

impl Marking {
    pub fn label(&self) -> &'static str {
        match self {
            Marking::Exact(_) => "exact",
            Marking::PerContract(_) => "per-contract-beta",
        }
    }

    /// Undiscounted factor of `k` lives and its hazard derivative.
    fn factor(&self, k: u32, lambda_p: f64, t: f64) -> Result<(f64, f64)> {
        if k == 0 {
            return Ok((0.0, 0.0));
        }
        match self {
            Marking::Exact(levels) => {
                let s = levels.get(k as usize - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("no surface for {k} lives"))
                })?;
                let l = s.lookup(lambda_p, t)?;
                Ok((l.value, l.dlambda))
            }
            Marking::PerContract(beta) => {
                let l = beta.lookup(lambda_p, t)?;
                let kf = f64::from(k);
                Ok((kf * l.value, kf * l.dlambda))
            }
        }
    }
}

/// Everything the simulator marks against.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeSurfaces {
    pub marking: Marking,
    pub survival: PriceSurface,
    /// Delivery price, `phi(lambda^I_0, 0)`.
    pub strike: f64,
}

impl HedgeSurfaces {
    /// Solves the surfaces needed for a pool of `n_insured` lives.
    pub fn solve(model: &Model, grid: &Grid1D, n_insured: u32) -> Result<Self> {
        if n_insured == 0 {
            return Err(Error::InvalidArgument("pool must hold at least one life".into()));
        }
        let marking = if n_insured <= EXACT_MARKING_LIMIT {
            Marking::Exact(solve_psi_n(model, grid, n_insured)?)
        } else {
            Marking::PerContract(solve_beta(model, grid)?)
        };
        let survival = solve_survival_factor(model.reference(), model.spec(), grid)?;
        let strike = survival.lookup(model.pops().initial_reference, 0.0)?.value;
        Ok(Self {
            marking,
            survival,
            strike,
        })
    }

    /// Liability price `P^(k)` and `dP^(k)/dlambda^P`.
    pub fn liability(&self, model: &Model, k: u32, lambda_p: f64, t: f64) -> Result<(f64, f64)> {
        let (v, d) = self.marking.factor(k, lambda_p, t)?;
        let disc = model.discount(t);
        Ok((disc * v, disc * d))
    }
}

/// `pi = rho b^P (lambda^P - floor^P) P_lambda / (b^I (lambda^I - floor^I) S_lambda)`.
fn hedge_ratio(model: &Model, lambda_p: f64, lambda_i: f64, p_lambda: f64, s_lambda: f64) -> Result<f64> {
    if !(s_lambda.abs() >= MIN_SENSITIVITY) {
        return Err(Error::DegenerateSensitivity(s_lambda));
    }
    let (ins, rf) = (model.insured(), model.reference());
    let num = model.spec().rho * ins.vol * (lambda_p - ins.floor) * p_lambda;
    let den = rf.vol * (lambda_i - rf.floor) * s_lambda;
    Ok(num / den)
}

/// Optimal q-forward holding for the current state, with the remaining
/// wealth `V = Pi + P` in the money market.
pub fn optimal_hedge(model: &Model, surfaces: &HedgeSurfaces, state: &PortfolioState) -> Result<HedgePosition> {
    let (p, p_lambda) = surfaces.liability(model, state.alive_count, state.lambda_p, state.time)?;
    let s = qforward_value(
        model,
        state.lambda_i,
        state.cumulative_i,
        state.time,
        &surfaces.survival,
        surfaces.strike,
    )?;
    let pi = hedge_ratio(model, state.lambda_p, state.lambda_i, p_lambda, s.dlambda)?;
    Ok(HedgePosition {
        qforward_units: pi,
        bond_units: 0.0,
        money_market: state.value + p - pi * s.value,
    })
}

/// Whether the simulator holds the optimal q-forward position or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HedgeMode {
    Optimal,
    Unhedged,
}

/// Simulation controls. Rebalancing happens every `dt`; moments are taken
/// over the first step, the horizon `n_steps * dt` may be shorter than `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeSimConfig {
    pub n_insured: u32,
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub mode: HedgeMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeReport {
    pub rho: f64,
    pub alpha: f64,
    pub n_insured: u32,
    pub n_paths: usize,
    pub dt: f64,
    pub marking: &'static str,
    /// `P^(n)` at inception.
    pub initial_price: f64,
    pub initial_hedge: HedgePosition,
    /// `E[dPi]/dt` over the first step.
    pub empirical_drift: f64,
    pub drift_std_error: f64,
    /// `Var[dPi]/dt` over the first step.
    pub empirical_var: f64,
    pub var_std_error: f64,
    pub theory_drift: f64,
    pub theory_var: f64,
    /// `(drift - r Pi_0) / sqrt(var)`; `Pi_0 = 0`.
    pub empirical_sharpe: f64,
    pub sharpe_std_error: f64,
    /// Deaths over the simulated horizon.
    pub deaths: McEstimate,
    /// Portfolio value at the end of the horizon.
    pub terminal_value: McEstimate,
}

impl HedgeReport {
    /// Variance per contract, `Var[d(Pi/n)]/dt`.
    pub fn per_contract_var(&self) -> f64 {
        let n = f64::from(self.n_insured);
        self.empirical_var / (n * n)
    }
}

/// Simulates the hedged portfolio of `cfg.n_insured` lives, starting from
/// `Pi_0 = 0` (premium `P^(n)` received in cash).
pub fn simulate_hedged_portfolio(model: &Model, surfaces: &HedgeSurfaces, cfg: &HedgeSimConfig) -> Result<HedgeReport> {
    if cfg.n_insured == 0 {
        return Err(Error::InvalidArgument("pool must hold at least one life".into()));
    }
    if cfg.n_paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    if cfg.n_steps == 0 {
        return Err(Error::NonPositiveDimension("n_steps"));
    }
    let horizon = cfg.dt * cfg.n_steps as f64;
    if !(cfg.dt > 0.0) || horizon > model.spec().maturity * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "step {} over {} steps leaves [0, T]",
            cfg.dt, cfg.n_steps
        )));
    }
    if let Marking::Exact(levels) = &surfaces.marking {
        if levels.len() < cfg.n_insured as usize {
            return Err(Error::InvalidArgument(format!(
                "{} surfaces cannot mark {} lives",
                levels.len(),
                cfg.n_insured
            )));
        }
    }

    let pops = model.pops();
    let start = PortfolioState {
        time: 0.0,
        value: 0.0,
        alive_count: cfg.n_insured,
        lambda_p: pops.initial_insured,
        lambda_i: pops.initial_reference,
        cumulative_i: 0.0,
    };
    let initial_hedge = position(model, surfaces, &start, cfg.mode)?;
    let (p0, p0_lambda) = surfaces.liability(model, cfg.n_insured, start.lambda_p, 0.0)?;
    let (theory_drift, theory_var) = theory_moments(model, surfaces, cfg, p0_lambda)?;

    let dynamics = JointHazard::new(model, Measure::Physical);
    let rate = model.spec().rate;
    let growth = (rate * cfg.dt).exp();

    let paths: Vec<(f64, f64, f64)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| -> Result<(f64, f64, f64)> {
            let mut rng = path_rng(cfg.seed, path);
            let mut st = start;
            let mut first = 0.0;
            for step in 0..cfg.n_steps {
                let pos = if step == 0 {
                    initial_hedge
                } else {
                    position(model, surfaces, &st, cfg.mode)?
                };
                let (zp, zi) = dynamics.draw(&mut rng);
                let lp = dynamics.insured.advance(st.lambda_p, cfg.dt, zp);
                let li = dynamics.reference.advance(st.lambda_i, cfg.dt, zi);
                let hazard_p = 0.5 * cfg.dt * (st.lambda_p + lp);
                let cum_i = st.cumulative_i + 0.5 * cfg.dt * (st.lambda_i + li);
                let alive = thin(&mut rng, st.alive_count, hazard_p);
                let t = if step + 1 == cfg.n_steps {
                    horizon
                } else {
                    (step + 1) as f64 * cfg.dt
                };
                let (p, _) = surfaces.liability(model, alive, lp, t)?;
                let s = qforward_value(model, li, cum_i, t, &surfaces.survival, surfaces.strike)?;
                let value = revalue(&pos, growth, s.value, p);
                if step == 0 {
                    first = value - st.value;
                }
                st = PortfolioState {
                    time: t,
                    value,
                    alive_count: alive,
                    lambda_p: lp,
                    lambda_i: li,
                    cumulative_i: cum_i,
                };
            }
            Ok((first, f64::from(cfg.n_insured - st.alive_count), st.value))
        })
        .collect::<Result<Vec<_>>>()?;

    let increments: Vec<f64> = paths.iter().map(|p| p.0).collect();
    let deaths: Vec<f64> = paths.iter().map(|p| p.1).collect();
    let finals: Vec<f64> = paths.iter().map(|p| p.2).collect();
    let m = moments(&increments);
    let sqrt_dt = cfg.dt.sqrt();
    let sd = m.var.sqrt();
    // Pi_0 = 0, so the excess drift is the raw drift
    let (sharpe, sharpe_se) = if sd > 0.0 {
        (m.mean / sd / sqrt_dt, m.sharpe_se() / sqrt_dt)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(HedgeReport {
        rho: model.spec().rho,
        alpha: model.spec().alpha,
        n_insured: cfg.n_insured,
        n_paths: cfg.n_paths,
        dt: cfg.dt,
        marking: surfaces.marking.label(),
        initial_price: p0,
        initial_hedge,
        empirical_drift: m.mean / cfg.dt,
        drift_std_error: (m.var / cfg.n_paths as f64).sqrt() / cfg.dt,
        empirical_var: m.var / cfg.dt,
        var_std_error: ((m.m4 - m.var * m.var).max(0.0) / m.n).sqrt() / cfg.dt,
        theory_drift,
        theory_var,
        empirical_sharpe: sharpe,
        sharpe_std_error: sharpe_se,
        deaths: McEstimate::from_samples(&deaths),
        terminal_value: McEstimate::from_samples(&finals),
    })
}

/// Portfolio value after one period: accrued cash plus q-forwards at their
/// new value, less the liability.
pub fn revalue(pos: &HedgePosition, growth: f64, qforward: f64, liability: f64) -> f64 {
    pos.money_market * growth + pos.qforward_units * qforward - liability
}

fn position(model: &Model, surfaces: &HedgeSurfaces, st: &PortfolioState, mode: HedgeMode) -> Result<HedgePosition> {
    match mode {
        HedgeMode::Optimal => optimal_hedge(model, surfaces, st),
        HedgeMode::Unhedged => {
            let (p, _) = surfaces.liability(model, st.alive_count, st.lambda_p, st.time)?;
            Ok(HedgePosition {
                qforward_units: 0.0,
                bond_units: 0.0,
                money_market: st.value + p,
            })
        }
    }
}

/// Each survivor dies independently with probability `1 - exp(-int lambda)`.
fn thin<R: Rng>(rng: &mut R, alive: u32, hazard: f64) -> u32 {
    if alive == 0 {
        return 0;
    }
    let p = -(-hazard).exp_m1();
    let dead = Binomial::new(u64::from(alive), p.clamp(0.0, 1.0))
        .map(|b| b.sample(rng))
        .unwrap_or(0);
    alive - dead as u32
}

/// Local drift and variance of `Pi` at inception implied by the pricing
/// equation the marking surfaces solve.
fn theory_moments(model: &Model, surfaces: &HedgeSurfaces, cfg: &HedgeSimConfig, p_lambda: f64) -> Result<(f64, f64)> {
    let spec = model.spec();
    let ins = model.insured();
    let (lp, n) = (model.pops().initial_insured, cfg.n_insured);
    let (pn, _) = surfaces.liability(model, n, lp, 0.0)?;
    let (pm, _) = surfaces.liability(model, n - 1, lp, 0.0)?;
    let jump = pn - pm;
    let basis = match cfg.mode {
        HedgeMode::Optimal => model.basis_weight(),
        HedgeMode::Unhedged => 1.0,
    };
    let diffusion = basis * ins.vol * (lp - ins.floor) * p_lambda.abs();
    let var = diffusion * diffusion + f64::from(n) * lp * jump * jump;
    let drift = match surfaces.marking {
        Marking::Exact(_) => spec.alpha * (model.basis_weight() * ins.vol * (lp - ins.floor) * p_lambda.abs()).hypot((f64::from(n) * lp).sqrt() * jump),
        Marking::PerContract(_) => spec.alpha * model.basis_weight() * ins.vol * (lp - ins.floor) * p_lambda.abs(),
    };
    Ok((drift, var))
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
    m3: f64,
    m4: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    Moments {
        n,
        mean,
        var: s2 / (n - 1.0),
        m3: s3 / n,
        m4: s4 / n,
    }
}

impl Moments {
    /// Delta-method standard error of `mean / sd` for i.i.d. samples of
    /// arbitrary shape.
    fn sharpe_se(&self) -> f64 {
        let (mu, s2) = (self.mean, self.var);
        let v = 1.0 - mu * self.m3 / (s2 * s2) + mu * mu * (self.m4 - s2 * s2) / (4.0 * s2 * s2 * s2);
        (v.max(0.0) / self.n).sqrt()
    }
}
