//! Command-line front end: `price`, `sweep`, `validate`, `hedge-sim`.
//!
//! Exit codes: 0 success, 1 failed check or numerical failure, 2 bad
//! configuration or arguments.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ConfigError, Overrides, RawConfig, RunConfig};
use crate::error::{Error, Result};
use crate::fd::{solve_beta, solve_psi_n, solve_psi_single, solve_survival_factor, PriceSurface};
use crate::hedge::{simulate_hedged_portfolio, HedgeMode, HedgeSimConfig, HedgeSurfaces};
use crate::mc::{estimate_alpha0, estimate_beta, estimate_qforward_strike};
use crate::model::Model;
use crate::report::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "endowment-hedge", version, about = "Pure endowment pricing and hedging under stochastic mortality")]
struct Cli {
    /// TOML configuration file; study defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Half width M of the log-hazard domain
    #[arg(long = "grid-m", global = true)]
    grid_m: Option<f64>,
    /// Spatial intervals I
    #[arg(long = "grid-i", global = true)]
    grid_i: Option<usize>,
    /// Time steps J
    #[arg(long = "grid-j", global = true)]
    grid_j: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Single, multi-life and limiting prices at (lambda_p0, 0)
    Price,
    /// Price against rho for each q_mort
    Sweep,
    /// PDE against Monte Carlo and the invariant battery
    Validate,
    /// Hedged portfolio moments against theory
    HedgeSim,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match cli.command {
        Command::Price => cmd_price(&cfg).map(|t| (t, true)),
        Command::Sweep => cmd_sweep(&cfg).map(|t| (t, true)),
        Command::Validate => cmd_validate(&cfg),
        Command::HedgeSim => cmd_hedge_sim(&cfg).map(|t| (t, true)),
    };
    let (table, ok) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CHECK_FAILED;
        }
    };
    if let Err(e) = emit(&table, cfg.output.as_ref()) {
        eprintln!("error: {e}");
        return EXIT_CHECK_FAILED;
    }
    if ok {
        EXIT_OK
    } else {
        eprintln!("one or more checks failed");
        EXIT_CHECK_FAILED
    }
}

fn load(cli: &Cli) -> std::result::Result<RunConfig, ConfigError> {
    let raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    raw.resolve(&Overrides {
        seed: cli.seed,
        grid_m: cli.grid_m,
        grid_i: cli.grid_i,
        grid_j: cli.grid_j,
        output: cli.out.clone(),
    })
}

fn emit(table: &Table, out: Option<&PathBuf>) -> std::io::Result<()> {
    let csv = table.to_csv();
    match out {
        Some(p) => std::fs::write(p, csv),
        None => std::io::stdout().lock().write_all(csv.as_bytes()),
    }
}

const PRICE_COLUMNS: [&str; 7] = ["quantity", "n", "rho", "q_mort", "alpha", "lambda_p0", "value"];

fn price_row(table: &mut Table, quantity: &str, n: Cell, model: &Model, lambda_p0: f64, value: f64) {
    let s = model.spec();
    table.push(vec![
        quantity.into(),
        n,
        s.rho.into(),
        s.q_mort.into(),
        s.alpha.into(),
        lambda_p0.into(),
        value.into(),
    ]);
}

/// Prices at `(lambda_p0, 0)`: `single` is `P`, `per_contract` is
/// `P^(n)/n` for each configured `n`, `limit` is `F beta`.
pub fn cmd_price(cfg: &RunConfig) -> Result<Table> {
    let m = &cfg.model;
    let lp = cfg.lambda_p0();
    let r = m.spec().rate;
    let n_max = cfg.n_contracts.iter().copied().max().unwrap_or(1);
    let levels = solve_psi_n(m, &cfg.grid, n_max)?;
    let beta = solve_beta(m, &cfg.grid)?;

    let mut t = Table::new(&PRICE_COLUMNS);
    price_row(&mut t, "single", 1u32.into(), m, lp, levels[0].price(r, lp, 0.0)?);
    for &n in &cfg.n_contracts {
        let v = levels[n as usize - 1].price(r, lp, 0.0)? / f64::from(n);
        price_row(&mut t, "per_contract", n.into(), m, lp, v);
    }
    price_row(&mut t, "limit", "inf".into(), m, lp, beta.price(r, lp, 0.0)?);
    Ok(t)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Single-life and limiting price against `rho` for every `q_mort`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Table> {
    let lp = cfg.lambda_p0();
    let qs = sorted(&cfg.q_sweep);
    let rhos = sorted(&cfg.rho_sweep);
    let points: Vec<(f64, f64)> = qs.iter().flat_map(|&q| rhos.iter().map(move |&r| (q, r))).collect();
    let solved: Vec<(Model, f64, f64)> = points
        .par_iter()
        .map(|&(q, rho)| {
            let mut spec = *cfg.model.spec();
            spec.q_mort = q;
            spec.rho = rho;
            let m = cfg.model.with_spec(spec)?;
            let r = spec.rate;
            let single = solve_psi_single(&m, &cfg.grid)?.price(r, lp, 0.0)?;
            let limit = solve_beta(&m, &cfg.grid)?.price(r, lp, 0.0)?;
            Ok((m, single, limit))
        })
        .collect::<Result<_>>()?;

    let mut t = Table::new(&PRICE_COLUMNS);
    for (m, single, _) in &solved {
        price_row(&mut t, "single", 1u32.into(), m, lp, *single);
    }
    for (m, _, limit) in &solved {
        price_row(&mut t, "limit", "inf".into(), m, lp, *limit);
    }
    Ok(t)
}

/// One line of the validation table. A check passes when
/// `|observed - expected| <= tolerance` (two sided) or
/// `observed <= expected + tolerance` (one sided).
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub two_sided: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        if self.two_sided {
            (self.observed - self.expected).abs() <= self.tolerance
        } else {
            self.observed <= self.expected + self.tolerance
        }
    }

    fn close(name: &str, expected: f64, observed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            observed,
            tolerance,
            two_sided: true,
        }
    }

    fn at_most(name: &str, limit: f64, observed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected: limit,
            observed,
            tolerance,
            two_sided: false,
        }
    }
}

fn max_over<'a>(pairs: impl Iterator<Item = (&'a PriceSurface, &'a PriceSurface)>, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in pairs {
        if a.grid() != b.grid() {
            return Err(Error::IncompatibleGrids);
        }
        for (&x, &y) in a.values().iter().zip(b.values()) {
            worst = worst.max(f(x, y));
        }
    }
    Ok(worst)
}

/// Grid-refinement gap `|P(I, J) - P(2I, 2J)|` at `(lambda_p0, 0)`.
pub fn refinement_gap(cfg: &RunConfig) -> Result<f64> {
    let m = &cfg.model;
    let (r, lp) = (m.spec().rate, cfg.lambda_p0());
    let coarse = solve_psi_single(m, &cfg.grid)?.price(r, lp, 0.0)?;
    let fine = solve_psi_single(m, &cfg.grid.refined(2)?)?.price(r, lp, 0.0)?;
    Ok((coarse - fine).abs())
}

/// PDE against Monte Carlo, surface invariants, grid refinement and the
/// hedge Sharpe ratio at the configured parameters.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let m = &cfg.model;
    let g = &cfg.grid;
    let lp = cfg.lambda_p0();
    let (paths, steps, seed) = (cfg.mc_paths, cfg.mc_steps, cfg.seed);
    let mut checks = Vec::new();

    let mut unloaded = *m.spec();
    unloaded.alpha = 0.0;
    let m0 = m.with_spec(unloaded)?;
    let psi0 = solve_psi_single(&m0, g)?.lookup(lp, 0.0)?.value;
    let mc0 = estimate_alpha0(&m0, lp, paths, steps, seed)?;
    checks.push(Check::close("psi_alpha0_vs_mc", mc0.mean, psi0, 3.0 * mc0.std_error));

    let beta = solve_beta(m, g)?;
    let mcb = estimate_beta(m, lp, paths, steps, seed)?;
    checks.push(Check::close("beta_vs_mc", mcb.mean, beta.lookup(lp, 0.0)?.value, 3.0 * mcb.std_error));

    let li = m.pops().initial_reference;
    let phi = solve_survival_factor(m.reference(), m.spec(), g)?;
    let mck = estimate_qforward_strike(m.reference(), m.spec(), li, paths, steps, seed)?;
    checks.push(Check::close("survival_vs_mc", mck.mean, phi.lookup(li, 0.0)?.value, 3.0 * mck.std_error));

    let n_max = cfg.n_contracts.iter().copied().max().unwrap_or(1).max(5);
    let levels = solve_psi_n(m, g, n_max)?;

    let mut bound = f64::NEG_INFINITY;
    let mut slope = f64::NEG_INFINITY;
    for (k, s) in levels.iter().enumerate() {
        let n = (k + 1) as f64;
        for j in 0..=g.steps() {
            let cap = n * m.survivor_bound_tau(g.tau(j));
            for i in 0..g.nodes() {
                bound = bound.max(s.at(i, j) - cap);
                if i > 0 && i < g.intervals() {
                    slope = slope.max(s.dlambda_at(i, j));
                }
            }
        }
    }
    checks.push(Check::at_most("survivor_bound", 0.0, bound, 1e-6));
    checks.push(Check::at_most("decreasing_in_lambda", 0.0, slope, 1e-6));
    checks.push(Check::at_most(
        "increasing_in_n",
        0.0,
        max_over(levels.iter().zip(&levels[1..]), |lo, hi| lo - hi)?,
        1e-8,
    ));

    let mut per_contract = f64::NEG_INFINITY;
    for (k, pair) in levels.windows(2).enumerate() {
        let (a, b) = ((k + 1) as f64, (k + 2) as f64);
        per_contract = per_contract.max(max_over(std::iter::once((&pair[1], &pair[0])), |hi, lo| hi / b - lo / a)?);
    }
    checks.push(Check::at_most("per_contract_nonincreasing", 0.0, per_contract, 1e-8));

    let mut above = f64::NEG_INFINITY;
    let mut gap = f64::NEG_INFINITY;
    for (k, s) in levels.iter().enumerate() {
        let n = (k + 1) as u32;
        let nf = f64::from(n);
        let allowed = m.limit_gap_bound(n)?;
        above = above.max(max_over(std::iter::once((&beta, s)), |b, p| b - p / nf)?);
        gap = gap.max(max_over(std::iter::once((&beta, s)), |b, p| (p / nf - b).abs() - allowed)?);
    }
    checks.push(Check::at_most("above_limit", 0.0, above, 1e-8));
    checks.push(Check::at_most("limit_gap", 0.0, gap, 0.01));

    let mut sub = f64::NEG_INFINITY;
    for (a, b) in [(1usize, 1usize), (1, 2), (2, 3)] {
        let (pa, pb, pab) = (&levels[a - 1], &levels[b - 1], &levels[a + b - 1]);
        for ((&x, &y), &z) in pa.values().iter().zip(pb.values()).zip(pab.values()) {
            sub = sub.max(z - x - y);
        }
    }
    checks.push(Check::at_most("subadditive", 0.0, sub, 1e-8));

    checks.push(Check::at_most("grid_refinement_gap", 0.0, refinement_gap(cfg)?, 5e-3));

    let surfaces = HedgeSurfaces::solve(m, g, 1)?;
    let rep = simulate_hedged_portfolio(
        m,
        &surfaces,
        &HedgeSimConfig {
            n_insured: 1,
            n_paths: cfg.hedge_paths,
            n_steps: 1,
            dt: cfg.hedge_dt,
            seed,
            mode: HedgeMode::Optimal,
        },
    )?;
    checks.push(Check::close(
        "hedge_sharpe",
        m.spec().alpha,
        rep.empirical_sharpe,
        3.0 * rep.sharpe_std_error,
    ));
    Ok(checks)
}

/// Validation table with columns `check,expected,observed,tolerance,verdict`.
pub fn cmd_validate(cfg: &RunConfig) -> Result<(Table, bool)> {
    let checks = run_checks(cfg)?;
    let mut t = Table::new(&["check", "expected", "observed", "tolerance", "verdict"]);
    let mut ok = true;
    for c in &checks {
        let pass = c.passed();
        ok &= pass;
        t.push(vec![
            c.name.clone().into(),
            c.expected.into(),
            c.observed.into(),
            c.tolerance.into(),
            if pass { "pass" } else { "fail" }.into(),
        ]);
    }
    Ok((t, ok))
}

pub const HEDGE_COLUMNS: [&str; 16] = [
    "rho",
    "n_insured",
    "empirical_drift",
    "theory_drift",
    "empirical_var",
    "theory_var",
    "empirical_sharpe",
    "alpha",
    "sharpe_std_error",
    "mode",
    "marking",
    "q_mort",
    "lambda_p0",
    "dt",
    "n_paths",
    "seed",
];

/// Hedged and unhedged first-step moments for each configured pool size.
pub fn cmd_hedge_sim(cfg: &RunConfig) -> Result<Table> {
    let m = &cfg.model;
    let mut t = Table::new(&HEDGE_COLUMNS);
    for &n in &cfg.hedge_n_insured {
        let surfaces = HedgeSurfaces::solve(m, &cfg.grid, n)?;
        for (mode, label) in [(HedgeMode::Optimal, "optimal"), (HedgeMode::Unhedged, "unhedged")] {
            let r = simulate_hedged_portfolio(
                m,
                &surfaces,
                &HedgeSimConfig {
                    n_insured: n,
                    n_paths: cfg.hedge_paths,
                    n_steps: cfg.hedge_steps,
                    dt: cfg.hedge_dt,
                    seed: cfg.seed,
                    mode,
                },
            )?;
            t.push(vec![
                r.rho.into(),
                n.into(),
                r.empirical_drift.into(),
                r.theory_drift.into(),
                r.empirical_var.into(),
                r.theory_var.into(),
                r.empirical_sharpe.into(),
                r.alpha.into(),
                r.sharpe_std_error.into(),
                label.into(),
                r.marking.into(),
                m.spec().q_mort.into(),
                cfg.lambda_p0().into(),
                cfg.hedge_dt.into(),
                cfg.hedge_paths.into(),
                Cell::Int(cfg.seed),
            ]);
        }
    }
    Ok(t)
}
