//! Acceptance gate. Runs every criterion at its stated tolerance and prints
//! one `PASS`/`FAIL` line each; exits nonzero if any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{bound_excess, max_nodewise, max_slope, min_value, study, with_alpha};
use endowment_hedge::fd::{build_grid, solve_beta, solve_psi_n, solve_psi_single, Grid1D, PriceSurface};
use endowment_hedge::hedge::{simulate_hedged_portfolio, HedgeMode, HedgeSimConfig, HedgeSurfaces};
use endowment_hedge::mc::{estimate_alpha0, estimate_beta};
use endowment_hedge::Model;

type Outcome = Result<String, String>;

const RATE: f64 = 0.04;

fn default_grid() -> Grid1D {
    Grid1D::default_for(10.0).unwrap()
}

/// `lambda` in `[lo, hi]` where the decreasing map `f` crosses `target`.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn calibrated_anchors() -> Outcome {
    let start = Instant::now();
    let g = default_grid();
    let m = study(0.0, 0.0);
    let psi = solve_psi_single(&m, &g).map_err(|e| e.to_string())?;
    let beta = solve_beta(&m, &g).map_err(|e| e.to_string())?;
    let single = |l: f64| psi.price(RATE, l, 0.0).unwrap();
    let limit = |l: f64| beta.price(RATE, l, 0.0).unwrap();
    let (lo, hi) = (0.0205, 0.12);

    // prices fall with the initial hazard, so each band maps to an interval
    let s_band = (bisect(single, 0.445, lo, hi), bisect(single, 0.425, lo, hi));
    let l_band = (bisect(limit, 0.353, lo, hi), bisect(limit, 0.333, lo, hi));
    let (a, b) = (s_band.0.max(l_band.0), s_band.1.min(l_band.1));
    if a > b {
        return Err(format!(
            "single band [{:.5}, {:.5}] and limit band [{:.5}, {:.5}] are disjoint",
            s_band.0, s_band.1, l_band.0, l_band.1
        ));
    }
    let l0 = 0.5 * (a + b);
    let (p, f) = (single(l0), limit(l0));
    let elapsed = start.elapsed();
    let ok = (p - 0.435).abs() <= 0.010 && (f - 0.343).abs() <= 0.010 && elapsed < Duration::from_secs(60);
    let msg = format!(
        "lambda_p0 = {l0:.5} in [{a:.5}, {b:.5}]: single {p:.5} (0.435 +- 0.010), limit {f:.5} (0.343 +- 0.010); exact hits single {:.5}, limit {:.5}; default 0.06 gives {:.5} / {:.5}; {elapsed:.2?}",
        bisect(single, 0.435, lo, hi),
        bisect(limit, 0.343, lo, hi),
        single(0.06),
        limit(0.06)
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let g = default_grid();
    let (paths, steps) = (200_000, 500);
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, &(rho, q, l0)) in [
        (-0.5, 0.05, 0.06),
        (0.0, 0.0, 0.05),
        (0.5, 0.05, 0.06),
        (0.8, -0.05, 0.08),
        (1.0, 0.15, 0.04),
    ]
    .iter()
    .enumerate()
    {
        let m = study(rho, q);
        let m0 = with_alpha(&m, 0.0);
        let psi0 = solve_psi_single(&m0, &g).map_err(|e| e.to_string())?;
        let beta = solve_beta(&m, &g).map_err(|e| e.to_string())?;
        let seed = 1000 + k as u64;
        let e0 = estimate_alpha0(&m0, l0, paths, steps, seed).map_err(|e| e.to_string())?;
        let eb = estimate_beta(&m, l0, paths, steps, seed).map_err(|e| e.to_string())?;
        let v0 = psi0.lookup(l0, 0.0).unwrap().value;
        let vb = beta.lookup(l0, 0.0).unwrap().value;
        let z0 = (v0 - e0.mean) / e0.std_error;
        let zb = (vb - eb.mean) / eb.std_error;
        ok &= z0.abs() <= 3.0 && zb.abs() <= 3.0;
        lines.push(format!("(rho {rho}, q {q}, l0 {l0}) z_psi {z0:+.2} z_beta {zb:+.2}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    let msg = format!("{}; {elapsed:.1?}", lines.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Tally {
    failures: Vec<String>,
    checks: usize,
}

impl Tally {
    fn check(&mut self, name: &str, observed: f64, tol: f64) {
        self.checks += 1;
        if !(observed <= tol) {
            self.failures.push(format!("{name}: {observed:e} > {tol:e}"));
        }
    }

    fn truth(&mut self, name: &str, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn property_suite() -> Outcome {
    let g = default_grid();
    let n = 5;
    let rhos = [-0.5, 0.0, 0.8];
    let qs = [-0.05, 0.0, 0.15];
    let mut t = Tally {
        failures: Vec::new(),
        checks: 0,
    };
    let solve = |m: &Model| solve_psi_n(m, &g, n).unwrap();
    let unhedged: Vec<Vec<PriceSurface>> = qs.iter().map(|&q| solve(&study(0.0, q))).collect();

    for &rho in &rhos {
        for (qi, &q) in qs.iter().enumerate() {
            let tag = format!("rho {rho} q {q}");
            let m = study(rho, q);
            let levels = solve(&m);
            let beta = solve_beta(&m, &g).unwrap();

            for (k, s) in levels.iter().enumerate() {
                let kf = (k + 1) as f64;
                t.check(&format!("{tag} bound n={}", k + 1), bound_excess(&m, k as u32 + 1, s), 1e-6);
                t.check(&format!("{tag} nonnegative n={}", k + 1), -min_value(s), 1e-6);
                t.check(&format!("{tag} slope n={}", k + 1), max_slope(s), 1e-6);
                t.check(&format!("{tag} above limit n={}", k + 1), max_nodewise(&beta, s, |b, p| b - p / kf), 1e-8);
                if k > 0 {
                    let prev = &levels[k - 1];
                    t.check(&format!("{tag} increasing n={}", k + 1), max_nodewise(prev, s, |a, b| a - b), 1e-8);
                    t.check(
                        &format!("{tag} per-contract n={}", k + 1),
                        max_nodewise(s, prev, |a, b| a / kf - b / (kf - 1.0)),
                        1e-8,
                    );
                }
            }
            for (a, b) in [(1usize, 1usize), (1, 2), (2, 3)] {
                let (pa, pb, pab) = (&levels[a - 1], &levels[b - 1], &levels[a + b - 1]);
                let worst = pab
                    .values()
                    .iter()
                    .zip(pa.values().iter().zip(pb.values()))
                    .map(|(z, (x, y))| z - x - y)
                    .fold(f64::NEG_INFINITY, f64::max);
                t.check(&format!("{tag} subadditive ({a},{b})"), worst, 1e-8);
            }

            // larger alpha, larger price
            let lower = solve(&with_alpha(&m, 0.05));
            for k in 0..n as usize {
                t.check(
                    &format!("{tag} alpha order n={}", k + 1),
                    max_nodewise(&lower[k], &levels[k], |a, b| a - b),
                    1e-8,
                );
            }

            // rho q > 0 moves a^{P,Q} down: raising q with rho > 0 raises prices
            if rho > 0.0 {
                let up = solve(&study(rho, q + 0.05));
                for k in 0..n as usize {
                    t.check(&format!("{tag} q order n={}", k + 1), max_nodewise(&levels[k], &up[k], |a, b| a - b), 1e-8);
                }
            }

            // hedging with rho q <= 0 never costs more than not hedging
            if rho * q <= 0.0 {
                for k in 0..n as usize {
                    t.check(
                        &format!("{tag} hedge discount n={}", k + 1),
                        max_nodewise(&levels[k], &unhedged[qi][k], |a, b| a - b),
                        1e-8,
                    );
                }
            }

            // reduction consistency
            let single = solve_psi_single(&m, &g).unwrap();
            t.truth(&format!("{tag} n=1 bitwise"), single == levels[0]);
            let flat = solve(&with_alpha(&m, 0.0));
            for k in 1..n as usize {
                let kf = (k + 1) as f64;
                let rel = max_nodewise(&flat[k], &flat[0], |a, b| {
                    let want = kf * b;
                    (a - want).abs() / want.abs().max(1e-300)
                });
                // nodes where psi underflows carry no information
                let rel = if rel.is_finite() { rel } else { f64::INFINITY };
                t.check(&format!("{tag} alpha=0 scaling n={}", k + 1), rel, 1e-8);
            }
            if rho == 0.0 {
                for k in 0..n as usize {
                    t.truth(&format!("q {q} independent at rho 0 n={}", k + 1), levels[k] == unhedged[0][k]);
                }
            }
        }
    }
    if t.failures.is_empty() {
        Ok(format!("{} nodewise checks over 3x3 (rho, q_mort), n <= 5", t.checks))
    } else {
        Err(format!("{} of {} failed: {}", t.failures.len(), t.checks, t.failures.join("; ")))
    }
}

fn limit_gap() -> Outcome {
    let g = default_grid();
    let mut worst = Vec::new();
    let mut ok = true;
    for (rho, q) in [(0.0, 0.0), (0.5, 0.05), (-0.5, 0.15)] {
        let m = study(rho, q);
        let levels = solve_psi_n(&m, &g, 25).map_err(|e| e.to_string())?;
        let beta = solve_beta(&m, &g).map_err(|e| e.to_string())?;
        let j = m.limit_gap_constant().unwrap();
        for n in [1u32, 2, 5, 10, 25] {
            let nf = f64::from(n);
            let allowed = 1.0 / nf + 2.0 * j / nf.sqrt() + 0.01;
            let gap = max_nodewise(&levels[n as usize - 1], &beta, |p, b| (p / nf - b).abs());
            ok &= gap <= allowed;
            if rho == 0.0 {
                worst.push(format!("n={n} {gap:.4} <= {allowed:.4}"));
            }
        }
    }
    let j = study(0.0, 0.0).limit_gap_constant().unwrap();
    ok &= (j - 1.414).abs() < 1e-3;
    let msg = format!("J = {j:.5}; {}", worst.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sharpe_contract() -> Outcome {
    let g = default_grid();
    let m = study(0.0, 0.0);
    let h = HedgeSurfaces::solve(&m, &g, 1).map_err(|e| e.to_string())?;
    let r = simulate_hedged_portfolio(
        &m,
        &h,
        &HedgeSimConfig {
            n_insured: 1,
            n_paths: 200_000,
            n_steps: 1,
            dt: 0.002,
            seed: 2024,
            mode: HedgeMode::Optimal,
        },
    )
    .map_err(|e| e.to_string())?;
    let alpha = m.spec().alpha;
    let band = 3.0 * r.sharpe_std_error;
    let sharpe_ok = (r.empirical_sharpe - alpha).abs() <= band;

    let n = 10_000u32;
    let m1 = study(1.0, 0.0);
    let h1 = HedgeSurfaces::solve(&m1, &g, n).map_err(|e| e.to_string())?;
    let r1 = simulate_hedged_portfolio(
        &m1,
        &h1,
        &HedgeSimConfig {
            n_insured: n,
            n_paths: 200_000,
            n_steps: 1,
            dt: 0.002,
            seed: 2025,
            mode: HedgeMode::Optimal,
        },
    )
    .map_err(|e| e.to_string())?;
    let per_contract = r1.initial_price / f64::from(n);
    let cap = 2.0 * 0.06 * per_contract * per_contract / f64::from(n);
    let var_ok = r1.per_contract_var() < cap;
    let msg = format!(
        "rho 0, n 1: sharpe {:.4} in [{:.4}, {:.4}]; rho 1, n 1e4 ({}): per-contract var {:.3e} < {:.3e}",
        r.empirical_sharpe,
        alpha - band,
        alpha + band,
        r1.marking,
        r1.per_contract_var(),
        cap
    );
    if sharpe_ok && var_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_endowment-hedge"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let mut sizes = Vec::new();
    for cmd in ["validate", "sweep"] {
        let a = run_cli(&[cmd, "--seed", "7"], "1")?;
        let b = run_cli(&[cmd, "--seed", "7"], "4")?;
        let c = run_cli(&[cmd, "--seed", "7"], "2")?;
        if a != b || a != c {
            return Err(format!("{cmd} output differs between runs"));
        }
        sizes.push(format!("{cmd} {} bytes x3", a.len()));
    }
    Ok(format!("{} identical across 1, 2 and 4 worker threads", sizes.join(", ")))
}

fn grid_convergence() -> Outcome {
    let m = study(0.0, 0.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, solve) in [
        ("single", solve_psi_single as fn(&Model, &Grid1D) -> endowment_hedge::Result<PriceSurface>),
        ("limit", solve_beta),
    ] {
        let prices: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&f| {
                let g = build_grid(8.0, 160 * f, 250 * f, 10.0).unwrap();
                solve(&m, &g).unwrap().price(RATE, 0.06, 0.0).unwrap()
            })
            .collect();
        let d1 = (prices[1] - prices[0]).abs();
        let d2 = (prices[2] - prices[1]).abs();
        let ratio = d2 / d1;
        ok &= d2 < d1 && (0.3..=0.7).contains(&ratio);
        lines.push(format!("{label} diffs {d1:.3e}, {d2:.3e} ratio {ratio:.3}"));
    }
    let msg = format!("(I, J) = (160, 250) x1, x2, x4: {}", lines.join("; "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("calibrated price anchors", calibrated_anchors),
        ("PDE / Monte Carlo equivalence", oracle_equivalence),
        ("property suite", property_suite),
        ("limit gap bound", limit_gap),
        ("Sharpe-ratio contract", sharpe_contract),
        ("determinism", determinism),
        ("grid convergence", grid_convergence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (verdict, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {verdict} {name} ({:.1?}): {detail}", k + 1, start.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
