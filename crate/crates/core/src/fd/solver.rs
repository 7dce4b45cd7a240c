//! Semi-implicit time stepping in `(y, tau)` with `y = ln(lambda - floor)`
//! and `tau = T - t`.
//!
//! For level `n` of the recursion the transformed equation is
//!
//! ```text
//! psi_tau = mu psi_y + 1/2 b^2 psi_yy - n lambda(y) (psi - prev)
//!         + alpha sqrt((1 - rho^2) b^2 psi_y^2 + n lambda(y) (psi - prev)^2)
//! ```
//!
//! with `lambda(y) = exp(y) + floor` and `mu` the drift of `y`. Diffusion,
//! drift and killing are implicit (backward Euler in `tau`, central in `y`);
//! the square-root source is evaluated on the old time level so that each
//! step is a single tridiagonal solve. The previous level `prev` is already
//! known on the whole grid and enters the killing term at the new level.
//!
//! The central drift stencil keeps the system an M-matrix only while
//! `|mu| h <= b^2`. Outside that range the comparison properties (monotone
//! in `lambda`, in `alpha`, in the drift) can fail by more than round-off;
//! refine `h` for low-volatility hazards.

use super::grid::Grid1D;
use super::surface::PriceSurface;
use super::tridiag::tridiagonal_solve_into;
use crate::error::{Error, Result};
use crate::model::{HazardParams, MarketSpec, Model};

/// Slack allowed on the a-priori value bounds before a solve is rejected.
pub const BOUND_TOLERANCE: f64 = 1e-6;

/// RK4 sub-steps per time step for the boundary ODE at `y = -M`.
const BOUNDARY_SUBSTEPS: usize = 8;

/// Coefficients of the transformed equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeCoefficients {
    /// Drift of `y`, including the `-b^2/2` Ito correction.
    pub drift_hat: f64,
    pub vol: f64,
    pub floor: f64,
    pub sharpe: f64,
    pub rho: f64,
    /// Whether the square-root source is active. Linear problems carry any
    /// Sharpe-ratio loading inside `drift_hat` instead.
    pub nonlinear: bool,
}

impl PdeCoefficients {
    /// Nonlinear single- and multi-life price factor.
    pub fn psi(model: &Model) -> Self {
        let p = model.insured();
        Self {
            drift_hat: model.risk_neutral_drift_insured() - 0.5 * p.vol * p.vol,
            vol: p.vol,
            floor: p.floor,
            sharpe: model.spec().alpha,
            rho: model.spec().rho,
            nonlinear: true,
        }
    }

    /// Linear limiting per-contract factor, drift from the tilted measure.
    pub fn beta(model: &Model) -> Self {
        let p = model.insured();
        Self {
            drift_hat: model.effective_limit_drift() - 0.5 * p.vol * p.vol,
            vol: p.vol,
            floor: p.floor,
            sharpe: 0.0,
            rho: model.spec().rho,
            nonlinear: false,
        }
    }

    /// Linear survival factor of the reference population under the
    /// pricing measure.
    pub fn survival(reference: &HazardParams, spec: &MarketSpec) -> Self {
        Self {
            drift_hat: reference.drift - spec.q_mort * reference.vol - 0.5 * reference.vol * reference.vol,
            vol: reference.vol,
            floor: reference.floor,
            sharpe: 0.0,
            rho: 0.0,
            nonlinear: false,
        }
    }

    /// Decay rate of level `n` on the floor, where the diffusion vanishes:
    /// `n floor - alpha sqrt(n floor)` (nonlinear) or `floor` (linear).
    fn floor_rate(&self, n: u32) -> f64 {
        if self.nonlinear {
            let nf = f64::from(n) * self.floor;
            nf - self.sharpe * nf.sqrt()
        } else {
            self.floor
        }
    }
}

/// Single-life price factor `psi`.
pub fn solve_psi_single(model: &Model, grid: &Grid1D) -> Result<PriceSurface> {
    check_horizon(model, grid)?;
    let coeffs = PdeCoefficients::psi(model);
    let left = floor_boundaries(&coeffs, grid, 1);
    solve_level(&coeffs, grid, 1, None, &left[0], &|tau| model.survivor_bound_tau(tau))
}

/// Levels `1..=n` of the multi-life recursion, seeded with `psi^(0) = 0`.
/// Element `k - 1` holds `psi^(k)`; level 1 is the single-life surface.
pub fn solve_psi_n(model: &Model, grid: &Grid1D, n: u32) -> Result<Vec<PriceSurface>> {
    if n == 0 {
        return Err(Error::InvalidArgument("number of lives must be at least 1".into()));
    }
    check_horizon(model, grid)?;
    let coeffs = PdeCoefficients::psi(model);
    let left = floor_boundaries(&coeffs, grid, n);
    let mut levels: Vec<PriceSurface> = Vec::with_capacity(n as usize);
    for level in 1..=n {
        let scale = f64::from(level);
        let surface = solve_level(
            &coeffs,
            grid,
            level,
            levels.last(),
            &left[level as usize - 1],
            &|tau| scale * model.survivor_bound_tau(tau),
        )?;
        levels.push(surface);
    }
    Ok(levels)
}

/// Limiting per-contract factor `beta`, a linear problem.
pub fn solve_beta(model: &Model, grid: &Grid1D) -> Result<PriceSurface> {
    check_horizon(model, grid)?;
    let coeffs = PdeCoefficients::beta(model);
    let left = floor_boundaries(&coeffs, grid, 1);
    solve_level(&coeffs, grid, 1, None, &left[0], &|tau| model.survivor_bound_tau(tau))
}

/// Reference survival factor `E^Q[exp(-int_t^T lambda^I)]`, which marks
/// the q-forward.
pub fn solve_survival_factor(
    reference: &HazardParams,
    spec: &MarketSpec,
    grid: &Grid1D,
) -> Result<PriceSurface> {
    if !(reference.vol > 0.0) {
        return Err(Error::NonPositiveVolatility {
            population: "reference",
            value: reference.vol,
        });
    }
    if !(reference.floor > 0.0) {
        return Err(Error::NonPositiveFloor {
            population: "reference",
            value: reference.floor,
        });
    }
    if (grid.maturity() - spec.maturity).abs() > 1e-12 {
        return Err(Error::IncompatibleGrids);
    }
    let coeffs = PdeCoefficients::survival(reference, spec);
    let left = floor_boundaries(&coeffs, grid, 1);
    solve_level(&coeffs, grid, 1, None, &left[0], &|_| 1.0)
}

fn check_horizon(model: &Model, grid: &Grid1D) -> Result<()> {
    if (grid.maturity() - model.spec().maturity).abs() > 1e-12 {
        return Err(Error::IncompatibleGrids);
    }
    Ok(())
}

/// Values at `y = -M` for levels `1..=n_max`, one vector of `J + 1` time
/// nodes per level. On the floor the hazard is frozen, so each level obeys
/// `d psi_n / d tau = -c_n (psi_n - psi_{n-1})` with `psi_n(0) = n`. Level 1
/// is the closed form `exp(-c_1 tau)`; higher levels use RK4.
pub(crate) fn floor_boundaries(coeffs: &PdeCoefficients, grid: &Grid1D, n_max: u32) -> Vec<Vec<f64>> {
    let steps = grid.steps();
    let n = n_max as usize;
    let rates: Vec<f64> = (1..=n_max).map(|m| coeffs.floor_rate(m)).collect();
    let mut out = vec![vec![0.0; steps + 1]; n];

    let c1 = rates[0];
    for (j, v) in out[0].iter_mut().enumerate() {
        *v = (-c1 * grid.tau(j)).exp();
    }
    if n == 1 {
        return out;
    }

    let field = |state: &[f64], d: &mut [f64]| {
        let mut prev = 0.0;
        for m in 0..state.len() {
            d[m] = -rates[m] * (state[m] - prev);
            prev = state[m];
        }
    };
    let dt = grid.k() / BOUNDARY_SUBSTEPS as f64;
    let mut state: Vec<f64> = (1..=n).map(|m| m as f64).collect();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for m in 1..n {
        out[m][0] = state[m];
    }
    for j in 1..=steps {
        for _ in 0..BOUNDARY_SUBSTEPS {
            field(&state, &mut k1);
            for m in 0..n {
                tmp[m] = state[m] + 0.5 * dt * k1[m];
            }
            field(&tmp, &mut k2);
            for m in 0..n {
                tmp[m] = state[m] + 0.5 * dt * k2[m];
            }
            field(&tmp, &mut k3);
            for m in 0..n {
                tmp[m] = state[m] + dt * k3[m];
            }
            field(&tmp, &mut k4);
            for m in 0..n {
                state[m] += dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
            }
        }
        for m in 1..n {
            out[m][j] = state[m];
        }
    }
    out
}

/// One level of the recursion: terminal value `level`, left boundary
/// `left[j]`, right boundary zero, killing `level * lambda` against `prev`.
pub(crate) fn solve_level(
    coeffs: &PdeCoefficients,
    grid: &Grid1D,
    level: u32,
    prev: Option<&PriceSurface>,
    left: &[f64],
    upper_bound: &dyn Fn(f64) -> f64,
) -> Result<PriceSurface> {
    if let Some(p) = prev {
        if p.grid() != grid {
            return Err(Error::IncompatibleGrids);
        }
    }
    let nodes = grid.nodes();
    let last = grid.intervals();
    let interior = last - 1;
    let steps = grid.steps();
    let h = grid.h();
    let k = grid.k();
    let nl = f64::from(level);
    let terminal = nl;

    let sig2 = coeffs.vol * coeffs.vol;
    let lo = coeffs.drift_hat * k / (2.0 * h) - sig2 * k / (2.0 * h * h);
    let up = -coeffs.drift_hat * k / (2.0 * h) - sig2 * k / (2.0 * h * h);
    let base = 1.0 + sig2 * k / (h * h);
    let basis2 = (1.0 - coeffs.rho * coeffs.rho).max(0.0) * sig2;
    let nonlinear = coeffs.nonlinear && coeffs.sharpe != 0.0;

    // lambda at every node, scaled by the level
    let kill: Vec<f64> = (0..nodes).map(|i| nl * (grid.y(i).exp() + coeffs.floor)).collect();

    let mut values = vec![0.0; nodes * (steps + 1)];
    values[..nodes].fill(terminal);

    let sub = vec![lo; interior.saturating_sub(1)];
    let sup = vec![up; interior.saturating_sub(1)];
    let diag: Vec<f64> = (1..last).map(|i| base + k * kill[i]).collect();
    let mut rhs = vec![0.0; interior];
    let mut scratch = vec![0.0; interior];
    let mut x = vec![0.0; interior];

    for j in 0..steps {
        let (old_part, new_part) = values.split_at_mut((j + 1) * nodes);
        let old = &old_part[j * nodes..];
        let new = &mut new_part[..nodes];
        let prev_old = prev.map(|p| p.slice(j));
        let prev_new = prev.map(|p| p.slice(j + 1));

        for i in 1..last {
            let mut r = old[i];
            if let Some(pn) = prev_new {
                r += k * kill[i] * pn[i];
            }
            if nonlinear {
                let dy = (old[i + 1] - old[i - 1]) / (2.0 * h);
                let jump = old[i] - prev_old.map_or(0.0, |p| p[i]);
                let a = (basis2 * dy * dy + kill[i] * jump * jump).sqrt();
                r += coeffs.sharpe * k * a;
            }
            rhs[i - 1] = r;
        }
        let left_new = left[j + 1];
        rhs[0] -= lo * left_new;
        // right boundary value is zero

        tridiagonal_solve_into(&sub, &diag, &sup, &rhs, &mut scratch, &mut x)?;

        new[0] = left_new;
        new[1..last].copy_from_slice(&x);
        new[last] = 0.0;

        let bound = upper_bound(grid.tau(j + 1)) + BOUND_TOLERANCE;
        for (i, &v) in new.iter().enumerate() {
            if !(v >= -BOUND_TOLERANCE && v <= bound) {
                return Err(Error::NonConvergedGrid {
                    i,
                    j: j + 1,
                    value: v,
                    lower: -BOUND_TOLERANCE,
                    upper: bound,
                });
            }
        }
    }
    Ok(PriceSurface::new(*grid, coeffs.floor, terminal, values))
}
