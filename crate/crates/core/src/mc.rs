//! Monte Carlo estimators of survival expectations, used as independent
//! checks of the linear price factors and as the path engine of the hedge
//! simulator.
//!
//! `lambda - floor` is a geometric Brownian motion with constant
//! coefficients, so each step is sampled exactly in log space. Only the
//! time integral of the hazard is discretized (trapezoid rule).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{HazardParams, MarketSpec, Model};

/// Probability measure under which paths are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Drifts `a^P`, `a^I`.
    Physical,
    /// Drifts `a^P - rho q b^P`, `a^I - q b^I`.
    RiskNeutral,
    /// Insured drift additionally shifted by `-alpha sqrt(1 - rho^2) b^P`;
    /// the reference keeps its pricing drift.
    Tilted,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Mean and standard error of `samples`, summed in index order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n_paths: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, n_paths: n }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Simulated hazard paths on a uniform time grid. Matrices are stored path
/// major with `n_steps + 1` columns, column 0 holding the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub times: Vec<f64>,
    pub lambda_p: Vec<f64>,
    pub lambda_i: Vec<f64>,
    pub integral_p: Vec<f64>,
    pub integral_i: Vec<f64>,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl PathBundle {
    fn row<'a>(&self, m: &'a [f64], path: usize) -> &'a [f64] {
        let w = self.n_steps + 1;
        &m[path * w..(path + 1) * w]
    }

    pub fn lambda_p_path(&self, path: usize) -> &[f64] {
        self.row(&self.lambda_p, path)
    }

    pub fn lambda_i_path(&self, path: usize) -> &[f64] {
        self.row(&self.lambda_i, path)
    }

    pub fn integral_p_path(&self, path: usize) -> &[f64] {
        self.row(&self.integral_p, path)
    }

    pub fn integral_i_path(&self, path: usize) -> &[f64] {
        self.row(&self.integral_i, path)
    }
}

/// Exact one-step transition of a floored hazard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Hazard {
    pub drift: f64,
    pub vol: f64,
    pub floor: f64,
}

impl Hazard {
    fn from_params(p: &HazardParams, drift: f64) -> Self {
        Self {
            drift,
            vol: p.vol,
            floor: p.floor,
        }
    }

    #[inline]
    pub fn advance(&self, lambda: f64, dt: f64, z: f64) -> f64 {
        let log_step = (self.drift - 0.5 * self.vol * self.vol) * dt + self.vol * dt.sqrt() * z;
        self.floor + (lambda - self.floor) * log_step.exp()
    }

    #[cfg(test)]
    /// `E[int_0^T lambda] = floor T + (lambda_0 - floor)(e^{aT} - 1)/a`.
    pub fn mean_integral(&self, lambda0: f64, horizon: f64) -> f64 {
        let growth = if self.drift.abs() < 1e-12 {
            horizon
        } else {
            ((self.drift * horizon).exp() - 1.0) / self.drift
        };
        self.floor * horizon + (lambda0 - self.floor) * growth
    }
}

/// Insured and reference hazards driven by correlated noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct JointHazard {
    pub insured: Hazard,
    pub reference: Hazard,
    pub rho: f64,
    basis: f64,
}

impl JointHazard {
    pub fn new(model: &Model, measure: Measure) -> Self {
        let (a_p, a_i) = match measure {
            Measure::Physical => (model.insured().drift, model.reference().drift),
            Measure::RiskNeutral => (
                model.risk_neutral_drift_insured(),
                model.risk_neutral_drift_reference(),
            ),
            Measure::Tilted => (
                model.effective_limit_drift(),
                model.risk_neutral_drift_reference(),
            ),
        };
        let rho = model.spec().rho;
        Self {
            insured: Hazard::from_params(model.insured(), a_p),
            reference: Hazard::from_params(model.reference(), a_i),
            rho,
            basis: model.basis_weight(),
        }
    }

    /// Draws `z_I` then `z_perp` and returns `(z_P, z_I)` with
    /// `z_P = rho z_I + sqrt(1 - rho^2) z_perp`.
    #[inline]
    pub fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let zi: f64 = rng.sample(StandardNormal);
        let zperp: f64 = rng.sample(StandardNormal);
        (self.rho * zi + self.basis * zperp, zi)
    }
}

/// Generator for path `path` of a batch seeded with `seed`. Each path owns
/// its own stream, so results do not depend on scheduling.
pub(crate) fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn check_shape(n_paths: usize, n_steps: usize, horizon: f64) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::NonPositiveDimension("n_paths"));
    }
    if n_steps == 0 {
        return Err(Error::NonPositiveDimension("n_steps"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    Ok(())
}

/// Joint insured and reference paths from the model's initial hazards.
pub fn simulate_paths(
    model: &Model,
    measure: Measure,
    n_paths: usize,
    n_steps: usize,
    horizon: f64,
    seed: u64,
) -> Result<PathBundle> {
    check_shape(n_paths, n_steps, horizon)?;
    let dyn_ = JointHazard::new(model, measure);
    let dt = horizon / n_steps as f64;
    let w = n_steps + 1;
    let (lp0, li0) = (model.pops().initial_insured, model.pops().initial_reference);

    let rows: Vec<[Vec<f64>; 4]> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path);
            let mut lp = Vec::with_capacity(w);
            let mut li = Vec::with_capacity(w);
            let mut ip = Vec::with_capacity(w);
            let mut ii = Vec::with_capacity(w);
            let (mut xp, mut xi, mut sp, mut si) = (lp0, li0, 0.0, 0.0);
            lp.push(xp);
            li.push(xi);
            ip.push(sp);
            ii.push(si);
            for _ in 0..n_steps {
                let (zp, zi) = dyn_.draw(&mut rng);
                let np = dyn_.insured.advance(xp, dt, zp);
                let ni = dyn_.reference.advance(xi, dt, zi);
                sp += 0.5 * dt * (xp + np);
                si += 0.5 * dt * (xi + ni);
                xp = np;
                xi = ni;
                lp.push(xp);
                li.push(xi);
                ip.push(sp);
                ii.push(si);
            }
            [lp, li, ip, ii]
        })
        .collect();

    let mut out = PathBundle {
        times: (0..w).map(|j| j as f64 * dt).collect(),
        lambda_p: Vec::with_capacity(n_paths * w),
        lambda_i: Vec::with_capacity(n_paths * w),
        integral_p: Vec::with_capacity(n_paths * w),
        integral_i: Vec::with_capacity(n_paths * w),
        n_paths,
        n_steps,
        seed,
    };
    for [lp, li, ip, ii] in rows {
        out.lambda_p.extend(lp);
        out.lambda_i.extend(li);
        out.integral_p.extend(ip);
        out.integral_i.extend(ii);
    }
    Ok(out)
}

/// `E[exp(-int_0^T lambda)]` for a single floored hazard.
pub(crate) fn survival_estimate(
    hazard: Hazard,
    lambda0: f64,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_shape(n_paths, n_steps, horizon)?;
    let dt = horizon / n_steps as f64;
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path);
            let mut x = lambda0;
            let mut integral = 0.0;
            for _ in 0..n_steps {
                let z: f64 = rng.sample(StandardNormal);
                let next = hazard.advance(x, dt, z);
                integral += 0.5 * dt * (x + next);
                x = next;
            }
            (-integral).exp()
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}

fn insured_start(model: &Model, lambda_p0: f64) -> Result<Model> {
    let mut pops = *model.pops();
    pops.initial_insured = lambda_p0;
    model.with_pops(pops)
}

/// Undiscounted single-life price factor at `alpha = 0`:
/// `E^Q[exp(-int_0^T lambda^P)]`.
pub fn estimate_alpha0(
    model: &Model,
    lambda_p0: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let m = insured_start(model, lambda_p0)?;
    let h = JointHazard::new(&m, Measure::RiskNeutral).insured;
    survival_estimate(h, lambda_p0, m.spec().maturity, n_paths, n_steps, seed)
}

/// Limiting per-contract factor: the same expectation under the tilted
/// measure.
pub fn estimate_beta(
    model: &Model,
    lambda_p0: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let m = insured_start(model, lambda_p0)?;
    let h = JointHazard::new(&m, Measure::Tilted).insured;
    survival_estimate(h, lambda_p0, m.spec().maturity, n_paths, n_steps, seed)
}

/// q-forward delivery price `K = E^Q[exp(-int_0^T lambda^I)]`.
pub fn estimate_qforward_strike(
    reference: &HazardParams,
    spec: &MarketSpec,
    lambda_i0: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(reference.vol > 0.0) {
        return Err(Error::NonPositiveVolatility {
            population: "reference",
            value: reference.vol,
        });
    }
    if !(lambda_i0 > reference.floor) {
        return Err(Error::InitialBelowFloor {
            population: "reference",
            initial: lambda_i0,
            floor: reference.floor,
        });
    }
    let h = Hazard::from_params(reference, reference.drift - spec.q_mort * reference.vol);
    survival_estimate(h, lambda_i0, spec.maturity, n_paths, n_steps, seed)
}
