//! Parameter containers, validation, measure-change drifts and the closed-form
//! bounds shared by the solvers and the simulators.
//!
//! Both hazard rates follow a shifted geometric diffusion above a floor,
//! `d(lambda) = a (lambda - floor) dt + b (lambda - floor) dW`, with constant
//! coefficients. The short rate is a constant, so the T-bond is a plain
//! discount factor.

use crate::error::{Error, Result};

/// Coefficients of one population's hazard diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardParams {
    /// Drift coefficient `a` (1/year).
    pub drift: f64,
    /// Volatility coefficient `b` (1/sqrt(year)).
    pub vol: f64,
    /// Minimum hazard rate the process never reaches.
    pub floor: f64,
}

impl HazardParams {
    pub fn new(drift: f64, vol: f64, floor: f64) -> Self {
        Self { drift, vol, floor }
    }

    fn check(&self, population: &'static str) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::NonFinite("drift"));
        }
        if !self.vol.is_finite() || self.vol <= 0.0 {
            return Err(Error::NonPositiveVolatility {
                population,
                value: self.vol,
            });
        }
        if !self.floor.is_finite() || self.floor <= 0.0 {
            return Err(Error::NonPositiveFloor {
                population,
                value: self.floor,
            });
        }
        Ok(())
    }
}

/// Market-wide constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSpec {
    /// Constant short rate `r`.
    pub rate: f64,
    /// Market price of reference mortality risk, constant.
    pub q_mort: f64,
    /// Instantaneous Sharpe ratio required on unhedgeable risk.
    pub alpha: f64,
    /// Correlation between the insured and reference Brownian drivers.
    pub rho: f64,
    /// Contract maturity `T` in years.
    pub maturity: f64,
}

/// Insured (`P`) and reference (`I`) hazard dynamics together with their
/// time-zero states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationPair {
    pub insured: HazardParams,
    pub reference: HazardParams,
    pub initial_insured: f64,
    pub initial_reference: f64,
}

impl PopulationPair {
    /// Reference population mirroring the insured one.
    pub fn mirrored(insured: HazardParams, initial_insured: f64) -> Self {
        Self {
            insured,
            reference: insured,
            initial_insured,
            initial_reference: initial_insured,
        }
    }
}

/// A configuration that passed [`validate`]. All downstream solvers take
/// this type so that invalid studies never reach the numerics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    spec: MarketSpec,
    pops: PopulationPair,
}

/// Checks every parameter invariant and returns the configuration unchanged
/// when they all hold.
pub fn validate(spec: MarketSpec, pops: PopulationPair) -> Result<Model> {
    for (name, v) in [
        ("rate", spec.rate),
        ("q_mort", spec.q_mort),
        ("alpha", spec.alpha),
        ("rho", spec.rho),
        ("maturity", spec.maturity),
        ("initial_insured", pops.initial_insured),
        ("initial_reference", pops.initial_reference),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    pops.insured.check("insured")?;
    pops.reference.check("reference")?;
    if spec.maturity <= 0.0 {
        return Err(Error::NonPositiveMaturity(spec.maturity));
    }
    if spec.rate < 0.0 {
        return Err(Error::NegativeRate(spec.rate));
    }
    if !(-1.0..=1.0).contains(&spec.rho) {
        return Err(Error::RhoOutOfRange(spec.rho));
    }
    if spec.alpha < 0.0 {
        return Err(Error::NegativeSharpe(spec.alpha));
    }
    let max = pops.insured.floor.sqrt();
    if spec.alpha > max {
        return Err(Error::AlphaTooLarge {
            alpha: spec.alpha,
            max,
        });
    }
    if pops.initial_insured <= pops.insured.floor {
        return Err(Error::InitialBelowFloor {
            population: "insured",
            initial: pops.initial_insured,
            floor: pops.insured.floor,
        });
    }
    if pops.initial_reference <= pops.reference.floor {
        return Err(Error::InitialBelowFloor {
            population: "reference",
            initial: pops.initial_reference,
            floor: pops.reference.floor,
        });
    }
    Ok(Model { spec, pops })
}

impl Model {
    pub fn spec(&self) -> &MarketSpec {
        &self.spec
    }

    pub fn pops(&self) -> &PopulationPair {
        &self.pops
    }

    pub fn insured(&self) -> &HazardParams {
        &self.pops.insured
    }

    pub fn reference(&self) -> &HazardParams {
        &self.pops.reference
    }

    /// Same populations, different market constants. Re-validates.
    pub fn with_spec(&self, spec: MarketSpec) -> Result<Model> {
        validate(spec, self.pops)
    }

    /// Same market, different populations. Re-validates.
    pub fn with_pops(&self, pops: PopulationPair) -> Result<Model> {
        validate(self.spec, pops)
    }

    /// Insured drift under the pricing measure: `a^P - rho q b^P`.
    pub fn risk_neutral_drift_insured(&self) -> f64 {
        let p = &self.pops.insured;
        p.drift - self.spec.rho * self.spec.q_mort * p.vol
    }

    /// Reference drift under the pricing measure: `a^I - q b^I`.
    pub fn risk_neutral_drift_reference(&self) -> f64 {
        let r = &self.pops.reference;
        r.drift - self.spec.q_mort * r.vol
    }

    /// `sqrt(1 - rho^2)`, the weight of the unhedgeable insured noise.
    pub fn basis_weight(&self) -> f64 {
        (1.0 - self.spec.rho * self.spec.rho).max(0.0).sqrt()
    }

    /// Drift of the insured hazard under the tilted measure that represents
    /// the limiting per-contract price:
    /// `a^P - (rho q + alpha sqrt(1 - rho^2)) b^P`.
    pub fn effective_limit_drift(&self) -> f64 {
        let p = &self.pops.insured;
        p.drift - (self.spec.rho * self.spec.q_mort + self.spec.alpha * self.basis_weight()) * p.vol
    }

    /// `h(t) = exp(-(floor - alpha sqrt(floor)) (T - t))`; `psi^(n) <= n h(t)`.
    pub fn survivor_bound(&self, t: f64) -> f64 {
        self.survivor_bound_tau(self.spec.maturity - t)
    }

    /// [`Model::survivor_bound`] expressed in time to maturity.
    pub fn survivor_bound_tau(&self, tau: f64) -> f64 {
        let floor = self.pops.insured.floor;
        (-(floor - self.spec.alpha * floor.sqrt()) * tau).exp()
    }

    /// Constant `J = alpha sqrt(2) / (sqrt(2 floor) - alpha)` of the limit rate.
    pub fn limit_gap_constant(&self) -> Result<f64> {
        let root = (2.0 * self.pops.insured.floor).sqrt();
        let alpha = self.spec.alpha;
        if root <= alpha {
            return Err(Error::DegenerateBound { root, alpha });
        }
        Ok(alpha * std::f64::consts::SQRT_2 / (root - alpha))
    }

    /// Uniform bound `1/n + 2 J / sqrt(n)` on `|psi^(n)/n - beta|`.
    pub fn limit_gap_bound(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let j = self.limit_gap_constant()?;
        let n = f64::from(n);
        Ok(1.0 / n + 2.0 * j / n.sqrt())
    }

    /// Discount factor `exp(-r (T - t))`.
    pub fn discount(&self, t: f64) -> f64 {
        (-self.spec.rate * (self.spec.maturity - t)).exp()
    }
}

/// Parameters used in the numerical study: `T = 10`, `r = 0.04`,
/// `a^P = 0.04`, `b^P = 0.1`, floor `0.02`, `alpha = 0.1`. The reference
/// population mirrors the insured one.
pub fn study_defaults(rho: f64, q_mort: f64, initial_insured: f64) -> (MarketSpec, PopulationPair) {
    let insured = HazardParams::new(0.04, 0.1, 0.02);
    (
        MarketSpec {
            rate: 0.04,
            q_mort,
            alpha: 0.1,
            rho,
            maturity: 10.0,
        },
        PopulationPair::mirrored(insured, initial_insured),
    )
}
