use thiserror::Error;

/// Errors raised by parameter validation, the finite-difference engine,
/// surface lookups and the hedge simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sharpe ratio alpha = {alpha} exceeds sqrt(insured floor) = {max}")]
    AlphaTooLarge { alpha: f64, max: f64 },

    #[error("sharpe ratio alpha = {0} must be non-negative")]
    NegativeSharpe(f64),

    #[error("correlation rho = {0} lies outside [-1, 1]")]
    RhoOutOfRange(f64),

    #[error("{population} hazard volatility b = {value} must be positive")]
    NonPositiveVolatility { population: &'static str, value: f64 },

    #[error("{population} hazard floor = {value} must be positive")]
    NonPositiveFloor { population: &'static str, value: f64 },

    #[error("{population} initial hazard {initial} must lie strictly above its floor {floor}")]
    InitialBelowFloor {
        population: &'static str,
        initial: f64,
        floor: f64,
    },

    #[error("maturity T = {0} must be positive")]
    NonPositiveMaturity(f64),

    #[error("short rate r = {0} must be non-negative")]
    NegativeRate(f64),

    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),

    #[error("limit gap bound is vacuous: sqrt(2 * floor) = {root} <= alpha = {alpha}")]
    DegenerateBound { root: f64, alpha: f64 },

    #[error("grid dimension `{0}` must be positive")]
    NonPositiveDimension(&'static str),

    #[error("tridiagonal elimination hit pivot {pivot:e} at row {row}")]
    ZeroPivot { row: usize, pivot: f64 },

    #[error("tridiagonal system has inconsistent lengths")]
    DimensionMismatch,

    #[error("solved value {value} at node (i={i}, j={j}) leaves [{lower}, {upper}]")]
    NonConvergedGrid {
        i: usize,
        j: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("query (lambda={lambda}, t={t}) is outside the surface domain")]
    OutOfDomain { lambda: f64, t: f64 },

    #[error("q-forward sensitivity {0:e} is too small to hedge against")]
    DegenerateSensitivity(f64),

    #[error("surfaces were solved on incompatible grids")]
    IncompatibleGrids,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
