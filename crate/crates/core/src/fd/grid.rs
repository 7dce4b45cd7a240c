use crate::error::{Error, Result};

/// Uniform grid in `y = ln(lambda - floor)` on `[-M, M]` and in time to
/// maturity `tau` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    intervals: usize,
    steps: usize,
    maturity: f64,
}

/// Builds a grid with `h = 2M/I` and `k = T/J`.
pub fn build_grid(half_width: f64, intervals: usize, steps: usize, maturity: f64) -> Result<Grid1D> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::NonPositiveDimension("half_width"));
    }
    if intervals < 2 {
        return Err(Error::NonPositiveDimension("intervals"));
    }
    if steps < 1 {
        return Err(Error::NonPositiveDimension("steps"));
    }
    if !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::NonPositiveDimension("maturity"));
    }
    Ok(Grid1D {
        half_width,
        intervals,
        steps,
        maturity,
    })
}

impl Grid1D {
    /// Default resolution for a horizon `maturity`: `M = 8`, `h = 0.025`,
    /// `k = 0.01`.
    pub fn default_for(maturity: f64) -> Result<Grid1D> {
        let steps = ((maturity / 0.01).round() as usize).max(1);
        build_grid(8.0, 640, steps, maturity)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    /// Spatial step `h`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    /// Time step `k`.
    pub fn k(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn tau(&self, j: usize) -> f64 {
        j as f64 * self.k()
    }

    /// Number of spatial nodes, `I + 1`.
    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    /// Same domain with both step sizes divided by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Grid1D> {
        build_grid(
            self.half_width,
            self.intervals * factor,
            self.steps * factor,
            self.maturity,
        )
    }
}
