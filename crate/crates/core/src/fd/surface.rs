use super::grid::Grid1D;
use crate::error::{Error, Result};

/// Values of a price factor on a [`Grid1D`], stored time-slice by
/// time-slice (`j` major, `i` minor).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    grid: Grid1D,
    floor: f64,
    terminal: f64,
    values: Vec<f64>,
}

/// Interpolated value and hazard sensitivity at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub value: f64,
    /// Derivative with respect to the hazard level `lambda`.
    pub dlambda: f64,
}

impl PriceSurface {
    pub(crate) fn new(grid: Grid1D, floor: f64, terminal: f64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.nodes() * (grid.steps() + 1));
        Self {
            grid,
            floor,
            terminal,
            values,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Hazard floor used by the `lambda <-> y` map.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Value imposed at maturity on every node.
    pub fn terminal(&self) -> f64 {
        self.terminal
    }

    /// Node value at spatial index `i` and time index `j` (`tau_j = j k`).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nodes() + i]
    }

    /// All spatial nodes of time slice `j`.
    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.grid.nodes();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Hazard level at spatial node `i`.
    pub fn lambda_at(&self, i: usize) -> f64 {
        self.floor + self.grid.y(i).exp()
    }

    /// Central difference in `y` at an interior node, divided by
    /// `lambda - floor` (chain rule `psi_lambda = exp(-y) psi_y`).
    pub fn dlambda_at(&self, i: usize, j: usize) -> f64 {
        self.dy_at(i, j) * (-self.grid.y(i)).exp()
    }

    fn dy_at(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.h();
        let last = self.grid.intervals();
        if i == 0 {
            (self.at(1, j) - self.at(0, j)) / h
        } else if i == last {
            (self.at(last, j) - self.at(last - 1, j)) / h
        } else {
            (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * h)
        }
    }

    /// Bilinear interpolation in `(y, tau)` of the value and of the
    /// `y`-derivative, the latter mapped back to a `lambda`-derivative.
    pub fn lookup(&self, lambda: f64, t: f64) -> Result<Lookup> {
        let out = || Error::OutOfDomain { lambda, t };
        if !(lambda > self.floor) || !t.is_finite() {
            return Err(out());
        }
        let y = (lambda - self.floor).ln();
        let m = self.grid.half_width();
        let tau = self.grid.maturity() - t;
        // tolerate round-off at the edges
        let eps = 1e-12;
        if y < -m - eps || y > m + eps || tau < -eps || tau > self.grid.maturity() + eps {
            return Err(out());
        }
        let (i0, wy) = cell(y + m, self.grid.h(), self.grid.intervals());
        let (j0, wt) = cell(tau, self.grid.k(), self.grid.steps());

        let blend = |f: &dyn Fn(usize, usize) -> f64| {
            let lo = f(i0, j0) * (1.0 - wy) + f(i0 + 1, j0) * wy;
            if wt == 0.0 {
                return lo;
            }
            let hi = f(i0, j0 + 1) * (1.0 - wy) + f(i0 + 1, j0 + 1) * wy;
            lo * (1.0 - wt) + hi * wt
        };
        let value = blend(&|i, j| self.at(i, j));
        let dy = blend(&|i, j| self.dy_at(i, j));
        Ok(Lookup {
            value,
            dlambda: dy / (lambda - self.floor),
        })
    }

    /// Monetary price `exp(-r (T - t)) * value` for a constant short rate.
    pub fn price(&self, rate: f64, lambda: f64, t: f64) -> Result<f64> {
        let v = self.lookup(lambda, t)?.value;
        Ok((-rate * (self.grid.maturity() - t)).exp() * v)
    }

    /// Largest nodewise `self - other`. Grids must match.
    pub fn max_excess_over(&self, other: &PriceSurface) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleGrids);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Nodewise map of two surfaces on the same grid.
    pub fn zip_map(&self, other: &PriceSurface, f: impl Fn(f64, f64) -> f64) -> Result<PriceSurface> {
        if self.grid != other.grid {
            return Err(Error::IncompatibleGrids);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(PriceSurface::new(self.grid, self.floor, f(self.terminal, other.terminal), values))
    }
}

/// Cell index and fractional weight for coordinate `x >= 0` on a uniform
/// grid with `count` intervals.
fn cell(x: f64, step: f64, count: usize) -> (usize, f64) {
    let s = (x / step).clamp(0.0, count as f64);
    let mut i = s.floor() as usize;
    if i >= count {
        i = count - 1;
    }
    let w = s - i as f64;
    // exact node hits carry zero weight on the far side
    (i, if w.abs() < 1e-12 { 0.0 } else { w.min(1.0) })
}
