//! Finite-difference engine for the price-factor equations.

pub mod grid;
pub mod solver;
pub mod surface;
pub mod tridiag;

pub use grid::{build_grid, Grid1D};
pub use solver::{solve_beta, solve_psi_n, solve_psi_single, solve_survival_factor, PdeCoefficients};
pub use surface::{Lookup, PriceSurface};
pub use tridiag::tridiagonal_solve;
