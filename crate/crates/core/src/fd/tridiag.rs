use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-14;

/// Solves a tridiagonal system with the Thomas recurrence.
///
/// `sub` and `sup` have length `n - 1`; `sub[i]` multiplies `x[i]` in row
/// `i + 1` and `sup[i]` multiplies `x[i + 1]` in row `i`.
pub fn tridiagonal_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; diag.len()];
    let mut scratch = vec![0.0; diag.len()];
    tridiagonal_solve_into(sub, diag, sup, rhs, &mut scratch, &mut x)?;
    Ok(x)
}

/// Allocation-free variant used inside the time-stepping loop. `scratch`
/// and `x` must have the length of `diag`.
pub(crate) fn tridiagonal_solve_into(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    scratch: &mut [f64],
    x: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0
        || sub.len() + 1 != n
        || sup.len() + 1 != n
        || rhs.len() != n
        || scratch.len() != n
        || x.len() != n
    {
        return Err(Error::DimensionMismatch);
    }

    // scratch holds the modified super-diagonal c'_i, x the modified rhs d'_i.
    let mut pivot = diag[0];
    if pivot.abs() < PIVOT_EPS {
        return Err(Error::ZeroPivot { row: 0, pivot });
    }
    scratch[0] = if n > 1 { sup[0] / pivot } else { 0.0 };
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * scratch[i - 1];
        if pivot.abs() < PIVOT_EPS {
            return Err(Error::ZeroPivot { row: i, pivot });
        }
        scratch[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= scratch[i] * x[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let p = (col..n)
                .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
                .unwrap();
            a.swap(col, p);
            b.swap(col, p);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    fn densify(sub: &[f64], diag: &[f64], sup: &[f64]) -> Vec<Vec<f64>> {
        let n = diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i + 1 < n {
                a[i][i + 1] = sup[i];
                a[i + 1][i] = sub[i];
            }
        }
        a
    }

    #[test]
    fn identity_system() {
        let x = tridiagonal_solve(&[0.0, 0.0], &[1.0, 1.0, 1.0], &[0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let x = tridiagonal_solve(&[1.0], &[2.0, 2.0], &[1.0], &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_row() {
        assert_eq!(tridiagonal_solve(&[], &[4.0], &[], &[2.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_pivot_reported() {
        let err = tridiagonal_solve(&[1.0], &[0.0, 2.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::ZeroPivot { row: 0, pivot: 0.0 });
        // second pivot: 1 - 1*1/1 = 0
        let err = tridiagonal_solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ZeroPivot { row: 1, .. }));
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            tridiagonal_solve(&[1.0, 1.0], &[2.0, 2.0], &[1.0], &[1.0, 1.0]),
            Err(Error::DimensionMismatch)
        );
        assert_eq!(tridiagonal_solve(&[], &[], &[], &[]), Err(Error::DimensionMismatch));
    }

    #[test]
    fn random_dominant_50_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let sub: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let off = if i > 0 { sub[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { sup[i].abs() } else { 0.0 };
                (off + rng.random_range(0.1..2.0)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x = tridiagonal_solve(&sub, &diag, &sup, &rhs).unwrap();
        let oracle = dense_solve(densify(&sub, &diag, &sup), rhs);
        let max = x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-10, "max abs diff {max}");
    }

    proptest! {
        #[test]
        fn residual_small_for_dominant_systems(
            rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.05f64..3.0, -10.0f64..10.0), 1..40)
        ) {
            let n = rows.len();
            let sub: Vec<f64> = rows.iter().take(n - 1).map(|r| r.0).collect();
            let sup: Vec<f64> = rows.iter().take(n - 1).map(|r| r.1).collect();
            let diag: Vec<f64> = (0..n).map(|i| {
                let off = if i > 0 { sub[i - 1].abs() } else { 0.0 } + if i + 1 < n { sup[i].abs() } else { 0.0 };
                off + rows[i].2
            }).collect();
            let rhs: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let x = tridiagonal_solve(&sub, &diag, &sup, &rhs).unwrap();
            for i in 0..n {
                let mut ax = diag[i] * x[i];
                if i > 0 { ax += sub[i - 1] * x[i - 1]; }
                if i + 1 < n { ax += sup[i] * x[i + 1]; }
                prop_assert!((ax - rhs[i]).abs() < 1e-10);
            }
        }
    }
}
