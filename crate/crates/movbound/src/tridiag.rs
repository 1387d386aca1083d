//! Direct solver for symmetric positive-definite tridiagonal systems,
//! shared by the proximal Newton step and the implicit diffusion update.

/// Solves `A y = rhs` in place for symmetric tridiagonal `A` given by its
/// diagonal and (single) off-diagonal, overwriting `rhs` with the solution.
/// `diag` and `off` are consumed as elimination scratch. Positive
/// definiteness makes the elimination stable without pivoting.
pub(crate) fn solve_spd(diag: &mut [f64], off: &mut [f64], rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    debug_assert_eq!(rhs.len(), n);
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_a_dense_solve() {
        // A = tridiag(off: -1, diag: [4,5,6,5,4]); pick y, form rhs = A y,
        // and recover y.
        let diag0 = [4.0, 5.0, 6.0, 5.0, 4.0];
        let off0 = [-1.0, -1.0, -1.0, -1.0];
        let y = [1.0, -2.0, 3.0, 0.5, -0.25];
        let mut rhs = [0.0; 5];
        for i in 0..5 {
            rhs[i] = diag0[i] * y[i];
            if i > 0 {
                rhs[i] += off0[i - 1] * y[i - 1];
            }
            if i < 4 {
                rhs[i] += off0[i] * y[i + 1];
            }
        }
        let mut diag = diag0;
        let mut off = off0;
        solve_spd(&mut diag, &mut off, &mut rhs);
        for i in 0..5 {
            assert_abs_diff_eq!(rhs[i], y[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_nullvector_of_zero_flux_laplacian_is_preserved() {
        // diag = s + k*(adjacency count), off = -k: the constant vector is
        // mapped to s * constant, so solving with rhs = s * c returns c.
        let (s, k, c) = (0.7, 3.0, 2.5);
        let n = 8;
        let mut diag: Vec<f64> = (0..n)
            .map(|i| s + k * if i == 0 || i == n - 1 { 1.0 } else { 2.0 })
            .collect();
        let mut off = vec![-k; n - 1];
        let mut rhs = vec![s * c; n];
        solve_spd(&mut diag, &mut off, &mut rhs);
        for v in rhs {
            assert_abs_diff_eq!(v, c, epsilon = 1e-13);
        }
    }
}
