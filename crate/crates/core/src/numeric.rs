//! Small numerical kernels shared by the PDE solvers.

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]`, `diag[i]`, `upper[i]` hold the coefficients of row `i`
/// (`lower[0]` and `upper[n-1]` are ignored). `rhs` is overwritten with the
/// solution. Returns `false` if a pivot degenerates.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> bool {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return true;
    }
    let mut c_prime = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return false;
    }
    c_prime[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c_prime[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return false;
        }
        c_prime[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    true
}

/// Linear interpolation on a strictly increasing breakpoint grid.
///
/// Clamps outside the domain and reports whether extrapolation occurred.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> (f64, bool) {
    debug_assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len();
    if x <= xs[0] {
        return (ys[0], x < xs[0]);
    }
    if x >= xs[n - 1] {
        return (ys[n - 1], x > xs[n - 1]);
    }
    // partition_point returns the first index with xs[idx] > x
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    (ys[lo] + w * (ys[hi] - ys[lo]), false)
}

/// Least-squares slope of `y` against `x`. Returns 0 for fewer than 2 points
/// or a degenerate abscissa.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Trapezoidal integral of samples `y` over abscissa `x`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    acc
}

/// Pearson correlation coefficient; returns `None` when either column has
/// zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let ma = a.iter().sum::<f64>() / nf;
    let mb = b.iter().sum::<f64>() / nf;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for i in 0..n {
        let da = a[i] - ma;
        let db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tridiagonal_matches_dense_solve() {
        // -u'' = 1 on 5 nodes, Dirichlet ends folded into the rhs
        let n = 5;
        let lower = vec![-1.0; n];
        let diag = vec![2.0; n];
        let upper = vec![-1.0; n];
        let mut rhs = vec![1.0; n];
        assert!(solve_tridiagonal(&lower, &diag, &upper, &mut rhs));
        // verify residual A x = b
        for i in 0..n {
            let mut ax = 2.0 * rhs[i];
            if i > 0 {
                ax -= rhs[i - 1];
            }
            if i < n - 1 {
                ax -= rhs[i + 1];
            }
            assert_relative_eq!(ax, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tridiagonal_detects_singular() {
        let mut rhs = vec![1.0, 1.0];
        assert!(!solve_tridiagonal(
            &[0.0, 0.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
            &mut rhs
        ));
    }

    #[test]
    fn interpolation_clamps_and_flags() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 10.0, 40.0];
        assert_eq!(interp_clamped(&xs, &ys, 0.5), (5.0, false));
        assert_eq!(interp_clamped(&xs, &ys, 1.5), (25.0, false));
        assert_eq!(interp_clamped(&xs, &ys, -1.0), (0.0, true));
        assert_eq!(interp_clamped(&xs, &ys, 3.0), (40.0, true));
    }

    #[test]
    fn slope_of_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|&v| 2.5 * v - 1.0).collect();
        assert_relative_eq!(ls_slope(&x, &y), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn pearson_degenerate_is_none() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_none());
        let r = pearson(&[0.0, 1.0, 2.0], &[0.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
    }
}
