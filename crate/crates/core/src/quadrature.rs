// SPDX-License-Identifier: Apache-2.0

//! Trapezoidal integration on irregular grids.

/// ∫ y dx over the sample points, which may be in either monotone order.
/// A descending grid yields the same (positive-orientation) value as the
/// ascending one.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let sum: f64 = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum();
    if x.len() >= 2 && x[x.len() - 1] < x[0] {
        -sum
    } else {
        sum
    }
}

/// Linear interpolation of `y(x)` at `at`, for ascending `x`. Returns `None`
/// outside `[x[0], x[n-1]]`.
pub fn interpolate(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let n = x.len();
    if n == 0 || at < x[0] || at > x[n - 1] {
        return None;
    }
    let hi = x.partition_point(|&v| v < at);
    if hi == 0 {
        return Some(y[0]);
    }
    if x[hi.min(n - 1)] == at {
        return Some(y[hi.min(n - 1)]);
    }
    let lo = hi - 1;
    let t = (at - x[lo]) / (x[hi] - x[lo]);
    Some(y[lo] + t * (y[hi] - y[lo]))
}

/// ∫ y dx restricted to `[a, b]` (ascending `x`, `a <= b`), with linear
/// interpolation at the cut points. `None` if the window leaves the grid.
pub fn trapezoid_window(x: &[f64], y: &[f64], a: f64, b: f64) -> Option<f64> {
    let ya = interpolate(x, y, a)?;
    let yb = interpolate(x, y, b)?;
    let mut xs = vec![a];
    let mut ys = vec![ya];
    for (&xi, &yi) in x.iter().zip(y) {
        if xi > a && xi < b {
            xs.push(xi);
            ys.push(yi);
        }
    }
    xs.push(b);
    ys.push(yb);
    Some(trapezoid(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let x = [0.0, 0.3, 1.0, 2.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((trapezoid(&x, &y) - (2.5 * 2.5 + 2.5)).abs() < 1e-14);
        let rx: Vec<f64> = x.iter().rev().copied().collect();
        let ry: Vec<f64> = y.iter().rev().copied().collect();
        assert!((trapezoid(&rx, &ry) - trapezoid(&x, &y)).abs() < 1e-14);
    }

    #[test]
    fn window_cuts_between_samples() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 2.0, 3.0];
        let w = trapezoid_window(&x, &y, 0.5, 2.5).unwrap();
        assert!((w - (2.5f64.powi(2) - 0.25) / 2.0).abs() < 1e-14);
        assert!(trapezoid_window(&x, &y, -0.1, 1.0).is_none());
    }

    #[test]
    fn interpolation_edges() {
        let x = [1.0, 2.0];
        let y = [10.0, 20.0];
        assert_eq!(interpolate(&x, &y, 1.0), Some(10.0));
        assert_eq!(interpolate(&x, &y, 2.0), Some(20.0));
        assert_eq!(interpolate(&x, &y, 1.5), Some(15.0));
        assert_eq!(interpolate(&x, &y, 2.0001), None);
    }
}
