//! Interpolating cubic splines with not-a-knot end conditions.
//!
//! Not-a-knot makes the third derivative continuous across the second and
//! penultimate knots, so any cubic is reproduced exactly and four points
//! already determine the interpolant.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds the spline through `(xs[i], ys[i])`; `xs` must be strictly
    /// increasing and hold at least four knots.
    pub fn not_a_knot(xs: &[f64], ys: &[f64]) -> Result<Self> {
        check_len(xs.len(), ys.len())?;
        let n = xs.len();
        if n < 4 {
            return Err(Error::TooFewValidLags { required: 4, found: n });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("xs", "knots must be strictly increasing"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} are eliminated with the
        // not-a-knot conditions.
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            sub[j] = h[i - 1];
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            sup[j] = h[i];
            rhs[j] = 6.0 * (d[i] - d[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 + h0 * h0 / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hb + hb * hb / ha;
        sub[k - 1] -= hb * hb / ha;
        let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);

        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = m[1] + h0 / h1 * (m[1] - m[2]);
        m[n - 1] = m[n - 2] + hb / ha * (m[n - 2] - m[n - 3]);
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    /// Evaluates the piecewise cubic; outside the knot range the end
    /// polynomials are continued.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - x, x - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.ys[i] / h - m0 * h / 6.0) * a
            + (self.ys[i + 1] / h - m1 * h / 6.0) * b
    }
}

/// Thomas algorithm; `sub[0]` and `sup[last]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let xs = [0.0, 1.0, 2.5, 3.0, 5.0, 6.0];
        let f = |x: f64| 2.0 * x * x * x - x * x + 0.5 * x - 3.0;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let s = CubicSpline::not_a_knot(&xs, &ys).unwrap();
        for i in 0..=60 {
            let x = i as f64 * 0.1;
            assert!((s.eval(x) - f(x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn four_points_is_the_interpolating_cubic() {
        let xs = [0.0, 1.0, 3.0, 4.0];
        let ys = [0.0, 1.0, 27.0, 64.0];
        let s = CubicSpline::not_a_knot(&xs, &ys).unwrap();
        assert!((s.eval(2.0) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_gap() {
        let xs = [0.0, 1.0, 2.0, 3.0, 5.0, 6.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let s = CubicSpline::not_a_knot(&xs, &ys).unwrap();
        assert!((s.eval(4.0) - 16.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_or_unsorted() {
        assert!(CubicSpline::not_a_knot(&[0.0, 1.0, 2.0], &[0.0; 3]).is_err());
        assert!(CubicSpline::not_a_knot(&[0.0, 2.0, 1.0, 3.0], &[0.0; 4]).is_err());
    }
}
