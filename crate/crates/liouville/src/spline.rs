//! Cubic spline interpolation on a strictly increasing abscissa.
//!
//! Clamped formulation with end slopes taken from one-sided cubic finite
//! differences, which keeps fourth-order accuracy up to the boundary (a
//! natural spline would degrade to O(h²) there).

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// nodal first derivatives
    ms: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::with_end_slopes(xs, ys, one_sided_slope(xs, ys, false), one_sided_slope(xs, ys, true))
    }

    pub fn with_end_slopes(xs: &[f64], ys: &[f64], slope_lo: f64, slope_hi: f64) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::ProfileData("spline needs at least 3 points".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ProfileData("spline abscissa must be strictly increasing".into()));
        }
        // Tridiagonal system for the nodal slopes m_i (Hermite form).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        rhs[0] = slope_lo;
        diag[n - 1] = 1.0;
        rhs[n - 1] = slope_hi;
        for i in 1..n - 1 {
            let hl = xs[i] - xs[i - 1];
            let hr = xs[i + 1] - xs[i];
            sub[i] = 1.0 / hl;
            diag[i] = 2.0 * (1.0 / hl + 1.0 / hr);
            sup[i] = 1.0 / hr;
            rhs[i] = 3.0 * ((ys[i] - ys[i - 1]) / (hl * hl) + (ys[i + 1] - ys[i]) / (hr * hr));
        }
        // Thomas algorithm
        let mut ms = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = sup[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..n {
            let denom = diag[i] - sub[i] * cp[i - 1];
            cp[i] = sup[i] / denom;
            dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / denom;
        }
        ms[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            ms[i] = dp[i] - cp[i] * ms[i + 1];
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), ms })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let d00 = (6.0 * t * t - 6.0 * t) / h;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * t * t - 2.0 * t;
        d00 * self.ys[i] + d10 * self.ms[i] + d01 * self.ys[i + 1] + d11 * self.ms[i + 1]
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let d00 = (12.0 * t - 6.0) / (h * h);
        let d10 = (6.0 * t - 4.0) / h;
        let d01 = -d00;
        let d11 = (6.0 * t - 2.0) / h;
        d00 * self.ys[i] + d10 * self.ms[i] + d01 * self.ys[i + 1] + d11 * self.ms[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Derivative at an endpoint of the cubic through the four nearest samples.
fn one_sided_slope(xs: &[f64], ys: &[f64], right: bool) -> f64 {
    let n = xs.len();
    let idx: [usize; 4] = if right { [n - 4, n - 3, n - 2, n - 1] } else { [0, 1, 2, 3] };
    let x0 = if right { xs[n - 1] } else { xs[0] };
    let mut slope = 0.0;
    for (k, &ik) in idx.iter().enumerate() {
        // derivative of the Lagrange basis L_k at x0
        let mut dsum = 0.0;
        for (m, &im) in idx.iter().enumerate() {
            if m == k {
                continue;
            }
            let mut prod = 1.0;
            for (j, &ij) in idx.iter().enumerate() {
                if j == k || j == m {
                    continue;
                }
                prod *= (x0 - xs[ij]) / (xs[ik] - xs[ij]);
            }
            dsum += prod / (xs[ik] - xs[im]);
        }
        slope += ys[ik] * dsum;
    }
    slope
}
