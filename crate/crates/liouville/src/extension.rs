//! The harmonic extension Γ of a boundary profile to the upper half-plane,
//! with gradient, Hessian, the even extension Γ̃, and the small-μ
//! asymptotic check.
//!
//! Γ and its derivatives are Poisson-kernel integrals against κ itself (no
//! differentiation of κ is ever needed):
//!
//! ```text
//! Γ(ξ,μ)    = (1/π) ∫ μ/(μ²+t²) κ(ξ+t) dt
//! ∂_ξ Γ     = (1/π) ∫ 2μt/(μ²+t²)² κ(ξ+t) dt
//! ∂_μ Γ     = (1/π) ∫ (t²-μ²)/(μ²+t²)² κ(ξ+t) dt
//! ∂_ξξ Γ    = (1/π) ∫ 2μ(3t²-μ²)/(μ²+t²)³ κ(ξ+t) dt
//! ∂_ξμ Γ    = (1/π) ∫ 2t(t²-3μ²)/(μ²+t²)³ κ(ξ+t) dt
//! ∂_μμ Γ    = -∂_ξξ Γ            (the kernel pair is exactly opposite)
//! ```
//!
//! Each integral is folded onto `t > 0`, evaluated by adaptive quadrature on
//! dyadic panels (robust to the two-scale structure when μ is small and the
//! κ features sit far from ξ), and closed with the analytic contribution of
//! the constant part of κ beyond the quadrature window.

use serde::Serialize;

use crate::conformal::HalfPlanePoint;
use crate::error::{Error, Result};
use crate::halflap::{self, QuadSpec};
use crate::profiles::KappaProfile;
use crate::quad::adaptive_panels;

use std::f64::consts::PI;

#[derive(Clone)]
pub struct ExtensionEvaluator {
    pub profile: KappaProfile,
    sup_kappa: f64,
    /// Base absolute tolerance of the kernel quadratures.
    pub quad_tol: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct GammaJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    /// Fitted log-log slope of the remainder, when above the noise floor.
    pub slope: Option<f64>,
    pub saturated: bool,
    pub half_laplacian: f64,
    /// (μ, |Γ(ξ,μ) - κ(ξ) + μ (-Δ)^{1/2}κ(ξ)|) pairs.
    pub residuals: Vec<(f64, f64)>,
}

impl ExtensionEvaluator {
    pub fn new(profile: KappaProfile) -> Self {
        let sup_kappa = profile.sup_abs();
        Self { profile, sup_kappa, quad_tol: 1e-11 }
    }

    pub fn with_tol(profile: KappaProfile, quad_tol: f64) -> Self {
        let sup_kappa = profile.sup_abs();
        Self { profile, sup_kappa, quad_tol }
    }

    /// Same profile, different quadrature tolerance (cheap scans).
    pub fn relaxed(&self, quad_tol: f64) -> Self {
        Self { profile: self.profile.clone(), sup_kappa: self.sup_kappa, quad_tol }
    }

    fn window(&self, xi: f64, mu: f64) -> f64 {
        // beyond this the constant part of kappa is handled analytically and
        // the decaying part contributes below the quadrature tolerance
        1.0e4 + 10.0 * xi.abs() + 100.0 * mu
    }

    /// One folded kernel integral (1/π) ∫_ℝ K(t) κ(ξ+t) dt.
    fn kernel_integral<K: Fn(f64) -> f64>(
        &self,
        xi: f64,
        kernel: K,
        odd: bool,
        tol: f64,
        window: f64,
        const_tail: f64,
    ) -> f64 {
        let p = &self.profile;
        let g = |t: f64| {
            let k = kernel(t);
            if odd {
                k * (p.eval(xi + t) - p.eval(xi - t))
            } else {
                k * (p.eval(xi + t) + p.eval(xi - t))
            }
        };
        (adaptive_panels(&g, 0.0, window, tol) + const_tail) / PI
    }

    pub fn gamma(&self, p: HalfPlanePoint) -> Result<f64> {
        if p.mu < 0.0 {
            return Err(Error::Domain(format!("mu must be >= 0, got {}", p.mu)));
        }
        if p.mu == 0.0 {
            // continuity down to the boundary: the trace is kappa itself
            return Ok(self.profile.eval(p.xi));
        }
        let (xi, mu) = (p.xi, p.mu);
        let x = self.window(xi, mu);
        let tol = self.quad_tol * (1.0 + self.sup_kappa) * (1.0 + 1.0 / mu);
        let kinf = self.profile.far_limit;
        let v = self.kernel_integral(
            xi,
            |t| mu / (mu * mu + t * t),
            false,
            tol,
            x,
            2.0 * kinf * (mu / x).atan(),
        );
        Ok(v)
    }

    pub fn grad_gamma(&self, p: HalfPlanePoint) -> Result<[f64; 2]> {
        self.check_interior(p)?;
        let (xi, mu) = (p.xi, p.mu);
        let x = self.window(xi, mu);
        let tol = self.quad_tol * (1.0 + self.sup_kappa) * (1.0 + 1.0 / mu);
        let kinf = self.profile.far_limit;
        let gx = self.kernel_integral(
            xi,
            |t| {
                let d = mu * mu + t * t;
                2.0 * mu * t / (d * d)
            },
            true,
            tol,
            x,
            0.0,
        );
        let gm = self.kernel_integral(
            xi,
            |t| {
                let d = mu * mu + t * t;
                (t * t - mu * mu) / (d * d)
            },
            false,
            tol,
            x,
            2.0 * kinf * x / (x * x + mu * mu),
        );
        Ok([gx, gm])
    }

    pub fn hess_gamma(&self, p: HalfPlanePoint) -> Result<[[f64; 2]; 2]> {
        self.check_interior(p)?;
        let (xi, mu) = (p.xi, p.mu);
        let x = self.window(xi, mu);
        let tol = self.quad_tol * (1.0 + self.sup_kappa) * (1.0 + 1.0 / (mu * mu));
        let kinf = self.profile.far_limit;
        let hxx = self.kernel_integral(
            xi,
            |t| {
                let d = mu * mu + t * t;
                2.0 * mu * (3.0 * t * t - mu * mu) / (d * d * d)
            },
            false,
            tol,
            x,
            4.0 * kinf * mu * x / (x * x + mu * mu).powi(2),
        );
        let hxm = self.kernel_integral(
            xi,
            |t| {
                let d = mu * mu + t * t;
                2.0 * t * (t * t - 3.0 * mu * mu) / (d * d * d)
            },
            true,
            tol,
            x,
            0.0,
        );
        Ok([[hxx, hxm], [hxm, -hxx]])
    }

    pub fn jet(&self, p: HalfPlanePoint) -> Result<GammaJet> {
        Ok(GammaJet {
            value: self.gamma(p)?,
            grad: self.grad_gamma(p)?,
            hess: self.hess_gamma(p)?,
        })
    }

    fn check_interior(&self, p: HalfPlanePoint) -> Result<()> {
        if p.mu <= 0.0 {
            return Err(Error::Domain(format!("interior point needed (mu > 0), got mu = {}", p.mu)));
        }
        Ok(())
    }

    /// The even extension Γ̃(ξ, δ) = Γ(ξ, δ²), with κ on the axis δ = 0.
    /// Returns the value and the gradient (∂_ξΓ(ξ,δ²), 2δ ∂_μΓ(ξ,δ²)).
    pub fn gamma_tilde(&self, xi: f64, delta: f64) -> Result<(f64, [f64; 2])> {
        if delta == 0.0 {
            return Ok((self.profile.eval(xi), [self.profile.deriv1(xi), 0.0]));
        }
        let p = HalfPlanePoint::new(xi, delta * delta);
        let v = self.gamma(p)?;
        let g = self.grad_gamma(p)?;
        Ok((v, [g[0], 2.0 * delta * g[1]]))
    }

    /// Log-log slope of |Γ(ξ,μ) - κ(ξ) + μ (-Δ)^{1/2}κ(ξ)| along a decreasing
    /// μ-sequence. Saturates instead of fitting once the remainder falls to
    /// the quadrature floor.
    pub fn asymptotic_check(&self, xi: f64, mus: &[f64]) -> Result<AsymptoticReport> {
        if mus.len() < 2 || mus.windows(2).any(|w| w[1] >= w[0]) || mus.iter().any(|&m| m <= 0.0) {
            return Err(Error::Domain("need a decreasing positive mu sequence".into()));
        }
        let hl = halflap::half_laplacian_point(
            &*self.profile.eval_fn(),
            xi,
            &QuadSpec { tol: 1e-11, ..QuadSpec::default() },
            self.profile.tail_class(),
        )?;
        let kappa = self.profile.eval(xi);
        let floor = 1e-11 * (1.0 + kappa.abs());
        let mut residuals = Vec::with_capacity(mus.len());
        let mut saturated = false;
        for &mu in mus {
            let r = (self.gamma(HalfPlanePoint::new(xi, mu))? - kappa + mu * hl).abs();
            if r < floor {
                saturated = true;
            }
            residuals.push((mu, r));
        }
        let slope = if saturated {
            None
        } else {
            let n = residuals.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for &(mu, r) in &residuals {
                let (x, y) = (mu.ln(), r.ln());
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
        };
        Ok(AsymptoticReport { slope, saturated, half_laplacian: hl, residuals })
    }
}
