//! The explicit bubble family `U_{μ,ξ}(x) = log(2μ/(μ² + (x-ξ)²))`, the
//! kernel elements spanning the bounded kernel of the linearization, the
//! cutoff, and the error / nonlinear terms of the perturbed equation.
//!
//! Sign convention: the error term is defined from the equation itself,
//!
//! ```text
//! E := (-Δ)^{1/2} U - (1 + ε κ) e^U = -ε κ(x) e^U(x),
//! ```
//!
//! so the corrected equation reads `L φ = -E + N(φ)` and the moments satisfy
//! `(∫ E Z₁, ∫ E Z₀) = -2πε ∇Γ(ξ, μ)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{DiscreteField, Grid, Tail};
use crate::halflap::{self, TailClass};
use crate::profiles::{KappaProfile, RealFn};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleParams {
    pub mu: f64,
    pub xi: f64,
}

impl BubbleParams {
    pub fn new(mu: f64, xi: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Domain(format!("bubble scale must be positive, got {mu}")));
        }
        Ok(Self { mu, xi })
    }

    #[inline]
    pub fn u(&self, x: f64) -> f64 {
        let t = x - self.xi;
        (2.0 * self.mu / (self.mu * self.mu + t * t)).ln()
    }

    #[inline]
    pub fn exp_u(&self, x: f64) -> f64 {
        let t = x - self.xi;
        2.0 * self.mu / (self.mu * self.mu + t * t)
    }

    /// Z₀ = ∂_μ U = 1/μ - 2μ/(μ² + (x-ξ)²), even about ξ.
    #[inline]
    pub fn z0(&self, x: f64) -> f64 {
        let t = x - self.xi;
        1.0 / self.mu - 2.0 * self.mu / (self.mu * self.mu + t * t)
    }

    /// Z₁ = ∂_ξ U = 2(x-ξ)/(μ² + (x-ξ)²), odd about ξ.
    #[inline]
    pub fn z1(&self, x: f64) -> f64 {
        let t = x - self.xi;
        2.0 * t / (self.mu * self.mu + t * t)
    }

    pub fn u_fn(&self) -> RealFn {
        let p = *self;
        Arc::new(move |x| p.u(x))
    }

    pub fn exp_u_fn(&self) -> RealFn {
        let p = *self;
        Arc::new(move |x| p.exp_u(x))
    }

    pub fn z0_fn(&self) -> RealFn {
        let p = *self;
        Arc::new(move |x| p.z0(x))
    }

    pub fn z1_fn(&self) -> RealFn {
        let p = *self;
        Arc::new(move |x| p.z1(x))
    }

    /// U sampled on a grid; tail is the exact log form `-2 log|x-ξ| + log 2μ + o(1)`.
    pub fn u_field(&self, grid: Arc<Grid>) -> DiscreteField {
        let p = *self;
        let tail = Tail::with_exact(
            TailClass::Log { a: -2.0, b: (2.0 * self.mu).ln() },
            self.u_fn(),
        );
        DiscreteField::sample(grid, Arc::new(move |x| p.u(x)), tail)
    }

    pub fn exp_u_field(&self, grid: Arc<Grid>) -> DiscreteField {
        let tail = Tail::with_exact(TailClass::Algebraic { limit: 0.0 }, self.exp_u_fn());
        DiscreteField::sample(grid, self.exp_u_fn(), tail)
    }

    pub fn z0_field(&self, grid: Arc<Grid>) -> DiscreteField {
        let tail =
            Tail::with_exact(TailClass::Algebraic { limit: 1.0 / self.mu }, self.z0_fn());
        DiscreteField::sample(grid, self.z0_fn(), tail)
    }

    pub fn z1_field(&self, grid: Arc<Grid>) -> DiscreteField {
        let tail = Tail::with_exact(TailClass::Algebraic { limit: 0.0 }, self.z1_fn());
        DiscreteField::sample(grid, self.z1_fn(), tail)
    }

    /// ∫ e^U over the line: grid quadrature plus the exact arctan tails.
    /// Equals 2π for every (μ, ξ).
    pub fn mass(&self, grid: &Grid) -> f64 {
        let inner = grid.integrate(|x| self.exp_u(x));
        let right = grid.nodes.last().unwrap() - self.xi;
        let left = self.xi - grid.nodes[0];
        inner + 2.0 * ((self.mu / right).atan() + (self.mu / left).atan())
    }
}

// ---------------------------------------------------------------------------
// Cutoff
// ---------------------------------------------------------------------------

/// Even C² cutoff: 1 on [-R̄, R̄], 0 outside (-R̄-1, R̄+1), smoothstep in
/// between.
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    pub rbar: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { rbar: 2.0 }
    }
}

impl CutoffSpec {
    pub fn new(rbar: f64) -> Result<Self> {
        if rbar <= 1.0 {
            return Err(Error::Domain("cutoff plateau radius must exceed 1".into()));
        }
        Ok(Self { rbar })
    }

    /// χ centered at the origin.
    pub fn chi(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.rbar {
            1.0
        } else if a >= self.rbar + 1.0 {
            0.0
        } else {
            let s = a - self.rbar;
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }

    /// χ_ξ = χ(· - ξ).
    pub fn chi_at(&self, x: f64, xi: f64) -> f64 {
        self.chi(x - xi)
    }
}

// ---------------------------------------------------------------------------
// Error and nonlinear terms
// ---------------------------------------------------------------------------

/// E(x) = (-Δ)^{1/2}U - (1+εκ)e^U = -ε κ(x) e^{U_{μ,ξ}}(x).
pub fn error_term(params: &BubbleParams, profile: &KappaProfile, eps: f64, x: f64) -> f64 {
    -eps * profile.eval(x) * params.exp_u(x)
}

pub fn error_field(
    params: &BubbleParams,
    profile: &KappaProfile,
    eps: f64,
    grid: Arc<Grid>,
) -> DiscreteField {
    let (p, k) = (*params, profile.clone());
    let f: RealFn = Arc::new(move |x| error_term(&p, &k, eps, x));
    DiscreteField::sample(grid, f.clone(), Tail::with_exact(TailClass::Algebraic { limit: 0.0 }, f))
}

/// N(φ) = e^U { (e^φ - 1 - φ) + ε κ (e^φ - 1) }, evaluated nodewise.
/// The quadratic/Lipschitz bounds behind the contraction assume ‖φ‖_∞ ≤ 1.
pub fn nonlinear_term(
    params: &BubbleParams,
    profile: &KappaProfile,
    eps: f64,
    phi: &DiscreteField,
) -> Result<DiscreteField> {
    if phi.sup_norm() > 1.0 {
        return Err(Error::Domain(format!(
            "nonlinear term needs sup|phi| <= 1, got {}",
            phi.sup_norm()
        )));
    }
    let values = phi
        .grid
        .nodes
        .iter()
        .zip(&phi.values)
        .map(|(&x, &p)| {
            let e = p.exp();
            params.exp_u(x) * ((e - 1.0 - p) + eps * profile.eval(x) * (e - 1.0))
        })
        .collect();
    Ok(DiscreteField::new(phi.grid.clone(), values, Some(Tail::algebraic(0.0))))
}

/// L_{μ,ξ} φ = (-Δ)^{1/2} φ - e^{U_{μ,ξ}} φ, through the field quadrature.
pub fn apply_l(params: &BubbleParams, phi: &DiscreteField) -> Result<DiscreteField> {
    let hl = halflap::half_laplacian_field(phi)?;
    let values = hl
        .values
        .iter()
        .zip(phi.grid.nodes.iter().zip(&phi.values))
        .map(|(&h, (&x, &v))| h - params.exp_u(x) * v)
        .collect();
    Ok(DiscreteField::new(phi.grid.clone(), values, Some(Tail::algebraic(0.0))))
}
