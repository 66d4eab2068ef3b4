//! Pointwise half-Laplacian quadrature and the weighted sup norms.
//!
//! The operator is evaluated through the symmetric-difference form
//!
//! ```text
//! (-Δ)^{1/2} f(x) = (1/π) ∫_0^∞ (2 f(x) - f(x+t) - f(x-t)) / t²  dt,
//! ```
//!
//! split into three regions:
//!
//! * `[0, δ]`: the integrand tends to `-f″(x)`; a Richardson-extrapolated
//!   second difference supplies the limit and Simpson closes the interval,
//! * `[δ, T]`: adaptive quadrature on dyadic panels,
//! * `[T, ∞)`: either the substitution `t ↦ 1/t` (bounded tails) or the
//!   closed-form integrals of `a log|x| + b` (bubble-type tails).
//!
//! The operator is nonlocal: every caller must say how its function behaves
//! beyond any finite window, hence the mandatory [`TailClass`].

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::quad::{adaptive_panels, gl_integrate};

/// Declared behaviour of a function at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailClass {
    /// f ≡ `value` beyond every finite window.
    Constant { value: f64 },
    /// f approaches `limit` at an algebraic rate (the `c/(1+x²)` model).
    Algebraic { limit: f64 },
    /// f(x) ≈ `a`·log|x| + `b` for large |x|.
    Log { a: f64, b: f64 },
}

/// Quadrature controls for [`half_laplacian_point`].
#[derive(Clone, Copy, Debug)]
pub struct QuadSpec {
    /// Absolute tolerance of the adaptive middle part.
    pub tol: f64,
    /// Local length scale; the inner Taylor radius is `1e-2 × scale`.
    pub scale: f64,
    /// Run the smoothness / boundedness probes before integrating.
    pub probe: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { tol: 1e-9, scale: 1.0, probe: true }
    }
}

/// Evaluate `(-Δ)^{1/2} f` at `x`.
pub fn half_laplacian_point<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    x: f64,
    quad: &QuadSpec,
    tail: TailClass,
) -> Result<f64> {
    let sym2 = |h: f64| (2.0 * f(x) - f(x + h) - f(x - h)) / (h * h);

    if quad.probe {
        // Smoothness: the symmetric second difference of a C^{1,α} function
        // stays bounded as h shrinks; a kink makes it blow up like 1/h.
        let d = [
            sym2(1e-2 * quad.scale).abs(),
            sym2(1e-3 * quad.scale).abs(),
            sym2(1e-4 * quad.scale).abs(),
        ];
        if d[2] > 5.0 * d[1] && d[1] > 5.0 * d[0] && d[2] > 50.0 * (1.0 + d[0]) {
            return Err(Error::NotSmooth { x });
        }
        if !matches!(tail, TailClass::Log { .. }) {
            let probe_scale = quad.scale.max(1.0) + x.abs();
            let far = [
                f(1e3 * probe_scale).abs().max(f(-1e3 * probe_scale).abs()),
                f(1e6 * probe_scale).abs().max(f(-1e6 * probe_scale).abs()),
                f(1e9 * probe_scale).abs().max(f(-1e9 * probe_scale).abs()),
            ];
            if far[2] > 10.0 * far[1] + 10.0 && far[1] > 10.0 * far[0] + 10.0 {
                return Err(Error::UnboundedTail(format!(
                    "|f| grows from {:.3e} to {:.3e} along the tail probes",
                    far[0], far[2]
                )));
            }
        }
    }

    let delta = 1e-2 * quad.scale;
    // g(0) = -f''(x) by Richardson extrapolation of the second difference.
    let g_half = sym2(0.5 * delta);
    let g_full = sym2(delta);
    let g_zero = (4.0 * g_half - g_full) / 3.0;
    let inner = delta / 6.0 * (g_zero + 4.0 * g_half + g_full);

    let g = |t: f64| (2.0 * f(x) - f(x + t) - f(x - t)) / (t * t);
    // The algebraic branches evaluate f itself beyond the cut; the log branch
    // switches to the asymptotic model there, whose error decays like T^-3,
    // so the cut sits much farther out.
    let t_far = match tail {
        TailClass::Log { .. } => 2000.0 * quad.scale.max(1.0) + 50.0 * x.abs(),
        _ => 50.0 * (quad.scale.max(1.0) + x.abs()),
    };
    let middle = adaptive_panels(&g, delta, t_far, 0.5 * quad.tol);

    let far = match tail {
        TailClass::Constant { .. } | TailClass::Algebraic { .. } => {
            // t = 1/u turns ∫_T^∞ g dt into ∫_0^{1/T} (2f(x) - f(x+1/u) - f(x-1/u)) du
            let h = |u: f64| 2.0 * f(x) - f(x + 1.0 / u) - f(x - 1.0 / u);
            let coarse = gl_integrate(&h, 0.0, 1.0 / t_far, 64);
            let fine = gl_integrate(&h, 0.0, 1.0 / t_far, 128);
            if (fine - coarse).abs() > 10.0 * quad.tol.max(1e-12) {
                let finer = gl_integrate(&h, 0.0, 1.0 / t_far, 512);
                if (finer - fine).abs() > 10.0 * quad.tol.max(1e-12) {
                    return Err(Error::QuadratureNoConvergence {
                        achieved: (finer - fine).abs(),
                        wanted: quad.tol,
                    });
                }
                finer
            } else {
                fine
            }
        }
        TailClass::Log { a, b } => {
            // ∫_T^∞ (a log(t ± x) + b)/t² dt in closed form
            2.0 * f(x) / t_far
                - a * (log_tail_integral(x, t_far) + log_tail_integral(-x, t_far))
                - 2.0 * b / t_far
        }
    };

    Ok((inner + middle + far) / std::f64::consts::PI)
}

/// ∫_T^∞ log(t + c)/t² dt  =  log(T+c)/T + (1/c) log(1 + c/T).
fn log_tail_integral(c: f64, t: f64) -> f64 {
    let r = c / t;
    if r.abs() < 1e-6 {
        // series of the removable singularity at c = 0
        (t + c).ln() / t + (1.0 / t) * (1.0 - r / 2.0 + r * r / 3.0)
    } else {
        (t + c).ln() / t + r.ln_1p() / c
    }
}

// ---------------------------------------------------------------------------
// Weighted norms
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormFlavor {
    /// sup (1 + |x-ξ|)^{1+σ} |g(x)|
    Power,
    /// sup |g(x)| / log(2 + |x-ξ|)
    Log,
}

#[derive(Clone, Copy, Debug)]
pub struct WeightedNormSpec {
    pub sigma: f64,
    pub xi: f64,
    pub flavor: NormFlavor,
}

impl WeightedNormSpec {
    pub fn power(sigma: f64, xi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) || sigma == 0.0 {
            return Err(Error::Domain(format!("sigma must lie in (0,1), got {sigma}")));
        }
        Ok(Self { sigma, xi, flavor: NormFlavor::Power })
    }

    pub fn log(xi: f64) -> Self {
        Self { sigma: 0.5, xi, flavor: NormFlavor::Log }
    }

    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        match self.flavor {
            NormFlavor::Power => (1.0 + (x - self.xi).abs()).powf(1.0 + self.sigma),
            NormFlavor::Log => 1.0 / (2.0 + (x - self.xi).abs()).ln(),
        }
    }
}

/// Weighted sup over a graded sampling of `[ξ - range, ξ + range]`.
pub fn weighted_norm_fn<F: Fn(f64) -> f64 + ?Sized>(
    g: &F,
    spec: &WeightedNormSpec,
    range: f64,
    n: usize,
) -> f64 {
    let s_max = range.asinh();
    let mut sup: f64 = 0.0;
    for j in 0..n {
        let s = -s_max + 2.0 * s_max * j as f64 / (n - 1) as f64;
        let x = spec.xi + s.sinh();
        sup = sup.max(spec.weight(x) * g(x).abs());
    }
    sup
}

/// Weighted sup over the nodes of a discrete field.
pub fn weighted_norm_field(field: &DiscreteField, spec: &WeightedNormSpec) -> f64 {
    field
        .grid
        .nodes
        .iter()
        .zip(&field.values)
        .map(|(&x, &v)| spec.weight(x) * v.abs())
        .fold(0.0, f64::max)
}

/// Apply the half-Laplacian at every grid node of a field.
///
/// The off-grid values come from the field's evaluator (exact closure when
/// the field was built from one, cubic interpolation in the grid parameter
/// otherwise) and from the declared tail model; a field without a tail model
/// is rejected because truncating the operator silently changes it.
pub fn half_laplacian_field(field: &DiscreteField) -> Result<DiscreteField> {
    let tail = field.tail_class().ok_or(Error::MissingTail)?;
    let evaluator = field.evaluator()?;
    let grid = field.grid.clone();
    let values = grid
        .nodes
        .iter()
        .map(|&x| {
            let scale = grid.local_scale(x);
            let quad = QuadSpec { tol: 1e-9, scale: scale.min(1.0), probe: false };
            half_laplacian_point(&*evaluator, x, &quad, tail)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteField::new(grid, values, Some(crate::field::Tail::algebraic(0.0))))
}
