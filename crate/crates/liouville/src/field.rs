//! Graded grids and discrete fields.
//!
//! Grid nodes follow `x_j = ξ + μ · sinh(s_j)` with `s_j` uniform: dense at
//! the bubble core, algebraically stretched toward the edges. Quadrature
//! weights are the trapezoid rule in the mapped variable `s`, which is
//! spectrally accurate for the smooth, exponentially decaying (in `s`)
//! integrands this crate produces.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::halflap::TailClass;
use crate::profiles::RealFn;
use crate::spline::CubicSpline;

#[derive(Clone, Debug)]
pub struct Grid {
    pub nodes: Vec<f64>,
    /// Quadrature weights for ∫ f dx ≈ Σ w_j f(x_j) over the covered window.
    pub weights: Vec<f64>,
    /// Grading center (the bubble center ξ).
    pub center: f64,
    /// Grading scale (the bubble scale μ).
    pub scale: f64,
    /// Half-width of the covered window: |x - center| ≤ x_max.
    pub x_max: f64,
    s_step: f64,
}

pub const MAX_GRID_NODES: usize = 4000;

impl Grid {
    /// Build a graded grid centered at `xi` with scale `mu`.
    pub fn build(xi: f64, mu: f64, x_max: f64, n: usize) -> Result<Arc<Grid>> {
        if !(mu > 0.0) {
            return Err(Error::GridParam(format!("scale mu must be positive, got {mu}")));
        }
        if n < 16 || n > MAX_GRID_NODES {
            return Err(Error::GridParam(format!(
                "node count must lie in [16, {MAX_GRID_NODES}], got {n}"
            )));
        }
        if x_max < 50.0 * mu {
            return Err(Error::GridParam(format!(
                "x_max = {x_max} too small: need x_max >= 50 mu = {}",
                50.0 * mu
            )));
        }
        if x_max < 4.0 {
            return Err(Error::GridParam(
                "x_max must cover the cutoff support (x_max >= 4)".into(),
            ));
        }
        let s_max = (x_max / mu).asinh();
        let ds = 2.0 * s_max / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let s = -s_max + ds * j as f64;
            nodes.push(xi + mu * s.sinh());
            let c = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            weights.push(c * ds * mu * s.cosh());
        }
        Ok(Arc::new(Grid { nodes, weights, center: xi, scale: mu, x_max, s_step: ds }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Local node spacing near `x`: Δs · sqrt(μ² + (x-ξ)²).
    pub fn local_scale(&self, x: f64) -> f64 {
        let t = x - self.center;
        self.s_step * (self.scale * self.scale + t * t).sqrt()
    }

    /// ∫ f dx over the covered window by the grid rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Grid parameter s of a point inside the window.
    fn s_of(&self, x: f64) -> f64 {
        ((x - self.center) / self.scale).asinh()
    }

    /// Uniform step of the grid parameter.
    pub fn s_step(&self) -> f64 {
        self.s_step
    }
}

/// Far-field behaviour of a discrete field, as a class plus an optional
/// exact closure for off-grid evaluation.
#[derive(Clone)]
pub struct Tail {
    pub class: TailClass,
    exact: Option<RealFn>,
}

impl Tail {
    pub fn constant(value: f64) -> Self {
        Self { class: TailClass::Constant { value }, exact: None }
    }

    pub fn algebraic(limit: f64) -> Self {
        Self { class: TailClass::Algebraic { limit }, exact: None }
    }

    pub fn log(a: f64, b: f64) -> Self {
        Self { class: TailClass::Log { a, b }, exact: None }
    }

    /// Same class, but evaluated through an exact closure.
    pub fn with_exact(class: TailClass, f: RealFn) -> Self {
        Self { class, exact: Some(f) }
    }
}

#[derive(Clone)]
pub struct DiscreteField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub tail: Option<Tail>,
    analytic: Option<RealFn>,
    interp: OnceLock<Arc<CubicSpline>>,
}

impl DiscreteField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, tail: Option<Tail>) -> Self {
        assert_eq!(grid.len(), values.len());
        Self { grid, values, tail, analytic: None, interp: OnceLock::new() }
    }

    /// Sample a closure on the grid, keeping it as the exact evaluator.
    pub fn sample(grid: Arc<Grid>, f: RealFn, tail: Tail) -> Self {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        Self { grid, values, tail: Some(tail), analytic: Some(f), interp: OnceLock::new() }
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self::new(grid, vec![0.0; n], Some(Tail::constant(0.0)))
    }

    pub fn tail_class(&self) -> Option<TailClass> {
        self.tail.as_ref().map(|t| t.class)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫ (field) dx over the grid window.
    pub fn integrate(&self) -> f64 {
        self.grid.weights.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Drop the exact closure, keeping only nodal values (plus tail).
    pub fn values_only(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            tail: self.tail.clone(),
            analytic: None,
            interp: OnceLock::new(),
        }
    }

    /// Restriction to every `step`-th node (used for refinement studies).
    pub fn subsample(&self, step: usize) -> Result<Self> {
        let nodes: Vec<f64> = self.grid.nodes.iter().step_by(step).copied().collect();
        let values: Vec<f64> = self.values.iter().step_by(step).copied().collect();
        let n = nodes.len();
        // trapezoid in the mapped variable, like the parent grid
        let ds = self.grid.s_step * step as f64;
        let (mu, xi) = (self.grid.scale, self.grid.center);
        let weights: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let t = (x - xi) / mu;
                let c = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                c * ds * mu * (1.0 + t * t).sqrt()
            })
            .collect();
        let grid = Arc::new(Grid {
            nodes,
            weights,
            center: self.grid.center,
            scale: self.grid.scale,
            x_max: self.grid.x_max,
            s_step: ds,
        });
        Ok(Self {
            grid,
            values,
            tail: self.tail.clone(),
            analytic: None,
            interp: OnceLock::new(),
        })
    }

    /// A whole-line evaluator: exact closure when available, otherwise cubic
    /// interpolation in the grid parameter glued to the tail model.
    pub fn evaluator(&self) -> Result<RealFn> {
        if let Some(f) = &self.analytic {
            return Ok(f.clone());
        }
        let tail = self.tail.as_ref().ok_or(Error::MissingTail)?;
        let grid = self.grid.clone();
        let spline = self
            .interp
            .get_or_init(|| {
                let ss: Vec<f64> = grid.nodes.iter().map(|&x| grid.s_of(x)).collect();
                Arc::new(CubicSpline::new(&ss, &self.values).expect("grid is strictly increasing"))
            })
            .clone();
        let (x_lo, x_hi) = (grid.nodes[0], *grid.nodes.last().unwrap());
        let (v_lo, v_hi) = (self.values[0], *self.values.last().unwrap());
        let tail_fn: RealFn = if let Some(f) = &tail.exact {
            f.clone()
        } else {
            match tail.class {
                TailClass::Constant { .. } => {
                    // continuous constant extension from the boundary nodes
                    Arc::new(move |x: f64| if x < x_lo { v_lo } else { v_hi })
                }
                TailClass::Algebraic { limit } => {
                    let c = grid.center;
                    let c_lo = (v_lo - limit) * (1.0 + (x_lo - c).powi(2));
                    let c_hi = (v_hi - limit) * (1.0 + (x_hi - c).powi(2));
                    Arc::new(move |x: f64| {
                        let coeff = if x < x_lo { c_lo } else { c_hi };
                        limit + coeff / (1.0 + (x - c).powi(2))
                    })
                }
                TailClass::Log { a, b } => Arc::new(move |x: f64| a * x.abs().ln() + b),
            }
        };
        let grid2 = self.grid.clone();
        Ok(Arc::new(move |x: f64| {
            if x < x_lo || x > x_hi {
                tail_fn(x)
            } else {
                spline.eval(grid2.s_of(x))
            }
        }))
    }
}
