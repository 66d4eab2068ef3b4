//! The numerical Lyapunov–Schmidt engine.
//!
//! The projected linear problem
//!
//! ```text
//! L_{μ,ξ} φ = g + d₀ χ_ξ Z₀ + d₁ χ_ξ Z₁,     ∫ φ χ_ξ Z_i dx = 0,
//! ```
//!
//! is discretized by collocation. Each interior row splits the singular
//! integral at a window around its node: inside the window the local
//! quadratic through (j-1, j, j+1) is integrated against the kernel in
//! closed form (its principal value is `-q₁ log(W₊/W₋) - q₂ (W₊+W₋)/2`) and
//! only the quadratic-remainder of φ is integrated against the
//! piecewise-linear interpolant; outside, the kernel is integrated exactly
//! against the interpolant and the constant tail. Without the window
//! correction the kernel-exact interpolant collocation is only first-order
//! accurate at s = 1/2; with it the consistency is second order up to logs,
//! which the reduced-parameter accuracy (and the Pohozaev identities
//! downstream) genuinely need. Rows still sum to zero on constants,
//! preserving the maximum-principle structure of the continuous operator.
//!
//! The outer solve drives the multipliers (d₀, d₁) to zero in (ξ, μ) with a
//! Broyden-updated Newton whose initial Jacobian comes from D²Γ — the
//! multiplier map is a perturbation of -2πε ∇Γ.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::{self, BubbleParams, CutoffSpec};
use crate::conformal::HalfPlanePoint;
use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::field::{DiscreteField, Grid, Tail};
use crate::halflap::{self, QuadSpec, TailClass, WeightedNormSpec};

pub use crate::field::MAX_GRID_NODES;

/// Half-width of the local-model window, as a fraction of the local length
/// scale sqrt(mu^2 + (x-xi)^2), capped in node count so the locally fitted
/// polynomial is never extrapolated across distant features.
const WINDOW_FRACTION: f64 = 1.0;
const WINDOW_MAX_NODES: usize = 12;

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig {
    pub sigma: f64,
    pub x_max: f64,
    pub n: usize,
    /// Largest ε the inner iteration accepts before refusing outright.
    pub eps_max: f64,
    pub rbar: f64,
    /// Sup-norm increment at which the inner Picard iteration stops.
    pub inner_tol: f64,
    /// |d|_∞ at which the outer Newton stops.
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            x_max: 3e4,
            n: 2000,
            eps_max: 0.05,
            rbar: 2.0,
            inner_tol: 1e-10,
            outer_tol: 1e-10,
            max_inner: 30,
            max_outer: 40,
        }
    }
}

/// Build the graded solver grid for given bubble parameters.
pub fn build_grid(params: &BubbleParams, x_max: f64, n: usize) -> Result<Arc<Grid>> {
    Grid::build(params.xi, params.mu, x_max, n)
}

/// One collocation row of the discrete half-Laplacian.
///
/// The local model around node j is the polynomial interpolating φ on the
/// stencil j-w..j+w (quartic when two neighbours exist per side, quadratic
/// at the first interior nodes); its kernel principal value over the window
/// is closed-form, the polynomial remainder of φ is integrated against the
/// hat interpolant, and everything outside the window plus the constant
/// tails is kernel-exact against the hats.
fn hl_row(nodes: &[f64], center: f64, j: usize, m_target: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut row = vec![0.0; n];
    if j == 0 || j == n - 1 {
        // tail closure: the boundary node sits on the A + B/(x-ξ) model
        // fitted through its two inner neighbours
        let (i0, i1, i2) = if j == 0 { (0, 1, 2) } else { (n - 1, n - 2, n - 3) };
        let z0 = nodes[i0] - center;
        let z1 = nodes[i1] - center;
        let z2 = nodes[i2] - center;
        let ratio = (1.0 / z0 - 1.0 / z1) / (1.0 / z1 - 1.0 / z2);
        row[i0] = 1.0;
        row[i1] = -1.0 - ratio;
        row[i2] = ratio;
        return row;
    }
    let x = nodes[j];
    let mw = m_target.max(2).min(j).min(n - 1 - j);
    let (lo, hi) = (j - mw, j + mw);
    let hm = x - nodes[j - 1];
    let hp = nodes[j + 1] - x;
    let delta = 1e-2 * hm.min(hp);

    // Local polynomial model Q(x+t) = phi_j + sum_i c_i t^i/i! interpolating
    // the stencil; deg = 2w with w = 2 where possible.
    let w = mw.min(2);
    let deg = 2 * w;
    let offsets: Vec<i64> = (-(w as i64)..=w as i64).filter(|&o| o != 0).collect();
    // solve the (deg x deg) system for the c_i as linear maps of the stencil
    let mut a = vec![vec![0.0; deg]; deg];
    for (r, &o) in offsets.iter().enumerate() {
        let t = nodes[(j as i64 + o) as usize] - x;
        let mut fact = 1.0;
        let mut pw = 1.0;
        for (c, slot) in a[r].iter_mut().enumerate() {
            pw *= t;
            fact *= (c + 1) as f64;
            *slot = pw / fact;
        }
    }
    // c_coeffs[i][s]: coefficient of phi at stencil offset s (including the
    // center) in c_{i+1}; rhs of row r is phi_{j+o_r} - phi_j
    let inv = invert_small(&a);
    // kernel principal values of t^i/i! over [-W-, W+]
    let w_minus = x - nodes[lo];
    let w_plus = nodes[hi] - x;
    let pv = [
        -(w_plus / w_minus).ln(),
        -0.5 * (w_plus + w_minus),
        -(w_plus * w_plus - w_minus * w_minus) / 12.0,
        -(w_plus.powi(3) + w_minus.powi(3)) / 72.0,
    ];
    // model contribution: sum_i c_i pv_i, with the center collecting minus
    // the stencil weights (the c_i are differences against phi_j)
    for (r, &o) in offsets.iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..deg {
            acc += inv[i][r] * pv[i];
        }
        let q = (j as i64 + o) as usize;
        row[q] += acc;
        row[j] -= acc;
    }

    // Polynomial remainder r = phi - Q against the hat interpolant inside
    // the window. r vanishes on the stencil, so the adjacent segments only
    // carry their outer linear pieces (the delta sliver is covered exactly
    // by the model part).
    let mut beta = vec![0.0; 2 * mw + 1];
    for k in lo..hi {
        if k == j - 1 || k == j {
            if k == j {
                beta[j + 1 - lo] -= (hp / delta).ln() / hp;
            } else {
                beta[j - 1 - lo] -= (hm / delta).ln() / hm;
            }
            continue;
        }
        let a1 = nodes[k] - x;
        let b1 = nodes[k + 1] - x;
        let h = b1 - a1;
        let r = h / a1;
        let lr = r.ln_1p();
        beta[k - lo] += (lr - r) / h;
        beta[k + 1 - lo] += (r / (1.0 + r) - lr) / h;
    }
    // expand r_k = phi_k - Q(x_k)
    for (off, &bk) in beta.iter().enumerate() {
        if bk == 0.0 {
            continue;
        }
        let k = lo + off;
        let dx = nodes[k] - x;
        row[k] += bk;
        row[j] -= bk;
        // minus the polynomial part of Q at x_k
        let mut pw = 1.0;
        let mut fact = 1.0;
        for i in 0..deg {
            pw *= dx;
            fact *= (i + 1) as f64;
            let basis = pw / fact;
            for (r, &o) in offsets.iter().enumerate() {
                let q = (j as i64 + o) as usize;
                row[q] -= bk * basis * inv[i][r];
                row[j] += bk * basis * inv[i][r];
            }
        }
    }

    // outside the window: exact kernel integrals against the hat
    // interpolant of phi, plus the midpoint correction for the hat error
    // (∫ (phi - phi_h) K ≈ -(h³/12) phi″ K at the segment midpoint)
    for k in 0..n - 1 {
        if k >= lo && k < hi {
            continue;
        }
        let a1 = nodes[k] - x;
        let b1 = nodes[k + 1] - x;
        let h = b1 - a1;
        let r = h / a1;
        let lr = r.ln_1p();
        row[j] += h / (a1 * b1);
        row[k] += (lr - r) / h;
        row[k + 1] += (r / (1.0 + r) - lr) / h;
        if k >= 1 && k + 2 < n {
            let t_mid = 0.5 * (a1 + b1);
            let corr = h.powi(3) / (12.0 * t_mid * t_mid);
            // phi″ at the midpoint from the averaged nodal second differences
            for (node, sc) in [(k, 0.5), (k + 1, 0.5)] {
                let hl2 = nodes[node] - nodes[node - 1];
                let hr2 = nodes[node + 1] - nodes[node];
                let c = 2.0 * sc / (hl2 + hr2);
                row[node - 1] += corr * c / hl2;
                row[node] -= corr * c * (1.0 / hl2 + 1.0 / hr2);
                row[node + 1] += corr * c / hr2;
            }
        }
    }
    // tails beyond the grid: phi(y) = A + B/(y-ξ), fitted per side through
    // the outermost node pair
    {
        // right side
        let u_r = nodes[n - 1] - x;
        let c = x - center;
        let s0 = 1.0 / u_r;
        let t1 = inv_tail_integral(c, u_r);
        let (za, zb) = (nodes[n - 1] - center, nodes[n - 2] - center);
        let bcoef = 1.0 / (1.0 / za - 1.0 / zb);
        // phi_j S0 - A S0 - B T1 with A = phi_{n-1} - B/za, B = bcoef (phi_{n-1} - phi_{n-2})
        row[j] += s0;
        row[n - 1] -= s0;
        let w = bcoef * (s0 / za - t1);
        row[n - 1] += w;
        row[n - 2] -= w;
    }
    {
        // left side
        let u_l = x - nodes[0];
        let c = x - center;
        let s0 = 1.0 / u_l;
        // ∫_{-∞}^{x_lo} dy/((y-ξ)(y-x)²) = -F(-c, U_L)
        let t1 = -inv_tail_integral(-c, u_l);
        let (za, zb) = (nodes[0] - center, nodes[1] - center);
        let bcoef = 1.0 / (1.0 / za - 1.0 / zb);
        row[j] += s0;
        row[0] -= s0;
        let w = bcoef * (s0 / za - t1);
        row[0] += w;
        row[1] -= w;
    }

    for v in row.iter_mut() {
        *v /= PI;
    }
    row
}

/// F(c, U) = ∫_U^∞ du / ((u+c) u²) = 1/(cU) - log(1 + c/U)/c².
fn inv_tail_integral(c: f64, u: f64) -> f64 {
    let r = c / u;
    if r.abs() < 1e-6 {
        (0.5 - r / 3.0 + r * r / 4.0) / (u * u)
    } else {
        1.0 / (c * u) - r.ln_1p() / (c * c)
    }
}

/// Far-field model of a solved correction: A + B/(x-ξ) per side, fitted
/// through the outermost node pair (matching the matrix tail treatment).
pub(crate) fn phi_tail(grid: &Grid, values: &[f64]) -> Tail {
    let n = values.len();
    let c = grid.center;
    let (xl0, xl1) = (grid.nodes[0] - c, grid.nodes[1] - c);
    let bl = (values[0] - values[1]) / (1.0 / xl0 - 1.0 / xl1);
    let al = values[0] - bl / xl0;
    let (xr0, xr1) = (grid.nodes[n - 1] - c, grid.nodes[n - 2] - c);
    let br = (values[n - 1] - values[n - 2]) / (1.0 / xr0 - 1.0 / xr1);
    let ar = values[n - 1] - br / xr0;
    let x_lo = grid.nodes[0];
    let f: crate::profiles::RealFn = std::sync::Arc::new(move |x: f64| {
        if x < x_lo {
            al + bl / (x - c)
        } else {
            ar + br / (x - c)
        }
    });
    Tail::with_exact(TailClass::Algebraic { limit: 0.5 * (al + ar) }, f)
}

/// Inverse of a small dense matrix by Gauss-Jordan with partial pivoting.
fn invert_small(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut full = r.clone();
            full.extend((0..n).map(|k| if k == i { 1.0 } else { 0.0 }));
            full
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    // right block, indexed [coeff][stencil-row]
    (0..n).map(|i| (0..n).map(|r| m[i][n + r]).collect()).collect()
}

// ---------------------------------------------------------------------------
// Projected linear solver
// ---------------------------------------------------------------------------

pub struct ProjectedSolver {
    pub params: BubbleParams,
    pub grid: Arc<Grid>,
    pub chi: CutoffSpec,
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// ⟨χ_ξ Z_i²⟩ under the grid quadrature.
    pub norm_z0: f64,
    pub norm_z1: f64,
}

#[derive(Clone)]
pub struct ProjectedSolve {
    pub phi: DiscreteField,
    pub d0: f64,
    pub d1: f64,
    pub ortho_residuals: [f64; 2],
    pub linear_residual: f64,
    pub iterations: usize,
}

impl ProjectedSolver {
    pub fn new(params: BubbleParams, grid: Arc<Grid>, chi: CutoffSpec) -> Result<Self> {
        let n = grid.len();
        let nodes = &grid.nodes;
        let dim = n + 2;

        let chi_z0: Vec<f64> =
            nodes.iter().map(|&x| chi.chi_at(x, params.xi) * params.z0(x)).collect();
        let chi_z1: Vec<f64> =
            nodes.iter().map(|&x| chi.chi_at(x, params.xi) * params.z1(x)).collect();
        let norm_z0 = grid.weights.iter().zip(&chi_z0).zip(nodes)
            .map(|((w, cz), &x)| w * cz * params.z0(x))
            .sum::<f64>();
        let norm_z1 = grid.weights.iter().zip(&chi_z1).zip(nodes)
            .map(|((w, cz), &x)| w * cz * params.z1(x))
            .sum::<f64>();

        // half-Laplacian rows (interior collocation, closure rows at the ends)
        let m_target = ((WINDOW_FRACTION / grid.s_step()).round() as usize).min(WINDOW_MAX_NODES);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| hl_row(nodes, grid.center, j, m_target))
            .collect();

        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (j, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                m[(j, k)] = v;
            }
        }
        // potential term and multiplier columns on interior rows
        for j in 1..n - 1 {
            m[(j, j)] -= params.exp_u(nodes[j]);
            m[(j, n)] = -chi_z0[j];
            m[(j, n + 1)] = -chi_z1[j];
        }
        // orthogonality rows
        for k in 0..n {
            m[(n, k)] = grid.weights[k] * chi_z0[k];
            m[(n + 1, k)] = grid.weights[k] * chi_z1[k];
        }

        let lu = nalgebra::LU::new(m.clone());
        // the determinant of a large system under/overflows; check pivots
        let u = lu.u();
        if (0..dim).any(|i| u[(i, i)] == 0.0) {
            return Err(Error::SingularSystem);
        }
        Ok(Self { params, grid, chi, matrix: m, lu, norm_z0, norm_z1 })
    }

    /// Apply the discrete half-Laplacian rows to nodal values (diagnostics).
    pub fn apply_halflap(&self, values: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.matrix[(j, k)] * values[k];
                }
                // undo the potential part on interior rows
                if j > 0 && j < n - 1 {
                    acc += self.params.exp_u(self.grid.nodes[j]) * values[j];
                }
                acc
            })
            .collect()
    }

    /// Solve the bordered system for a right-hand side given at the nodes.
    pub fn solve(&self, g: &[f64]) -> Result<ProjectedSolve> {
        let n = self.grid.len();
        assert_eq!(g.len(), n);
        let mut rhs = DVector::<f64>::zeros(n + 2);
        for j in 1..n - 1 {
            rhs[j] = g[j];
        }
        let sol = self.lu.solve(&rhs).ok_or(Error::SingularSystem)?;
        let phi_values: Vec<f64> = sol.as_slice()[..n].to_vec();
        let d0 = sol[n];
        let d1 = sol[n + 1];

        let resid = &self.matrix * &sol - &rhs;
        let linear_residual =
            resid.as_slice()[1..n - 1].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let ortho_residuals = [resid[n].abs(), resid[n + 1].abs()];

        let phi = DiscreteField::new(
            self.grid.clone(),
            phi_values.clone(),
            Some(phi_tail(&self.grid, &phi_values)),
        );
        Ok(ProjectedSolve { phi, d0, d1, ortho_residuals, linear_residual, iterations: 1 })
    }

    /// Raw Z-moment ∫ v Z_i dx under the grid quadrature (the cutoff enters
    /// only the orthogonality structure, not the reduced map).
    fn moment(&self, values: &[f64], which: usize) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(values)
            .zip(&self.grid.nodes)
            .map(|((w, v), &x)| {
                let z = if which == 0 { self.params.z0(x) } else { self.params.z1(x) };
                w * v * z
            })
            .sum()
    }
}

/// Fixed point of `φ ↦ L⁻¹(-E + N(φ))` starting from φ = 0.
pub fn contraction_solve(
    solver: &ProjectedSolver,
    profile: &crate::profiles::KappaProfile,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<ProjectedSolve> {
    if eps < 0.0 || eps > cfg.eps_max {
        return Err(Error::EpsTooLarge { eps });
    }
    let grid = &solver.grid;
    let n = grid.len();
    let minus_e: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&x| -bubbles::error_term(&solver.params, profile, eps, x))
        .collect();

    let mut phi = DiscreteField::zero(grid.clone());
    let mut prev_increment = f64::INFINITY;
    let mut worse_count = 0;
    let mut last: Option<ProjectedSolve> = None;
    for iter in 1..=cfg.max_inner {
        let nl = bubbles::nonlinear_term(&solver.params, profile, eps, &phi)?;
        let rhs: Vec<f64> = (0..n).map(|j| minus_e[j] + nl.values[j]).collect();
        let mut sol = solver.solve(&rhs)?;
        let increment = sol
            .phi
            .values
            .iter()
            .zip(&phi.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        phi = sol.phi.clone();
        sol.iterations = iter;
        let done = increment < cfg.inner_tol;
        last = Some(sol);
        if done {
            return Ok(last.unwrap());
        }
        if increment >= prev_increment {
            worse_count += 1;
            if worse_count >= 3 {
                return Err(Error::EpsTooLarge { eps });
            }
        } else {
            worse_count = 0;
        }
        prev_increment = increment;
    }
    let last = last.unwrap();
    Err(Error::NoConvergence { iters: cfg.max_inner, grad_norm: last.d0.abs().max(last.d1.abs()) })
}

/// Reduced-equation residual: ∇Γ(ξ,μ) + (1/2πε)(∫ N(φ) Z₁, ∫ N(φ) Z₀).
/// Its zero is equivalent to d₀ = d₁ = 0; for ε = 0 it degenerates to ∇Γ.
pub fn reduced_gradient(
    ev: &ExtensionEvaluator,
    solver: &ProjectedSolver,
    eps: f64,
    solve: &ProjectedSolve,
) -> Result<[f64; 2]> {
    let p = HalfPlanePoint::new(solver.params.xi, solver.params.mu);
    let grad = ev.grad_gamma(p)?;
    if eps == 0.0 {
        return Ok(grad);
    }
    let nl = bubbles::nonlinear_term(&solver.params, &ev.profile, eps, &solve.phi)?;
    let m1 = solver.moment(&nl.values, 1);
    let m0 = solver.moment(&nl.values, 0);
    let c = 1.0 / (2.0 * PI * eps);
    Ok([grad[0] + c * m1, grad[1] + c * m0])
}

// ---------------------------------------------------------------------------
// Outer solve
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    /// Catalog key when launched from the CLI (kept for reproduction).
    pub profile_key: Option<String>,
    pub eps: f64,
    pub xi_eps: f64,
    pub mu_eps: f64,
    pub d0: f64,
    pub d1: f64,
    pub phi_sup: f64,
    /// σ-weighted sup of the PDE residual on the verification grid.
    pub pde_residual: f64,
    pub residual_floor: f64,
    pub certified: bool,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// |∇Γ(ξ_ε, μ_ε)| at the converged parameters.
    pub grad_gamma_norm: f64,
    pub reduced_gradient: [f64; 2],
    pub sigma: f64,
    pub x_max: f64,
    pub n: usize,
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SolveReport {
    pub fn bubble(&self) -> BubbleParams {
        BubbleParams { mu: self.mu_eps, xi: self.xi_eps }
    }

    /// Rebuild the φ field (values + fitted far-field model) from the
    /// stored nodes.
    pub fn phi_field(&self) -> Result<DiscreteField> {
        let grid = Grid::build(self.xi_eps, self.mu_eps, self.x_max, self.n)?;
        if grid.len() != self.nodes.len() {
            return Err(Error::Domain("report node count mismatch".into()));
        }
        let tail = phi_tail(&grid, &self.phi);
        Ok(DiscreteField::new(grid, self.phi.clone(), Some(tail)))
    }
}

struct OuterState {
    solver: ProjectedSolver,
    solve: ProjectedSolve,
}

fn eval_multipliers(
    profile: &crate::profiles::KappaProfile,
    p: HalfPlanePoint,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<OuterState> {
    let params = BubbleParams::new(p.mu, p.xi)?;
    let grid = build_grid(&params, cfg.x_max, cfg.n)?;
    let solver = ProjectedSolver::new(params, grid, CutoffSpec { rbar: cfg.rbar })?;
    let solve = contraction_solve(&solver, profile, eps, cfg)?;
    Ok(OuterState { solver, solve })
}

/// Newton (Broyden-updated) outer iteration on the multiplier map
/// (ξ, μ) ↦ (d₁, d₀), confined to the √ε ball around the seed.
pub fn outer_solve(
    ev: &ExtensionEvaluator,
    eps: f64,
    seed: HalfPlanePoint,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    if eps < 0.0 || eps > cfg.eps_max {
        return Err(Error::EpsTooLarge { eps });
    }
    let ball = eps.sqrt().max(1e-6);
    let profile = &ev.profile;

    let mut state = eval_multipliers(profile, seed, eps, cfg)?;
    // initial Jacobian of (d1, d0) wrt (xi, mu): -2 pi eps D^2 Gamma, row-scaled
    let hess = ev.hess_gamma(seed)?;
    let c = -2.0 * PI * eps;
    let mut jac = [
        [c * hess[0][0] / state.solver.norm_z1, c * hess[0][1] / state.solver.norm_z1],
        [c * hess[1][0] / state.solver.norm_z0, c * hess[1][1] / state.solver.norm_z0],
    ];

    let mut p = seed;
    let mut f = [state.solve.d1, state.solve.d0];
    let mut outer_iters = 0;
    let mut converged = eps == 0.0 || f[0].abs().max(f[1].abs()) < cfg.outer_tol;

    while !converged && outer_iters < cfg.max_outer {
        outer_iters += 1;
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::DegenerateStep { det });
        }
        let mut step = [
            (-f[0] * jac[1][1] + f[1] * jac[0][1]) / det,
            (-jac[0][0] * f[1] + jac[1][0] * f[0]) / det,
        ];
        // keep mu positive
        let mut lambda = 1.0;
        while p.mu + lambda * step[1] <= 0.0 {
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::BoundaryEscape { mu: p.mu });
            }
        }
        step[0] *= lambda;
        step[1] *= lambda;
        let p_new = HalfPlanePoint::new(p.xi + step[0], p.mu + step[1]);
        let dist = ((p_new.xi - seed.xi).powi(2) + (p_new.mu - seed.mu).powi(2)).sqrt();
        if dist > ball {
            return Err(Error::OuterDiverged);
        }
        let state_new = eval_multipliers(profile, p_new, eps, cfg)?;
        let f_new = [state_new.solve.d1, state_new.solve.d0];
        // Broyden rank-1 update
        let dp = step;
        let dp2 = dp[0] * dp[0] + dp[1] * dp[1];
        if dp2 > 0.0 {
            let df = [f_new[0] - f[0], f_new[1] - f[1]];
            let jdp = [
                jac[0][0] * dp[0] + jac[0][1] * dp[1],
                jac[1][0] * dp[0] + jac[1][1] * dp[1],
            ];
            for r in 0..2 {
                for c2 in 0..2 {
                    jac[r][c2] += (df[r] - jdp[r]) * dp[c2] / dp2;
                }
            }
        }
        p = p_new;
        f = f_new;
        state = state_new;
        converged = f[0].abs().max(f[1].abs()) < cfg.outer_tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            iters: outer_iters,
            grad_norm: f[0].abs().max(f[1].abs()),
        });
    }

    let grad = ev.grad_gamma(p)?;
    let rg = reduced_gradient(ev, &state.solver, eps, &state.solve)?;
    let cert = residual_certificate(&state.solver.params, profile, eps, &state.solve.phi, cfg)?;

    Ok(SolveReport {
        profile_key: None,
        eps,
        xi_eps: p.xi,
        mu_eps: p.mu,
        d0: state.solve.d0,
        d1: state.solve.d1,
        phi_sup: state.solve.phi.sup_norm(),
        pde_residual: cert.residual,
        residual_floor: cert.floor,
        certified: cert.certified,
        outer_iters,
        inner_iters: state.solve.iterations,
        grad_gamma_norm: (grad[0] * grad[0] + grad[1] * grad[1]).sqrt(),
        reduced_gradient: rg,
        sigma: cfg.sigma,
        x_max: cfg.x_max,
        n: cfg.n,
        nodes: state.solver.grid.nodes.clone(),
        phi: state.solve.phi.values.clone(),
    })
}

// ---------------------------------------------------------------------------
// Residual certification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certificate {
    /// σ-weighted sup of the residual on the verification grid.
    pub residual: f64,
    /// Weighted sup over the core region |x-ξ| ≤ x_max/10, where the
    /// discretization of the solve dominates and refinement bites.
    pub residual_inner: f64,
    /// Same residuals for a re-solve on half the nodes (refinement probe).
    pub residual_coarse: f64,
    pub residual_coarse_inner: f64,
    pub floor: f64,
    pub certified: bool,
}

/// Evaluate `(-Δ)^{1/2}u - (1+εκ)e^u`, `u = U + φ`, on an independent twice-
/// finer grid with fresh quadrature.
///
/// The floor combines three irreducible contributions: the quadrature noise,
/// a refinement estimate of the discretization error (obtained by re-solving
/// the projected problem on half the nodes), and the footprint of the
/// constant-at-infinity tail model of φ, which is `w(x) e^U(x) |φ_∞|` in the
/// far field and does not shrink under grid refinement. Failing the 10×
/// margin marks the report uncertified instead of erroring.
pub fn residual_certificate(
    params: &BubbleParams,
    profile: &crate::profiles::KappaProfile,
    eps: f64,
    phi: &DiscreteField,
    cfg: &SolverConfig,
) -> Result<Certificate> {
    let spec = WeightedNormSpec::power(cfg.sigma, params.xi)?;
    let n_ver = (2 * cfg.n).min(MAX_GRID_NODES);
    let ver = Grid::build(params.xi, params.mu, cfg.x_max, n_ver)?;
    // core region where the solve discretization dominates; beyond it the
    // declared far-field model of phi sets the systematic level
    let inner_radius = (100.0 * params.mu.max(1.0)).min(cfg.x_max / 4.0);

    let (full, full_inner) =
        weighted_residual(params, profile, eps, &phi.values_only(), &ver, &spec, inner_radius)?;

    // refinement probe: the same projected solve on half the nodes
    let coarse_cfg = SolverConfig { n: (cfg.n / 2).max(100), ..*cfg };
    let coarse_grid = build_grid(params, cfg.x_max, coarse_cfg.n)?;
    let coarse_solver =
        ProjectedSolver::new(*params, coarse_grid, CutoffSpec { rbar: cfg.rbar })?;
    let coarse_phi = contraction_solve(&coarse_solver, profile, eps, &coarse_cfg)?.phi;
    let (coarse, coarse_inner) =
        weighted_residual(params, profile, eps, &coarse_phi, &ver, &spec, inner_radius)?;

    // quadrature-noise scale of the forcing term
    let mut scale = 0.0_f64;
    // tail-model footprint: weighted e^U over the outer region
    let mut tail_weight = 0.0_f64;
    for &x in &ver.nodes {
        let w = spec.weight(x);
        scale = scale.max(w * ((1.0 + eps * profile.eval(x)) * params.exp_u(x)));
        if (x - params.xi).abs() >= inner_radius {
            tail_weight = tail_weight.max(w * params.exp_u(x));
        }
    }
    let phi_far = 0.5 * (phi.values[0] + phi.values[phi.values.len() - 1]).abs();
    let floor = (1e-8 * scale)
        .max((coarse_inner - full_inner).max(0.0) / 3.0)
        .max(tail_weight * phi_far);
    Ok(Certificate {
        residual: full,
        residual_inner: full_inner,
        residual_coarse: coarse,
        residual_coarse_inner: coarse_inner,
        floor,
        certified: full <= 10.0 * floor,
    })
}

fn weighted_residual(
    params: &BubbleParams,
    profile: &crate::profiles::KappaProfile,
    eps: f64,
    phi: &DiscreteField,
    ver: &Grid,
    spec: &WeightedNormSpec,
    inner_radius: f64,
) -> Result<(f64, f64)> {
    let phi_eval = phi.evaluator()?;
    let tail_value = 0.5 * (phi.values[0] + phi.values[phi.values.len() - 1]);
    let residuals: Vec<(f64, f64)> = ver
        .nodes
        .par_iter()
        .map(|&x| -> Result<(f64, f64)> {
            let quad = QuadSpec { tol: 1e-10, scale: ver.local_scale(x).min(1.0), probe: false };
            let hl_phi = halflap::half_laplacian_point(
                &*phi_eval,
                x,
                &quad,
                TailClass::Constant { value: tail_value },
            )?;
            let pv = phi_eval(x);
            let r = params.exp_u(x) + hl_phi
                - (1.0 + eps * profile.eval(x)) * (params.u(x) + pv).exp();
            let wr = spec.weight(x) * r.abs();
            let inner = if (x - params.xi).abs() <= inner_radius { wr } else { 0.0 };
            Ok((wr, inner))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(residuals
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (wa, wb)| (a.max(wa), b.max(wb))))
}
