//! Solver toolkit for the nonlocal Liouville equation
//!
//! ```text
//! (-Δ)^{1/2} u = (1 + ε κ(x)) e^u   on ℝ
//! ```
//!
//! built around the explicit bubble family `U_{μ,ξ} = log(2μ / (μ² + (x-ξ)²))`.
//! The crate provides:
//!
//! * boundary profiles κ with derivatives, weighted norms and hypothesis checks
//!   ([`profiles`]),
//! * the disk ↔ half-plane conformal pair and pullbacks of disk-harmonic data
//!   ([`conformal`]),
//! * pointwise half-Laplacian quadrature and the weighted sup norms
//!   ([`halflap`]),
//! * the Poisson-kernel harmonic extension Γ with gradient and Hessian
//!   ([`extension`]),
//! * critical-point search, Brouwer degree by winding number, and the
//!   degree-count formula ([`critical`]),
//! * bubbles, kernel elements and the linearized operator ([`bubbles`]),
//! * graded grids and discrete fields ([`field`]),
//! * the Lyapunov–Schmidt engine: projected linear solve, contraction,
//!   reduced equation and residual certification ([`reduction`]),
//! * Calogero–Moser soliton assembly and integral identities ([`soliton`]).

pub mod bubbles;
pub mod conformal;
pub mod critical;
pub mod error;
pub mod extension;
pub mod field;
pub mod halflap;
pub mod profiles;
pub mod quad;
pub mod reduction;
pub mod soliton;
pub(crate) mod spline;

pub use error::{Error, Result};
