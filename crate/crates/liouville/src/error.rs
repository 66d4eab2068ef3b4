//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite evaluation at x = {x}: {what}")]
    NonFiniteEval { what: String, x: f64 },

    #[error("unknown catalog key `{0}`")]
    UnknownProfile(String),

    #[error("invalid profile data: {0}")]
    ProfileData(String),

    #[error("quadrature did not converge (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    QuadratureNoConvergence { achieved: f64, wanted: f64 },

    #[error("map is singular at (0, 1)")]
    SingularPoint,

    #[error("function fails the smoothness probe at x = {x}")]
    NotSmooth { x: f64 },

    #[error("tail not controllable: {0}")]
    UnboundedTail(String),

    #[error("missing tail model: the half-Laplacian is nonlocal and needs one")]
    MissingTail,

    #[error("Newton iterate escaped the half-plane (mu -> {mu:.3e})")]
    BoundaryEscape { mu: f64 },

    #[error("degenerate Newton step: |det Hessian| = {det:.3e} below threshold")]
    DegenerateStep { det: f64 },

    #[error("Newton did not converge after {iters} iterations (|grad| = {grad_norm:.3e})")]
    NoConvergence { iters: usize, grad_norm: f64 },

    #[error("degree undefined: field magnitude {min_mag:.3e} too small on the contour")]
    DegreeUndefined { min_mag: f64 },

    #[error("contour is not closed")]
    OpenContour,

    #[error("degree inconclusive: {0}")]
    DegreeInconclusive(String),

    #[error("invalid grid parameters: {0}")]
    GridParam(String),

    #[error("augmented system is singular (grid too coarse for the kernel directions)")]
    SingularSystem,

    #[error("eps = {eps:.3e} too large: inner iteration is not contracting")]
    EpsTooLarge { eps: f64 },

    #[error("outer iteration left the sqrt(eps) ball around the seed")]
    OuterDiverged,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
