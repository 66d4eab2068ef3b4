//! Critical points of the harmonic extension and Brouwer degrees by winding
//! number.
//!
//! For a harmonic Γ every non-degenerate critical point is a saddle of index
//! -1, so the winding of ∇Γ along a large contour counts critical points
//! directly. The half-plane contour keeps μ ≥ 1/R: the gradient need not
//! extend continuously to μ = 0 with a usable sign, and the boundary strip is
//! accounted for by the κ-side counts (M⁺, m⁺) exactly as in the degree
//! formula `deg = 1 - M⁺ + m⁺`.

use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::HalfPlanePoint;
use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::halflap::{self, QuadSpec};
use crate::profiles;

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Saddle,
    Max,
    Min,
    Degenerate,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalPoint {
    pub xi: f64,
    pub mu: f64,
    pub grad_norm: f64,
    pub hessian: [[f64; 2]; 2],
    pub det: f64,
    pub classification: Classification,
    /// Local Brouwer index: -1 at a saddle, +1 at extrema, 0 if degenerate.
    pub index: i32,
}

impl CriticalPoint {
    pub fn location(&self) -> HalfPlanePoint {
        HalfPlanePoint::new(self.xi, self.mu)
    }
}

fn classify(hess: [[f64; 2]; 2]) -> (f64, Classification, i32) {
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    let frob2 = hess.iter().flatten().map(|v| v * v).sum::<f64>();
    // relative threshold against quadrature noise, absolute floor against a
    // Hessian that is itself pure noise
    if det.abs() <= 1e-8 * frob2 || frob2 <= 1e-18 {
        return (det, Classification::Degenerate, 0);
    }
    if det < 0.0 {
        (det, Classification::Saddle, -1)
    } else if hess[0][0] + hess[1][1] < 0.0 {
        (det, Classification::Max, 1)
    } else {
        (det, Classification::Min, 1)
    }
}

/// Damped Newton iteration on ∇Γ. Steps are shortened to stay in μ > 0;
/// leaving the half-plane or hitting a singular Hessian is reported, not
/// papered over.
pub fn newton_refine(
    ev: &ExtensionEvaluator,
    start: HalfPlanePoint,
    tol: f64,
) -> Result<CriticalPoint> {
    if start.mu <= 0.0 {
        return Err(Error::Domain("start must lie in the open half-plane".into()));
    }
    let mut p = start;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..50 {
        let g = ev.grad_gamma(p)?;
        grad_norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let h = ev.hess_gamma(p)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let frob2: f64 = h.iter().flatten().map(|v| v * v).sum();
        if grad_norm < tol {
            let (det, classification, index) = classify(h);
            if classification == Classification::Degenerate {
                return Err(Error::DegenerateStep { det });
            }
            return Ok(CriticalPoint {
                xi: p.xi,
                mu: p.mu,
                grad_norm,
                hessian: h,
                det,
                classification,
                index,
            });
        }
        if det.abs() <= 1e-12 * frob2.max(1e-300) {
            return Err(Error::DegenerateStep { det });
        }
        // solve H step = -g
        let mut sx = (-g[0] * h[1][1] + g[1] * h[0][1]) / det;
        let mut sm = (-h[0][0] * g[1] + h[1][0] * g[0]) / det;
        // mild trust region against wild jumps
        let len = (sx * sx + sm * sm).sqrt();
        let cap = 1.0 + 0.5 * (p.xi.abs() + p.mu);
        if len > cap {
            sx *= cap / len;
            sm *= cap / len;
        }
        let mut lambda = 1.0;
        while p.mu + lambda * sm <= 0.0 {
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::BoundaryEscape { mu: p.mu });
            }
        }
        p = HalfPlanePoint::new(p.xi + lambda * sx, p.mu + lambda * sm);
        if p.mu < 1e-10 {
            return Err(Error::BoundaryEscape { mu: p.mu });
        }
    }
    Err(Error::NoConvergence { iters: 50, grad_norm })
}

/// Multistart search over the box `[-r, r] × (1/r, r)`: a linear×log grid of
/// |∇Γ| local minima seeds Newton, plus a μ-ladder over every critical point
/// of κ (small-μ saddles of the even extension are born there).
pub fn multistart_search(
    ev: &ExtensionEvaluator,
    r: f64,
    density: usize,
) -> Result<Vec<CriticalPoint>> {
    if r <= 1.0 || density < 4 {
        return Err(Error::Domain("need r > 1 and density >= 4".into()));
    }
    let nd = density;
    let xs: Vec<f64> = (0..nd).map(|i| -r + 2.0 * r * i as f64 / (nd - 1) as f64).collect();
    let mus: Vec<f64> = (0..nd)
        .map(|j| {
            let t = j as f64 / (nd - 1) as f64;
            (1.0 / r) * (r * r).powf(t)
        })
        .collect();

    // |grad| on the grid; a coarse tolerance is plenty for seeding
    let scan = ev.relaxed(1e-7);
    let norms: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&xi| {
            mus.iter()
                .map(|&mu| match scan.grad_gamma(HalfPlanePoint::new(xi, mu)) {
                    Ok(g) => (g[0] * g[0] + g[1] * g[1]).sqrt(),
                    Err(_) => f64::INFINITY,
                })
                .collect()
        })
        .collect();

    let mut seeds: Vec<HalfPlanePoint> = Vec::new();
    for i in 0..nd {
        for j in 0..nd {
            let v = norms[i][j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= nd as i64 || nj >= nd as i64 {
                        continue;
                    }
                    if norms[ni as usize][nj as usize] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                seeds.push(HalfPlanePoint::new(xs[i], mus[j]));
            }
        }
    }
    // ladder over kappa's critical points
    for c in profiles::kappa_critical_points(&ev.profile, 100.0) {
        let mut mu = 1.05 / r;
        while mu < 0.95 * r {
            seeds.push(HalfPlanePoint::new(c.x, mu));
            mu *= 2.2;
        }
    }

    let mut found: Vec<CriticalPoint> = seeds
        .par_iter()
        .filter_map(|&s| newton_refine(ev, s, 1e-11).ok())
        .filter(|c| c.mu > 0.9 / r && c.mu < 1.1 * r && c.xi.abs() <= 1.1 * r)
        .collect();
    found.sort_by(|a, b| (a.xi, a.mu).partial_cmp(&(b.xi, b.mu)).unwrap());
    let mut out: Vec<CriticalPoint> = Vec::new();
    for c in found {
        if out
            .iter()
            .all(|p| ((p.xi - c.xi).powi(2) + (p.mu - c.mu).powi(2)).sqrt() > 1e-6)
        {
            out.push(c);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Winding numbers
// ---------------------------------------------------------------------------

/// Total rotation of a planar vector field along a closed polyline, divided
/// by 2π. Segments are bisected until every angular increment is below π/2,
/// so the returned integer is exact once the field is bounded away from zero
/// on the contour.
pub fn winding_degree<F>(field: &mut F, contour: &[[f64; 2]]) -> Result<i32>
where
    F: FnMut(f64, f64) -> Result<[f64; 2]>,
{
    if contour.len() < 4 {
        return Err(Error::OpenContour);
    }
    let first = contour[0];
    let last = contour[contour.len() - 1];
    if first != last {
        return Err(Error::OpenContour);
    }

    let mut min_mag = f64::INFINITY;
    let mut eval = |x: f64, y: f64, min_mag: &mut f64| -> Result<[f64; 2]> {
        let v = field(x, y)?;
        let mag = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if mag < 1e-13 {
            return Err(Error::DegreeUndefined { min_mag: mag });
        }
        *min_mag = min_mag.min(mag);
        Ok(v)
    };

    let mut total = 0.0;
    for seg in contour.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let vp = eval(p[0], p[1], &mut min_mag)?;
        let vq = eval(q[0], q[1], &mut min_mag)?;
        total += rotation(&mut eval, &mut min_mag, p, vp, q, vq, 0)?;
    }
    let w = total / (2.0 * PI);
    let k = w.round();
    if (w - k).abs() > 0.05 {
        return Err(Error::DegreeInconclusive(format!(
            "winding {w} is not close to an integer (min |field| = {min_mag:.3e})"
        )));
    }
    Ok(k as i32)
}

#[allow(clippy::too_many_arguments)]
fn rotation<E>(
    eval: &mut E,
    min_mag: &mut f64,
    p: [f64; 2],
    vp: [f64; 2],
    q: [f64; 2],
    vq: [f64; 2],
    depth: u32,
) -> Result<f64>
where
    E: FnMut(f64, f64, &mut f64) -> Result<[f64; 2]>,
{
    let cross = vp[0] * vq[1] - vp[1] * vq[0];
    let dot = vp[0] * vq[0] + vp[1] * vq[1];
    let delta = cross.atan2(dot);
    if delta.abs() < 0.5 * PI {
        if depth >= 8 || (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-12 {
            return Ok(delta);
        }
        // still refine a little: a full turn inside one segment has the same
        // endpoint angles as no turn at all
        if depth >= 3 {
            return Ok(delta);
        }
    }
    if depth >= 48 {
        return Err(Error::DegreeUndefined { min_mag: *min_mag });
    }
    let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let vm = eval(m[0], m[1], min_mag)?;
    Ok(rotation(eval, min_mag, p, vp, m, vm, depth + 1)?
        + rotation(eval, min_mag, m, vm, q, vq, depth + 1)?)
}

/// Closed counterclockwise boundary of `{ξ² + μ² < R²} ∩ {μ > 1/R}`.
pub fn halfplane_contour(r: f64, n_arc: usize, n_bottom: usize) -> Vec<[f64; 2]> {
    let theta0 = (1.0 / (r * r)).asin();
    let xb = r * theta0.cos();
    let mut pts = Vec::with_capacity(n_arc + n_bottom + 1);
    for i in 0..n_bottom {
        let t = i as f64 / n_bottom as f64;
        pts.push([-xb + 2.0 * xb * t, 1.0 / r]);
    }
    for i in 0..=n_arc {
        let th = theta0 + (PI - 2.0 * theta0) * i as f64 / n_arc as f64;
        pts.push([r * th.cos(), r * th.sin()]);
    }
    // close exactly
    pts.push(pts[0]);
    pts
}

pub fn circle_contour(cx: f64, cy: f64, radius: f64, n: usize) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            [cx + radius * th.cos(), cy + radius * th.sin()]
        })
        .collect();
    pts.push(pts[0]);
    pts
}

// ---------------------------------------------------------------------------
// Degree on the half-plane
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DegreeReport {
    /// Contour scale actually used (after any escalation).
    pub r: f64,
    /// Winding of ∇Γ along the contour.
    pub degree: i32,
    #[serde(rename = "M_plus")]
    pub maxima_plus: usize,
    #[serde(rename = "m_plus")]
    pub minima_plus: usize,
    /// 1 - M⁺ + m⁺.
    pub formula_rhs: i32,
    pub critical_points: Vec<CriticalPoint>,
    /// κ-side Morse condition holds, so the count formula applies.
    pub morse_ok: bool,
    /// degree == formula_rhs with all certifications in place.
    pub verdict: bool,
}

/// κ-side counts: local maxima / minima of κ with positive half-Laplacian.
/// The boolean is false when some extremum is Morse-degenerate (κ″ or the
/// half-Laplacian at the numerical zero level), in which case the counts do
/// not feed a valid degree formula.
pub fn kappa_side_counts(ev: &ExtensionEvaluator) -> Result<(usize, usize, bool)> {
    let profile = &ev.profile;
    let sup = profile.sup_abs();
    let mut maxima_plus = 0;
    let mut minima_plus = 0;
    let mut morse_ok = true;
    for c in profiles::kappa_critical_points(profile, 100.0) {
        let hl = halflap::half_laplacian_point(
            &*profile.eval_fn(),
            c.x,
            &QuadSpec::default(),
            profile.tail_class(),
        )?;
        if hl.abs() <= 1e-7 * (1.0 + sup) || c.second.abs() <= 1e-9 * (1.0 + sup) {
            morse_ok = false;
            continue;
        }
        if hl > 0.0 {
            if c.is_max {
                maxima_plus += 1;
            } else {
                minima_plus += 1;
            }
        }
    }
    Ok((maxima_plus, minima_plus, morse_ok))
}

/// One attempt at the degree computation for a fixed contour scale.
///
/// Certifications before the winding is trusted:
/// * ∇Γ·(ξ,μ) < 0 on the arc (no critical points escape to infinity),
/// * every located critical point stays 2/R away from the contour.
pub fn degree_on_halfplane(ev: &ExtensionEvaluator, r: f64) -> Result<DegreeReport> {
    let (maxima_plus, minima_plus, morse_ok) = kappa_side_counts(ev)?;
    let points = multistart_search(ev, r, 40)?;
    // winding angles and sign certifications tolerate a relaxed quadrature
    let scan = ev.relaxed(1e-9);

    // Lemma-4.4-style certification on the arc
    for i in 0..96 {
        let th = PI * (i as f64 + 0.5) / 96.0;
        let (xi, mu) = (r * th.cos(), r * th.sin());
        if mu < 1.0 / r {
            continue;
        }
        let g = scan.grad_gamma(HalfPlanePoint::new(xi, mu))?;
        if g[0] * xi + g[1] * mu >= 0.0 {
            return Err(Error::DegreeInconclusive(format!(
                "grad Gamma . p = {:.3e} >= 0 at ({xi:.3}, {mu:.3}); enlarge R",
                g[0] * xi + g[1] * mu
            )));
        }
    }
    // separation of located zeros from the contour
    for c in &points {
        let radial = (c.xi * c.xi + c.mu * c.mu).sqrt();
        let dist = (r - radial).min(c.mu - 1.0 / r);
        if dist < 2.0 / r {
            return Err(Error::DegreeInconclusive(format!(
                "critical point ({}, {}) within 2/R of the contour; enlarge R",
                c.xi, c.mu
            )));
        }
    }

    let contour = halfplane_contour(r, 384, 256);
    let mut field =
        |x: f64, y: f64| -> Result<[f64; 2]> { scan.grad_gamma(HalfPlanePoint::new(x, y)) };
    let degree = winding_degree(&mut field, &contour)?;
    let formula_rhs = 1 - maxima_plus as i32 + minima_plus as i32;
    Ok(DegreeReport {
        r,
        degree,
        maxima_plus,
        minima_plus,
        formula_rhs,
        critical_points: points,
        morse_ok,
        verdict: morse_ok && degree == formula_rhs,
    })
}

/// Degree with geometric escalation of the contour scale until the
/// certifications hold and the winding matches the κ-side formula.
pub fn degree_auto(ev: &ExtensionEvaluator, r0: f64) -> Result<DegreeReport> {
    let mut r = r0.max(4.0);
    let mut last_err: Option<Error> = None;
    let mut last_report: Option<DegreeReport> = None;
    while r <= 300.0 {
        match degree_on_halfplane(ev, r) {
            Ok(rep) if rep.verdict => return Ok(rep),
            // a Morse-degenerate kappa cannot match the formula at any R
            Ok(rep) if !rep.morse_ok => return Ok(rep),
            Ok(rep) => last_report = Some(rep),
            Err(e @ Error::DegreeInconclusive(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        r *= 2.0;
    }
    if let Some(rep) = last_report {
        // stable but off-formula result: report it honestly
        return Ok(rep);
    }
    Err(last_err.unwrap_or(Error::DegreeInconclusive("escalation exhausted".into())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CountVerdict {
    Pass,
    Fail { expected: i64, found: usize },
    NotApplicable { reason: String },
}

/// Exact-count check: with everything non-degenerate the number of critical
/// points must equal M⁺ - m⁺ - 1 and every index must be -1.
pub fn exact_count_check(report: &DegreeReport) -> CountVerdict {
    if !report.morse_ok {
        return CountVerdict::NotApplicable {
            reason: "kappa has a Morse-degenerate extremum; the count formula does not apply"
                .into(),
        };
    }
    if let Some(d) = report
        .critical_points
        .iter()
        .find(|c| c.classification == Classification::Degenerate)
    {
        return CountVerdict::NotApplicable {
            reason: format!("degenerate critical point at ({}, {})", d.xi, d.mu),
        };
    }
    let expected = report.maxima_plus as i64 - report.minima_plus as i64 - 1;
    let found = report.critical_points.len();
    if expected == found as i64 && report.critical_points.iter().all(|c| c.index == -1) {
        CountVerdict::Pass
    } else {
        CountVerdict::Fail { expected, found }
    }
}
