//! Boundary curvature profiles κ: evaluation, derivatives, weighted norms,
//! hypothesis checks and the built-in catalog.
//!
//! A profile carries closures for κ, κ′, κ″ together with decay metadata.
//! The hypothesis checks cover the three structural assumptions used by the
//! degree machinery:
//!
//! * `x κ'(x) < 0` outside a bounded interval,
//! * `∫ x κ'(x) dx < 0`,
//! * the Morse-type condition: at every critical point of κ both κ″ and the
//!   half-Laplacian of κ are nonzero.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::halflap::{self, TailClass};
use crate::quad::adaptive_panels;
use crate::spline::CubicSpline;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    ClosedForm,
    DiskPullback,
    Sampled,
}

/// A boundary profile κ with analytic first and second derivatives.
#[derive(Clone)]
pub struct KappaProfile {
    eval: RealFn,
    deriv1: RealFn,
    deriv2: RealFn,
    /// Decay exponent β ∈ (0,1) of the weighted space the profile claims to live in.
    pub beta: f64,
    pub kind: ProfileKind,
    /// Limit of κ at ±∞ (equal limits for every catalog profile).
    pub far_limit: f64,
}

pub const DEFAULT_BETA: f64 = 0.5;

impl KappaProfile {
    pub fn from_closures(
        eval: RealFn,
        deriv1: RealFn,
        deriv2: RealFn,
        beta: f64,
        kind: ProfileKind,
        far_limit: f64,
    ) -> Self {
        Self { eval, deriv1, deriv2, beta, kind, far_limit }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            eval: Arc::new(move |_| c),
            deriv1: Arc::new(|_| 0.0),
            deriv2: Arc::new(|_| 0.0),
            beta: DEFAULT_BETA,
            kind: ProfileKind::ClosedForm,
            far_limit: c,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    #[inline]
    pub fn deriv1(&self, x: f64) -> f64 {
        (self.deriv1)(x)
    }

    #[inline]
    pub fn deriv2(&self, x: f64) -> f64 {
        (self.deriv2)(x)
    }

    pub fn eval_fn(&self) -> RealFn {
        self.eval.clone()
    }

    /// Tail class seen by the half-Laplacian quadrature: all catalog profiles
    /// approach their limit at an algebraic rate.
    pub fn tail_class(&self) -> TailClass {
        TailClass::Algebraic { limit: self.far_limit }
    }

    /// Crude sup of |κ| from a graded sample (used for tail bounds).
    pub fn sup_abs(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for &x in sample_grid(1.0e4, 2001).iter() {
            sup = sup.max(self.eval(x).abs());
        }
        sup
    }
}

/// Nested graded sampling of `[-x_max, x_max]`, uniform in asinh(x).
fn sample_grid(x_max: f64, n: usize) -> Vec<f64> {
    let s_max = x_max.asinh();
    (0..n)
        .map(|j| {
            let s = -s_max + 2.0 * s_max * j as f64 / (n - 1) as f64;
            s.sinh()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Rational closed forms
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derive(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0.get(i).copied().unwrap_or(0.0) - other.0.get(i).copied().unwrap_or(0.0);
        }
        Poly(out)
    }
}

/// Builds a profile from κ = num/den with derivatives by the quotient rule,
/// expanded once into polynomial coefficients.
fn rational_profile(num: Vec<f64>, den: Vec<f64>, beta: f64) -> KappaProfile {
    let n = Poly(num);
    let d = Poly(den);
    // r' = (n'd - nd')/d^2
    let n1 = n.derive().mul(&d).sub(&n.mul(&d.derive()));
    let d1 = d.mul(&d);
    // r'' = (n1' d1 - n1 d1')/d1^2
    let n2 = n1.derive().mul(&d1).sub(&n1.mul(&d1.derive()));
    let d2 = d1.mul(&d1);

    let (ne, de) = (n.clone(), d.clone());
    let (n1e, d1e) = (n1, d1);
    let (n2e, d2e) = (n2, d2);
    KappaProfile::from_closures(
        Arc::new(move |x| ne.eval(x) / de.eval(x)),
        Arc::new(move |x| n1e.eval(x) / d1e.eval(x)),
        Arc::new(move |x| n2e.eval(x) / d2e.eval(x)),
        beta,
        ProfileKind::ClosedForm,
        0.0,
    )
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// κ⁽¹⁾(ξ) = 8ξ²/(1+ξ²)², trace of the disk harmonic x² − y² + 1.
pub fn k1() -> KappaProfile {
    rational_profile(vec![0.0, 0.0, 8.0], vec![1.0, 0.0, 2.0, 0.0, 1.0], DEFAULT_BETA)
}

/// κ⁽²⁾(ξ) = 2(75ξ⁶ − 35ξ⁴ + 25ξ² + 7)/(1+ξ²)⁴.
pub fn k2() -> KappaProfile {
    rational_profile(
        vec![14.0, 0.0, 50.0, 0.0, -70.0, 0.0, 150.0],
        vec![1.0, 0.0, 4.0, 0.0, 6.0, 0.0, 4.0, 0.0, 1.0],
        DEFAULT_BETA,
    )
}

/// κ_{N,a}: pullback of the circle data `(1 − cos((N+1)(t − π/2)))/(N+1) + a(1 − sin t)`.
pub fn kna(n: u32, a: f64) -> Result<KappaProfile> {
    if n == 0 {
        return Err(Error::ProfileData("kNa requires N >= 1".into()));
    }
    if a < 0.0 {
        return Err(Error::ProfileData("kNa requires a >= 0".into()));
    }
    Ok(crate::conformal::pullback_profile(
        &crate::conformal::DiskHarmonic::KnaExt { n, a },
    )?)
}

/// Parse a catalog key: `k1`, `k2`, `kNa:N=<int>,a=<float>`, `disk-poly:<g1|g2|g3>`,
/// `const:<float>`.
pub fn builtin(key: &str) -> Result<KappaProfile> {
    if key == "k1" {
        return Ok(k1());
    }
    if key == "k2" {
        return Ok(k2());
    }
    if let Some(rest) = key.strip_prefix("const:") {
        let c: f64 = rest
            .parse()
            .map_err(|_| Error::UnknownProfile(key.to_string()))?;
        return Ok(KappaProfile::constant(c));
    }
    if let Some(rest) = key.strip_prefix("kNa:") {
        let mut n: Option<u32> = None;
        let mut a: Option<f64> = None;
        for part in rest.split(',') {
            match part.split_once('=') {
                Some(("N", v)) => n = v.parse().ok(),
                Some(("a", v)) => a = v.parse().ok(),
                _ => return Err(Error::UnknownProfile(key.to_string())),
            }
        }
        let (n, a) = match (n, a) {
            (Some(n), Some(a)) => (n, a),
            _ => return Err(Error::UnknownProfile(key.to_string())),
        };
        return kna(n, a);
    }
    if let Some(rest) = key.strip_prefix("disk-poly:") {
        let h = match rest {
            "g1" => crate::conformal::DiskHarmonic::G1,
            "g2" => crate::conformal::DiskHarmonic::G2,
            "g3" => crate::conformal::DiskHarmonic::G3,
            _ => return Err(Error::UnknownProfile(key.to_string())),
        };
        return crate::conformal::pullback_profile(&h);
    }
    Err(Error::UnknownProfile(key.to_string()))
}

/// Catalog keys understood by [`builtin`], with a short description.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("k1", "8x^2/(1+x^2)^2; one critical point of Gamma at (0,1)"),
        ("k2", "2(75x^6-35x^4+25x^2+7)/(1+x^2)^4; critical points at (+-4/5, 3/5)"),
        ("kNa:N=<int>,a=<float>", "circle family; N points if 0<a<1, none if a>=1"),
        ("disk-poly:<g1|g2|g3>", "pullback of a catalog disk harmonic"),
        ("const:<float>", "constant profile"),
        ("csv:<path>", "sampled profile from two-column CSV (x, kappa)"),
    ]
}

// ---------------------------------------------------------------------------
// Sampled profiles
// ---------------------------------------------------------------------------

/// Build a profile from samples `(x_i, κ(x_i))` with strictly increasing x.
/// Inside the sample range the profile is a cubic spline; outside it decays
/// like `c/(1+x²)` with `c` matched per side.
pub fn from_samples(xs: &[f64], ys: &[f64], beta: f64) -> Result<KappaProfile> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::ProfileData(format!(
            "need at least 4 samples, got {}",
            xs.len()
        )));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ProfileData("sample x values must be strictly increasing".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::ProfileData("non-finite sample value".into()));
    }
    let spline = Arc::new(CubicSpline::new(xs, ys)?);
    let (x_lo, x_hi) = (xs[0], *xs.last().unwrap());
    let c_lo = ys[0] * (1.0 + x_lo * x_lo);
    let c_hi = ys.last().unwrap() * (1.0 + x_hi * x_hi);

    let s0 = spline.clone();
    let eval = Arc::new(move |x: f64| {
        if x < x_lo {
            c_lo / (1.0 + x * x)
        } else if x > x_hi {
            c_hi / (1.0 + x * x)
        } else {
            s0.eval(x)
        }
    });
    let s1 = spline.clone();
    let deriv1 = Arc::new(move |x: f64| {
        if x < x_lo {
            -2.0 * x * c_lo / (1.0 + x * x).powi(2)
        } else if x > x_hi {
            -2.0 * x * c_hi / (1.0 + x * x).powi(2)
        } else {
            s1.deriv1(x)
        }
    });
    let s2 = spline;
    let deriv2 = Arc::new(move |x: f64| {
        if x < x_lo {
            c_lo * (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3)
        } else if x > x_hi {
            c_hi * (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3)
        } else {
            s2.deriv2(x)
        }
    });
    Ok(KappaProfile::from_closures(eval, deriv1, deriv2, beta, ProfileKind::Sampled, 0.0))
}

/// Load a sampled profile from two-column CSV text (`x,kappa`, optional header).
pub fn from_csv(text: &str) -> Result<KappaProfile> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(Error::ProfileData(format!("bad CSV line {}: `{line}`", lineno + 1)))
            }
        }
    }
    from_samples(&xs, &ys, DEFAULT_BETA)
}

// ---------------------------------------------------------------------------
// Perturbation of Lemma-4.9 type
// ---------------------------------------------------------------------------

/// Returns κ(ξ) + 2 ε_j/(1+ξ²) with consistently updated derivatives.
/// The bump preserves the sign condition x κ'(x) < 0 at infinity.
pub fn perturb_nondegenerate(profile: &KappaProfile, eps_j: f64) -> KappaProfile {
    let base = profile.clone();
    let e0 = profile.eval.clone();
    let e1 = profile.deriv1.clone();
    let e2 = profile.deriv2.clone();
    KappaProfile::from_closures(
        Arc::new(move |x| e0(x) + 2.0 * eps_j / (1.0 + x * x)),
        Arc::new(move |x| e1(x) - 4.0 * eps_j * x / (1.0 + x * x).powi(2)),
        Arc::new(move |x| e2(x) - 4.0 * eps_j * (1.0 - 3.0 * x * x) / (1.0 + x * x).powi(3)),
        base.beta,
        base.kind,
        base.far_limit,
    )
}

// ---------------------------------------------------------------------------
// Weighted C² norm
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct SamplingSpec {
    pub x_max: f64,
    pub n: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { x_max: 1.0e4, n: 4001 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub sup_kappa: f64,
    pub sup_weighted_deriv1: f64,
    pub sup_deriv2: f64,
    /// False when the weighted derivative term keeps growing as the sampling
    /// range is extended, i.e. the profile is not in C²_{*,β}.
    pub in_space: bool,
}

/// sup|κ| + sup (1+|x|^{2+β})|κ'| + sup|κ″| over a graded sampling.
pub fn weighted_c2_norm(profile: &KappaProfile, sampling: &SamplingSpec) -> Result<NormReport> {
    let beta = profile.beta;
    let weight = |x: f64| 1.0 + x.abs().powf(2.0 + beta);
    let mut sup_k: f64 = 0.0;
    let mut sup_w1: f64 = 0.0;
    let mut sup_2: f64 = 0.0;
    for &x in sample_grid(sampling.x_max, sampling.n).iter() {
        let (v, d1, d2) = (profile.eval(x), profile.deriv1(x), profile.deriv2(x));
        if !v.is_finite() {
            return Err(Error::NonFiniteEval { what: "kappa".into(), x });
        }
        if !d1.is_finite() {
            return Err(Error::NonFiniteEval { what: "kappa'".into(), x });
        }
        if !d2.is_finite() {
            return Err(Error::NonFiniteEval { what: "kappa''".into(), x });
        }
        sup_k = sup_k.max(v.abs());
        sup_w1 = sup_w1.max(weight(x) * d1.abs());
        sup_2 = sup_2.max(d2.abs());
    }
    // Probe an extension band: if the weighted derivative still grows out
    // there the profile is not in the space.
    let mut band: f64 = 0.0;
    let mut x = sampling.x_max;
    while x <= 8.0 * sampling.x_max {
        band = band.max(weight(x) * profile.deriv1(x).abs());
        band = band.max(weight(-x) * profile.deriv1(-x).abs());
        x *= 1.25;
    }
    let in_space = band <= 1.01 * sup_w1.max(1e-300);
    Ok(NormReport {
        value: sup_k + sup_w1 + sup_2,
        sup_kappa: sup_k,
        sup_weighted_deriv1: sup_w1,
        sup_deriv2: sup_2,
        in_space,
    })
}

// ---------------------------------------------------------------------------
// Critical points of κ on the line
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileCritical {
    pub x: f64,
    pub value: f64,
    pub second: f64,
    pub is_max: bool,
}

/// Sign-change scan of κ' on a graded grid, refined by bisection.
pub fn kappa_critical_points(profile: &KappaProfile, x_max: f64) -> Vec<ProfileCritical> {
    let grid = sample_grid(x_max, 8193);
    let mut out: Vec<ProfileCritical> = Vec::new();
    let push = |profile: &KappaProfile, xc: f64, out: &mut Vec<ProfileCritical>| {
        if out.iter().all(|p| (p.x - xc).abs() > 1e-9) {
            let second = profile.deriv2(xc);
            out.push(ProfileCritical {
                x: xc,
                value: profile.eval(xc),
                second,
                is_max: second < 0.0,
            });
        }
    };
    let mut prev_x = grid[0];
    let mut prev_d = profile.deriv1(prev_x);
    for &x in &grid[1..] {
        let d = profile.deriv1(x);
        if d == 0.0 {
            // an exact nodal zero of kappa'
            if prev_d != 0.0 {
                push(profile, x, &mut out);
            }
        } else if prev_d * d < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_d;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = profile.deriv1(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            push(profile, 0.5 * (lo + hi), &mut out);
        }
        prev_x = x;
        prev_d = d;
    }
    out
}

// ---------------------------------------------------------------------------
// Hypothesis validation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckOutcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseViolation {
    pub x: f64,
    pub kappa_second: f64,
    pub half_laplacian: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub norm_c2_star: f64,
    pub in_space: bool,
    /// Smallest verified R₀ for the sign condition, when it holds.
    pub r0_found: Option<f64>,
    pub integral_xkprime: f64,
    pub integral_error: f64,
    pub morse_violations: Vec<MorseViolation>,
    pub sign_condition: CheckOutcome,
    pub integral_condition: CheckOutcome,
    pub morse_condition: CheckOutcome,
}

/// Validate the decay/sign hypotheses and the Morse condition.
pub fn validate_hypotheses(profile: &KappaProfile) -> Result<HypothesisReport> {
    let norm = weighted_c2_norm(profile, &SamplingSpec::default())?;

    // --- sign condition: x kappa'(x) < 0 outside [-R0, R0] ------------------
    let x_scan = 1.0e5;
    let g = |x: f64| x * profile.deriv1(x);
    let grid = sample_grid(x_scan, 8193);
    let mut worst: Option<f64> = None; // largest |x| with g(x) >= 0
    for &x in &grid {
        if x.abs() > 1e-12 && g(x) >= 0.0 {
            let cur = worst.unwrap_or(0.0);
            if x.abs() > cur {
                worst = Some(x.abs());
            }
        }
    }
    let (sign_condition, r0_found) = match worst {
        None => (CheckOutcome::Pass, Some(grid.iter().find(|x| x.abs() > 1e-12).unwrap().abs())),
        Some(w) if w < 0.9 * x_scan => {
            // refine the outermost sign boundary on each side by bisection
            let refine = |side: f64| -> f64 {
                let (mut lo, mut hi) = (w * side * 0.999, x_scan * side);
                if g(lo) < 0.0 {
                    return w;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi.abs()
            };
            let r0 = refine(1.0).max(refine(-1.0));
            (CheckOutcome::Pass, Some(r0))
        }
        Some(_) => (CheckOutcome::Fail, None),
    };

    // --- integral condition: int x kappa'(x) dx < 0 -------------------------
    let m = |x: f64| x * (profile.deriv1(x) - profile.deriv1(-x));
    // pick the cut from the measured decay of |x kappa'|
    let mut x_cut = 1.0e3;
    let mut tail_bound = f64::INFINITY;
    while x_cut < 1.0e8 {
        let b1 = g(x_cut).abs().max(g(-x_cut).abs());
        let b2 = g(4.0 * x_cut).abs().max(g(-4.0 * x_cut).abs());
        // decay exponent p from two probes; fall back to the weighted-space bound
        let p = if b1 > 0.0 && b2 > 0.0 { (b1 / b2).ln() / 4.0_f64.ln() } else { 1.0 + profile.beta };
        if p > 1.05 {
            tail_bound = 2.0 * b1 * x_cut / (p - 1.0);
            if tail_bound < 1e-9 {
                break;
            }
        }
        x_cut *= 10.0;
    }
    let quad_tol = 1e-10;
    let integral = adaptive_panels(&m, 0.0, x_cut, quad_tol);
    let integral_error = tail_bound.min(1.0) + 100.0 * quad_tol;
    let integral_condition = if integral < -10.0 * integral_error {
        CheckOutcome::Pass
    } else if integral > 10.0 * integral_error {
        CheckOutcome::Fail
    } else if integral_error > integral.abs() {
        // quadrature error dominates the value: never guess the sign
        if integral == 0.0 && integral_error < 1e-6 {
            CheckOutcome::Fail // genuinely zero integral is not < 0
        } else {
            CheckOutcome::Inconclusive
        }
    } else {
        CheckOutcome::Inconclusive
    };

    // --- Morse condition at critical points of kappa -------------------------
    let crits = kappa_critical_points(profile, 100.0);
    let mut violations = Vec::new();
    let second_floor = 1e-7 * (1.0 + norm.sup_deriv2);
    for c in &crits {
        let hl = halflap::half_laplacian_point(
            &*profile.eval_fn(),
            c.x,
            &halflap::QuadSpec::default(),
            profile.tail_class(),
        )?;
        let hl_floor = 1e-7 * (1.0 + norm.sup_kappa);
        if c.second.abs() <= second_floor {
            violations.push(MorseViolation {
                x: c.x,
                kappa_second: c.second,
                half_laplacian: hl,
                reason: "kappa'' vanishes".into(),
            });
        } else if hl.abs() <= hl_floor {
            violations.push(MorseViolation {
                x: c.x,
                kappa_second: c.second,
                half_laplacian: hl,
                reason: "half-Laplacian of kappa vanishes".into(),
            });
        }
    }
    let morse_condition =
        if violations.is_empty() { CheckOutcome::Pass } else { CheckOutcome::Fail };

    Ok(HypothesisReport {
        norm_c2_star: norm.value,
        in_space: norm.in_space,
        r0_found,
        integral_xkprime: integral,
        integral_error,
        morse_violations: violations,
        sign_condition,
        integral_condition,
        morse_condition,
    })
}
