//! The disk ↔ half-plane conformal pair and pullbacks of disk-harmonic data.
//!
//! `Ψ` maps the closed upper half-plane onto the closed unit disk minus the
//! north pole `e₂ = (0,1)`; `Φ` is its inverse. A function is harmonic in the
//! half-plane iff its composition with `Φ` is harmonic in the disk, and the
//! pair preserves non-degenerate critical points. The catalog of disk
//! harmonics below generates every example profile used by the tests.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::{KappaProfile, ProfileKind, DEFAULT_BETA};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlanePoint {
    pub xi: f64,
    pub mu: f64,
}

impl HalfPlanePoint {
    pub fn new(xi: f64, mu: f64) -> Self {
        Self { xi, mu }
    }
}

/// Ψ(ξ, μ) = (2ξ, ξ² + μ² − 1) / (ξ² + (μ+1)²).
pub fn psi_map(p: HalfPlanePoint) -> DiskPoint {
    let denom = p.xi * p.xi + (p.mu + 1.0) * (p.mu + 1.0);
    if !denom.is_finite() {
        // the point at infinity maps to e2
        return DiskPoint { x: 0.0, y: 1.0 };
    }
    DiskPoint {
        x: 2.0 * p.xi / denom,
        y: (p.xi * p.xi + p.mu * p.mu - 1.0) / denom,
    }
}

/// Φ(x, y) = (2x, 1 − x² − y²) / (x² + (y−1)²); singular exactly at e₂.
pub fn phi_map(p: DiskPoint) -> Result<HalfPlanePoint> {
    let denom = p.x * p.x + (p.y - 1.0) * (p.y - 1.0);
    if denom < 1e-300 {
        return Err(Error::SingularPoint);
    }
    Ok(HalfPlanePoint {
        xi: 2.0 * p.x / denom,
        mu: (1.0 - p.x * p.x - p.y * p.y) / denom,
    })
}

/// Catalog of harmonic functions on (a neighbourhood of) the closed disk.
#[derive(Clone, Copy, Debug)]
pub enum DiskHarmonic {
    /// x² − y² + 1
    G1,
    /// −2x⁴ − 2y⁴ + 12x²y² − 4y³ + 12x²y + x² − y² − 3y + 10
    G2,
    /// (x³ − 3xy²)/3 − 2x
    G3,
    /// Harmonic extension of the circle data behind κ_{N,a}:
    /// Re( 1/(N+1) + a − (−iz)^{N+1}/(N+1) + a i z ).
    KnaExt { n: u32, a: f64 },
    Const(f64),
}

impl DiskHarmonic {
    pub fn value(&self, p: DiskPoint) -> f64 {
        let (x, y) = (p.x, p.y);
        match *self {
            DiskHarmonic::G1 => x * x - y * y + 1.0,
            DiskHarmonic::G2 => {
                -2.0 * x.powi(4) - 2.0 * y.powi(4) + 12.0 * x * x * y * y - 4.0 * y.powi(3)
                    + 12.0 * x * x * y
                    + x * x
                    - y * y
                    - 3.0 * y
                    + 10.0
            }
            DiskHarmonic::G3 => (x.powi(3) - 3.0 * x * y * y) / 3.0 - 2.0 * x,
            DiskHarmonic::KnaExt { n, a } => {
                let z = Complex64::new(x, y);
                let c = Self::kna_f(n, a, z);
                c.re
            }
            DiskHarmonic::Const(c) => c,
        }
    }

    pub fn grad(&self, p: DiskPoint) -> [f64; 2] {
        let (x, y) = (p.x, p.y);
        match *self {
            DiskHarmonic::G1 => [2.0 * x, -2.0 * y],
            DiskHarmonic::G2 => [
                -8.0 * x.powi(3) + 24.0 * x * y * y + 24.0 * x * y + 2.0 * x,
                -8.0 * y.powi(3) + 24.0 * x * x * y - 12.0 * y * y + 12.0 * x * x - 2.0 * y - 3.0,
            ],
            DiskHarmonic::G3 => [x * x - y * y - 2.0, -2.0 * x * y],
            DiskHarmonic::KnaExt { n, a } => {
                let fp = Self::kna_fprime(n, a, Complex64::new(x, y));
                [fp.re, -fp.im]
            }
            DiskHarmonic::Const(_) => [0.0, 0.0],
        }
    }

    /// Hessian as [γ_xx, γ_xy, γ_yy].
    pub fn hess(&self, p: DiskPoint) -> [f64; 3] {
        let (x, y) = (p.x, p.y);
        match *self {
            DiskHarmonic::G1 => [2.0, 0.0, -2.0],
            DiskHarmonic::G2 => {
                let gxx = -24.0 * x * x + 24.0 * y * y + 24.0 * y + 2.0;
                let gxy = 48.0 * x * y + 24.0 * x;
                [gxx, gxy, -gxx]
            }
            DiskHarmonic::G3 => [2.0 * x, -2.0 * y, -2.0 * x],
            DiskHarmonic::KnaExt { n, a } => {
                let fpp = Self::kna_fsecond(n, a, Complex64::new(x, y));
                [fpp.re, -fpp.im, -fpp.re]
            }
            DiskHarmonic::Const(_) => [0.0, 0.0, 0.0],
        }
    }

    fn kna_f(n: u32, a: f64, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        let np1 = (n + 1) as f64;
        Complex64::new(1.0 / np1 + a, 0.0) - (-i * z).powu(n + 1) / np1 + a * i * z
    }

    fn kna_fprime(n: u32, a: f64, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        -(-i).powu(n + 1) * z.powu(n) + a * i
    }

    fn kna_fsecond(n: u32, _a: f64, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        -(n as f64) * (-i).powu(n + 1) * z.powu(n - 1)
    }

    /// Gradient zeros of the `KnaExt` family: the N-th roots of −i^N a.
    pub fn kna_gradient_zeros(n: u32, a: f64) -> Vec<DiskPoint> {
        let target = -Complex64::i().powu(n) * a;
        let r = target.norm().powf(1.0 / n as f64);
        let base_arg = target.arg() / n as f64;
        (0..n)
            .map(|k| {
                let ang = base_arg + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                DiskPoint { x: r * ang.cos(), y: r * ang.sin() }
            })
            .collect()
    }
}

/// Boundary trace ξ ↦ γ(Ψ(ξ, 0)) with chain-rule derivatives through the
/// explicit Jacobian of Ψ restricted to the boundary.
pub fn pullback_profile(disk_fn: &DiskHarmonic) -> Result<KappaProfile> {
    let at_e2 = disk_fn.value(DiskPoint { x: 0.0, y: 1.0 });
    if !at_e2.is_finite() {
        return Err(Error::ProfileData(
            "disk function has no finite limit at e2; the trace would be unbounded".into(),
        ));
    }
    let h = *disk_fn;
    let eval = Arc::new(move |xi: f64| {
        let d = 1.0 + xi * xi;
        if !d.is_finite() {
            return at_e2;
        }
        h.value(DiskPoint { x: 2.0 * xi / d, y: (xi * xi - 1.0) / d })
    });
    let h1 = *disk_fn;
    let deriv1 = Arc::new(move |xi: f64| {
        let d = 1.0 + xi * xi;
        if !d.is_finite() {
            return 0.0;
        }
        let p = DiskPoint { x: 2.0 * xi / d, y: (xi * xi - 1.0) / d };
        let g = h1.grad(p);
        let pp = 2.0 * (1.0 - xi * xi) / (d * d);
        let qp = 4.0 * xi / (d * d);
        g[0] * pp + g[1] * qp
    });
    let h2 = *disk_fn;
    let deriv2 = Arc::new(move |xi: f64| {
        let d = 1.0 + xi * xi;
        if !d.is_finite() {
            return 0.0;
        }
        let p = DiskPoint { x: 2.0 * xi / d, y: (xi * xi - 1.0) / d };
        let g = h2.grad(p);
        let hh = h2.hess(p);
        let pp = 2.0 * (1.0 - xi * xi) / (d * d);
        let qp = 4.0 * xi / (d * d);
        let ppp = 4.0 * xi * (xi * xi - 3.0) / (d * d * d);
        let qpp = -4.0 * (3.0 * xi * xi - 1.0) / (d * d * d);
        hh[0] * pp * pp + 2.0 * hh[1] * pp * qp + hh[2] * qp * qp + g[0] * ppp + g[1] * qpp
    });
    Ok(KappaProfile::from_closures(
        eval,
        deriv1,
        deriv2,
        DEFAULT_BETA,
        ProfileKind::DiskPullback,
        at_e2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles;

    #[test]
    fn psi_known_values() {
        let p = psi_map(HalfPlanePoint::new(0.0, 1.0));
        assert!(p.x.abs() < 1e-15 && p.y.abs() < 1e-15);
        let p = psi_map(HalfPlanePoint::new(0.8, 0.6));
        assert!((p.x - 0.5).abs() < 1e-15 && p.y.abs() < 1e-15);
        // far points approach e2
        let p = psi_map(HalfPlanePoint::new(3.0e7, 4.0e7));
        assert!(((p.x - 0.0).powi(2) + (p.y - 1.0).powi(2)).sqrt() < 1e-6);
    }

    #[test]
    fn phi_known_values_and_singularity() {
        let q = phi_map(DiskPoint { x: 0.0, y: 0.0 }).unwrap();
        assert!(q.xi.abs() < 1e-15 && (q.mu - 1.0).abs() < 1e-15);
        let q = phi_map(DiskPoint { x: 0.5, y: 0.0 }).unwrap();
        assert!((q.xi - 0.8).abs() < 1e-15 && (q.mu - 0.6).abs() < 1e-15);
        assert!(matches!(phi_map(DiskPoint { x: 0.0, y: 1.0 }), Err(Error::SingularPoint)));
    }

    #[test]
    fn round_trip_on_random_interior_points() {
        // deterministic LCG sampling of the open disk
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut count = 0;
        while count < 1000 {
            let x = 2.0 * next() - 1.0;
            let y = 2.0 * next() - 1.0;
            if x * x + y * y >= 0.98 {
                continue;
            }
            count += 1;
            let q = phi_map(DiskPoint { x, y }).unwrap();
            let back = psi_map(q);
            assert!(
                (back.x - x).abs() < 1e-12 && (back.y - y).abs() < 1e-12,
                "round trip failed at ({x}, {y})"
            );
        }
    }

    #[test]
    fn boundary_maps_to_circle() {
        for i in 0..2000 {
            let xi = -100.0 + 0.1 * i as f64;
            let p = psi_map(HalfPlanePoint::new(xi, 0.0));
            let r = (p.x * p.x + p.y * p.y).sqrt();
            assert!((r - 1.0).abs() < 1e-14, "|Psi({xi},0)| = {r}");
        }
    }

    #[test]
    fn disk_harmonics_pass_discrete_laplacian() {
        let mut state: u64 = 42;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let h = 1e-3;
        for hfun in [
            DiskHarmonic::G1,
            DiskHarmonic::G2,
            DiskHarmonic::G3,
            DiskHarmonic::KnaExt { n: 3, a: 0.5 },
            DiskHarmonic::KnaExt { n: 2, a: 1.5 },
        ] {
            for _ in 0..100 {
                let x = 1.6 * next() - 0.8;
                let y = 1.6 * next() - 0.8;
                let f = |dx: f64, dy: f64| hfun.value(DiskPoint { x: x + dx, y: y + dy });
                let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0))
                    / (h * h);
                assert!(lap.abs() < 1e-8 / (h * h), "Laplacian {lap} at ({x},{y})");
            }
        }
    }

    #[test]
    fn g1_critical_point_data() {
        let g = DiskHarmonic::G1.grad(DiskPoint { x: 0.0, y: 0.0 });
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        let h = DiskHarmonic::G1.hess(DiskPoint { x: 0.0, y: 0.0 });
        assert_eq!(h, [2.0, 0.0, -2.0]);
    }

    #[test]
    fn g2_gradient_vanishes_at_half_points() {
        for x in [-0.5, 0.5] {
            let g = DiskHarmonic::G2.grad(DiskPoint { x, y: 0.0 });
            assert!(g[0].abs() < 1e-14 && g[1].abs() < 1e-14, "grad {g:?} at ({x}, 0)");
        }
    }

    #[test]
    fn kna_gradient_zeros_match_roots() {
        let zeros = DiskHarmonic::kna_gradient_zeros(3, 0.5);
        assert_eq!(zeros.len(), 3);
        let h = DiskHarmonic::KnaExt { n: 3, a: 0.5 };
        for z in &zeros {
            // cube roots of i/2 have modulus (1/2)^{1/3}
            let r = (z.x * z.x + z.y * z.y).sqrt();
            assert!((r - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-14);
            let g = h.grad(*z);
            assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
        }
    }

    #[test]
    fn pullback_of_g1_is_k1() {
        let p = pullback_profile(&DiskHarmonic::G1).unwrap();
        let k1 = profiles::k1();
        for i in 0..81 {
            let xi = -8.0 + 0.2 * i as f64;
            assert!((p.eval(xi) - k1.eval(xi)).abs() < 1e-13, "value at {xi}");
            assert!((p.deriv1(xi) - k1.deriv1(xi)).abs() < 1e-12, "deriv1 at {xi}");
            assert!((p.deriv2(xi) - k1.deriv2(xi)).abs() < 1e-11, "deriv2 at {xi}");
        }
    }

    #[test]
    fn pullback_of_g2_is_k2() {
        let p = pullback_profile(&DiskHarmonic::G2).unwrap();
        let k2 = profiles::k2();
        for i in 0..81 {
            let xi = -8.0 + 0.2 * i as f64;
            assert!((p.eval(xi) - k2.eval(xi)).abs() < 1e-11, "value at {xi}");
        }
    }

    #[test]
    fn pullback_of_constant_is_constant() {
        let p = pullback_profile(&DiskHarmonic::Const(2.5)).unwrap();
        for xi in [-100.0, -1.0, 0.0, 3.0, 1e6] {
            assert_eq!(p.eval(xi), 2.5);
            assert_eq!(p.deriv1(xi), 0.0);
        }
    }
}
