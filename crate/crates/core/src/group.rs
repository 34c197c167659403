//! Structure constants and concrete group charts.
//!
//! A [`GroupChart`] realizes the right action `F(Q, a)` of the structure group
//! on the total-space chart together with the group-side matrices used by the
//! adapted metric: the adjoint representation `ρ(a)`, the left-trivialization
//! `ū(a)` (Maurer–Cartan forms `ωᵅ = ūᵅ_μ daᵘ`), its inverse `v̄(a)`, and a
//! normalized Haar quadrature.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::{det, Tensor};

/// Structure constants `c^γ_{αβ}` stored as `[γ, α, β]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    c: Tensor,
}

impl StructureConstants {
    pub fn abelian(n: usize) -> Self {
        StructureConstants { c: Tensor::zeros(&[n, n, n]) }
    }

    /// `c^k_{ij} = ε_{ijk}` (su(2) ≅ so(3)).
    pub fn su2() -> Self {
        let mut c = Tensor::zeros(&[3, 3, 3]);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c.set3(k, i, j, 1.0);
            c.set3(k, j, i, -1.0);
        }
        StructureConstants { c }
    }

    /// Validates antisymmetry, tracelessness `c^σ_{σμ} = 0` and the Jacobi identity.
    pub fn new(c: Tensor) -> Result<Self> {
        let s = c.shape();
        if s.len() != 3 || s[0] != s[1] || s[1] != s[2] {
            return Err(Error::InvalidBundle(format!("structure constants need shape [n,n,n], got {s:?}")));
        }
        let out = StructureConstants { c };
        let n = out.dim();
        let scale = out.c.max_abs().max(1.0);
        for g in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if (out.at(g, a, b) + out.at(g, b, a)).abs() > 1e-12 * scale {
                        return Err(Error::InvalidBundle(format!("c^{g}_({a}{b}) is not antisymmetric")));
                    }
                }
            }
        }
        for m in 0..n {
            let tr: f64 = (0..n).map(|s| out.at(s, s, m)).sum();
            if tr.abs() > 1e-12 * scale {
                return Err(Error::InvalidBundle(format!("trace c^s_(s{m}) = {tr} is not zero")));
            }
        }
        let jac = out.jacobi_residual();
        if jac > 1e-12 * scale * scale {
            return Err(Error::InvalidBundle(format!("Jacobi identity violated by {jac:e}")));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.c.shape()[0]
    }

    #[inline]
    pub fn at(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.c.at3(gamma, alpha, beta)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.c
    }

    pub fn is_abelian(&self) -> bool {
        self.c.max_abs() == 0.0
    }

    /// Largest violation of `c^δ_{αβ}c^ε_{δγ} + cyclic = 0`.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for g in 0..n {
                    for e in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            s += self.at(d, a, b) * self.at(e, d, g)
                                + self.at(d, b, g) * self.at(e, d, a)
                                + self.at(d, g, a) * self.at(e, d, b);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// `(ad_a)^γ_β = c^γ_{αβ} aᵅ`.
    pub fn ad(&self, a: &[f64]) -> Tensor {
        let n = self.dim();
        let mut m = Tensor::zeros(&[n, n]);
        for g in 0..n {
            for b in 0..n {
                m.set2(g, b, (0..n).map(|al| self.at(g, al, b) * a[al]).sum());
            }
        }
        m
    }
}

/// One node of a normalized Haar quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupNode {
    pub coords: Vec<f64>,
    pub weight: f64,
}

/// A chart on the structure group and its right action on the total space.
pub trait GroupChart: Send + Sync {
    fn dim(&self) -> usize;
    /// Chart coordinates of the identity element.
    fn identity(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
    /// Right action `F(Q, a)` in total-space coordinates.
    fn act(&self, q: &[f64], a: &[f64]) -> Vec<f64>;
    /// Adjoint representation `ρᵅ_β(a)`.
    fn adjoint(&self, a: &[f64]) -> Tensor;
    /// Left-trivialization `ū` with rows indexed by chart coordinates and
    /// columns by Lie-algebra directions (`K ū` is a total-space matrix).
    fn left_trivialization(&self, a: &[f64]) -> Tensor;
    /// `v̄ = ū⁻¹`.
    fn left_trivialization_inverse(&self, a: &[f64]) -> Result<Tensor> {
        crate::tensor::inverse_det(&self.left_trivialization(a)).map(|(i, _)| i)
    }
    /// Haar density relative to Lebesgue measure in the chart.
    fn haar_density(&self, a: &[f64]) -> f64 {
        det(&self.left_trivialization(a)).unwrap_or(0.0).abs()
    }
    /// Deterministic quadrature for the normalized Haar measure with `n`
    /// nodes per one-dimensional factor.
    fn quadrature(&self, n: usize) -> Vec<GroupNode>;
}

/// U(1) acting by translation of one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleTranslation {
    pub axis: usize,
    pub period: f64,
}

impl GroupChart for CircleTranslation {
    fn dim(&self) -> usize {
        1
    }

    fn act(&self, q: &[f64], a: &[f64]) -> Vec<f64> {
        let mut out = q.to_vec();
        out[self.axis] += a[0];
        out
    }

    fn adjoint(&self, _a: &[f64]) -> Tensor {
        Tensor::identity(1)
    }

    fn left_trivialization(&self, _a: &[f64]) -> Tensor {
        Tensor::identity(1)
    }

    /// Trapezoid rule on `[0, period)`, exact for trigonometric polynomials of degree < n.
    fn quadrature(&self, n: usize) -> Vec<GroupNode> {
        let n = n.max(1);
        (0..n)
            .map(|i| GroupNode { coords: vec![self.period * i as f64 / n as f64], weight: 1.0 / n as f64 })
            .collect()
    }
}

/// Minimal complex arithmetic for SU(2) matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
struct C(f64, f64);

impl C {
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
    fn arg(self) -> f64 {
        self.1.atan2(self.0)
    }
    fn expi(t: f64) -> C {
        C(t.cos(), t.sin())
    }
}

/// SU(2) element as a 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Su2([C; 4]);

impl Su2 {
    fn mul(&self, o: &Su2) -> Su2 {
        let a = &self.0;
        let b = &o.0;
        Su2([
            a[0].mul(b[0]).add(a[1].mul(b[2])),
            a[0].mul(b[1]).add(a[1].mul(b[3])),
            a[2].mul(b[0]).add(a[3].mul(b[2])),
            a[2].mul(b[1]).add(a[3].mul(b[3])),
        ])
    }

    /// `exp(φX₃) exp(θX₂) exp(ψX₃)` with `X_k = −(i/2)σ_k`.
    fn from_euler(e: &[f64]) -> Su2 {
        let (t, p, s) = (e[0], e[1], e[2]);
        let (c, sn) = ((0.5 * t).cos(), (0.5 * t).sin());
        let d00 = C::expi(-0.5 * (p + s));
        let d01 = C::expi(-0.5 * (p - s));
        let d10 = C::expi(0.5 * (p - s));
        let d11 = C::expi(0.5 * (p + s));
        Su2([
            C(d00.0 * c, d00.1 * c),
            C(-d01.0 * sn, -d01.1 * sn),
            C(d10.0 * sn, d10.1 * sn),
            C(d11.0 * c, d11.1 * c),
        ])
    }

    /// Euler angles with φ and φ+ψ chosen on the branches nearest to `near`.
    fn to_euler(&self, near: &[f64]) -> Vec<f64> {
        let g00 = self.0[0];
        let g10 = self.0[2];
        let theta = 2.0 * g10.abs().atan2(g00.abs());
        let phi = wrap_near(g10.arg() - g00.arg(), near[1], 2.0 * PI);
        let sum = wrap_near(-2.0 * g00.arg(), near[1] + near[2], 4.0 * PI);
        vec![theta, phi, sum - phi]
    }

    /// `exp(aᵏ X_k)`.
    fn from_exp(a: &[f64]) -> Su2 {
        let t = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let (c, s) = ((0.5 * t).cos(), (0.5 * t).sin());
        let f = if t > 1e-300 { s / t } else { 0.5 };
        let (n1, n2, n3) = (a[0] * f, a[1] * f, a[2] * f);
        Su2([C(c, -n3), C(-n2, -n1), C(n2, -n1), C(c, n3)])
    }

    fn to_exp(&self) -> Vec<f64> {
        let g00 = self.0[0];
        let g10 = self.0[2];
        let (s1, s2, s3) = (-g10.1, g10.0, -g00.1);
        let sn = (s1 * s1 + s2 * s2 + s3 * s3).sqrt();
        let t = 2.0 * sn.atan2(g00.0);
        let f = if sn > 1e-300 { t / sn } else { 2.0 };
        vec![s1 * f, s2 * f, s3 * f]
    }
}

fn wrap_near(x: f64, near: f64, period: f64) -> f64 {
    x + period * ((near - x) / period).round()
}

/// SU(2) acting on itself from the right, total space in ZYZ Euler angles
/// `(θ, φ, ψ)`, group chart in exponential coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Su2RightAction;

impl Su2RightAction {
    fn cross(a: &[f64]) -> Tensor {
        Tensor::matrix(3, 3, &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0])
    }

    /// Exponential coordinates of the group element with Euler angles `e`.
    pub fn euler_to_exp(e: &[f64]) -> Vec<f64> {
        Su2::from_euler(e).to_exp()
    }
}

impl GroupChart for Su2RightAction {
    fn dim(&self) -> usize {
        3
    }

    fn act(&self, q: &[f64], a: &[f64]) -> Vec<f64> {
        Su2::from_euler(q).mul(&Su2::from_exp(a)).to_euler(q)
    }

    /// `Ad(exp a) = exp(ad_a)` (Rodrigues form).
    fn adjoint(&self, a: &[f64]) -> Tensor {
        let t = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let m = Self::cross(a);
        let m2 = m.matmul(&m);
        let (s1, s2) = if t < 1e-6 { (1.0 - t * t / 6.0, 0.5 - t * t / 24.0) } else { (t.sin() / t, (1.0 - t.cos()) / (t * t)) };
        Tensor::identity(3).add(&m.scale(s1)).add(&m2.scale(s2))
    }

    /// `(1 − e^{−ad_a}) / ad_a`.
    fn left_trivialization(&self, a: &[f64]) -> Tensor {
        let t = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let m = Self::cross(a);
        let m2 = m.matmul(&m);
        let (s1, s2) = if t < 1e-4 {
            (0.5 - t * t / 24.0, 1.0 / 6.0 - t * t / 120.0)
        } else {
            ((1.0 - t.cos()) / (t * t), (t - t.sin()) / (t * t * t))
        };
        Tensor::identity(3).sub(&m.scale(s1)).add(&m2.scale(s2))
    }

    /// Gauss–Legendre in cos θ times trapezoid rules in φ ∈ [0, 2π) and
    /// ψ ∈ [0, 4π), mapped into exponential coordinates.
    fn quadrature(&self, n: usize) -> Vec<GroupNode> {
        let n = n.max(1);
        let (x, w) = gauss_legendre(n);
        let mut nodes = Vec::with_capacity(n * n * n);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.acos();
            for j in 0..n {
                let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                for k in 0..n {
                    let psi = 4.0 * PI * (k as f64 + 0.5) / n as f64;
                    let coords = Su2::from_euler(&[theta, phi, psi]).to_exp();
                    nodes.push(GroupNode { coords, weight: 0.5 * wi / (n * n) as f64 });
                }
            }
        }
        nodes
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x[0] = 0.0;
            w[0] = 2.0;
            break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_constants_are_valid() {
        let c = StructureConstants::su2();
        assert!(StructureConstants::new(c.tensor().clone()).is_ok());
        assert_eq!(c.at(2, 0, 1), 1.0);
        assert_eq!(c.at(2, 1, 0), -1.0);
    }

    #[test]
    fn invalid_constants_rejected() {
        let mut t = Tensor::zeros(&[2, 2, 2]);
        t.set3(0, 0, 1, 1.0);
        t.set3(0, 1, 0, -1.0);
        // c^0_{01} = 1 has trace c^s_{s1} = 1
        assert!(StructureConstants::new(t).is_err());
        let mut t = Tensor::zeros(&[2, 2, 2]);
        t.set3(0, 0, 1, 1.0);
        assert!(StructureConstants::new(t).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn su2_euler_and_exp_round_trip() {
        let e = [1.1, 0.4, -0.7];
        let g = Su2::from_euler(&e);
        let back = g.to_euler(&e);
        for (a, b) in back.iter().zip(e) {
            assert!((a - b).abs() < 1e-12);
        }
        let a = [0.3, -0.2, 0.5];
        let back = Su2::from_exp(&a).to_exp();
        for (x, y) in back.iter().zip(a) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn su2_action_at_identity_and_composition() {
        let act = Su2RightAction;
        let q = [1.0, 0.3, 0.2];
        let same = act.act(&q, &[0.0, 0.0, 0.0]);
        for (a, b) in same.iter().zip(q) {
            assert!((a - b).abs() < 1e-12);
        }
        // exp(s X₃) shifts ψ
        let moved = act.act(&q, &[0.0, 0.0, 0.25]);
        assert!((moved[2] - 0.45).abs() < 1e-12 && (moved[0] - 1.0).abs() < 1e-12);
        assert_eq!(act.adjoint(&[0.0; 3]), Tensor::identity(3));
        assert_eq!(act.left_trivialization(&[0.0; 3]), Tensor::identity(3));
    }

    #[test]
    fn adjoint_is_a_homomorphism_along_one_parameter_subgroups() {
        let act = Su2RightAction;
        let a = [0.2, -0.1, 0.4];
        let b = [0.4, -0.2, 0.8];
        let lhs = act.adjoint(&a).matmul(&act.adjoint(&a));
        assert!(lhs.sub(&act.adjoint(&b)).max_abs() < 1e-12);
    }

    #[test]
    fn haar_quadrature_normalized() {
        let nodes = Su2RightAction.quadrature(4);
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        assert!((total - 1.0).abs() < 1e-13);
        let circle = CircleTranslation { axis: 1, period: 2.0 * PI }.quadrature(8);
        let avg: f64 = circle.iter().map(|n| n.weight * n.coords[0].cos()).sum();
        assert!(avg.abs() < 1e-14);
    }
}
