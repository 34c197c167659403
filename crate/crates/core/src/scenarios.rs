//! Ready-made bundles with closed-form ground truth: the flat torus with a
//! U(1) translation (straight and tilted gauge), the punctured plane in polar
//! coordinates, the Hopf fibration S³ → S² and SU(2) acting on itself.
//!
//! Each [`Scenario`] carries an oracle table of `{quantity, point, value,
//! tolerance, provenance}` rows and a set of recommended evaluation points.
//! The closed-form heat-kernel pairings used to check the Monte Carlo
//! estimators live here as well.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::BundleSpec;
use crate::curvature::{FSign, RESOLVED_F_SIGN};
use crate::error::{Error, Result};
use crate::field::{FnField, SmoothField};
use crate::group::{CircleTranslation, StructureConstants, Su2RightAction};
use crate::tensor::Tensor;

pub const SCENARIO_NAMES: [&str; 5] = ["flat_torus_u1", "flat_torus_u1_tilted", "polar_plane_u1", "hopf_s3", "su2_self"];

/// Gauge-surface point of the `su2_self` scenario.
pub const SU2_SURFACE_POINT: [f64; 3] = [1.0, 0.4, 0.7];

/// One row of a scenario oracle table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct OracleEntry {
    pub quantity: String,
    pub point: Vec<f64>,
    pub value: f64,
    pub tolerance: f64,
    pub provenance: String,
}

/// A bundle together with its ground truth.
pub struct Scenario {
    pub name: String,
    pub bundle: BundleSpec,
    /// Metric of the base manifold in its own coordinates, when known.
    pub base_metric: Option<Box<dyn SmoothField>>,
    /// Indices of the total-space coordinates that chart the base.
    pub base_coordinates: Vec<usize>,
    pub oracles: Vec<OracleEntry>,
    /// Recommended evaluation points, all on the gauge surface.
    pub points: Vec<Vec<f64>>,
    /// Ranges used to draw random points before projecting to the surface.
    pub sample_box: Vec<(f64, f64)>,
    pub eps_f: FSign,
}

impl core::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("bundle", &self.bundle)
            .field("oracles", &self.oracles)
            .field("points", &self.points)
            .finish()
    }
}

impl Scenario {
    /// Oracle rows for one quantity.
    pub fn oracle(&self, quantity: &str) -> impl Iterator<Item = &OracleEntry> {
        let q = quantity.to_string();
        self.oracles.iter().filter(move |o| o.quantity == q)
    }

    /// Base point of a total-space point.
    pub fn base_point(&self, q: &[f64]) -> Vec<f64> {
        self.base_coordinates.iter().map(|&i| q[i]).collect()
    }

    /// `n` gauge-surface points drawn uniformly from the sample box and
    /// projected along the orbits.
    pub fn random_surface_points(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = self
                .sample_box
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                .collect();
            out.push(self.bundle.project_to_surface(&x)?);
        }
        Ok(out)
    }
}

/// Build a named scenario.
pub fn make_scenario(name: &str) -> Result<Scenario> {
    match name {
        "flat_torus_u1" => flat_torus(0.0, name),
        "flat_torus_u1_tilted" => flat_torus(0.3, name),
        "polar_plane_u1" => polar_plane(),
        "hopf_s3" => hopf_s3(),
        "su2_self" => su2_self(),
        _ => Err(Error::UnknownScenario { name: name.to_string(), valid: SCENARIO_NAMES.join(", ") }),
    }
}

fn oracle(quantity: &str, point: &[f64], value: f64, tolerance: f64, provenance: &str) -> OracleEntry {
    OracleEntry { quantity: quantity.to_string(), point: point.to_vec(), value, tolerance, provenance: provenance.to_string() }
}

fn u1_killing(p: usize, axis: usize) -> FnField {
    let mut k = Tensor::zeros(&[p, 1]);
    k.set2(axis, 0, 1.0);
    FnField::constant(p, k)
}

fn linear_gauge(p: usize, coeffs: Vec<f64>, offset: f64) -> FnField {
    let grad = Tensor::matrix(1, p, &coeffs);
    FnField::new(p, &[1], move |q| Tensor::vector(&[coeffs.iter().zip(q).map(|(c, x)| c * x).sum::<f64>() - offset]))
        .with_jacobian(move |_| grad.clone())
        .affine()
}

const ZERO_CURVATURE: [&str; 6] = ["r_p_direct", "r_p_nonholonomic", "hr", "r_g", "f_sq", "jsq"];

fn flat_torus(tilt: f64, name: &str) -> Result<Scenario> {
    let bundle = BundleSpec::new(
        Box::new(FnField::constant(2, Tensor::identity(2))),
        Box::new(u1_killing(2, 1)),
        Box::new(linear_gauge(2, vec![tilt, 1.0], 0.0)),
        StructureConstants::abelian(1),
    )?
    .with_group_chart(Box::new(CircleTranslation { axis: 1, period: 2.0 * PI }))?;
    let points: Vec<Vec<f64>> = [0.3, -1.2, 2.0].iter().map(|&x| vec![x, -tilt * x]).collect();
    let mut oracles = Vec::new();
    for p in &points {
        for q in ZERO_CURVATURE.iter().chain(["jtilde"].iter()) {
            oracles.push(oracle(q, p, 0.0, 1e-8, "closed form: Euclidean metric, constant orbit metric"));
        }
        oracles.push(oracle("gamma", p, 1.0, 1e-12, "closed form: |∂_y|² = 1"));
        oracles.push(oracle("det_adapted", p, 1.0, 1e-10, "closed form: unit horizontal and orbit volumes"));
    }
    Ok(Scenario {
        name: name.to_string(),
        bundle,
        base_metric: Some(Box::new(FnField::constant(1, Tensor::identity(1)))),
        base_coordinates: vec![0],
        oracles,
        points,
        sample_box: vec![(-PI, PI), (-1.0, 1.0)],
        eps_f: RESOLVED_F_SIGN,
    })
}

fn polar_plane() -> Result<Scenario> {
    let metric = FnField::new(2, &[2, 2], |q| Tensor::diag(&[1.0, q[0] * q[0]])).with_jacobian(|q| {
        let mut d = Tensor::zeros(&[2, 2, 2]);
        d.set3(1, 1, 0, 2.0 * q[0]);
        d
    });
    let bundle = BundleSpec::new(
        Box::new(metric),
        Box::new(u1_killing(2, 1)),
        Box::new(linear_gauge(2, vec![0.0, 1.0], 0.0)),
        StructureConstants::abelian(1),
    )?
    .with_group_chart(Box::new(CircleTranslation { axis: 1, period: 2.0 * PI }))?
    .with_chart_domain(|q| q[0] > 0.0);
    let points: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|&r| vec![r, 0.0]).collect();
    let mut oracles = Vec::new();
    for p in &points {
        let r = p[0];
        for q in ["r_p_direct", "r_p_nonholonomic", "hr", "r_g", "f_sq"] {
            oracles.push(oracle(q, p, 0.0, 1e-6, "closed form: flat plane, abelian group, exact connection"));
        }
        oracles.push(oracle("gamma", p, r * r, 1e-12, "closed form: |∂_φ|² = r²"));
        oracles.push(oracle("jsq", p, 1.0 / (r * r), 1e-6 / (r * r), "closed form: circle of radius r has |j|² = 1/r²"));
        oracles.push(oracle("jtilde", p, -1.0 / (r * r), 1e-6 / (r * r), "closed form: hand derivation with γ = r² gives -1/r², matching the decomposition with |j|² = 1/r²"));
        oracles.push(oracle("det_adapted", p, r * r, 1e-8, "closed form: dr² + r²dφ² volume r²"));
    }
    Ok(Scenario {
        name: "polar_plane_u1".into(),
        bundle,
        base_metric: Some(Box::new(FnField::constant(1, Tensor::identity(1)))),
        base_coordinates: vec![0],
        oracles,
        points,
        sample_box: vec![(0.5, 3.0), (-PI, PI)],
        eps_f: RESOLVED_F_SIGN,
    })
}

fn hopf_s3() -> Result<Scenario> {
    let metric = FnField::new(3, &[3, 3], |q| {
        let c = q[0].cos();
        Tensor::matrix(3, 3, &[0.25, 0.0, 0.0, 0.0, 0.25, 0.25 * c, 0.0, 0.25 * c, 0.25])
    })
    .with_jacobian(|q| {
        let mut d = Tensor::zeros(&[3, 3, 3]);
        let s = -0.25 * q[0].sin();
        d.set3(1, 2, 0, s);
        d.set3(2, 1, 0, s);
        d
    });
    let base = FnField::new(2, &[2, 2], |x| {
        let s = x[0].sin();
        Tensor::diag(&[0.25, 0.25 * s * s])
    })
    .with_jacobian(|x| {
        let mut d = Tensor::zeros(&[2, 2, 2]);
        d.set3(1, 1, 0, 0.5 * x[0].sin() * x[0].cos());
        d
    });
    let bundle = BundleSpec::new(
        Box::new(metric),
        Box::new(u1_killing(3, 2)),
        Box::new(linear_gauge(3, vec![0.0, 0.0, 1.0], 0.0)),
        StructureConstants::abelian(1),
    )?
    .with_group_chart(Box::new(CircleTranslation { axis: 2, period: 4.0 * PI }))?
    .with_chart_domain(|q| q[0] > 0.0 && q[0] < PI);
    let points: Vec<Vec<f64>> = [[1.0, 0.5, 0.0], [0.6, -1.0, 0.0], [2.2, 2.0, 0.0]].iter().map(|p| p.to_vec()).collect();
    let mut oracles = Vec::new();
    for p in &points {
        let round = "classical: unit round S³ has scalar curvature n(n-1) = 6";
        oracles.push(oracle("r_p_direct", p, 6.0, 1e-5, round));
        oracles.push(oracle("r_p_nonholonomic", p, 6.0, 1e-5, round));
        oracles.push(oracle("base_scalar", &p[..2], 8.0, 1e-5, "classical: base is the round S² of radius 1/2, scalar 2/(1/2)² = 8"));
        oracles.push(oracle("hr", p, 8.0, 1e-5, "closed form: horizontal curvature equals the base scalar"));
        oracles.push(oracle("f_sq", p, 8.0, 1e-5, "closed form: F_θφ = -sin θ, orbit metric 1/4, base metric diag(1/4, sin²θ/4)"));
        oracles.push(oracle("gamma", p, 0.25, 1e-12, "closed form: fibres are great circles of length 4π·(1/2)"));
        let st = p[0].sin();
        oracles.push(oracle("det_adapted", p, st * st / 64.0, 1e-10, "closed form: base volume² sin²θ/16 times orbit metric 1/4"));
        for q in ["r_g", "jsq", "jtilde"] {
            oracles.push(oracle(q, p, 0.0, 1e-5, "closed form: abelian group with constant orbit metric"));
        }
        oracles.push(oracle(
            "eps_f",
            p,
            RESOLVED_F_SIGN.value(),
            0.0,
            "resolved: the unique sign with 6 = 8 + 0 + ε·2 - 0 - 0",
        ));
    }
    Ok(Scenario {
        name: "hopf_s3".into(),
        bundle,
        base_metric: Some(Box::new(base)),
        base_coordinates: vec![0, 1],
        oracles,
        points,
        sample_box: vec![(0.3, PI - 0.3), (-PI, PI), (-1.0, 1.0)],
        eps_f: RESOLVED_F_SIGN,
    })
}

fn su2_killing(q: &[f64]) -> Tensor {
    let (st, ct) = (q[0].sin(), q[0].cos());
    let (sp, cp) = (q[2].sin(), q[2].cos());
    Tensor::matrix(3, 3, &[sp, cp, 0.0, -cp / st, sp / st, 0.0, ct * cp / st, -ct * sp / st, 1.0])
}

fn su2_killing_jacobian(q: &[f64]) -> Tensor {
    let (st, ct) = (q[0].sin(), q[0].cos());
    let (sp, cp) = (q[2].sin(), q[2].cos());
    let s2 = st * st;
    let mut d = Tensor::zeros(&[3, 3, 3]);
    // ∂_θ
    d.set3(1, 0, 0, cp * ct / s2);
    d.set3(2, 0, 0, -cp / s2);
    d.set3(1, 1, 0, -sp * ct / s2);
    d.set3(2, 1, 0, sp / s2);
    // ∂_ψ
    d.set3(0, 0, 2, cp);
    d.set3(1, 0, 2, sp / st);
    d.set3(2, 0, 2, -ct * sp / st);
    d.set3(0, 1, 2, -sp);
    d.set3(1, 1, 2, cp / st);
    d.set3(2, 1, 2, -ct * cp / st);
    d
}

/// `q − q0` reduced by the Euler-angle identifications
/// `(φ, ψ) ~ (φ + 2π, ψ − 2π) ~ (φ, ψ + 4π)`, so every representative of the
/// group element `q0` is a zero.
fn su2_gauge(q: &[f64], q0: &[f64]) -> [f64; 3] {
    let dphi = q[1] - q0[1];
    let m = (dphi / (2.0 * PI)).round();
    let dpsi = q[2] - q0[2] + 2.0 * PI * m;
    let n = (dpsi / (4.0 * PI)).round();
    [q[0] - q0[0], dphi - 2.0 * PI * m, dpsi - 4.0 * PI * n]
}

fn su2_self() -> Result<Scenario> {
    let metric = FnField::new(3, &[3, 3], |q| {
        let c = q[0].cos();
        Tensor::matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, c, 0.0, c, 1.0])
    })
    .with_jacobian(|q| {
        let mut d = Tensor::zeros(&[3, 3, 3]);
        let s = -q[0].sin();
        d.set3(1, 2, 0, s);
        d.set3(2, 1, 0, s);
        d
    });
    let q0 = SU2_SURFACE_POINT;
    let gauge = FnField::new(3, &[3], move |q| Tensor::vector(&su2_gauge(q, &q0)))
        .with_jacobian(|_| Tensor::identity(3))
        .affine();
    let bundle = BundleSpec::new(
        Box::new(metric),
        Box::new(FnField::new(3, &[3, 3], su2_killing).with_jacobian(su2_killing_jacobian)),
        Box::new(gauge),
        StructureConstants::su2(),
    )?
    .with_group_chart(Box::new(Su2RightAction))?
    .with_chart_domain(|q| q[0] > 0.0 && q[0] < PI);
    let p = q0.to_vec();
    let sphere = "classical: bi-invariant metric is the round S³ of radius 2, scalar 6/4";
    let mut oracles = vec![
        oracle("r_p_direct", &p, 1.5, 1e-6, sphere),
        oracle("r_p_nonholonomic", &p, 1.5, 1e-6, sphere),
        oracle("r_g", &p, 1.5, 1e-6, "closed form: degenerate base, orbit is the whole space"),
    ];
    for q in ["hr", "f_sq", "jsq", "jtilde"] {
        oracles.push(oracle(q, &p, 0.0, 1e-6, "closed form: no horizontal directions"));
    }
    Ok(Scenario {
        name: "su2_self".into(),
        bundle,
        base_metric: None,
        base_coordinates: vec![],
        oracles,
        points: vec![p],
        sample_box: vec![(0.5, 2.5), (-1.0, 1.5), (-0.5, 2.0)],
        eps_f: RESOLVED_F_SIGN,
    })
}

/// Exponentially scaled modified Bessel function `e^{-|x|} I₀(x)`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic series, terms ((2k-1)!!)² / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..25 {
            let kf = k as f64;
            term *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (kf * 8.0 * x);
            sum += term;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// `E f(|X_s|)` for a planar Brownian motion started at radius `r_a` with
/// variance `s` per coordinate: `∫ f(r) (r/s) e^{-(r²+r_a²)/2s} I₀(r r_a/s) dr`,
/// composite Simpson with `n` (even) panels on `[0, r_a + 12√s]`.
pub fn circle_averaged_gaussian_pairing(f: impl Fn(f64) -> f64, r_a: f64, s: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let hi = r_a + 12.0 * s.sqrt();
    let h = hi / n as f64;
    let density = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            let d = r - r_a;
            (r / s) * (-(d * d) / (2.0 * s)).exp() * bessel_i0e(r * r_a / s)
        }
    };
    let mut acc = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f(r) * density(r);
    }
    acc * h / 3.0
}

/// `E cos(X_s)` for Brownian motion on the circle started at `x_a`:
/// `e^{-s/2} cos x_a` (the wrapped Gaussian pairs exactly with Fourier modes).
pub fn wrapped_gaussian_cos_pairing(x_a: f64, s: f64) -> f64 {
    (-0.5 * s).exp() * x_a.cos()
}
