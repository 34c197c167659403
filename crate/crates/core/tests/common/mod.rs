//! Bundles with non-constant orbit metrics, non-trivial gauges and a
//! non-abelian warped product, shared by the integration tests.
#![allow(dead_code)]

use bundle_reduction::{BundleSpec, CircleTranslation, FnField, StructureConstants, Tensor};

pub fn u1_killing(p: usize, axis: usize) -> FnField {
    let mut k = Tensor::zeros(&[p, 1]);
    k.set2(axis, 0, 1.0);
    FnField::constant(p, k)
}

/// Polar plane with the gauge χ = φ − 0.4 sin r (metric derivatives by FD).
pub fn polar_tilted() -> BundleSpec {
    BundleSpec::new(
        Box::new(FnField::new(2, &[2, 2], |q| Tensor::diag(&[1.0, q[0] * q[0]]))),
        Box::new(u1_killing(2, 1)),
        Box::new(FnField::new(2, &[1], |q| Tensor::vector(&[q[1] - 0.4 * q[0].sin()]))),
        StructureConstants::abelian(1),
    )
    .unwrap()
    .with_group_chart(Box::new(CircleTranslation { axis: 1, period: 2.0 * std::f64::consts::PI }))
    .unwrap()
    .with_chart_domain(|q| q[0] > 0.0)
}

pub fn polar_tilted_point() -> Vec<f64> {
    vec![1.3, 0.4 * 1.3f64.sin()]
}

fn hopf_metric() -> FnField {
    FnField::new(3, &[3, 3], |q| {
        let c = q[0].cos();
        Tensor::matrix(3, 3, &[0.25, 0.0, 0.0, 0.0, 0.25, 0.25 * c, 0.0, 0.25 * c, 0.25])
    })
}

/// Hopf fibration with the gauge χ = ψ − 0.3 sin θ cos φ.
pub fn hopf_tilted() -> BundleSpec {
    BundleSpec::new(
        Box::new(hopf_metric()),
        Box::new(u1_killing(3, 2)),
        Box::new(FnField::new(3, &[1], |q| Tensor::vector(&[q[2] - 0.3 * q[0].sin() * q[1].cos()]))),
        StructureConstants::abelian(1),
    )
    .unwrap()
    .with_group_chart(Box::new(CircleTranslation { axis: 2, period: 4.0 * std::f64::consts::PI }))
    .unwrap()
}

pub fn hopf_tilted_point() -> Vec<f64> {
    vec![1.0, 0.5, 0.3 * 1.0f64.sin() * 0.5f64.cos()]
}

fn warp_f(q: &[f64]) -> f64 {
    1.5 + 0.2 * q[0] * q[0] + 0.1 * q[1] + 0.1 * q[0] * q[1]
}

/// Warped product ℝ² ×_f S¹ with f = 1.5 + 0.2x² + 0.1y + 0.1xy and
/// gauge χ = φ − 0.3x + 0.2y².
pub fn warp() -> BundleSpec {
    BundleSpec::new(
        Box::new(FnField::new(3, &[3, 3], |q| {
            let f = warp_f(q);
            Tensor::diag(&[1.0, 1.0, f * f])
        })),
        Box::new(u1_killing(3, 2)),
        Box::new(FnField::new(3, &[1], |q| Tensor::vector(&[q[2] - 0.3 * q[0] + 0.2 * q[1] * q[1]]))),
        StructureConstants::abelian(1),
    )
    .unwrap()
    .with_group_chart(Box::new(CircleTranslation { axis: 2, period: 2.0 * std::f64::consts::PI }))
    .unwrap()
}

pub fn warp_point() -> Vec<f64> {
    vec![0.3, 0.2, 0.3 * 0.3 - 0.2 * 0.04]
}

const Q0: [f64; 3] = [1.0, 0.4, 0.7];
const DRIFT: [f64; 3] = [1.0, 0.5, -0.3];

fn su2_metric(q: &[f64]) -> [[f64; 3]; 3] {
    let c = q[0].cos();
    [[1.0, 0.0, 0.0], [0.0, 1.0, c], [0.0, c, 1.0]]
}

fn su2_killing(q: &[f64]) -> [[f64; 3]; 3] {
    let (st, ct) = (q[0].sin(), q[0].cos());
    let (sp, cp) = (q[2].sin(), q[2].cos());
    [[sp, cp, 0.0], [-cp / st, sp / st, 0.0], [ct * cp / st, -ct * sp / st, 1.0]]
}

/// SU(2) × ℝ with metric h(t)²·(bi-invariant) + dt², h = 1.2 + 0.3 sin t,
/// SU(2) acting on the first factor, gauge χ = (θ,φ,ψ) − Q0 + 0.2t·(1, 0.5, −0.3).
pub fn su2_warped() -> BundleSpec {
    let metric = FnField::new(4, &[4, 4], |q| {
        let h = 1.2 + 0.3 * q[3].sin();
        let g = su2_metric(q);
        let mut t = Tensor::zeros(&[4, 4]);
        for i in 0..3 {
            for j in 0..3 {
                t.set2(i, j, h * h * g[i][j]);
            }
        }
        t.set2(3, 3, 1.0);
        t
    });
    let killing = FnField::new(4, &[4, 3], |q| {
        let k = su2_killing(q);
        let mut t = Tensor::zeros(&[4, 3]);
        for i in 0..3 {
            for j in 0..3 {
                t.set2(i, j, k[i][j]);
            }
        }
        t
    });
    let gauge = FnField::new(4, &[3], |q| Tensor::vector(&[0, 1, 2].map(|i| q[i] - Q0[i] + 0.2 * q[3] * DRIFT[i])));
    BundleSpec::new(Box::new(metric), Box::new(killing), Box::new(gauge), StructureConstants::su2())
        .unwrap()
        .with_chart_domain(|q| q[0] > 0.0 && q[0] < std::f64::consts::PI)
}

pub fn su2_warped_point() -> Vec<f64> {
    let t = 0.5;
    vec![Q0[0] - 0.2 * t * DRIFT[0], Q0[1] - 0.2 * t * DRIFT[1], Q0[2] - 0.2 * t * DRIFT[2], t]
}
