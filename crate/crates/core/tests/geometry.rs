//! Curvature decomposition, Jacobian integrand and identity suite on bundles
//! with non-constant orbit metrics, curved gauges and a non-abelian fiber.
//! Reference values come from the symbolic and automatic-differentiation
//! scripts in `docs/oracles`.

mod common;

use bundle_reduction::curvature::{decomposition_report, jacobian_integrand, RESOLVED_F_SIGN};
use bundle_reduction::field::StencilCache;
use bundle_reduction::verify::random_group_points;
use bundle_reduction::*;
use common::*;

/// Fixtures have no analytic derivatives, so curvature carries two nested
/// finite-difference levels.
const FD_CURVATURE_TOL: f64 = 1e-4;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn warped_plane_matches_symbolic_values() {
    let b = warp();
    let r = decomposition_report(&b, &warp_point(), RESOLVED_F_SIGN).unwrap();
    assert!(rel(r.r_p_direct, -0.5181347150259067) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.jsq, 0.015310813713119814) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.jtilde_coords, 0.5028239013127869) < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.hr.abs() < FD_CURVATURE_TOL && r.f_sq.abs() < FD_CURVATURE_TOL && r.r_g.abs() < 1e-12);
    assert!(r.residual_decomposition < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.residual_jroutes < FD_CURVATURE_TOL, "{r:?}");
}

#[test]
fn tilted_polar_gauge_matches_symbolic_values() {
    let b = polar_tilted();
    let r = decomposition_report(&b, &polar_tilted_point(), RESOLVED_F_SIGN).unwrap();
    assert!(rel(r.jsq, 0.5917159763313609) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.jtilde_coords, -0.5917159763313609) < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.r_p_direct.abs() < FD_CURVATURE_TOL);
    assert!(r.residual_decomposition < FD_CURVATURE_TOL, "{r:?}");
}

#[test]
fn tilted_hopf_gauge_keeps_total_curvature() {
    let b = hopf_tilted();
    let r = decomposition_report(&b, &hopf_tilted_point(), RESOLVED_F_SIGN).unwrap();
    assert!((r.r_p_direct - 6.0).abs() < FD_CURVATURE_TOL, "{r:?}");
    assert!((r.r_p_nonholonomic - 6.0).abs() < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.residual_decomposition < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.residual_jroutes < FD_CURVATURE_TOL, "{r:?}");
}

#[test]
fn warped_su2_decomposition_closes() {
    let b = su2_warped();
    let q = su2_warped_point();
    let r = decomposition_report(&b, &q, RESOLVED_F_SIGN).unwrap();
    assert!(rel(r.r_p_direct, 1.2424994374231708) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.r_g, 0.8306232937692273) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.jsq, 0.11514698772304771) < FD_CURVATURE_TOL, "{r:?}");
    assert!(rel(r.jtilde_coords, -0.5270231313769915) < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.residual_decomposition < FD_CURVATURE_TOL, "{r:?}");
    assert!(r.residual_jroutes < FD_CURVATURE_TOL, "{r:?}");
}

#[test]
fn wrong_f_sign_breaks_the_decomposition_only_with_field_strength() {
    let b = warp();
    let plus = decomposition_report(&b, &warp_point(), FSign::Plus).unwrap();
    assert!(plus.residual_decomposition < FD_CURVATURE_TOL);
    let b = su2_warped();
    let plus = decomposition_report(&b, &su2_warped_point(), FSign::Plus).unwrap();
    let minus = decomposition_report(&b, &su2_warped_point(), FSign::Minus).unwrap();
    assert!(minus.residual_decomposition < FD_CURVATURE_TOL);
    assert!((plus.residual_decomposition - 0.5 * minus.f_sq).abs() < FD_CURVATURE_TOL, "{plus:?}");
}

#[test]
fn jtilde_scales_inversely_with_the_metric() {
    let q = polar_tilted_point();
    let base = jacobian_integrand(&polar_tilted(), &q, JacobianRoute::Coords).unwrap();
    let scaled = BundleSpec::new(
        Box::new(FnField::new(2, &[2, 2], |q| Tensor::diag(&[4.0, 4.0 * q[0] * q[0]]))),
        Box::new(u1_killing(2, 1)),
        Box::new(FnField::new(2, &[1], |q| Tensor::vector(&[q[1] - 0.4 * q[0].sin()]))),
        StructureConstants::abelian(1),
    )
    .unwrap()
    .with_chart_domain(|q| q[0] > 0.0);
    for route in [JacobianRoute::Coords, JacobianRoute::Geometric] {
        let s = jacobian_integrand(&scaled, &q, route).unwrap();
        assert!((s - base / 4.0).abs() < 1e-6, "{route:?}: {s} vs {}", base / 4.0);
    }
}

#[test]
fn kernel_projector_derivative_matches_stencil() {
    let cases: Vec<(BundleSpec, Vec<f64>)> = vec![
        (polar_tilted(), polar_tilted_point()),
        (hopf_tilted(), hopf_tilted_point()),
        (warp(), warp_point()),
        (su2_warped(), su2_warped_point()),
    ];
    for (b, q) in cases {
        let f = b.frame(&q).unwrap();
        let fast = b.kernel_projector_derivative(&f, b.fd()).unwrap();
        let slow = StencilCache::build(&q, b.fd(), |x| b.kernel_projector(x)).unwrap().jacobian(|t| t.clone()).unwrap();
        assert!(fast.sub(&slow).max_abs() < 1e-6, "{}", fast.sub(&slow).max_abs());
    }
}

#[test]
fn identity_suite_holds_on_fixtures() {
    let tol = IdentityTolerances { algebraic: 1e-9, lemma: 1e-5, j2: 1e-7, curvature: FD_CURVATURE_TOL };
    let cases: Vec<(BundleSpec, Vec<f64>)> = vec![
        (polar_tilted(), polar_tilted_point()),
        (hopf_tilted(), hopf_tilted_point()),
        (warp(), warp_point()),
        (su2_warped(), su2_warped_point()),
    ];
    for (b, q) in cases {
        let gp = random_group_points(&b, 2, 3);
        for r in verify_identities(&b, &[q], RESOLVED_F_SIGN, &tol, &gp).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }
}

#[test]
fn scenario_oracles_hold_at_random_surface_points() {
    for name in ["polar_plane_u1", "hopf_s3"] {
        let s = make_scenario(name).unwrap();
        for q in s.random_surface_points(5, 11).unwrap() {
            let r = decomposition_report(&s.bundle, &q, RESOLVED_F_SIGN).unwrap();
            assert!(r.residual_decomposition < 1e-5, "{name} {q:?}: {r:?}");
            if name == "hopf_s3" {
                assert!((r.r_p_direct - 6.0).abs() < 1e-5);
            } else {
                assert!((r.jtilde_coords + 1.0 / (q[0] * q[0])).abs() < 1e-6 * r.jtilde_coords.abs());
            }
        }
    }
}
