//! Path-level behavior of the original and reduced diffusions.

use bundle_reduction::scenarios::{make_scenario, wrapped_gaussian_cos_pairing};
use bundle_reduction::stochastic::simulate_reduced_with_increments;
use bundle_reduction::*;

#[test]
fn reduced_paths_stay_on_the_gauge_surface() {
    for name in ["hopf_s3", "su2_self", "flat_torus_u1_tilted"] {
        let s = make_scenario(name).unwrap();
        let cfg = SdeConfig::for_horizon(0.5, 0.2, 1e-2, 1, 3);
        let p = simulate_reduced(&s.bundle, &cfg, &s.points[0]).unwrap();
        assert_eq!(p.status, PathStatus::Completed);
        assert_eq!(p.states.len(), cfg.n_steps + 1);
        assert!(p.max_surface_residual < 1e-10, "{name}: {}", p.max_surface_residual);
    }
}

#[test]
fn flat_weights_are_exactly_one() {
    let s = make_scenario("flat_torus_u1").unwrap();
    let cfg = SdeConfig::for_horizon(1.0, 0.3, 1e-2, 200, 5);
    let one = |_: &[f64]| 1.0;
    let e = estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &[0.3, 0.0], &one, "one").unwrap();
    assert_eq!(e.value, 1.0);
    assert_eq!(e.standard_error, 0.0);
    assert_eq!(e.n_killed, 0);
}

#[test]
fn flat_cosine_pairing_matches_heat_kernel() {
    let s = make_scenario("flat_torus_u1_tilted").unwrap();
    let cfg = SdeConfig::for_horizon(1.0, 0.5, 1e-2, 4000, 9);
    let q = s.points[0].clone();
    let f = |x: &[f64]| x[0].cos();
    let e = estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &q, &f, "cos").unwrap();
    let want = wrapped_gaussian_cos_pairing(q[0], 0.5);
    assert!((e.value - want).abs() < 4.0 * e.standard_error, "{} ± {} vs {want}", e.value, e.standard_error);
}

#[test]
fn girsanov_weight_produces_the_bessel_drift() {
    // For planar Brownian motion with generator ½μ²κΔ, E r_t² = r_0² + 2μ²κ t.
    let s = make_scenario("polar_plane_u1").unwrap();
    let (mu2k, t) = (0.8, 0.5);
    let mut cfg = SdeConfig::for_horizon(mu2k, t, 1e-2, 4000, 21);
    // The reduced radial motion is driftless and may reach r = 0; such paths
    // carry zero weight in the exact representation.
    cfg.max_killed_fraction = 0.05;
    let r2 = |x: &[f64]| x[0] * x[0];
    let e = estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &[1.5, 0.0], &r2, "r2").unwrap();
    let want = 1.5 * 1.5 + 2.0 * mu2k * t;
    assert!((e.value - want).abs() < 4.0 * e.standard_error + 0.02, "{} ± {} vs {want}", e.value, e.standard_error);
    // Without the weight the radial coordinate has no drift at all.
    let r = |x: &[f64]| x[0];
    let mut unweighted = 0.0;
    for i in 0..400 {
        let c = SdeConfig { seed: 100 + i, ..cfg.clone() };
        let p = simulate_reduced(&s.bundle, &c, &[1.5, 0.0]).unwrap();
        unweighted += p.states.last().map(|x| r(x)).unwrap();
    }
    assert!((unweighted / 400.0 - 1.5).abs() < 0.1);
}

#[test]
fn stochastic_and_ito_forms_agree_on_fine_grids() {
    let s = make_scenario("polar_plane_u1").unwrap();
    let cfg = SdeConfig::for_horizon(1.0, 0.3, 1e-3, 1, 4);
    for seed in 0..5 {
        let p = simulate_reduced(&s.bundle, &SdeConfig { seed, ..cfg.clone() }, &[1.2, 0.0]).unwrap();
        let a = girsanov_log_factor(&p, GirsanovForm::Stochastic).unwrap();
        let b = girsanov_log_factor(&p, GirsanovForm::Ito).unwrap();
        assert!((a - b).abs() < 0.03, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let s = make_scenario("hopf_s3").unwrap();
    let mut cfg = SdeConfig::for_horizon(1.0, 0.1, 1e-2, 50, 77);
    cfg.max_killed_fraction = 0.1;
    let f = |x: &[f64]| x[0].cos();
    let a = estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &s.points[0], &f, "c").unwrap();
    let b = estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &s.points[0], &f, "c").unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
    let c = estimate_green(&s.bundle, &SdeConfig { seed: 78, ..cfg }, GreenKind::ReducedSigma, &s.points[0], &f, "c").unwrap();
    assert_ne!(a.value, c.value);
}

#[test]
fn shared_increments_reproduce_the_seeded_path() {
    let s = make_scenario("polar_plane_u1").unwrap();
    let cfg = SdeConfig::for_horizon(1.0, 0.1, 1e-2, 1, 12);
    let p = simulate_reduced(&s.bundle, &cfg, &[1.0, 0.0]).unwrap();
    let q = simulate_reduced_with_increments(&s.bundle, &cfg, &[1.0, 0.0], &p.dw).unwrap();
    assert_eq!(p, q);
}

#[test]
fn hopf_reduction_relation_holds_coarsely() {
    let s = make_scenario("hopf_s3").unwrap();
    let mut cfg = SdeConfig::for_horizon(1.0, 0.2, 1e-2, 1500, 31);
    // Euler steps cross the coordinate poles of S² at a rate that decays only
    // logarithmically in dt.
    cfg.max_killed_fraction = 0.1;
    let f = |x: &[f64]| x[0].cos();
    let c = verify_reduction_relation(&s.bundle, &cfg, &s.points[0], &f, "cos_theta").unwrap();
    assert!(c.z_score < 4.0, "{c:?}");
}

#[test]
fn killed_paths_are_counted_and_bounded() {
    let s = make_scenario("polar_plane_u1").unwrap();
    let mut cfg = SdeConfig::for_horizon(4.0, 0.5, 1e-2, 300, 8);
    let f = |x: &[f64]| x[0];
    cfg.max_killed_fraction = 1.0;
    let e = estimate_green(&s.bundle, &cfg, GreenKind::Original, &[0.2, 0.0], &f, "r").unwrap();
    assert!(e.n_killed > 0 && e.n_paths == 300);
    cfg.max_killed_fraction = 0.0;
    let err = estimate_green(&s.bundle, &cfg, GreenKind::Original, &[0.2, 0.0], &f, "r").unwrap_err();
    assert!(matches!(err, Error::TooManyTruncated { .. }), "{err:?}");
}

#[test]
fn reduced_start_must_lie_on_the_surface() {
    let s = make_scenario("polar_plane_u1").unwrap();
    let cfg = SdeConfig::for_horizon(1.0, 0.1, 1e-2, 10, 0);
    let f = |_: &[f64]| 1.0;
    assert!(matches!(
        estimate_green(&s.bundle, &cfg, GreenKind::ReducedSigma, &[1.0, 0.3], &f, "one"),
        Err(Error::InvalidConfig(_))
    ));
    assert!(estimate_green(&s.bundle, &SdeConfig { n_paths: 0, ..cfg }, GreenKind::Original, &[1.0, 0.0], &f, "one").is_err());
}

#[test]
fn su2_orbit_projection_reaches_the_gauge_point_from_any_branch() {
    use bundle_reduction::scenarios::SU2_SURFACE_POINT;
    let s = make_scenario("su2_self").unwrap();
    for (i, theta) in [0.2, 0.9, 1.6, 2.4, 2.9].iter().enumerate() {
        for phi in [-7.0, -1.0, 0.5, 3.0, 9.0] {
            let psi = -12.0 + 5.3 * i as f64 + 0.7 * phi;
            let x = s.bundle.orbit_projection(&[*theta, phi, psi]).unwrap();
            let err = s.bundle.surface_residual(&x).unwrap();
            assert!(err < 1e-10, "{theta} {phi} {psi}: {x:?}");
            assert!((x[0] - SU2_SURFACE_POINT[0]).abs() < 1e-10);
        }
    }
}
