//! Invariants checked on randomly drawn inputs.

use bundle_reduction::stochastic::{mean_and_standard_error, pairwise_sum};
use bundle_reduction::*;
use proptest::prelude::*;

fn matrix3(v: &[f64]) -> Tensor {
    Tensor::matrix(3, 3, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_is_two_sided(v in prop::collection::vec(-1.0f64..1.0, 9)) {
        let mut m = matrix3(&v);
        for i in 0..3 {
            m.set2(i, i, m.at2(i, i) + 4.0);
        }
        let (inv, d) = inverse_det(&m).unwrap();
        prop_assert!(m.matmul(&inv).sub(&Tensor::identity(3)).max_abs() < 1e-13);
        prop_assert!(inv.matmul(&m).sub(&Tensor::identity(3)).max_abs() < 1e-13);
        let (_, d_inv) = inverse_det(&inv).unwrap();
        prop_assert!((d * d_inv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_inverse_agrees_with_lu(v in prop::collection::vec(-1.0f64..1.0, 4)) {
        let m = Tensor::matrix(2, 2, &[v[0] + 3.0, v[1], v[2], v[3] + 3.0]);
        let (inv, d) = inverse_det(&m).unwrap();
        prop_assert!(m.matmul(&inv).sub(&Tensor::identity(2)).max_abs() < 1e-14);
        prop_assert!((d - tensor::det(&m).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn cholesky_reconstructs(v in prop::collection::vec(-1.0f64..1.0, 9)) {
        let b = matrix3(&v);
        let m = b.transpose().matmul(&b).add(&Tensor::identity(3));
        let x = sym_factor(&m).unwrap();
        prop_assert!(x.matmul(&x.transpose()).sub(&m).max_abs() < 1e-13);
        for i in 0..3 {
            for j in i + 1..3 {
                prop_assert_eq!(x.at2(i, j), 0.0);
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_naive(v in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() < 1e-12 * scale);
    }

    #[test]
    fn standard_error_of_constant_is_zero(c in -5.0f64..5.0, n in 2usize..50) {
        let (m, se) = mean_and_standard_error(&vec![c; n]);
        prop_assert!((m - c).abs() < 1e-14 && se.abs() < 1e-14);
    }

    #[test]
    fn central_difference_is_exact_on_quadratics(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -1.0f64..1.0) {
        let f = FnField::new(1, &[], move |q| Tensor::scalar(a * q[0] * q[0] + b * q[0]));
        let d1 = fd_derivative(&f, &[x], 0, 1, &FdConfig::default()).unwrap();
        let d2 = fd_derivative(&f, &[x], 0, 2, &FdConfig::default().with_step(1e-3)).unwrap();
        prop_assert!((d1.data()[0] - (2.0 * a * x + b)).abs() < 1e-8);
        prop_assert!((d2.data()[0] - 2.0 * a).abs() < 1e-6);
    }

    #[test]
    fn projector_invariants_on_random_surface_points(seed in 0u64..1000, which in 0usize..5) {
        let s = make_scenario(SCENARIO_NAMES[which]).unwrap();
        let q = &s.random_surface_points(1, seed).unwrap()[0];
        let f = s.bundle.frame(q).unwrap();
        let p = f.total_dim();
        let id = Tensor::identity(p);
        prop_assert!(f.n.matmul(&f.n).sub(&f.n).max_abs() < 1e-10);
        prop_assert!(f.n.matmul(&f.k).max_abs() < 1e-10);
        prop_assert!(f.lambda.matmul(&f.k).sub(&Tensor::identity(f.group_dim())).max_abs() < 1e-10);
        prop_assert!(f.p_perp.matmul(&f.p_perp).sub(&f.p_perp).max_abs() < 1e-10);
        prop_assert!(f.chi_grad.matmul(&f.p_perp).max_abs() < 1e-10);
        prop_assert!(f.gh.matmul(&f.k).max_abs() < 1e-10);
        prop_assert!(f.pi.add(&f.k.matmul(&f.conn)).sub(&id).max_abs() < 1e-12);
        prop_assert!(f.m.asymmetry() < 1e-12);
    }

    #[test]
    fn orbit_volume_is_constant_along_fibers(seed in 0u64..1000, which in 0usize..5, a in prop::collection::vec(-0.4f64..0.4, 3)) {
        let s = make_scenario(SCENARIO_NAMES[which]).unwrap();
        let q = &s.random_surface_points(1, seed).unwrap()[0];
        let chart = s.bundle.group_chart().unwrap();
        let moved = chart.act(q, &a[..chart.dim()]);
        prop_assume!(s.bundle.in_chart(&moved));
        let d0 = s.bundle.frame(q).unwrap().det_gamma;
        let d1 = s.bundle.frame(&moved).unwrap().det_gamma;
        prop_assert!((d0 - d1).abs() < 1e-10 * d0.abs());
    }

    #[test]
    fn projection_lands_on_the_surface(seed in 0u64..1000, which in 0usize..5, dx in prop::collection::vec(-0.05f64..0.05, 3)) {
        let s = make_scenario(SCENARIO_NAMES[which]).unwrap();
        let q = &s.random_surface_points(1, seed).unwrap()[0];
        let off: Vec<f64> = q.iter().zip(&dx).map(|(a, b)| a + b).collect();
        prop_assume!(s.bundle.in_chart(&off));
        let on = s.bundle.project_to_surface(&off).unwrap();
        prop_assert!(s.bundle.surface_residual(&on).unwrap() < 1e-10);
    }
}

#[test]
fn tensor_reshape_round_trip() {
    let t = Tensor::new(&[2, 3, 4], (0..24).map(f64::from).collect()).unwrap();
    let r = t.clone().reshape(&[6, 4]).unwrap().reshape(&[2, 3, 4]).unwrap();
    assert_eq!(r, t);
    assert_eq!(t.at3(1, 2, 3), 23.0);
    assert!(t.clone().reshape(&[5, 5]).is_err());
    assert!(Tensor::new(&[1; 7], vec![0.0]).is_err());
}
