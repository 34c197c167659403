//! Numerical identity suite: structural invariants of the bundle data and the
//! intermediate identities behind the curvature decomposition, each reported
//! as the largest residual over a set of gauge-surface points.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::BundleSpec;
use crate::curvature::{
    group_ricci, horizontal_laplacian_drift, j_i_from_parts, nabla_kk, orbit_scalar_contraction, scalar_curvature_direct,
    FSign, PointGeometry,
};
use crate::error::Result;
use crate::tensor::Tensor;

/// Outcome of one identity over all evaluation points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Tolerances of the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityTolerances {
    /// Algebraic identities of the frame (projectors, Killing property).
    pub algebraic: f64,
    /// Identities involving one finite-difference level.
    pub lemma: f64,
    /// Agreement of the printed j_II representations.
    pub j2: f64,
    /// Curvature identities (two finite-difference levels).
    pub curvature: f64,
}

impl Default for IdentityTolerances {
    fn default() -> Self {
        IdentityTolerances { algebraic: 1e-10, lemma: 1e-6, j2: 1e-8, curvature: 1e-5 }
    }
}

/// Names of the identities in report order.
pub const IDENTITY_NAMES: [&str; 18] = [
    "projector_invariants",
    "killing_property",
    "horizontal_metric_annihilates_killing",
    "horizontal_metric_invariance",
    "adapted_pseudoinverse",
    "curvature_antisymmetry",
    "j2_representations",
    "gamma_derivative_identity",
    "killing_relation",
    "alf_bet_cancellation",
    "integrand_equality",
    "contribution_lemma",
    "jtilde_routes",
    "decomposition",
    "nonholonomic_vs_direct",
    "orbit_ricci_trace",
    "second_fundamental_form_symmetry",
    "fiber_independence",
];

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Residuals of every identity at one gauge-surface point, in the order of
/// [`IDENTITY_NAMES`]. `group_points` feed the fiber-independence check.
pub fn identity_residuals(b: &BundleSpec, q: &[f64], eps_f: FSign, group_points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let pg = PointGeometry::new(b, q)?;
    let f = pg.frame();
    let (p, ng) = (f.total_dim(), f.group_dim());
    let (n, k, gi_, m) = (&f.n, &f.k, &f.g_inv, &f.m);
    let h = pg.christoffel_horizontal();
    let dn = pg.d_n()?;
    let g = f.log_det_gamma_gradient();
    let hess = pg.hess_log_det_gamma()?;
    let mut out = Vec::with_capacity(IDENTITY_NAMES.len());

    // projector_invariants
    let ps = b.projectors(q)?;
    let id_g = Tensor::identity(ng);
    let id_p = Tensor::identity(p);
    let r = [
        n.matmul(k).max_abs(),
        ps.lambda.matmul(k).sub(&id_g).max_abs(),
        f.conn.matmul(k).sub(&id_g).max_abs(),
        n.matmul(n).sub(n).max_abs(),
        ps.pi.matmul(&ps.pi).sub(&ps.pi).max_abs(),
        ps.p_perp.matmul(&ps.p_perp).sub(&ps.p_perp).max_abs(),
        f.chi_grad.matmul(&ps.p_perp).max_abs(),
        ps.phi.matmul(&ps.phi_inv).sub(&id_g).max_abs(),
        n.add(&k.matmul(&ps.lambda)).sub(&id_p).max_abs(),
    ];
    out.push(max_abs(r));

    out.push(b.killing_residual(q)?);
    out.push(f.gh.matmul(k).max_abs());

    // K^E ∂_E G^H_AB
    let mut inv = 0.0f64;
    for a in 0..p {
        for bb in 0..p {
            for mu in 0..ng {
                let v: f64 = (0..p).map(|e| k.at2(e, mu) * f.dgh.at3(a, bb, e)).sum();
                inv = inv.max(v.abs());
            }
        }
    }
    out.push(inv);

    // adapted pseudoinverse: (8)⁺ · (8) = diag(P⊥, I) at a = e
    let pseudo = match b.group_chart() {
        Some(chart) => {
            let e = chart.identity();
            let am = b.adapted_metric(q, &e)?;
            let ai = b.adapted_pseudoinverse(q, &e)?;
            let blk = b.adapted_identity_block(q)?;
            ai.matmul(&am).sub(&blk).max_abs()
        }
        None => 0.0,
    };
    out.push(pseudo);

    let cf = pg.connection_curvature()?;
    let mut anti = 0.0f64;
    for mu in 0..ng {
        for a in 0..p {
            for bb in 0..p {
                anti = anti.max((cf.at3(mu, a, bb) + cf.at3(mu, bb, a)).abs());
            }
        }
    }
    out.push(anti);

    // j_II: the printed representations and the identity route
    let [j1, j2, j3] = pg.mean_curvature_orbit_forms();
    out.push(max_abs((0..p).map(|i| (j1[i] - j2[i]).abs().max((j2[i] - j3[i]).abs()))));

    // γ^{σμ}(∇_{K_μ}K_σ)^E = −½ G^{PE} N^A_P g_A, N-projected
    let nkk = nabla_kk(f);
    let mut v = vec![0.0; p];
    for (c, vc) in v.iter_mut().enumerate() {
        let mut s = 0.0;
        for a in 0..ng {
            for bb in 0..ng {
                s += f.gamma_inv.at2(a, bb) * nkk.at3(c, a, bb);
            }
        }
        let rhs: f64 = (0..p).map(|pp| gi_.at2(pp, c) * (0..p).map(|aa| n.at2(aa, pp) * g[aa]).sum::<f64>()).sum();
        *vc = s + 0.5 * rhs;
    }
    out.push(max_abs(n.matvec(&v)));

    // N^C_P(∂_E K^P_α + K^F_α ^HΓ^P_FE) = 0
    let mut kill = 0.0f64;
    for c in 0..p {
        for al in 0..ng {
            for e in 0..p {
                let mut s = 0.0;
                for pp in 0..p {
                    let mut t = f.dk.at3(pp, al, e);
                    for ff in 0..p {
                        t += k.at2(ff, al) * h.at3(pp, ff, e);
                    }
                    s += n.at2(c, pp) * t;
                }
                kill = kill.max(s.abs());
            }
        }
    }
    out.push(kill);

    // last terms of the α/β expansions
    let kl = k.matmul(&ps.lambda); // K^b_m Λ^m_B
    let gn = gi_.matmul(&n.transpose()); // G^{BD} N^d_D = gn[B, d]
    let mut alfbet = 0.0f64;
    for a in 0..p {
        let mut alf = 0.0;
        let mut bet = 0.0;
        for bb in 0..p {
            for d in 0..p {
                // alf: Σ_B G^{BD} (KΛ)^b_B N^d_D ∂_d N^a_b
                let w_alf: f64 = (0..p).map(|big_b| kl.at2(bb, big_b) * gn.at2(big_b, d)).sum();
                alf += w_alf * dn.at3(a, bb, d);
                // bet: G^{BD} N^b_B (KΛ)^d_D N^a_c ^HΓ^c_bd
                let mut w_bet = 0.0;
                for big_b in 0..p {
                    for big_d in 0..p {
                        w_bet += gi_.at2(big_b, big_d) * n.at2(bb, big_b) * kl.at2(d, big_d);
                    }
                }
                let nh: f64 = (0..p).map(|c| n.at2(a, c) * h.at3(c, bb, d)).sum();
                bet += w_bet * nh;
            }
        }
        alfbet = alfbet.max((alf - bet).abs());
    }
    out.push(alfbet);

    // integrand_1 = integrand_2
    let j_i = j_i_from_parts(f, h, &dn);
    let drift = horizontal_laplacian_drift(f, h);
    let mh: f64 = m.data().iter().zip(hess.data()).map(|(x, y)| x * y).sum();
    let i1 = 0.25 * mh + 0.5 * (0..p).map(|a| (drift[a] + j_i[a]) * g[a]).sum::<f64>();
    let mut i2 = 0.25 * mh;
    for a in 0..p {
        let mut s = 0.0;
        for bb in 0..p {
            for d in 0..p {
                let nh: f64 = (0..p).map(|c| n.at2(a, c) * h.at3(c, bb, d)).sum();
                s += m.at2(bb, d) * (dn.at3(a, bb, d) - nh);
            }
        }
        i2 += 0.25 * s * g[a];
    }
    out.push((i1 - i2).abs());

    // contribution lemma with X^a_cp = ∂_p N^a_c − N^a_b ^HΓ^b_cp
    let mut x = Tensor::zeros(&[p, p, p]);
    for a in 0..p {
        for c in 0..p {
            for pp in 0..p {
                let nh: f64 = (0..p).map(|bb| n.at2(a, bb) * h.at3(bb, c, pp)).sum();
                x.set3(a, c, pp, dn.at3(a, c, pp) - nh);
            }
        }
    }
    let (mut t_p, mut t_ac, mut t_ab) = (0.0, 0.0, 0.0);
    for a in 0..p {
        for c in 0..p {
            for pp in 0..p {
                let xg = x.at3(a, c, pp) * g[a];
                t_p += gn.at2(c, pp) * xg;
                t_ac += 0.5 * m.at2(pp, c) * xg;
                t_ab += 0.5 * gn.at2(c, pp) * xg;
            }
        }
    }
    out.push((t_p - t_ac - t_ab).abs());

    let rep = pg.report(eps_f)?;
    out.push(rep.residual_jroutes);
    out.push(rep.residual_decomposition.abs());
    out.push((rep.r_p_nonholonomic - rep.r_p_direct).abs());

    let rg = -orbit_scalar_contraction(&f.gamma, &f.gamma_inv, b.structure_constants());
    let ric = group_ricci(&f.gamma, &f.gamma_inv, b.structure_constants());
    let tr: f64 = f.gamma_inv.data().iter().zip(ric.data()).map(|(x, y)| x * y).sum();
    out.push((tr - rg).abs());

    let (j, _) = pg.second_fundamental_form();
    let mut sym = 0.0f64;
    for bb in 0..p {
        for al in 0..ng {
            for be in 0..ng {
                sym = sym.max((j.at3(bb, al, be) - j.at3(bb, be, al)).abs());
            }
        }
    }
    out.push(sym);

    let mut fib = 0.0f64;
    for a in group_points {
        let r = scalar_curvature_direct(b, q, Some(a))?;
        fib = fib.max((r - rep.r_p_direct).abs());
    }
    out.push(fib);
    Ok(out)
}

fn tolerance_of(name: &str, tol: &IdentityTolerances) -> f64 {
    match name {
        "projector_invariants" | "killing_property" | "horizontal_metric_annihilates_killing" | "adapted_pseudoinverse" => {
            tol.algebraic
        }
        "j2_representations" => tol.j2,
        "jtilde_routes" | "decomposition" | "nonholonomic_vs_direct" | "fiber_independence" => tol.curvature,
        _ => tol.lemma,
    }
}

/// `n` group-chart points in a neighbourhood of the identity that keeps the
/// translated points inside the chart.
pub fn random_group_points(b: &BundleSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let Some(chart) = b.group_chart() else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..chart.dim()).map(|_| rng.random_range(-0.4..0.4)).collect()).collect()
}

/// Run the whole suite over `points` and fold each identity to its largest residual.
pub fn verify_identities(
    b: &BundleSpec,
    points: &[Vec<f64>],
    eps_f: FSign,
    tol: &IdentityTolerances,
    group_points: &[Vec<f64>],
) -> Result<Vec<IdentityResult>> {
    let mut worst = vec![0.0f64; IDENTITY_NAMES.len()];
    for q in points {
        let r = identity_residuals(b, q, eps_f, group_points)?;
        for (w, v) in worst.iter_mut().zip(r) {
            *w = if v.is_nan() || w.is_nan() { f64::NAN } else { w.max(v) };
        }
    }
    Ok(IDENTITY_NAMES
        .iter()
        .zip(worst)
        .map(|(name, r)| {
            let tolerance = tolerance_of(name, tol);
            IdentityResult { name: name.to_string(), max_residual: r, tolerance, pass: r <= tolerance }
        })
        .collect())
}
