//! Curvature of the total space in the horizontal-lift frame and the pieces of
//! its decomposition: horizontal Riemann scalar `^H R`, orbit scalar `R_𝒢`,
//! connection-curvature square `ℱ²`, second fundamental form of the orbits,
//! mean-curvature vectors and the reduction-Jacobian integrand `J̃`.
//!
//! All curvature scalars and Ricci blocks use the sign convention in which the
//! round sphere is positively curved. In that convention the scalar curvature
//! splits as
//!
//! ```text
//! R_𝒫 = ^H R + R_𝒢 + ε_F·¼ℱ² − J̃ − ‖j‖²,   ε_F = −1.
//! ```
//!
//! `^HΓ` is defined only modulo terms annihilated by `N`; the representative
//! `(N G⁻¹)^A_S ^HΓ_{S,CD}` is used throughout, and only `N`-projected
//! statements about it are ever checked.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bundle::{BundleSpec, Frame};
use crate::error::{Error, Result};
use crate::field::{field_jacobian, FdConfig, SmoothField, StencilCache};
use crate::group::StructureConstants;
use crate::tensor::{inverse_det, Tensor};

/// Sign in front of `¼ℱ²` in the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FSign {
    Plus,
    Minus,
}

impl FSign {
    pub fn value(self) -> f64 {
        match self {
            FSign::Plus => 1.0,
            FSign::Minus => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(FSign::Plus)
        } else if v == -1.0 {
            Ok(FSign::Minus)
        } else {
            Err(Error::InvalidConfig(alloc::format!("eps_f must be +1 or -1, got {v}")))
        }
    }
}

/// The sign that makes the decomposition hold (resolved on the Hopf bundle).
pub const RESOLVED_F_SIGN: FSign = FSign::Minus;

/// Christoffel symbols in the coordinate, horizontal and nonholonomic frames.
/// Upper index first, then lower indices in order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChristoffelTable {
    /// Γ̃^C_AB.
    pub coordinate: Tensor,
    /// ^HΓ^B_CD (kernel representative).
    pub horizontal: Tensor,
    /// Γ̌^D_AB = N^E_A ^HΓ^D_BE.
    pub hh_h: Tensor,
    /// Γ̌^μ_AB = −½ N^E_A N^F_B ℱ^μ_EF.
    pub hh_v: Tensor,
    /// Γ̌^P_αB = ½ G^{PS} N^F_S N^E_B ℱ^μ_EF γ_μα.
    pub vh_h: Tensor,
    /// Γ̌^P_αβ = −½ G^{PS} N^E_S 𝒟_E γ_αβ.
    pub vv_h: Tensor,
    /// Γ̌^μ_αB = ½ γ^{μν} N^E_B 𝒟_E γ_αν.
    pub vh_v: Tensor,
    /// Γ̌^μ_αβ = ½ γ^{μν}(c^σ_αβ γ_σν − c^σ_νβ γ_ασ − c^σ_να γ_βσ).
    pub vv_v: Tensor,
}

/// Every scalar of the decomposition at one gauge-surface point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub r_p_direct: f64,
    pub r_p_nonholonomic: f64,
    pub hr: f64,
    pub r_g: f64,
    pub f_sq: f64,
    pub j_ii: Vec<f64>,
    pub j_i: Vec<f64>,
    pub jsq: f64,
    pub jtilde_coords: f64,
    pub jtilde_geom: f64,
    /// R_P_direct − (HR + R_G + ε_F¼ℱ² − J̃_coords − ‖j‖²).
    pub residual_decomposition: f64,
    /// |J̃_coords − J̃_geom|.
    pub residual_jroutes: f64,
    pub eps_f: f64,
}

/// Which formula evaluates `J̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum JacobianRoute {
    /// Coordinate formula in N, G, γ derivatives.
    Coords,
    /// From the curvature decomposition.
    Geometric,
}

fn christoffel_from(g_inv: &Tensor, dg: &Tensor) -> Tensor {
    let p = g_inv.rows();
    let mut low = Tensor::zeros(&[p, p, p]);
    for e in 0..p {
        for a in 0..p {
            for b in 0..p {
                low.set3(e, a, b, 0.5 * (dg.at3(e, b, a) + dg.at3(e, a, b) - dg.at3(a, b, e)));
            }
        }
    }
    raise_first(g_inv, &low)
}

fn raise_first(m: &Tensor, low: &Tensor) -> Tensor {
    let s = low.shape();
    let (p, q, r) = (s[0], s[1], s[2]);
    let rows = m.rows();
    let mut out = Tensor::zeros(&[rows, q, r]);
    for c in 0..rows {
        for e in 0..p {
            let w = m.at2(c, e);
            if w == 0.0 {
                continue;
            }
            for a in 0..q {
                for b in 0..r {
                    let v = out.at3(c, a, b) + w * low.at3(e, a, b);
                    out.set3(c, a, b, v);
                }
            }
        }
    }
    out
}

/// Γ̃^C_AB of the frame metric, `[C, A, B]`.
pub fn christoffel_of_frame(f: &Frame) -> Tensor {
    christoffel_from(&f.g_inv, &f.dg)
}

/// ^HΓ^A_CD = (N G⁻¹)^A_S · ½(∂_D G^H_SC + ∂_C G^H_SD − ∂_S G^H_CD), `[A, C, D]`.
pub fn hgamma_of_frame(f: &Frame) -> Tensor {
    let p = f.total_dim();
    let dgh = &f.dgh;
    let mut low = Tensor::zeros(&[p, p, p]);
    for s in 0..p {
        for c in 0..p {
            for d in 0..p {
                low.set3(s, c, d, 0.5 * (dgh.at3(s, c, d) + dgh.at3(s, d, c) - dgh.at3(c, d, s)));
            }
        }
    }
    raise_first(&f.n.matmul(&f.g_inv), &low)
}

/// 𝒟_E γ_αβ = ∂_E γ_αβ − c^σ_{μα}𝒜^μ_E γ_σβ − c^σ_{μβ}𝒜^μ_E γ_ασ, `[α, β, E]`.
pub fn cov_dgamma_of_frame(f: &Frame, c: &StructureConstants) -> Tensor {
    let (p, ng) = (f.total_dim(), f.group_dim());
    let mut out = f.dgamma.clone();
    if c.is_abelian() {
        return out;
    }
    for a in 0..ng {
        for b in 0..ng {
            for e in 0..p {
                let mut v = out.at3(a, b, e);
                for s in 0..ng {
                    for m in 0..ng {
                        let am = f.conn.at2(m, e);
                        v -= c.at(s, m, a) * am * f.gamma.at2(s, b) + c.at(s, m, b) * am * f.gamma.at2(a, s);
                    }
                }
                out.set3(a, b, e, v);
            }
        }
    }
    out
}

/// X^M_αβ = G^{MS} N^P_S 𝒟_P γ_αβ, `[M, α, β]`.
fn x_of_frame(f: &Frame, c: &StructureConstants) -> Tensor {
    let (p, ng) = (f.total_dim(), f.group_dim());
    let dg = cov_dgamma_of_frame(f, c);
    let gn = f.g_inv.matmul(&f.n.transpose());
    let mut x = Tensor::zeros(&[p, ng, ng]);
    for m in 0..p {
        for a in 0..ng {
            for b in 0..ng {
                let v: f64 = (0..p).map(|q| gn.at2(m, q) * dg.at3(a, b, q)).sum();
                x.set3(m, a, b, v);
            }
        }
    }
    x
}

/// Γ̌^μ_αβ of the orbit metric, `[μ, α, β]`.
pub fn group_christoffel(gamma: &Tensor, gamma_inv: &Tensor, c: &StructureConstants) -> Tensor {
    let ng = gamma.rows();
    let mut out = Tensor::zeros(&[ng, ng, ng]);
    if c.is_abelian() {
        return out;
    }
    for m in 0..ng {
        for a in 0..ng {
            for b in 0..ng {
                let mut v = 0.0;
                for n in 0..ng {
                    let gi = gamma_inv.at2(m, n);
                    for s in 0..ng {
                        v += gi * (c.at(s, a, b) * gamma.at2(s, n) - c.at(s, n, b) * gamma.at2(a, s) - c.at(s, n, a) * gamma.at2(b, s));
                    }
                }
                out.set3(m, a, b, 0.5 * v);
            }
        }
    }
    out
}

/// R_𝒢 as the printed contraction ½γ^{μν}c^σ_{μα}c^α_{νσ} + ¼γ_μσγ^{αβ}γ^{εν}c^μ_{εα}c^σ_{νβ}
/// (this equals minus the scalar curvature of the left-invariant metric γ).
pub fn orbit_scalar_contraction(gamma: &Tensor, gamma_inv: &Tensor, c: &StructureConstants) -> f64 {
    let ng = gamma.rows();
    if c.is_abelian() {
        return 0.0;
    }
    let mut t1 = 0.0;
    for m in 0..ng {
        for n in 0..ng {
            for s in 0..ng {
                for a in 0..ng {
                    t1 += gamma_inv.at2(m, n) * c.at(s, m, a) * c.at(a, n, s);
                }
            }
        }
    }
    let mut t2 = 0.0;
    for m in 0..ng {
        for s in 0..ng {
            for a in 0..ng {
                for b in 0..ng {
                    for e in 0..ng {
                        for n in 0..ng {
                            t2 += gamma.at2(m, s) * gamma_inv.at2(a, b) * gamma_inv.at2(e, n) * c.at(m, e, a) * c.at(s, n, b);
                        }
                    }
                }
            }
        }
    }
    0.5 * t1 + 0.25 * t2
}

/// Ricci tensor of a left-invariant metric from the group Christoffels
/// (sphere-positive sign), `[α, β]`.
pub fn group_ricci(gamma: &Tensor, gamma_inv: &Tensor, c: &StructureConstants) -> Tensor {
    let ng = gamma.rows();
    let gm = group_christoffel(gamma, gamma_inv, c);
    let mut r = Tensor::zeros(&[ng, ng]);
    for a in 0..ng {
        for b in 0..ng {
            let mut v = 0.0;
            for d in 0..ng {
                for k in 0..ng {
                    v += gm.at3(d, k, b) * gm.at3(k, a, d);
                }
            }
            for e in 0..ng {
                let tr: f64 = (0..ng).map(|k| gm.at3(k, k, e)).sum();
                v -= gm.at3(e, a, b) * tr;
                for k in 0..ng {
                    v -= c.at(e, a, k) * gm.at3(k, e, b);
                }
            }
            r.set2(a, b, -v);
        }
    }
    r
}

/// Christoffel symbols of a metric field, `[C, A, B]`.
pub fn christoffel_of_metric(metric: &dyn SmoothField, q: &[f64], fd: &FdConfig) -> Result<Tensor> {
    let g = metric.eval(q)?;
    let (gi, _) = inverse_det(&g)?;
    let dg = field_jacobian(metric, q, fd)?;
    Ok(christoffel_from(&gi, &dg))
}

/// Ricci tensor `R_bd = ∂_a Γ^a_bd − ∂_d Γ^a_ab + Γ^a_ae Γ^e_bd − Γ^a_de Γ^e_ab`.
pub fn ricci_of_metric(metric: &dyn SmoothField, q: &[f64], fd: &FdConfig) -> Result<Tensor> {
    let p = q.len();
    let gam = christoffel_of_metric(metric, q, fd)?;
    let cache = StencilCache::build(q, fd, |x| christoffel_of_metric(metric, x, fd))?;
    let dgam = cache.jacobian(|t| t.clone())?;
    let mut ric = Tensor::zeros(&[p, p]);
    for b in 0..p {
        for d in 0..p {
            let mut v = 0.0;
            for a in 0..p {
                v += dgam.at4(a, b, d, a) - dgam.at4(a, a, b, d);
                for e in 0..p {
                    v += gam.at3(a, a, e) * gam.at3(e, b, d) - gam.at3(a, d, e) * gam.at3(e, a, b);
                }
            }
            ric.set2(b, d, v);
        }
    }
    Ok(ric)
}

/// Coordinate scalar curvature of a metric field (independent oracle route).
pub fn scalar_curvature_of_metric(metric: &dyn SmoothField, q: &[f64], fd: &FdConfig) -> Result<f64> {
    let ric = ricci_of_metric(metric, q, fd)?;
    let (gi, _) = inverse_det(&metric.eval(q)?)?;
    Ok(contract2(&gi, &ric))
}

fn contract2(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// J̃ from its coordinate formula:
/// `¼gᵀMg + M:∂²log detγ + (G^{CA}N^F_A ∂_F N^B_C − G^{AC}N^E_A N^B_M ^HΓ^M_EC) g_B`.
pub fn jtilde_from_parts(f: &Frame, hgamma: &Tensor, dn: &Tensor, hess: &Tensor, g: &[f64]) -> f64 {
    let p = f.total_dim();
    let m = &f.m;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for a in 0..p {
        for b in 0..p {
            t1 += 0.25 * g[a] * m.at2(a, b) * g[b];
            t2 += m.at2(a, b) * hess.at2(a, b);
        }
    }
    let gin = f.g_inv.matmul(&f.n.transpose()); // (G⁻¹Nᵀ)^{C F}
    let mut t3 = 0.0;
    for bb in 0..p {
        let mut a_term = 0.0;
        for c in 0..p {
            for ff in 0..p {
                a_term += gin.at2(c, ff) * dn.at3(bb, c, ff);
            }
        }
        let mut b_term = 0.0;
        for mm in 0..p {
            let nb = f.n.at2(bb, mm);
            if nb == 0.0 {
                continue;
            }
            for e in 0..p {
                for c in 0..p {
                    b_term += gin.at2(c, e) * nb * hgamma.at3(mm, e, c);
                }
            }
        }
        t3 += (a_term - b_term) * g[bb];
    }
    t1 + t2 + t3
}

/// j_I^A = ½ M^{BD}(∂_D N^A_B + ^HΓ^A_BD − N^A_C ^HΓ^C_BD).
pub fn j_i_from_parts(f: &Frame, hgamma: &Tensor, dn: &Tensor) -> Vec<f64> {
    let p = f.total_dim();
    let mut out = vec![0.0; p];
    for (a, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for b in 0..p {
            for d in 0..p {
                let mbd = f.m.at2(b, d);
                if mbd == 0.0 {
                    continue;
                }
                let mut v = dn.at3(a, b, d) + hgamma.at3(a, b, d);
                for c in 0..p {
                    v -= f.n.at2(a, c) * hgamma.at3(c, b, d);
                }
                s += mbd * v;
            }
        }
        *o = 0.5 * s;
    }
    out
}

/// Drift vector −½ M^{CB} ^HΓ^A_CB of the reduced diffusion (without j_I).
pub fn horizontal_laplacian_drift(f: &Frame, hgamma: &Tensor) -> Vec<f64> {
    let p = f.total_dim();
    (0..p)
        .map(|a| {
            let mut s = 0.0;
            for c in 0..p {
                for b in 0..p {
                    s += f.m.at2(c, b) * hgamma.at3(a, c, b);
                }
            }
            -0.5 * s
        })
        .collect()
}

/// (∇_{K_α} K_β)^C, `[C, α, β]`.
pub fn nabla_kk(f: &Frame) -> Tensor {
    let (p, ng) = (f.total_dim(), f.group_dim());
    let gam = christoffel_of_frame(f);
    let mut out = Tensor::zeros(&[p, ng, ng]);
    for c in 0..p {
        for a in 0..ng {
            for b in 0..ng {
                let mut v = 0.0;
                for aa in 0..p {
                    let ka = f.k.at2(aa, a);
                    v += ka * f.dk.at3(c, b, aa);
                    for bb in 0..p {
                        v += ka * f.k.at2(bb, b) * gam.at3(c, aa, bb);
                    }
                }
                out.set3(c, a, b, v);
            }
        }
    }
    out
}

/// γ^{αβ}(∇_{K_α}K_β)^C.
pub fn orbit_mean_curvature_raw(f: &Frame) -> Vec<f64> {
    let (p, ng) = (f.total_dim(), f.group_dim());
    let nkk = nabla_kk(f);
    (0..p)
        .map(|c| {
            let mut s = 0.0;
            for a in 0..ng {
                for b in 0..ng {
                    s += f.gamma_inv.at2(a, b) * nkk.at3(c, a, b);
                }
            }
            s
        })
        .collect()
}

/// Curvature quantities at one point, sharing a cache of frames on the
/// finite-difference stencil.
pub struct PointGeometry<'a> {
    bundle: &'a BundleSpec,
    frame: Frame,
    stencil: StencilCache<Frame>,
    hgamma: Tensor,
}

impl<'a> PointGeometry<'a> {
    pub fn new(bundle: &'a BundleSpec, q: &[f64]) -> Result<Self> {
        let frame = bundle.frame(q)?;
        let stencil = StencilCache::build(q, bundle.fd(), |x| bundle.frame(x))?;
        let hgamma = hgamma_of_frame(&frame);
        Ok(PointGeometry { bundle, frame, stencil, hgamma })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn bundle(&self) -> &BundleSpec {
        self.bundle
    }

    fn c(&self) -> &StructureConstants {
        self.bundle.structure_constants()
    }

    fn p(&self) -> usize {
        self.frame.total_dim()
    }

    fn ng(&self) -> usize {
        self.frame.group_dim()
    }

    pub fn christoffel_coordinate(&self) -> Tensor {
        christoffel_of_frame(&self.frame)
    }

    pub fn christoffel_horizontal(&self) -> &Tensor {
        &self.hgamma
    }

    /// ∂_S ^HΓ^M_CE as `[M, C, E, S]`.
    pub fn d_hgamma(&self) -> Result<Tensor> {
        self.stencil.jacobian(hgamma_of_frame)
    }

    /// ∂_D N^A_B as `[A, B, D]`.
    pub fn d_n(&self) -> Result<Tensor> {
        self.stencil.jacobian(|f| f.n.clone())
    }

    /// ∂_A∂_B log det γ.
    pub fn hess_log_det_gamma(&self) -> Result<Tensor> {
        self.stencil.jacobian(|f| Tensor::vector(&f.log_det_gamma_gradient()))
    }

    pub fn log_det_gamma_gradient(&self) -> Vec<f64> {
        self.frame.log_det_gamma_gradient()
    }

    /// ℱ^μ_EP as `[μ, E, P]`.
    pub fn connection_curvature(&self) -> Result<Tensor> {
        let da = self.stencil.jacobian(|f| f.conn.clone())?;
        let (p, ng) = (self.p(), self.ng());
        let c = self.c();
        let a = &self.frame.conn;
        let mut f = Tensor::zeros(&[ng, p, p]);
        for m in 0..ng {
            for e in 0..p {
                for pp in 0..p {
                    let mut v = da.at3(m, pp, e) - da.at3(m, e, pp);
                    for n in 0..ng {
                        for s in 0..ng {
                            v += c.at(m, n, s) * a.at2(n, e) * a.at2(s, pp);
                        }
                    }
                    f.set3(m, e, pp, v);
                }
            }
        }
        Ok(f)
    }

    pub fn cov_dgamma(&self) -> Tensor {
        cov_dgamma_of_frame(&self.frame, self.c())
    }

    /// ^H R_{SEC}^M = ∂_S ^HΓ^M_CE − ∂_E ^HΓ^M_CS + ^HΓ^K_CE ^HΓ^M_KS − ^HΓ^P_CS ^HΓ^M_PE, `[S, E, C, M]`.
    pub fn horizontal_riemann(&self) -> Result<Tensor> {
        let p = self.p();
        let h = &self.hgamma;
        let dh = self.d_hgamma()?;
        let mut r = Tensor::zeros(&[p, p, p, p]);
        for s in 0..p {
            for e in 0..p {
                for c in 0..p {
                    for m in 0..p {
                        let mut v = dh.at4(m, c, e, s) - dh.at4(m, c, s, e);
                        for k in 0..p {
                            v += h.at3(k, c, e) * h.at3(m, k, s) - h.at3(k, c, s) * h.at3(m, k, e);
                        }
                        r.set4(s, e, c, m, v);
                    }
                }
            }
        }
        Ok(r)
    }

    /// ^H R = −M^{SC} N^E_M ^H R_{SEC}^M (sphere-positive sign).
    pub fn horizontal_riemann_scalar(&self) -> Result<f64> {
        let p = self.p();
        let r = self.horizontal_riemann()?;
        let (m, n) = (&self.frame.m, &self.frame.n);
        let mut s = 0.0;
        for ss in 0..p {
            for c in 0..p {
                let msc = m.at2(ss, c);
                if msc == 0.0 {
                    continue;
                }
                for e in 0..p {
                    for mm in 0..p {
                        s += msc * n.at2(e, mm) * r.at4(ss, e, c, mm);
                    }
                }
            }
        }
        Ok(-s)
    }

    /// ℱ² = M^{FB} M^{PA} γ_μν ℱ^μ_PF ℱ^ν_AB.
    pub fn f_squared(&self) -> Result<f64> {
        let f = self.connection_curvature()?;
        Ok(f_squared_of(&self.frame, &f))
    }

    /// (j^B_αβ, ‖j‖²) with j^B_αβ = −½ M^{BE} 𝒟_E γ_αβ.
    pub fn second_fundamental_form(&self) -> (Tensor, f64) {
        let (p, ng) = (self.p(), self.ng());
        let dg = self.cov_dgamma();
        let m = &self.frame.m;
        let mut j = Tensor::zeros(&[p, ng, ng]);
        for b in 0..p {
            for a in 0..ng {
                for c in 0..ng {
                    let v: f64 = (0..p).map(|e| m.at2(b, e) * dg.at3(a, c, e)).sum();
                    j.set3(b, a, c, -0.5 * v);
                }
            }
        }
        let gi = &self.frame.gamma_inv;
        let gh = &self.frame.gh;
        // raise both group indices of j
        let mut up = Tensor::zeros(&[p, ng, ng]);
        for b in 0..p {
            for m1 in 0..ng {
                for n1 in 0..ng {
                    let mut v = 0.0;
                    for a in 0..ng {
                        for c in 0..ng {
                            v += gi.at2(m1, a) * gi.at2(n1, c) * j.at3(b, a, c);
                        }
                    }
                    up.set3(b, m1, n1, v);
                }
            }
        }
        let mut jsq = 0.0;
        for a in 0..p {
            for b in 0..p {
                let g = gh.at2(a, b);
                if g == 0.0 {
                    continue;
                }
                for m1 in 0..ng {
                    for n1 in 0..ng {
                        jsq += g * j.at3(a, m1, n1) * up.at3(b, m1, n1);
                    }
                }
            }
        }
        (j, jsq)
    }

    /// The three representations of j_II: `−½ G^{EU}N^A_E N^D_U G_CD v^C`,
    /// `−½ N^A_C v^C` and `¼ M g`, where `v = γ^{αβ}∇_{K_α}K_β`.
    pub fn mean_curvature_orbit_forms(&self) -> [Vec<f64>; 3] {
        let f = &self.frame;
        let v = orbit_mean_curvature_raw(f);
        let gv = f.g.matvec(&v);
        let first = f.m.matvec(&gv).iter().map(|x| -0.5 * x).collect();
        let second = f.n.matvec(&v).iter().map(|x| -0.5 * x).collect();
        let g = f.log_det_gamma_gradient();
        let third = f.m.matvec(&g).iter().map(|x| 0.25 * x).collect();
        [first, second, third]
    }

    pub fn mean_curvature_orbit(&self) -> Vec<f64> {
        let [_, second, _] = self.mean_curvature_orbit_forms();
        second
    }

    pub fn mean_curvature_base(&self) -> Result<Vec<f64>> {
        Ok(j_i_from_parts(&self.frame, &self.hgamma, &self.d_n()?))
    }

    /// R_𝒢 (sphere-positive sign).
    pub fn orbit_scalar(&self) -> f64 {
        -orbit_scalar_contraction(&self.frame.gamma, &self.frame.gamma_inv, self.c())
    }

    pub fn jtilde_coords(&self) -> Result<f64> {
        let dn = self.d_n()?;
        let hess = self.hess_log_det_gamma()?;
        let g = self.frame.log_det_gamma_gradient();
        Ok(jtilde_from_parts(&self.frame, &self.hgamma, &dn, &hess, &g))
    }

    pub fn christoffel_table(&self) -> Result<ChristoffelTable> {
        let (p, ng) = (self.p(), self.ng());
        let f = &self.frame;
        let h = &self.hgamma;
        let cf = self.connection_curvature()?;
        let dg = self.cov_dgamma();
        let mut hh_h = Tensor::zeros(&[p, p, p]);
        for d in 0..p {
            for a in 0..p {
                for b in 0..p {
                    hh_h.set3(d, a, b, (0..p).map(|e| f.n.at2(e, a) * h.at3(d, b, e)).sum());
                }
            }
        }
        let mut hh_v = Tensor::zeros(&[ng, p, p]);
        for m in 0..ng {
            for a in 0..p {
                for b in 0..p {
                    let mut v = 0.0;
                    for e in 0..p {
                        for ff in 0..p {
                            v += f.n.at2(e, a) * f.n.at2(ff, b) * cf.at3(m, e, ff);
                        }
                    }
                    hh_v.set3(m, a, b, -0.5 * v);
                }
            }
        }
        let gn = f.g_inv.matmul(&f.n.transpose()); // G^{PS}N^F_S = gn[P, F]
        let mut vh_h = Tensor::zeros(&[p, ng, p]);
        for pp in 0..p {
            for al in 0..ng {
                for b in 0..p {
                    let mut v = 0.0;
                    for ff in 0..p {
                        for e in 0..p {
                            for m in 0..ng {
                                v += gn.at2(pp, ff) * f.n.at2(e, b) * cf.at3(m, e, ff) * f.gamma.at2(m, al);
                            }
                        }
                    }
                    vh_h.set3(pp, al, b, 0.5 * v);
                }
            }
        }
        let mut vv_h = Tensor::zeros(&[p, ng, ng]);
        for pp in 0..p {
            for al in 0..ng {
                for be in 0..ng {
                    let v: f64 = (0..p).map(|e| gn.at2(pp, e) * dg.at3(al, be, e)).sum();
                    vv_h.set3(pp, al, be, -0.5 * v);
                }
            }
        }
        let mut vh_v = Tensor::zeros(&[ng, ng, p]);
        for m in 0..ng {
            for al in 0..ng {
                for b in 0..p {
                    let mut v = 0.0;
                    for nu in 0..ng {
                        for e in 0..p {
                            v += f.gamma_inv.at2(m, nu) * f.n.at2(e, b) * dg.at3(al, nu, e);
                        }
                    }
                    vh_v.set3(m, al, b, 0.5 * v);
                }
            }
        }
        Ok(ChristoffelTable {
            coordinate: self.christoffel_coordinate(),
            horizontal: h.clone(),
            hh_h,
            hh_v,
            vh_h,
            vv_h,
            vh_v,
            vv_v: group_christoffel(&f.gamma, &f.gamma_inv, self.c()),
        })
    }

    /// Horizontal Ricci block Ř_AC (sphere-positive sign).
    pub fn ricci_horizontal_block(&self) -> Result<Tensor> {
        let (p, ng) = (self.p(), self.ng());
        let f = &self.frame;
        let (n, m) = (&f.n, &f.m);
        let r = self.horizontal_riemann()?;
        let cf = self.connection_curvature()?;
        let h = &self.hgamma;
        let g = f.log_det_gamma_gradient();
        let dg = self.cov_dgamma();
        let dng = self.stencil.jacobian(|fr| Tensor::vector(&fr.n.transpose().matvec(&fr.log_det_gamma_gradient())))?;
        let gi = &f.gamma_inv;
        // F projected: FN[x, A, P] = N^E_A ℱ^x_EP
        let mut fn_ = Tensor::zeros(&[ng, p, p]);
        for x in 0..ng {
            for a in 0..p {
                for pp in 0..p {
                    fn_.set3(x, a, pp, (0..p).map(|e| n.at2(e, a) * cf.at3(x, e, pp)).sum());
                }
            }
        }
        // HD[α, β, A] = N^E_A 𝒟_E γ_αβ
        let mut hd = Tensor::zeros(&[ng, ng, p]);
        for a in 0..ng {
            for b in 0..ng {
                for aa in 0..p {
                    hd.set3(a, b, aa, (0..p).map(|e| n.at2(e, aa) * dg.at3(a, b, e)).sum());
                }
            }
        }
        let mut out = Tensor::zeros(&[p, p]);
        for a in 0..p {
            for c in 0..p {
                let mut v = 0.0;
                for s in 0..p {
                    let nsa = n.at2(s, a);
                    if nsa == 0.0 {
                        continue;
                    }
                    for e in 0..p {
                        for mm in 0..p {
                            v += nsa * n.at2(e, mm) * r.at4(s, e, c, mm);
                        }
                    }
                }
                let mut t2 = 0.0;
                for pp in 0..p {
                    for ff in 0..p {
                        let mpf = m.at2(pp, ff);
                        if mpf == 0.0 {
                            continue;
                        }
                        for x in 0..ng {
                            for mu in 0..ng {
                                t2 += mpf * fn_.at3(x, a, pp) * fn_.at3(mu, c, ff) * f.gamma.at2(mu, x);
                            }
                        }
                    }
                }
                v += 0.5 * t2;
                let mut t3 = 0.0;
                for pp in 0..p {
                    for e in 0..p {
                        t3 += n.at2(pp, a) * h.at3(e, c, pp) * g[e];
                    }
                }
                v -= 0.5 * t3;
                v += 0.5 * (0..p).map(|ff| n.at2(ff, a) * dng.at2(c, ff)).sum::<f64>();
                let mut t5 = 0.0;
                for mu in 0..ng {
                    for nu in 0..ng {
                        for x in 0..ng {
                            for b in 0..ng {
                                t5 += gi.at2(mu, nu) * hd.at3(x, nu, c) * gi.at2(x, b) * hd.at3(mu, b, a);
                            }
                        }
                    }
                }
                v += 0.25 * t5;
                out.set2(a, c, -v);
            }
        }
        Ok(out)
    }

    /// Vertical Ricci block Ř_αβ (sphere-positive sign).
    pub fn ricci_vertical_block(&self) -> Result<Tensor> {
        let (p, ng) = (self.p(), self.ng());
        let f = &self.frame;
        let c = self.c();
        let (n, m, gi, gam) = (&f.n, &f.m, &f.gamma_inv, &f.gamma);
        let cf = self.connection_curvature()?;
        let h = &self.hgamma;
        let dg = self.cov_dgamma();
        let x = x_of_frame(f, c);
        let dx = self.stencil.jacobian(|fr| x_of_frame(fr, c))?;
        // group-covariant derivative of X along E, projected with N
        let mut t3 = Tensor::zeros(&[ng, ng]);
        for a in 0..ng {
            for b in 0..ng {
                let mut v = 0.0;
                for e in 0..p {
                    for mm in 0..p {
                        let nem = n.at2(e, mm);
                        if nem == 0.0 {
                            continue;
                        }
                        let mut d = dx.at4(mm, a, b, e);
                        for s in 0..ng {
                            for mu in 0..ng {
                                let am = f.conn.at2(mu, e);
                                d -= c.at(s, mu, a) * am * x.at3(mm, s, b) + c.at(s, mu, b) * am * x.at3(mm, a, s);
                            }
                        }
                        v += nem * d;
                    }
                }
                t3.set2(a, b, 0.5 * v);
            }
        }
        let mut hd = Tensor::zeros(&[ng, ng, p]);
        for a in 0..ng {
            for b in 0..ng {
                for aa in 0..p {
                    hd.set3(a, b, aa, (0..p).map(|e| n.at2(e, aa) * dg.at3(a, b, e)).sum());
                }
            }
        }
        let trace_hd: Vec<f64> = (0..p)
            .map(|e| {
                let mut s = 0.0;
                for mu in 0..ng {
                    for nu in 0..ng {
                        s += gi.at2(mu, nu) * hd.at3(mu, nu, e);
                    }
                }
                s
            })
            .collect();
        let nh: Vec<f64> = (0..p)
            .map(|e| {
                let mut s = 0.0;
                for q in 0..p {
                    for mm in 0..p {
                        s += n.at2(q, mm) * h.at3(mm, e, q);
                    }
                }
                s
            })
            .collect();
        let rt = group_ricci(gam, gi, c);
        let mut out = Tensor::zeros(&[ng, ng]);
        for a in 0..ng {
            for b in 0..ng {
                // paper-sign sum, negated at the end; group_ricci is already sphere-positive
                let mut v = 0.0;
                let mut ff2 = 0.0;
                for ff in 0..p {
                    for bb in 0..p {
                        let mfb = m.at2(ff, bb);
                        if mfb == 0.0 {
                            continue;
                        }
                        for pp in 0..p {
                            for aa in 0..p {
                                let mpa = m.at2(pp, aa);
                                if mpa == 0.0 {
                                    continue;
                                }
                                for mu in 0..ng {
                                    for nu in 0..ng {
                                        ff2 += mfb * mpa * gam.at2(mu, b) * gam.at2(nu, a) * cf.at3(mu, pp, ff) * cf.at3(nu, bb, aa);
                                    }
                                }
                            }
                        }
                    }
                }
                v += 0.25 * ff2;
                v += t3.at2(a, b);
                let mut t4 = 0.0;
                let mut t5 = 0.0;
                for s in 0..ng {
                    for nn in 0..ng {
                        let g = gi.at2(s, nn);
                        for mm in 0..p {
                            t4 += g * hd.at3(s, b, mm) * x.at3(mm, a, nn);
                            t5 += x.at3(mm, nn, b) * g * hd.at3(s, a, mm);
                        }
                    }
                }
                v -= 0.25 * (t4 + t5);
                for e in 0..p {
                    v += 0.5 * nh[e] * x.at3(e, a, b);
                    v += 0.25 * x.at3(e, a, b) * trace_hd[e];
                }
                out.set2(a, b, rt.at2(a, b) - v);
            }
        }
        Ok(out)
    }

    /// R_𝒫 = M^{AC}Ř_AC + γ^{αβ}Ř_αβ.
    pub fn scalar_curvature_bundle(&self) -> Result<f64> {
        let h = self.ricci_horizontal_block()?;
        let v = self.ricci_vertical_block()?;
        Ok(contract2(&self.frame.m, &h) + contract2(&self.frame.gamma_inv, &v))
    }

    pub fn report(&self, eps_f: FSign) -> Result<CurvatureReport> {
        let q = self.frame.point.clone();
        let r_p_direct = scalar_curvature_of_metric(self.bundle.metric_field(), &q, self.bundle.fd())?;
        let r_p_nonholonomic = self.scalar_curvature_bundle()?;
        let hr = self.horizontal_riemann_scalar()?;
        let r_g = self.orbit_scalar();
        let f_sq = self.f_squared()?;
        let (_, jsq) = self.second_fundamental_form();
        let jtilde_coords = self.jtilde_coords()?;
        let e = eps_f.value();
        let jtilde_geom = hr + r_g + e * 0.25 * f_sq - jsq - r_p_direct;
        Ok(CurvatureReport {
            point: q,
            r_p_direct,
            r_p_nonholonomic,
            hr,
            r_g,
            f_sq,
            j_ii: self.mean_curvature_orbit(),
            j_i: self.mean_curvature_base()?,
            jsq,
            jtilde_coords,
            jtilde_geom,
            residual_decomposition: r_p_direct - (hr + r_g + e * 0.25 * f_sq - jtilde_coords - jsq),
            residual_jroutes: (jtilde_coords - jtilde_geom).abs(),
            eps_f: e,
        })
    }
}

fn f_squared_of(f: &Frame, cf: &Tensor) -> f64 {
    let (p, ng) = (f.total_dim(), f.group_dim());
    let m = &f.m;
    let mut s = 0.0;
    for ff in 0..p {
        for b in 0..p {
            let mfb = m.at2(ff, b);
            if mfb == 0.0 {
                continue;
            }
            for pp in 0..p {
                for a in 0..p {
                    let mpa = m.at2(pp, a);
                    if mpa == 0.0 {
                        continue;
                    }
                    for mu in 0..ng {
                        for nu in 0..ng {
                            s += mfb * mpa * f.gamma.at2(mu, nu) * cf.at3(mu, pp, ff) * cf.at3(nu, a, b);
                        }
                    }
                }
            }
        }
    }
    s
}

pub fn christoffel_coordinate(b: &BundleSpec, q: &[f64]) -> Result<Tensor> {
    Ok(christoffel_of_frame(&b.frame(q)?))
}

pub fn christoffel_horizontal(b: &BundleSpec, q: &[f64]) -> Result<Tensor> {
    Ok(hgamma_of_frame(&b.frame(q)?))
}

pub fn nonholonomic_christoffels(b: &BundleSpec, q: &[f64]) -> Result<ChristoffelTable> {
    PointGeometry::new(b, q)?.christoffel_table()
}

pub fn ricci_horizontal_block(b: &BundleSpec, q: &[f64]) -> Result<Tensor> {
    PointGeometry::new(b, q)?.ricci_horizontal_block()
}

pub fn ricci_vertical_block(b: &BundleSpec, q: &[f64]) -> Result<Tensor> {
    PointGeometry::new(b, q)?.ricci_vertical_block()
}

pub fn scalar_curvature_bundle(b: &BundleSpec, q: &[f64]) -> Result<f64> {
    PointGeometry::new(b, q)?.scalar_curvature_bundle()
}

/// Coordinate scalar curvature of G at the group-translated point `F(Q*, a)`
/// (at `Q*` itself when `a` is `None`).
pub fn scalar_curvature_direct(b: &BundleSpec, q: &[f64], a: Option<&[f64]>) -> Result<f64> {
    let x = match a {
        Some(a) => b.group_chart().ok_or(Error::MissingGroupChart("scalar_curvature_direct"))?.act(q, a),
        None => q.to_vec(),
    };
    if !b.in_chart(&x) {
        return Err(Error::OutsideChart { point: x });
    }
    scalar_curvature_of_metric(b.metric_field(), &x, b.fd())
}

pub fn orbit_scalar(b: &BundleSpec, q: &[f64]) -> Result<f64> {
    let (gamma, gi) = b.orbit_metric(q)?;
    Ok(-orbit_scalar_contraction(&gamma, &gi, b.structure_constants()))
}

pub fn f_squared(b: &BundleSpec, q: &[f64]) -> Result<f64> {
    PointGeometry::new(b, q)?.f_squared()
}

pub fn second_fundamental_form(b: &BundleSpec, q: &[f64]) -> Result<(Tensor, f64)> {
    Ok(PointGeometry::new(b, q)?.second_fundamental_form())
}

pub fn mean_curvature_orbit(b: &BundleSpec, q: &[f64]) -> Result<Vec<f64>> {
    Ok(PointGeometry::new(b, q)?.mean_curvature_orbit())
}

pub fn mean_curvature_base(b: &BundleSpec, q: &[f64]) -> Result<Vec<f64>> {
    PointGeometry::new(b, q)?.mean_curvature_base()
}

pub fn jacobian_integrand(b: &BundleSpec, q: &[f64], route: JacobianRoute) -> Result<f64> {
    let pg = PointGeometry::new(b, q)?;
    match route {
        JacobianRoute::Coords => pg.jtilde_coords(),
        JacobianRoute::Geometric => Ok(pg.report(RESOLVED_F_SIGN)?.jtilde_geom),
    }
}

pub fn decomposition_report(b: &BundleSpec, q: &[f64], eps_f: FSign) -> Result<CurvatureReport> {
    PointGeometry::new(b, q)?.report(eps_f)
}

/// The unique ε_F for which every decomposition residual is within `tol`,
/// or `None` if zero or both signs qualify.
pub fn resolve_f_sign(b: &BundleSpec, points: &[Vec<f64>], tol: f64) -> Result<Option<FSign>> {
    let mut ok = [true, true];
    for q in points {
        let pg = PointGeometry::new(b, q)?;
        for (i, s) in [FSign::Plus, FSign::Minus].into_iter().enumerate() {
            if pg.report(s)?.residual_decomposition.abs() > tol {
                ok[i] = false;
            }
        }
    }
    Ok(match ok {
        [true, false] => Some(FSign::Plus),
        [false, true] => Some(FSign::Minus),
        _ => None,
    })
}
