//! Principal-bundle problem instances and the pointwise algebra built on them:
//! orbit metric, Faddeev–Popov matrix, projectors, mechanical connection and
//! its curvature, horizontal metric and the adapted (Q*, a) metric block.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{field_jacobian, jacobian_fn, FdConfig, SmoothField};
use crate::group::{GroupChart, StructureConstants};
use crate::tensor::{det, inverse_det, Tensor};

/// Residual below which a point counts as lying on the gauge surface.
pub const SURFACE_TOL: f64 = 1e-10;
/// Quadrature nodes per axis tried when Newton from the identity fails.
const RESTART_NODES: usize = 4;
/// Newton iteration cap for gauge-surface projection.
pub const PROJECTION_MAX_ITER: usize = 50;

type ChartDomain = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A principal bundle with free isometric action, written in one chart.
pub struct BundleSpec {
    total_dim: usize,
    group_dim: usize,
    metric: Box<dyn SmoothField>,
    killing: Box<dyn SmoothField>,
    gauge: Box<dyn SmoothField>,
    structure: StructureConstants,
    group_chart: Option<Box<dyn GroupChart>>,
    domain: Option<ChartDomain>,
    fd: FdConfig,
}

impl core::fmt::Debug for BundleSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BundleSpec")
            .field("total_dim", &self.total_dim)
            .field("group_dim", &self.group_dim)
            .field("has_group_chart", &self.group_chart.is_some())
            .field("fd", &self.fd)
            .finish()
    }
}

impl BundleSpec {
    /// `metric`: Q ↦ G_AB (P×P), `killing`: Q ↦ K^A_μ (P×G), `gauge`: Q ↦ χᵅ (G).
    pub fn new(
        metric: Box<dyn SmoothField>,
        killing: Box<dyn SmoothField>,
        gauge: Box<dyn SmoothField>,
        structure: StructureConstants,
    ) -> Result<Self> {
        let p = metric.domain_dim();
        let g = structure.dim();
        if metric.codomain_shape() != [p, p] {
            return Err(Error::InvalidBundle(format!("metric must be {p}x{p}, got {:?}", metric.codomain_shape())));
        }
        if killing.domain_dim() != p || killing.codomain_shape() != [p, g] {
            return Err(Error::InvalidBundle(format!(
                "Killing fields must map R^{p} to {p}x{g}, got R^{} -> {:?}",
                killing.domain_dim(),
                killing.codomain_shape()
            )));
        }
        if gauge.domain_dim() != p || gauge.codomain_shape() != [g] {
            return Err(Error::InvalidBundle(format!(
                "gauge functions must map R^{p} to R^{g}, got R^{} -> {:?}",
                gauge.domain_dim(),
                gauge.codomain_shape()
            )));
        }
        if g == 0 || g > p {
            return Err(Error::InvalidBundle(format!("group dimension {g} must lie in 1..={p}")));
        }
        Ok(BundleSpec {
            total_dim: p,
            group_dim: g,
            metric,
            killing,
            gauge,
            structure,
            group_chart: None,
            domain: None,
            fd: FdConfig::curvature(),
        })
    }

    pub fn with_group_chart(mut self, chart: Box<dyn GroupChart>) -> Result<Self> {
        if chart.dim() != self.group_dim {
            return Err(Error::InvalidBundle(format!(
                "group chart has dimension {}, bundle group has {}",
                chart.dim(),
                self.group_dim
            )));
        }
        let e = chart.identity();
        let id = Tensor::identity(self.group_dim);
        if chart.adjoint(&e).sub(&id).max_abs() > 1e-12 || chart.left_trivialization(&e).sub(&id).max_abs() > 1e-12 {
            return Err(Error::InvalidBundle("group chart must have rho(e) = u(e) = identity".into()));
        }
        self.group_chart = Some(chart);
        Ok(self)
    }

    /// Restrict the chart to an open set; points outside are rejected.
    pub fn with_chart_domain(mut self, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Box::new(domain));
        self
    }

    /// Finite-difference setting for derivatives of derived quantities.
    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn group_dim(&self) -> usize {
        self.group_dim
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn group_chart(&self) -> Option<&dyn GroupChart> {
        self.group_chart.as_deref()
    }

    pub fn fd(&self) -> &FdConfig {
        &self.fd
    }

    pub fn metric_field(&self) -> &dyn SmoothField {
        self.metric.as_ref()
    }

    pub fn killing_field(&self) -> &dyn SmoothField {
        self.killing.as_ref()
    }

    pub fn gauge_field(&self) -> &dyn SmoothField {
        self.gauge.as_ref()
    }

    pub fn in_chart(&self, q: &[f64]) -> bool {
        q.len() == self.total_dim && q.iter().all(|x| x.is_finite()) && self.domain.as_ref().is_none_or(|d| d(q))
    }

    fn check_chart(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.total_dim {
            return Err(Error::Shape(format!("point of length {} in a {}-dimensional chart", q.len(), self.total_dim)));
        }
        if !self.in_chart(q) {
            return Err(Error::OutsideChart { point: q.to_vec() });
        }
        Ok(())
    }

    pub fn metric(&self, q: &[f64]) -> Result<Tensor> {
        self.check_chart(q)?;
        self.metric.eval(q)
    }

    pub fn killing(&self, q: &[f64]) -> Result<Tensor> {
        self.check_chart(q)?;
        self.killing.eval(q)
    }

    pub fn gauge(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_chart(q)?;
        Ok(self.gauge.eval(q)?.into_data())
    }

    /// `χᵅ_B` as a G×P matrix.
    pub fn gauge_gradient(&self, q: &[f64]) -> Result<Tensor> {
        self.check_chart(q)?;
        field_jacobian(self.gauge.as_ref(), q, &self.fd)
    }

    /// Largest |χᵅ(Q)|.
    pub fn surface_residual(&self, q: &[f64]) -> Result<f64> {
        Ok(self.gauge(q)?.iter().fold(0.0, |m: f64, x| m.max(x.abs())))
    }

    /// All first-order pointwise geometry at `q`.
    pub fn frame(&self, q: &[f64]) -> Result<Frame> {
        Frame::compute(self, q)
    }

    /// Oblique projector N = 1 − KΛ; needs only K and ∂χ.
    pub fn kernel_projector(&self, q: &[f64]) -> Result<Tensor> {
        let k = self.killing(q)?;
        let chi_grad = self.gauge_gradient(q)?;
        let (_, phi_inv) = fp_pair(&chi_grad, &k, q)?;
        let lambda = phi_inv.matmul(&chi_grad);
        Ok(Tensor::identity(self.total_dim).sub(&k.matmul(&lambda)))
    }

    /// ∂_D N^A_B at the frame point, from ∂K and a finite difference of ∇χ only:
    /// ∂N = −∂K Λ − K Φ⁻¹(∂∇χ N − ∇χ ∂K Λ).
    pub fn kernel_projector_derivative(&self, f: &Frame, fd: &FdConfig) -> Result<Tensor> {
        let (p, ng) = (self.total_dim, self.group_dim);
        let dchi = match self.gauge.hessian(&f.point) {
            Some(h) => h?,
            None => jacobian_fn(&|x: &[f64]| self.gauge_gradient(x), &f.point, fd)?,
        };
        if dchi.shape() != [ng, p, p] {
            return Err(Error::Shape("gauge second derivative has the wrong shape".into()));
        }
        let mut dn = Tensor::zeros(&[p, p, p]);
        let mut inner = vec![0.0; ng * p];
        let mut dlam = vec![0.0; ng * p];
        for d in 0..p {
            for al in 0..ng {
                for bb in 0..p {
                    let mut v = 0.0;
                    for c in 0..p {
                        v += dchi.at3(al, c, d) * f.n.at2(c, bb);
                        for nu in 0..ng {
                            v -= f.chi_grad.at2(al, c) * f.dk.at3(c, nu, d) * f.lambda.at2(nu, bb);
                        }
                    }
                    inner[al * p + bb] = v;
                }
            }
            for mu in 0..ng {
                for bb in 0..p {
                    dlam[mu * p + bb] = (0..ng).map(|al| f.phi_inv.at2(mu, al) * inner[al * p + bb]).sum();
                }
            }
            for a in 0..p {
                for bb in 0..p {
                    let mut v = 0.0;
                    for mu in 0..ng {
                        v -= f.dk.at3(a, mu, d) * f.lambda.at2(mu, bb) + f.k.at2(a, mu) * dlam[mu * p + bb];
                    }
                    dn.set3(a, bb, d, v);
                }
            }
        }
        Ok(dn)
    }

    /// γ_μν = K^A_μ G_AB K^B_ν and its inverse.
    pub fn orbit_metric(&self, q: &[f64]) -> Result<(Tensor, Tensor)> {
        let g = self.metric(q)?;
        let k = self.killing(q)?;
        let gamma = k.transpose().matmul(&g).matmul(&k);
        let (gi, _) = inverse_det(&gamma).map_err(|_| Error::DegenerateOrbit { point: q.to_vec() })?;
        Ok((gamma, gi))
    }

    /// Φ^β_μ = χ^β_A K^A_μ and Φ⁻¹.
    pub fn faddeev_popov(&self, q: &[f64]) -> Result<(Tensor, Tensor)> {
        let k = self.killing(q)?;
        let chi_grad = self.gauge_gradient(q)?;
        fp_pair(&chi_grad, &k, q)
    }

    /// Projector set at a gauge-surface point.
    pub fn projectors(&self, q: &[f64]) -> Result<ProjectorSet> {
        let res = self.surface_residual(q)?;
        if res > SURFACE_TOL {
            return Err(Error::InvalidConfig(format!("point {q:?} is off the gauge surface (|chi| = {res:e})")));
        }
        Ok(self.frame(q)?.projector_set())
    }

    /// 𝒜^ν_P = γ^{νμ} K^R_μ G_RP.
    pub fn mechanical_connection(&self, q: &[f64]) -> Result<Tensor> {
        let g = self.metric(q)?;
        let k = self.killing(q)?;
        let w = g.matmul(&k);
        let gamma = k.transpose().matmul(&w);
        let (gi, _) = inverse_det(&gamma).map_err(|_| Error::DegenerateOrbit { point: q.to_vec() })?;
        Ok(gi.matmul(&w.transpose()))
    }

    /// ℱ^μ_{EP} = ∂_E 𝒜^μ_P − ∂_P 𝒜^μ_E + c^μ_{νσ} 𝒜^ν_E 𝒜^σ_P, stored `[μ, E, P]`.
    pub fn connection_curvature(&self, q: &[f64]) -> Result<Tensor> {
        let a = self.mechanical_connection(q)?;
        let da = jacobian_fn(&|x: &[f64]| self.mechanical_connection(x), q, &self.fd)?;
        let (p, ng) = (self.total_dim, self.group_dim);
        let mut f = Tensor::zeros(&[ng, p, p]);
        for m in 0..ng {
            for e in 0..p {
                for pp in 0..p {
                    let mut v = da.at3(m, pp, e) - da.at3(m, e, pp);
                    for n in 0..ng {
                        for s in 0..ng {
                            v += self.structure.at(m, n, s) * a.at2(n, e) * a.at2(s, pp);
                        }
                    }
                    f.set3(m, e, pp, v);
                }
            }
        }
        Ok(f)
    }

    pub fn connection_data(&self, q: &[f64]) -> Result<ConnectionData> {
        Ok(ConnectionData { connection: self.mechanical_connection(q)?, curvature: self.connection_curvature(q)? })
    }

    /// G^H = Πᵀ G Π.
    pub fn horizontal_metric(&self, q: &[f64]) -> Result<Tensor> {
        Ok(self.frame(q)?.gh)
    }

    /// Largest component of the Lie derivative of G along the Killing fields.
    pub fn killing_residual(&self, q: &[f64]) -> Result<f64> {
        let f = self.frame(q)?;
        let p = self.total_dim;
        let mut worst: f64 = 0.0;
        for mu in 0..self.group_dim {
            for a in 0..p {
                for b in 0..p {
                    let mut v = 0.0;
                    for e in 0..p {
                        v += f.k.at2(e, mu) * f.dg.at3(a, b, e)
                            + f.g.at2(e, b) * f.dk.at3(e, mu, a)
                            + f.g.at2(a, e) * f.dk.at3(e, mu, b);
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Newton iteration `Q ← Q − K Φ⁻¹ χ(Q)` onto χ = 0.
    pub fn project_to_surface(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.project_to_surface_at_step(q, 0)
    }

    pub(crate) fn project_to_surface_at_step(&self, q: &[f64], step: usize) -> Result<Vec<f64>> {
        let mut x = q.to_vec();
        let mut res = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_ITER {
            let chi = self.gauge(&x)?;
            let r = chi.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if r <= 1e-14 || (r <= SURFACE_TOL && r >= 0.5 * res) {
                return Ok(x);
            }
            res = r;
            let k = self.killing(&x)?;
            let chi_grad = self.gauge_gradient(&x)?;
            let (_, phi_inv) = fp_pair(&chi_grad, &k, &x)?;
            let delta = k.matvec(&phi_inv.matvec(&chi));
            for (xi, d) in x.iter_mut().zip(delta) {
                *xi -= d;
            }
            if !self.in_chart(&x) {
                return Err(Error::OutsideChart { point: x });
            }
        }
        let r = self.surface_residual(&x)?;
        if r <= SURFACE_TOL {
            return Ok(x);
        }
        Err(Error::ProjectionFailed { step, iterations: PROJECTION_MAX_ITER, residual: r })
    }

    /// Move `q` along its orbit onto Σ: uses the group action when a chart is
    /// present, otherwise the Killing-direction Newton iteration.
    ///
    /// Newton in group coordinates starts at the identity. If that fails
    /// (the target element may sit where the chart is singular), `q` is first
    /// moved by Haar-quadrature elements, best gauge value first, and Newton
    /// is rerun from there; `F(F(q, b), a) = F(q, ba)` keeps the result on the orbit.
    pub fn orbit_projection(&self, q: &[f64]) -> Result<Vec<f64>> {
        let Some(chart) = self.group_chart() else {
            return self.project_to_surface(q);
        };
        let first = self.orbit_newton(chart, q);
        if first.is_ok() {
            return first;
        }
        let mut moved: Vec<(f64, Vec<f64>)> = Vec::new();
        for node in chart.quadrature(RESTART_NODES) {
            let x = chart.act(q, &node.coords);
            if !self.in_chart(&x) {
                continue;
            }
            if let Ok(chi) = self.gauge(&x) {
                moved.push((chi.iter().fold(0.0, |m: f64, v| m.max(v.abs())), x));
            }
        }
        moved.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, x) in &moved {
            if let Ok(y) = self.orbit_newton(chart, x) {
                return Ok(y);
            }
        }
        first
    }

    fn orbit_newton(&self, chart: &dyn GroupChart, q: &[f64]) -> Result<Vec<f64>> {
        let ng = self.group_dim;
        let mut a = chart.identity();
        let mut x = q.to_vec();
        for _ in 0..PROJECTION_MAX_ITER {
            let chi = self.gauge(&x)?;
            let r = chi.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if r <= 1e-13 {
                return Ok(x);
            }
            // ∂χ/∂a through the action, by central differences in a
            let h = 1e-6;
            let mut jac = Tensor::zeros(&[ng, ng]);
            for j in 0..ng {
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[j] += h;
                am[j] -= h;
                let cp = self.gauge(&chart.act(q, &ap))?;
                let cm = self.gauge(&chart.act(q, &am))?;
                for i in 0..ng {
                    jac.set2(i, j, (cp[i] - cm[i]) / (2.0 * h));
                }
            }
            let (ji, _) = inverse_det(&jac).map_err(|_| Error::GaugeNotTransverse { point: x.clone() })?;
            let da = ji.matvec(&chi);
            for (ai, d) in a.iter_mut().zip(da) {
                *ai -= d;
            }
            x = chart.act(q, &a);
        }
        let r = self.surface_residual(&x)?;
        if r <= SURFACE_TOL {
            Ok(x)
        } else {
            Err(Error::ProjectionFailed { step: 0, iterations: PROJECTION_MAX_ITER, residual: r })
        }
    }

    fn chart_or_err(&self, op: &'static str) -> Result<&dyn GroupChart> {
        self.group_chart().ok_or(Error::MissingGroupChart(op))
    }

    /// The metric in the adapted basis (∂/∂Q*, ∂/∂a) at (Q*, a):
    /// `[[P⊥ᵀGP⊥, P⊥ᵀGKū], [ūᵀKᵀGP⊥, ūᵀγū]]`.
    pub fn adapted_metric(&self, q: &[f64], a: &[f64]) -> Result<Tensor> {
        let chart = self.chart_or_err("adapted_metric")?;
        let f = self.frame(q)?;
        let u = chart.left_trivialization(a);
        let ku = f.k.matmul(&u);
        let pp = f.p_perp.transpose();
        let tl = pp.matmul(&f.g).matmul(&f.p_perp);
        let tr = pp.matmul(&f.g).matmul(&ku);
        let br = u.transpose().matmul(&f.gamma).matmul(&u);
        Ok(blocks(&tl, &tr, &tr.transpose(), &br))
    }

    /// Pseudoinverse of the adapted metric:
    /// `[[N G⁻¹ Nᵀ, N G⁻¹ Λᵀ v̄ᵀ], [v̄ Λ G⁻¹ Nᵀ, v̄ Λ G⁻¹ Λᵀ v̄ᵀ]]`.
    pub fn adapted_pseudoinverse(&self, q: &[f64], a: &[f64]) -> Result<Tensor> {
        let chart = self.chart_or_err("adapted_pseudoinverse")?;
        let f = self.frame(q)?;
        let v = chart.left_trivialization_inverse(a)?;
        let vl = v.matmul(&f.lambda);
        let ngi = f.n.matmul(&f.g_inv);
        let tl = ngi.matmul(&f.n.transpose());
        let tr = ngi.matmul(&vl.transpose());
        let br = vl.matmul(&f.g_inv).matmul(&vl.transpose());
        Ok(blocks(&tl, &tr, &tr.transpose(), &br))
    }

    /// The block `diag(P⊥, 1)` that pseudoinverse · adapted metric must equal.
    pub fn adapted_identity_block(&self, q: &[f64]) -> Result<Tensor> {
        let f = self.frame(q)?;
        let id = Tensor::identity(self.group_dim);
        Ok(blocks(&f.p_perp, &Tensor::zeros(&[self.total_dim, self.group_dim]), &Tensor::zeros(&[self.group_dim, self.total_dim]), &id))
    }

    /// Factorized determinant of the adapted metric restricted to TΣ ⊕ 𝔤.
    pub fn adapted_determinant(&self, q: &[f64], a: &[f64]) -> Result<AdaptedDeterminant> {
        let chart = self.chart_or_err("adapted_determinant")?;
        let f = self.frame(q)?;
        let basis = surface_basis(&f.chi_grad)?;
        let restricted = basis.transpose().matmul(&f.gh).matmul(&basis);
        let horizontal = det(&restricted)?;
        // matrix of P⊥ on TΣ in the graph basis: its free rows
        let pv = f.p_perp.matmul(&basis);
        let free = free_coordinates(&f.chi_grad)?;
        let m = free.len();
        let mut rows = Tensor::zeros(&[m, m]);
        for (i, &r) in free.iter().enumerate() {
            for j in 0..m {
                rows.set2(i, j, pv.at2(r, j));
            }
        }
        let det_u = det(&chart.left_trivialization(a))?;
        Ok(AdaptedDeterminant {
            horizontal,
            orbit: f.det_gamma,
            group_density: det_u * det_u,
            restricted_projector: det(&rows)?,
            value: horizontal * f.det_gamma * det_u * det_u,
        })
    }
}

fn fp_pair(chi_grad: &Tensor, k: &Tensor, q: &[f64]) -> Result<(Tensor, Tensor)> {
    let phi = chi_grad.matmul(k);
    match inverse_det(&phi) {
        Ok((inv, _)) => Ok((phi, inv)),
        Err(Error::Singular { .. }) => Err(Error::GaugeNotTransverse { point: q.to_vec() }),
        Err(e) => Err(e),
    }
}

fn blocks(tl: &Tensor, tr: &Tensor, bl: &Tensor, br: &Tensor) -> Tensor {
    let (p, g) = (tl.rows(), br.rows());
    let n = p + g;
    let mut m = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            let v = match (i < p, j < p) {
                (true, true) => tl.at2(i, j),
                (true, false) => tr.at2(i, j - p),
                (false, true) => bl.at2(i - p, j),
                (false, false) => br.at2(i - p, j - p),
            };
            m.set2(i, j, v);
        }
    }
    m
}

/// Columns of χ_B forming the best-conditioned square minor (greedy pivoting).
fn dependent_coordinates(chi_grad: &Tensor) -> Vec<usize> {
    let (g, p) = (chi_grad.rows(), chi_grad.cols());
    let mut a = chi_grad.clone();
    let mut chosen = Vec::with_capacity(g);
    for r in 0..g {
        let mut best = (0.0, 0);
        for c in 0..p {
            if chosen.contains(&c) {
                continue;
            }
            let v = a.at2(r, c).abs();
            if v > best.0 {
                best = (v, c);
            }
        }
        let c = best.1;
        chosen.push(c);
        let piv = a.at2(r, c);
        if piv == 0.0 {
            continue;
        }
        for rr in r + 1..g {
            let f = a.at2(rr, c) / piv;
            for cc in 0..p {
                let v = a.at2(rr, cc) - f * a.at2(r, cc);
                a.set2(rr, cc, v);
            }
        }
    }
    chosen
}

fn free_coordinates(chi_grad: &Tensor) -> Result<Vec<usize>> {
    let dep = dependent_coordinates(chi_grad);
    Ok((0..chi_grad.cols()).filter(|c| !dep.contains(c)).collect())
}

/// Tangent basis of Σ = {χ = 0} as a graph over the free coordinates:
/// `v_i = e_i − e_J χ_J⁻¹ χ_i`. Returns a P×(P−G) matrix.
pub fn surface_basis(chi_grad: &Tensor) -> Result<Tensor> {
    let (g, p) = (chi_grad.rows(), chi_grad.cols());
    let dep = dependent_coordinates(chi_grad);
    let free: Vec<usize> = (0..p).filter(|c| !dep.contains(c)).collect();
    let mut cj = Tensor::zeros(&[g, g]);
    for r in 0..g {
        for (j, &c) in dep.iter().enumerate() {
            cj.set2(r, j, chi_grad.at2(r, c));
        }
    }
    let (cji, _) = inverse_det(&cj)?;
    let mut v = Tensor::zeros(&[p, free.len()]);
    for (i, &fi) in free.iter().enumerate() {
        v.set2(fi, i, 1.0);
        let col: Vec<f64> = (0..g).map(|r| chi_grad.at2(r, fi)).collect();
        let sol = cji.matvec(&col);
        for (j, &c) in dep.iter().enumerate() {
            v.set2(c, i, -sol[j]);
        }
    }
    Ok(v)
}

/// Pointwise projector set (see [`BundleSpec::projectors`]).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProjectorSet {
    pub point: Vec<f64>,
    pub phi: Tensor,
    pub phi_inv: Tensor,
    /// Λ^γ_D = (Φ⁻¹)^γ_β χ^β_D.
    pub lambda: Tensor,
    /// P⊥ = 1 − G⁻¹χᵀ(χG⁻¹χᵀ)⁻¹χ, the G-orthogonal projector onto TΣ.
    pub p_perp: Tensor,
    /// N = 1 − KΛ, the projector onto TΣ along the orbits.
    pub n: Tensor,
    /// Π = 1 − Kγ⁻¹KᵀG, the G-orthogonal projector onto horizontal vectors.
    pub pi: Tensor,
    pub gamma: Tensor,
    pub gamma_inv: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConnectionData {
    pub connection: Tensor,
    pub curvature: Tensor,
}

/// Factors of the adapted-metric determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdaptedDeterminant {
    /// det of G^H on a graph-coordinate basis of TΣ.
    pub horizontal: f64,
    /// det γ.
    pub orbit: f64,
    /// (det ū)².
    pub group_density: f64,
    /// det of P⊥ restricted to TΣ (equals one).
    pub restricted_projector: f64,
    pub value: f64,
}

/// Every first-order quantity at one point. Derivative axes come last.
#[derive(Debug, Clone)]
pub struct Frame {
    pub point: Vec<f64>,
    pub g: Tensor,
    pub g_inv: Tensor,
    pub det_g: f64,
    /// ∂_C G_AB as `[A, B, C]`.
    pub dg: Tensor,
    pub k: Tensor,
    /// ∂_C K^A_μ as `[A, μ, C]`.
    pub dk: Tensor,
    pub chi: Vec<f64>,
    pub chi_grad: Tensor,
    pub gamma: Tensor,
    pub gamma_inv: Tensor,
    pub det_gamma: f64,
    /// ∂_C γ_μν as `[μ, ν, C]`.
    pub dgamma: Tensor,
    pub phi: Tensor,
    pub phi_inv: Tensor,
    pub lambda: Tensor,
    pub n: Tensor,
    pub p_perp: Tensor,
    pub pi: Tensor,
    pub gh: Tensor,
    /// ∂_C G^H_AB as `[A, B, C]`.
    pub dgh: Tensor,
    /// 𝒜^ν_P.
    pub conn: Tensor,
    /// M = N G⁻¹ Nᵀ.
    pub m: Tensor,
}

impl Frame {
    fn compute(b: &BundleSpec, q: &[f64]) -> Result<Frame> {
        b.check_chart(q)?;
        let p = b.total_dim;
        let ng = b.group_dim;
        let g = b.metric.eval(q)?;
        let (g_inv, det_g) = inverse_det(&g)?;
        let dg = field_jacobian(b.metric.as_ref(), q, &b.fd)?;
        let k = b.killing.eval(q)?;
        let dk = field_jacobian(b.killing.as_ref(), q, &b.fd)?;
        let chi = b.gauge.eval(q)?.into_data();
        let chi_grad = field_jacobian(b.gauge.as_ref(), q, &b.fd)?;
        if dg.shape() != [p, p, p] || dk.shape() != [p, ng, p] || chi_grad.shape() != [ng, p] {
            return Err(Error::Shape("analytic jacobian has the wrong shape".into()));
        }

        let w = g.matmul(&k);
        let gamma = k.transpose().matmul(&w);
        let (gamma_inv, det_gamma) = inverse_det(&gamma).map_err(|_| Error::DegenerateOrbit { point: q.to_vec() })?;
        let (phi, phi_inv) = fp_pair(&chi_grad, &k, q)?;
        let lambda = phi_inv.matmul(&chi_grad);
        let id = Tensor::identity(p);
        let n = id.sub(&k.matmul(&lambda));
        let gic = g_inv.matmul(&chi_grad.transpose());
        let (cgc_inv, _) = inverse_det(&chi_grad.matmul(&gic))?;
        let p_perp = id.sub(&gic.matmul(&cgc_inv).matmul(&chi_grad));
        let conn = gamma_inv.matmul(&w.transpose());
        let pi = id.sub(&k.matmul(&conn));
        let gh = g.sub(&w.matmul(&conn));

        // ∂W = ∂G K + G ∂K and ∂γ = ∂Kᵀ W + Kᵀ ∂W
        let mut dw = Tensor::zeros(&[p, ng, p]);
        for a in 0..p {
            for mu in 0..ng {
                for c in 0..p {
                    let mut v = 0.0;
                    for e in 0..p {
                        v += dg.at3(a, e, c) * k.at2(e, mu) + g.at2(a, e) * dk.at3(e, mu, c);
                    }
                    dw.set3(a, mu, c, v);
                }
            }
        }
        let mut dgamma = Tensor::zeros(&[ng, ng, p]);
        for mu in 0..ng {
            for nu in 0..ng {
                for c in 0..p {
                    let mut v = 0.0;
                    for a in 0..p {
                        v += dk.at3(a, mu, c) * w.at2(a, nu) + k.at2(a, mu) * dw.at3(a, nu, c);
                    }
                    dgamma.set3(mu, nu, c, v);
                }
            }
        }
        // G^H = G − W γ⁻¹ Wᵀ
        // V = W γ⁻¹ and ∂G^H = ∂G − ∂W Vᵀ − V ∂Wᵀ + V ∂γ Vᵀ
        let v = conn.transpose();
        let mut dgh = Tensor::zeros(&[p, p, p]);
        let mut vdg = vec![0.0; p * ng];
        for c in 0..p {
            for a in 0..p {
                for nu in 0..ng {
                    let mut s = 0.0;
                    for mu in 0..ng {
                        s += v.at2(a, mu) * dgamma.at3(mu, nu, c);
                    }
                    vdg[a * ng + nu] = s;
                }
            }
            for a in 0..p {
                for bb in 0..p {
                    let mut s = dg.at3(a, bb, c);
                    for mu in 0..ng {
                        s += -dw.at3(a, mu, c) * v.at2(bb, mu) - dw.at3(bb, mu, c) * v.at2(a, mu)
                            + vdg[a * ng + mu] * v.at2(bb, mu);
                    }
                    dgh.set3(a, bb, c, s);
                }
            }
        }
        let m = n.matmul(&g_inv).matmul(&n.transpose());
        Ok(Frame {
            point: q.to_vec(),
            g,
            g_inv,
            det_g,
            dg,
            k,
            dk,
            chi,
            chi_grad,
            gamma,
            gamma_inv,
            det_gamma,
            dgamma,
            phi,
            phi_inv,
            lambda,
            n,
            p_perp,
            pi,
            gh,
            dgh,
            conn,
            m,
        })
    }

    pub fn projector_set(&self) -> ProjectorSet {
        ProjectorSet {
            point: self.point.clone(),
            phi: self.phi.clone(),
            phi_inv: self.phi_inv.clone(),
            lambda: self.lambda.clone(),
            p_perp: self.p_perp.clone(),
            n: self.n.clone(),
            pi: self.pi.clone(),
            gamma: self.gamma.clone(),
            gamma_inv: self.gamma_inv.clone(),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.g.rows()
    }

    pub fn group_dim(&self) -> usize {
        self.gamma.rows()
    }

    /// g_E = ∂_E log det γ = γ^{μν} ∂_E γ_μν.
    pub fn log_det_gamma_gradient(&self) -> Vec<f64> {
        let (p, ng) = (self.total_dim(), self.group_dim());
        (0..p)
            .map(|e| {
                let mut s = 0.0;
                for mu in 0..ng {
                    for nu in 0..ng {
                        s += self.gamma_inv.at2(mu, nu) * self.dgamma.at3(mu, nu, e);
                    }
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    fn flat(chi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, grad: [f64; 2]) -> BundleSpec {
        BundleSpec::new(
            Box::new(FnField::constant(2, Tensor::identity(2))),
            Box::new(FnField::constant(2, Tensor::matrix(2, 1, &[0.0, 1.0]))),
            Box::new(FnField::new(2, &[1], move |q| Tensor::vector(&[chi(q)])).with_jacobian(move |_| Tensor::matrix(1, 2, &grad))),
            StructureConstants::abelian(1),
        )
        .unwrap()
    }

    #[test]
    fn faddeev_popov_examples() {
        let b = flat(|q| q[1], [0.0, 1.0]);
        let (phi, _) = b.faddeev_popov(&[0.3, 0.0]).unwrap();
        assert_eq!(phi.data(), &[1.0]);
        let b = flat(|q| 2.0 * q[1], [0.0, 2.0]);
        assert_eq!(b.faddeev_popov(&[0.3, 0.0]).unwrap().0.data(), &[2.0]);
        let b = flat(|q| q[0], [1.0, 0.0]);
        assert!(matches!(b.faddeev_popov(&[0.0, 0.0]), Err(Error::GaugeNotTransverse { .. })));
    }

    #[test]
    fn tilted_projectors() {
        let b = flat(|q| q[1] + 0.3 * q[0], [0.3, 1.0]);
        let p = b.projectors(&[0.5, -0.15]).unwrap();
        assert_eq!(p.lambda.data(), &[0.3, 1.0]);
        let want = [1.0, 0.0, -0.3, 0.0];
        for (a, w) in p.n.data().iter().zip(want) {
            assert!((a - w).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_onto_tilted_surface() {
        let b = flat(|q| q[1] + 0.3 * q[0], [0.3, 1.0]);
        let q = b.project_to_surface(&[0.5, 2.0]).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] + 0.15).abs() < 1e-12);
    }

    #[test]
    fn adapted_metric_requires_chart() {
        let b = flat(|q| q[1], [0.0, 1.0]);
        assert!(matches!(b.adapted_metric(&[0.0, 0.0], &[0.0]), Err(Error::MissingGroupChart(_))));
    }

    #[test]
    fn bad_shapes_rejected() {
        let r = BundleSpec::new(
            Box::new(FnField::constant(2, Tensor::identity(2))),
            Box::new(FnField::constant(2, Tensor::matrix(1, 2, &[0.0, 1.0]))),
            Box::new(FnField::new(2, &[1], |q| Tensor::vector(&[q[1]]))),
            StructureConstants::abelian(1),
        );
        assert!(r.is_err());
    }
}
