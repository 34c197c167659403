//! Euler–Maruyama integration of the diffusion on the total space and of the
//! reduced diffusion on the gauge surface, the two forms of the reduction
//! log-Jacobian, Feynman–Kac pairings and the differential generators.
//!
//! Conventions:
//! - Stochastic integrals are Itô (left point).
//! - The original diffusion is
//!   `dη = ½μ²κ (∂_B G^{AB} + ½G^{AB}∂_B log det G) dt + √(μ²κ) X dw` with `XXᵀ = G⁻¹`.
//! - The reduced diffusion is
//!   `dξ = μ²κ(−½M^{CB}\,^HΓ^A_{CB} + j_I^A) dt + √(μ²κ) N X dw`,
//!   followed by a Newton projection back onto the gauge surface.
//! - The stochastic log-Jacobian accumulates
//!   `−½μ²κ (P⊥ j_II)ᵀG^H(P⊥ j_II) dt + √(μ²κ) (G^H P⊥ j_II)ᵀ X dw`.
//! - The Itô form is `¼ log(det γ_b / det γ_a) − ⅛μ²κ ∫ J̃ dt`.
//! - Green's functions are estimated as weak pairings `E[f(end) · weight]`.
//! - Paths that leave the chart are killed: they stay in the path count with
//!   zero contribution.
//! - Every path draws from its own ChaCha8 stream `(seed, path index)`, so
//!   results do not depend on scheduling.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bundle::{BundleSpec, Frame};
use crate::curvature::{horizontal_laplacian_drift, hgamma_of_frame, j_i_from_parts, jtilde_from_parts};
use crate::error::{Error, Result};
use crate::field::{derivative_fn, field_jacobian, jacobian_fn, FdConfig, SmoothField};
use crate::tensor::{inverse_det, sym_factor, Tensor};

/// Simulation parameters.
#[derive(Clone)]
pub struct SdeConfig {
    /// μ²κ (length²/time).
    pub mu2_kappa: f64,
    /// Mass entering the potential weight `V/(μ²κ m)`.
    pub mass: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Potential V (scalar field); `None` means V = 0.
    pub potential: Option<Arc<dyn SmoothField>>,
    /// Nodes per one-dimensional factor of the Haar quadrature used for group averages.
    pub group_nodes: usize,
    /// Largest tolerated fraction of killed paths.
    pub max_killed_fraction: f64,
    /// Finite differences for the derivatives inside the path coefficients.
    pub fd: FdConfig,
    /// Diagnostic mode: drift and noise switched off, integrals still accumulated.
    pub frozen: bool,
}

impl core::fmt::Debug for SdeConfig {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SdeConfig")
            .field("mu2_kappa", &self.mu2_kappa)
            .field("mass", &self.mass)
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .field("n_paths", &self.n_paths)
            .field("seed", &self.seed)
            .field("potential", &self.potential.is_some())
            .field("group_nodes", &self.group_nodes)
            .field("max_killed_fraction", &self.max_killed_fraction)
            .field("fd", &self.fd)
            .field("frozen", &self.frozen)
            .finish()
    }
}

impl SdeConfig {
    pub fn new(mu2_kappa: f64, dt: f64, n_steps: usize, n_paths: usize, seed: u64) -> Self {
        SdeConfig {
            mu2_kappa,
            mass: 1.0,
            dt,
            n_steps,
            n_paths,
            seed,
            potential: None,
            group_nodes: 8,
            max_killed_fraction: 0.01,
            fd: FdConfig::default(),
            frozen: false,
        }
    }

    /// Configuration with `n_steps` chosen so that `n_steps · dt` equals `t` (rounded).
    pub fn for_horizon(mu2_kappa: f64, t: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        let n_steps = (t / dt).round().max(1.0) as usize;
        SdeConfig::new(mu2_kappa, dt, n_steps, n_paths, seed)
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1");
        }
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1");
        }
        if !(self.mu2_kappa > 0.0 && self.mu2_kappa.is_finite()) {
            return bad("mu2_kappa must be positive");
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass must be positive");
        }
        if self.group_nodes == 0 {
            return bad("group_nodes must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.max_killed_fraction) {
            return bad("max_killed_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    fn potential_rate(&self, q: &[f64]) -> Result<f64> {
        match &self.potential {
            None => Ok(0.0),
            Some(v) => Ok(scalar_of(&v.eval(q)?) / (self.mu2_kappa * self.mass)),
        }
    }
}

fn scalar_of(t: &Tensor) -> f64 {
    t.data()[0]
}

/// How a path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PathStatus {
    Completed,
    /// Left the chart during step `step` (0-based).
    Killed { step: usize },
}

/// One recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Wiener increments `dw^M̄` of every completed step.
    pub dw: Vec<Vec<f64>>,
    pub mu2_kappa: f64,
    /// Stochastic form of the reduction log-Jacobian (reduced paths only).
    pub log_girsanov_stochastic: f64,
    /// ∫ J̃ dt along the path (reduced paths only).
    pub jtilde_integral: f64,
    /// log det γ at the first and last recorded states (reduced paths only).
    pub log_det_gamma_start: f64,
    pub log_det_gamma_end: f64,
    /// ∫ V/(μ²κ m) dt.
    pub potential_integral: f64,
    /// Largest |χ| over recorded states.
    pub max_surface_residual: f64,
    pub status: PathStatus,
}

/// Which log-Jacobian representation to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GirsanovForm {
    Stochastic,
    Ito,
}

pub fn girsanov_log_factor(path: &PathSample, form: GirsanovForm) -> Result<f64> {
    if path.dw.is_empty() {
        return Err(Error::MissingIncrements);
    }
    Ok(match form {
        GirsanovForm::Stochastic => path.log_girsanov_stochastic,
        GirsanovForm::Ito => {
            0.25 * (path.log_det_gamma_end - path.log_det_gamma_start) - 0.125 * path.mu2_kappa * path.jtilde_integral
        }
    })
}

/// Deterministic RNG of one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// `n_steps` Wiener increments of dimension `dim` with variance `dt`.
pub fn wiener_increments(seed: u64, path: u64, n_steps: usize, dim: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut rng = path_rng(seed, path);
    let s = dt.sqrt();
    (0..n_steps).map(|_| (0..dim).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

/// Sum consecutive groups of `factor` increments (shared-noise coarsening).
pub fn coarsen_increments(dw: &[Vec<f64>], factor: usize) -> Vec<Vec<f64>> {
    dw.chunks(factor)
        .map(|c| {
            let mut s = vec![0.0; c[0].len()];
            for v in c {
                for (si, vi) in s.iter_mut().zip(v) {
                    *si += vi;
                }
            }
            s
        })
        .collect()
}

fn sym_sqrt_inverse(g_inv: &Tensor) -> Result<Tensor> {
    sym_factor(&g_inv.add(&g_inv.transpose()).scale(0.5))
}

/// Drift `∂_B G^{AB} + ½G^{AB}∂_B log det G` and noise `X` (`XXᵀ = G⁻¹`) of the
/// original diffusion at `q`, without the `½μ²κ` and `√(μ²κ)` factors.
pub fn original_coefficients(b: &BundleSpec, q: &[f64], fd: &FdConfig) -> Result<(Vec<f64>, Tensor)> {
    let p = b.total_dim();
    let g = b.metric(q)?;
    let (gi, _) = inverse_det(&g)?;
    let dg = field_jacobian(b.metric_field(), q, fd)?;
    // ∂_B G^{AB} = −G^{AC} ∂_B G_CD G^{DB},  ∂_B log det G = G^{CD} ∂_B G_CD
    let mut drift = vec![0.0; p];
    for bb in 0..p {
        let mut dlog = 0.0;
        for c in 0..p {
            for d in 0..p {
                dlog += gi.at2(c, d) * dg.at3(c, d, bb);
            }
        }
        for (a, da) in drift.iter_mut().enumerate() {
            let mut div = 0.0;
            for c in 0..p {
                for d in 0..p {
                    div -= gi.at2(a, c) * dg.at3(c, d, bb) * gi.at2(d, bb);
                }
            }
            *da += div + 0.5 * gi.at2(a, bb) * dlog;
        }
    }
    Ok((drift, sym_sqrt_inverse(&gi)?))
}

/// Coefficients of the reduced diffusion at a gauge-surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCoefficients {
    /// −½M^{CB}\,^HΓ^A_CB + j_I^A (multiply by μ²κ).
    pub drift: Vec<f64>,
    /// N X with XXᵀ = G⁻¹ (multiply by √(μ²κ)).
    pub noise: Tensor,
    pub j_i: Vec<f64>,
    pub j_ii: Vec<f64>,
    /// (P⊥ j_II)ᵀ G^H (P⊥ j_II).
    pub girsanov_dt: f64,
    /// Xᵀ G^H P⊥ j_II.
    pub girsanov_dw: Vec<f64>,
    pub log_det_gamma: f64,
    pub jtilde: Option<f64>,
}

fn ldg_gradient(b: &BundleSpec, q: &[f64], fd: &FdConfig) -> Result<Tensor> {
    let g = b.metric(q)?;
    let dg = field_jacobian(b.metric_field(), q, fd)?;
    let k = b.killing(q)?;
    let dk = field_jacobian(b.killing_field(), q, fd)?;
    let (p, ng) = (k.rows(), k.cols());
    let w = g.matmul(&k);
    let gamma = k.transpose().matmul(&w);
    let (gi, _) = inverse_det(&gamma)?;
    let mut out = vec![0.0; p];
    for (c, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for mu in 0..ng {
            for nu in 0..ng {
                // ∂_c γ_μν = ∂K^a_μ G_ab K^b_ν + K^a_μ ∂G_ab K^b_ν + K^a_μ G_ab ∂K^b_ν
                let mut d = 0.0;
                for a in 0..p {
                    d += dk.at3(a, mu, c) * w.at2(a, nu) + w.at2(a, mu) * dk.at3(a, nu, c);
                    for bb in 0..p {
                        d += k.at2(a, mu) * dg.at3(a, bb, c) * k.at2(bb, nu);
                    }
                }
                s += gi.at2(mu, nu) * d;
            }
        }
        *o = s;
    }
    Ok(Tensor::vector(&out))
}

pub fn reduced_coefficients(b: &BundleSpec, q: &[f64], fd: &FdConfig, with_jtilde: bool) -> Result<ReducedCoefficients> {
    let f = b.frame(q)?;
    reduced_coefficients_from_frame(b, &f, fd, with_jtilde)
}

fn reduced_coefficients_from_frame(b: &BundleSpec, f: &Frame, fd: &FdConfig, with_jtilde: bool) -> Result<ReducedCoefficients> {
    let q = &f.point;
    let p = f.total_dim();
    let h = hgamma_of_frame(f);
    let dn = b.kernel_projector_derivative(f, fd)?;
    let j_i = j_i_from_parts(f, &h, &dn);
    let mut drift = horizontal_laplacian_drift(f, &h);
    for (d, j) in drift.iter_mut().zip(&j_i) {
        *d += j;
    }
    let x = sym_sqrt_inverse(&f.g_inv)?;
    let noise = f.n.matmul(&x);
    let g = f.log_det_gamma_gradient();
    let j_ii: Vec<f64> = f.m.matvec(&g).iter().map(|v| 0.25 * v).collect();
    let pj = f.p_perp.matvec(&j_ii);
    let u = f.gh.matvec(&pj);
    let girsanov_dt: f64 = pj.iter().zip(&u).map(|(a, c)| a * c).sum();
    let girsanov_dw = x.transpose().matvec(&u);
    let jtilde = if with_jtilde {
        let hess = jacobian_fn(&|y: &[f64]| ldg_gradient(b, y, fd), q, fd)?;
        Some(jtilde_from_parts(f, &h, &dn, &hess, &g))
    } else {
        None
    };
    debug_assert_eq!(drift.len(), p);
    Ok(ReducedCoefficients { drift, noise, j_i, j_ii, girsanov_dt, girsanov_dw, log_det_gamma: f.det_gamma.ln(), jtilde })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Outcome of one path as needed by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PathEnd {
    killed: bool,
    value: f64,
    /// Additional weighted values (reduced_M variants).
    extra: [f64; 3],
}

/// Result of a reduced-path run, shared by the recorder and the estimators.
struct ReducedRun {
    end: Vec<f64>,
    log_w: f64,
    jtilde_int: f64,
    ldg_start: f64,
    ldg_end: f64,
    potential_int: f64,
    killed_at: Option<usize>,
}

fn run_reduced<R: FnMut(usize, &[f64], &[f64])>(
    b: &BundleSpec,
    cfg: &SdeConfig,
    start: &[f64],
    dw: &mut dyn FnMut(usize) -> Vec<f64>,
    with_jtilde: bool,
    mut record: R,
) -> Result<ReducedRun> {
    let s = cfg.mu2_kappa.sqrt();
    let mut xi = start.to_vec();
    let mut log_w = 0.0;
    let mut jtilde_int = 0.0;
    let mut potential_int = 0.0;
    let mut ldg_start = f64::NAN;
    let mut ldg_end;
    let mut step = 0;
    loop {
        let c = reduced_coefficients(b, &xi, &cfg.fd, with_jtilde)?;
        if step == 0 {
            ldg_start = c.log_det_gamma;
        }
        ldg_end = c.log_det_gamma;
        if step == cfg.n_steps {
            break;
        }
        let w = dw(step);
        record(step, &xi, &w);
        let dt = cfg.dt;
        potential_int += cfg.potential_rate(&xi)? * dt;
        if let Some(j) = c.jtilde {
            jtilde_int += j * dt;
        }
        log_w += -0.5 * cfg.mu2_kappa * c.girsanov_dt * dt + s * c.girsanov_dw.iter().zip(&w).map(|(a, x)| a * x).sum::<f64>();
        if !cfg.frozen {
            let nw = c.noise.matvec(&w);
            let mut next = xi.clone();
            for i in 0..next.len() {
                next[i] += cfg.mu2_kappa * c.drift[i] * dt + s * nw[i];
            }
            if !b.in_chart(&next) {
                return Ok(ReducedRun { end: next, log_w, jtilde_int, ldg_start, ldg_end, potential_int, killed_at: Some(step) });
            }
            xi = match b.project_to_surface_at_step(&next, step) {
                Ok(x) => x,
                Err(Error::OutsideChart { point }) => {
                    return Ok(ReducedRun { end: point, log_w, jtilde_int, ldg_start, ldg_end, potential_int, killed_at: Some(step) });
                }
                Err(e) => return Err(e),
            };
        }
        step += 1;
    }
    Ok(ReducedRun { end: xi, log_w, jtilde_int, ldg_start, ldg_end, potential_int, killed_at: None })
}

fn run_original(
    b: &BundleSpec,
    cfg: &SdeConfig,
    start: &[f64],
    dw: &mut dyn FnMut(usize) -> Vec<f64>,
    record: &mut dyn FnMut(usize, &[f64], &[f64]),
) -> Result<(Vec<f64>, f64, Option<usize>)> {
    let s = cfg.mu2_kappa.sqrt();
    let mut eta = start.to_vec();
    let mut potential_int = 0.0;
    for step in 0..cfg.n_steps {
        let w = dw(step);
        record(step, &eta, &w);
        potential_int += cfg.potential_rate(&eta)? * cfg.dt;
        if cfg.frozen {
            continue;
        }
        let (drift, x) = original_coefficients(b, &eta, &cfg.fd)?;
        let xw = x.matvec(&w);
        for i in 0..eta.len() {
            eta[i] += 0.5 * cfg.mu2_kappa * drift[i] * cfg.dt + s * xw[i];
        }
        if !b.in_chart(&eta) {
            return Ok((eta, potential_int, Some(step)));
        }
    }
    Ok((eta, potential_int, None))
}

fn check_start(b: &BundleSpec, q: &[f64]) -> Result<()> {
    if q.len() != b.total_dim() {
        return Err(Error::Shape(alloc::format!("start point has {} coordinates, expected {}", q.len(), b.total_dim())));
    }
    if !b.in_chart(q) {
        return Err(Error::OutsideChart { point: q.to_vec() });
    }
    Ok(())
}

/// Recorded Euler–Maruyama path of the original diffusion (path index 0).
pub fn simulate_original(b: &BundleSpec, cfg: &SdeConfig, start: &[f64]) -> Result<PathSample> {
    simulate_original_path(b, cfg, start, 0)
}

pub fn simulate_original_path(b: &BundleSpec, cfg: &SdeConfig, start: &[f64], path: u64) -> Result<PathSample> {
    cfg.validate()?;
    check_start(b, start)?;
    let p = b.total_dim();
    let incs = if cfg.frozen { vec![vec![0.0; p]; cfg.n_steps] } else { wiener_increments(cfg.seed, path, cfg.n_steps, p, cfg.dt) };
    let mut states = Vec::new();
    let mut dws = Vec::new();
    let (end, potential_integral, killed) = run_original(b, cfg, start, &mut |i| incs[i].clone(), &mut |_, x, w| {
        states.push(x.to_vec());
        dws.push(w.to_vec());
    })?;
    states.push(end);
    let times = (0..states.len()).map(|i| i as f64 * cfg.dt).collect();
    Ok(PathSample {
        times,
        states,
        dw: dws,
        mu2_kappa: cfg.mu2_kappa,
        log_girsanov_stochastic: 0.0,
        jtilde_integral: 0.0,
        log_det_gamma_start: f64::NAN,
        log_det_gamma_end: f64::NAN,
        potential_integral,
        max_surface_residual: f64::NAN,
        status: killed.map_or(PathStatus::Completed, |step| PathStatus::Killed { step }),
    })
}

/// Recorded path of the reduced diffusion (path index 0).
pub fn simulate_reduced(b: &BundleSpec, cfg: &SdeConfig, start: &[f64]) -> Result<PathSample> {
    cfg.validate()?;
    let p = b.total_dim();
    let incs = if cfg.frozen { vec![vec![0.0; p]; cfg.n_steps] } else { wiener_increments(cfg.seed, 0, cfg.n_steps, p, cfg.dt) };
    simulate_reduced_with_increments(b, cfg, start, &incs)
}

/// Reduced path driven by given increments (`cfg.n_steps` is taken from `dw`).
pub fn simulate_reduced_with_increments(b: &BundleSpec, cfg: &SdeConfig, start: &[f64], dw: &[Vec<f64>]) -> Result<PathSample> {
    check_start(b, start)?;
    let r = b.surface_residual(start)?;
    if r > 1e-10 {
        return Err(Error::InvalidConfig(alloc::format!("reduced paths must start on the gauge surface (|χ| = {r:e})")));
    }
    if dw.iter().any(|w| w.len() != b.total_dim()) {
        return Err(Error::Shape("increments must have one entry per total-space coordinate".into()));
    }
    let mut cfg = cfg.clone();
    cfg.n_steps = dw.len();
    cfg.validate()?;
    let mut states = Vec::new();
    let mut dws = Vec::new();
    let mut max_res = 0.0f64;
    let run = run_reduced(b, &cfg, start, &mut |i| dw[i].clone(), true, |_, x, w| {
        states.push(x.to_vec());
        dws.push(w.to_vec());
    })?;
    for x in &states {
        max_res = max_res.max(max_abs(&b.gauge(x)?));
    }
    if run.killed_at.is_none() {
        max_res = max_res.max(max_abs(&b.gauge(&run.end)?));
    }
    states.push(run.end);
    let times = (0..states.len()).map(|i| i as f64 * cfg.dt).collect();
    Ok(PathSample {
        times,
        states,
        dw: dws,
        mu2_kappa: cfg.mu2_kappa,
        log_girsanov_stochastic: run.log_w,
        jtilde_integral: run.jtilde_int,
        log_det_gamma_start: run.ldg_start,
        log_det_gamma_end: run.ldg_end,
        potential_integral: run.potential_int,
        max_surface_residual: max_res,
        status: run.killed_at.map_or(PathStatus::Completed, |step| PathStatus::Killed { step }),
    })
}

/// Which pairing to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GreenKind {
    /// Group-averaged `E[f(π_Σ η_t)]` over the original diffusion.
    Original,
    /// `E[f(ξ_t) e^{stochastic log-Jacobian}]`.
    ReducedSigma,
    /// `E[f(ξ_t)(γ_b/γ_a)^{1/4} e^{−⅛μ²κ∫J̃}]`.
    ReducedM,
}

impl GreenKind {
    pub fn name(self) -> &'static str {
        match self {
            GreenKind::Original => "original",
            GreenKind::ReducedSigma => "reduced_sigma",
            GreenKind::ReducedM => "reduced_M",
        }
    }
}

/// Alternative weighting of the same paths.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreenVariant {
    pub name: String,
    pub value: f64,
    pub standard_error: f64,
}

/// Monte Carlo estimate of a weak pairing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreenEstimate {
    pub kind: GreenKind,
    pub test_function: String,
    pub value: f64,
    pub standard_error: f64,
    pub n_paths: usize,
    pub n_killed: usize,
    /// Paths with a non-finite weight, left out of the mean.
    pub n_excluded: usize,
    pub variants: Vec<GreenVariant>,
}

/// Sum by recursive halving.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error (sample standard deviation over √n).
pub fn mean_and_standard_error(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn map_paths<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// A test function on the gauge surface.
pub type TestFunction<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

fn summarize(kind: GreenKind, name: &str, cfg: &SdeConfig, ends: &[PathEnd], variant_names: &[&str]) -> Result<GreenEstimate> {
    let n = ends.len();
    let killed = ends.iter().filter(|e| e.killed).count();
    if killed as f64 > cfg.max_killed_fraction * n as f64 {
        return Err(Error::TooManyTruncated { killed, n_paths: n, max_fraction: cfg.max_killed_fraction });
    }
    let finite: Vec<&PathEnd> =
        ends.iter().filter(|e| e.value.is_finite() && e.extra.iter().take(variant_names.len()).all(|v| v.is_finite())).collect();
    let excluded = n - finite.len();
    let vals: Vec<f64> = finite.iter().map(|e| e.value).collect();
    let (value, se) = mean_and_standard_error(&vals);
    let variants = variant_names
        .iter()
        .enumerate()
        .map(|(i, vn)| {
            let v: Vec<f64> = finite.iter().map(|e| e.extra[i]).collect();
            let (value, standard_error) = mean_and_standard_error(&v);
            GreenVariant { name: vn.to_string(), value, standard_error }
        })
        .collect();
    Ok(GreenEstimate {
        kind,
        test_function: name.to_string(),
        value,
        standard_error: se,
        n_paths: n,
        n_killed: killed,
        n_excluded: excluded,
        variants,
    })
}

/// Names of the reduced_M weight variants, in the order reported.
pub const REDUCED_M_VARIANTS: [&str; 3] = ["gamma_ratio_quarter", "no_prefactor", "printed_inverse_quarter"];

/// Weak pairing `E[f(end) · weight]` of the chosen kind started at `start` on Σ.
pub fn estimate_green(b: &BundleSpec, cfg: &SdeConfig, kind: GreenKind, start: &[f64], f: TestFunction, name: &str) -> Result<GreenEstimate> {
    cfg.validate()?;
    check_start(b, start)?;
    let p = b.total_dim();
    match kind {
        GreenKind::ReducedSigma | GreenKind::ReducedM => {
            let res = b.surface_residual(start)?;
            if res > 1e-10 {
                return Err(Error::InvalidConfig(alloc::format!("reduced paths must start on the gauge surface (|χ| = {res:e})")));
            }
            let with_j = kind == GreenKind::ReducedM;
            let ends = map_paths(cfg.n_paths, |i| {
                let mut rng = path_rng(cfg.seed, i as u64);
                let sdt = cfg.dt.sqrt();
                let mut dw = |_: usize| (0..p).map(|_| sdt * rng.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>();
                let run = run_reduced(b, cfg, start, &mut dw, with_j, |_, _, _| {})?;
                if run.killed_at.is_some() {
                    return Ok(PathEnd { killed: true, value: 0.0, extra: [0.0; 3] });
                }
                let fv = f(&run.end);
                Ok(if with_j {
                    let base = (-0.125 * cfg.mu2_kappa * run.jtilde_int + run.potential_int).exp();
                    let ratio = (0.25 * (run.ldg_end - run.ldg_start)).exp();
                    let printed = (-0.25 * (run.ldg_end + run.ldg_start)).exp();
                    let v = fv * ratio * base;
                    PathEnd { killed: false, value: v, extra: [v, fv * base, fv * printed * base] }
                } else {
                    PathEnd { killed: false, value: fv * (run.log_w + run.potential_int).exp(), extra: [0.0; 3] }
                })
            })?;
            let names: &[&str] = if with_j { &REDUCED_M_VARIANTS } else { &[] };
            summarize(kind, name, cfg, &ends, names)
        }
        GreenKind::Original => {
            let chart = b.group_chart().ok_or(Error::MissingGroupChart("group-averaged original pairing"))?;
            let nodes = chart.quadrature(cfg.group_nodes);
            let starts: Vec<(Vec<f64>, f64)> =
                nodes.iter().map(|nd| (chart.act(start, &nd.coords), nd.weight * nodes.len() as f64)).collect();
            for (s, _) in &starts {
                check_start(b, s)?;
            }
            let ends = map_paths(cfg.n_paths, |i| {
                let (s0, w) = &starts[i % starts.len()];
                let mut rng = path_rng(cfg.seed, i as u64);
                let sdt = cfg.dt.sqrt();
                let mut dw = |_: usize| (0..p).map(|_| sdt * rng.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>();
                let (end, pot, killed) = run_original(b, cfg, s0, &mut dw, &mut |_, _, _| {})?;
                if killed.is_some() {
                    return Ok(PathEnd { killed: true, value: 0.0, extra: [0.0; 3] });
                }
                match b.orbit_projection(&end) {
                    Ok(x) => Ok(PathEnd { killed: false, value: w * f(&x) * pot.exp(), extra: [0.0; 3] }),
                    Err(Error::OutsideChart { .. }) => Ok(PathEnd { killed: true, value: 0.0, extra: [0.0; 3] }),
                    Err(e) => Err(e),
                }
            })?;
            summarize(kind, name, cfg, &ends, &[])
        }
    }
}

/// Reduced versus group-averaged original pairing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReductionCheck {
    pub reduced: GreenEstimate,
    pub original: GreenEstimate,
    pub difference: f64,
    pub combined_standard_error: f64,
    /// |difference| / combined standard error.
    pub z_score: f64,
}

/// XOR mask applied to the configured seed for the original-side ensemble of
/// [`verify_reduction_relation`].
pub const ORIGINAL_SEED_MASK: u64 = 0x9e37_79b9_7f4a_7c15;

/// Compare the reduced pairing with the group average of the original one.
/// The original side draws from seed `cfg.seed ^ ORIGINAL_SEED_MASK`, so the
/// two ensembles are independent.
pub fn verify_reduction_relation(b: &BundleSpec, cfg: &SdeConfig, start: &[f64], f: TestFunction, name: &str) -> Result<ReductionCheck> {
    let reduced = estimate_green(b, cfg, GreenKind::ReducedSigma, start, f, name)?;
    let mut ocfg = cfg.clone();
    ocfg.seed = cfg.seed ^ ORIGINAL_SEED_MASK;
    let original = estimate_green(b, &ocfg, GreenKind::Original, start, f, name)?;
    let difference = reduced.value - original.value;
    let combined = (reduced.standard_error.powi(2) + original.standard_error.powi(2)).sqrt();
    Ok(ReductionCheck { reduced, original, difference, combined_standard_error: combined, z_score: difference.abs() / combined })
}

/// Differential generator applied at a gauge-surface point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Generator {
    /// `½μ²κ{M:∂² − M^{CB}\,^HΓ^A_CB∂_A + 2(j_I + j_II)·∂} + V/(μ²κm)`.
    Op2,
    /// `½μ²κ{M:∂² − M^{CB}\,^HΓ^A_CB∂_A + 2j_I·∂} − ⅛μ²κJ̃ + V/(μ²κm)`.
    Op3,
}

/// Value of `op ψ` at `q`, derivatives of ψ by finite differences of `b.fd()`.
pub fn apply_generator(b: &BundleSpec, psi: &dyn SmoothField, q: &[f64], which: Generator, cfg: &SdeConfig) -> Result<f64> {
    let p = b.total_dim();
    let fd = b.fd();
    let val = |x: &[f64]| psi.eval(x);
    let psi0 = scalar_of(&psi.eval(q)?);
    let grad: Vec<f64> = (0..p).map(|d| derivative_fn(&val, q, d, 1, fd).map(|t| scalar_of(&t))).collect::<Result<_>>()?;
    let gradient = |x: &[f64]| -> Result<Tensor> {
        let g: Vec<f64> = (0..p).map(|d| derivative_fn(&val, x, d, 1, fd).map(|t| scalar_of(&t))).collect::<Result<_>>()?;
        Ok(Tensor::vector(&g))
    };
    let hess = jacobian_fn(&gradient, q, fd)?;
    let coeffs = reduced_coefficients(b, q, &cfg.fd, which == Generator::Op3)?;
    let f = b.frame(q)?;
    let mut second = 0.0;
    for a in 0..p {
        for c in 0..p {
            second += f.m.at2(a, c) * hess.at2(a, c);
        }
    }
    // coeffs.drift already holds −½M^HΓ + j_I
    let first: f64 = match which {
        Generator::Op2 => (0..p).map(|a| (2.0 * coeffs.drift[a] + 2.0 * coeffs.j_ii[a]) * grad[a]).sum(),
        Generator::Op3 => (0..p).map(|a| 2.0 * coeffs.drift[a] * grad[a]).sum(),
    };
    let mut out = 0.5 * cfg.mu2_kappa * (second + first) + cfg.potential_rate(q)? * psi0;
    if which == Generator::Op3 {
        out -= 0.125 * cfg.mu2_kappa * coeffs.jtilde.unwrap_or(0.0) * psi0;
    }
    Ok(out)
}

/// Weight paired with a generator in the short-time semigroup check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemigroupWeight {
    /// Stochastic log-Jacobian (pairs with op2).
    Girsanov,
    /// `e^{−⅛μ²κ∫J̃}` without prefactor (pairs with op3).
    NoPrefactor,
}

/// `(E[ψ(ξ_T)·weight] − ψ(q)) / T` with `T = n_steps·dt`.
pub fn semigroup_derivative(b: &BundleSpec, cfg: &SdeConfig, q: &[f64], psi: &dyn SmoothField, weight: SemigroupWeight) -> Result<GreenEstimate> {
    let f = |x: &[f64]| psi.eval(x).map(|t| scalar_of(&t)).unwrap_or(f64::NAN);
    let psi0 = scalar_of(&psi.eval(q)?);
    let (kind, mut est) = match weight {
        SemigroupWeight::Girsanov => (GreenKind::ReducedSigma, estimate_green(b, cfg, GreenKind::ReducedSigma, q, &f, "psi")?),
        SemigroupWeight::NoPrefactor => {
            let e = estimate_green(b, cfg, GreenKind::ReducedM, q, &f, "psi")?;
            let v = e.variants.iter().find(|v| v.name == "no_prefactor").cloned().ok_or(Error::MissingIncrements)?;
            (GreenKind::ReducedM, GreenEstimate { value: v.value, standard_error: v.standard_error, ..e })
        }
    };
    let t = cfg.horizon();
    est.kind = kind;
    est.value = (est.value - psi0) / t;
    est.standard_error /= t;
    est.variants.clear();
    Ok(est)
}

/// Boxed scalar test field built from a closure.
pub fn scalar_field(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Box<dyn SmoothField> {
    Box::new(crate::field::FnField::new(dim, &[], move |x| Tensor::scalar(f(x))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::make_scenario;

    #[test]
    fn increments_have_variance_dt() {
        let dt = 0.01;
        let mut all = Vec::new();
        for path in 0..200 {
            for w in wiener_increments(3, path, 500, 1, dt) {
                all.push(w[0]);
            }
        }
        let (mean, _) = mean_and_standard_error(&all);
        let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (all.len() - 1) as f64;
        assert!((var / dt - 1.0).abs() < 0.01, "{}", var / dt);
    }

    #[test]
    fn coarsening_sums_groups() {
        let dw = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        assert_eq!(coarsen_increments(&dw, 2), vec![vec![3.0], vec![7.0]]);
    }

    #[test]
    fn polar_original_drift_is_half_over_r() {
        let s = make_scenario("polar_plane_u1").unwrap();
        for r in [0.5, 1.0, 2.0] {
            let (d, x) = original_coefficients(&s.bundle, &[r, 0.3], &FdConfig::default()).unwrap();
            assert!((0.5 * d[0] - 0.5 / r).abs() < 1e-12 && d[1].abs() < 1e-12);
            assert!((x.matmul(&x.transpose()).sub(&Tensor::diag(&[1.0, 1.0 / (r * r)]))).max_abs() < 1e-12);
        }
    }

    #[test]
    fn polar_reduced_coefficients() {
        let s = make_scenario("polar_plane_u1").unwrap();
        let c = reduced_coefficients(&s.bundle, &[2.0, 0.0], &FdConfig::default(), true).unwrap();
        assert!(max_abs(&c.drift) < 1e-9);
        assert!((c.j_ii[0] - 0.25).abs() < 1e-9 && c.j_ii[1].abs() < 1e-12);
        assert!((c.girsanov_dt - 1.0 / 16.0).abs() < 1e-9);
        assert!((c.jtilde.unwrap() + 0.25).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_flat_path_stays_put() {
        let s = make_scenario("flat_torus_u1").unwrap();
        let mut cfg = SdeConfig::new(1.0, 0.01, 20, 1, 0);
        cfg.frozen = true;
        let p = simulate_reduced(&s.bundle, &cfg, &[0.3, 0.0]).unwrap();
        assert!(p.states.iter().all(|x| x == &vec![0.3, 0.0]));
        assert_eq!(girsanov_log_factor(&p, GirsanovForm::Ito).unwrap(), 0.0);
        assert_eq!(girsanov_log_factor(&p, GirsanovForm::Stochastic).unwrap(), 0.0);
    }

    #[test]
    fn frozen_polar_ito_form_is_plug_in_value() {
        let s = make_scenario("polar_plane_u1").unwrap();
        let mut cfg = SdeConfig::new(1.0, 0.01, 50, 1, 0);
        cfg.frozen = true;
        let p = simulate_reduced(&s.bundle, &cfg, &[2.0, 0.0]).unwrap();
        let ito = girsanov_log_factor(&p, GirsanovForm::Ito).unwrap();
        assert!((ito - 0.125 * 0.5 / 4.0).abs() < 1e-7, "{ito}");
    }

    #[test]
    fn missing_increments_is_an_error() {
        let s = make_scenario("polar_plane_u1").unwrap();
        let cfg = SdeConfig::new(1.0, 0.01, 2, 1, 0);
        let mut p = simulate_reduced(&s.bundle, &cfg, &[2.0, 0.0]).unwrap();
        p.dw.clear();
        assert_eq!(girsanov_log_factor(&p, GirsanovForm::Ito), Err(Error::MissingIncrements));
    }

    #[test]
    fn generator_on_flat_quadratic() {
        let s = make_scenario("flat_torus_u1").unwrap();
        let psi = scalar_field(2, |x| x[0] * x[0]);
        let cfg = SdeConfig::new(1.7, 0.01, 1, 1, 0);
        let v = apply_generator(&s.bundle, psi.as_ref(), &[0.3, 0.0], Generator::Op2, &cfg).unwrap();
        assert!((v - 1.7).abs() < 1e-6, "{v}");
        let c = scalar_field(2, |_| 3.0);
        assert!(apply_generator(&s.bundle, c.as_ref(), &[0.3, 0.0], Generator::Op3, &cfg).unwrap().abs() < 1e-9);
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(SdeConfig::new(1.0, 0.0, 1, 1, 0).validate().is_err());
        assert!(SdeConfig::new(1.0, 0.1, 1, 0, 0).validate().is_err());
        assert!(SdeConfig::new(-1.0, 0.1, 1, 1, 0).validate().is_err());
    }
}
