//! Smooth tensor fields on a coordinate chart and their finite-difference
//! derivatives.
//!
//! Fields may carry an analytic Jacobian; every routine that needs a
//! derivative prefers it and falls back to central differences otherwise.
//! Derivative axes are appended after the field's own axes.

use alloc::boxed::Box;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A tensor-valued map on an open subset of ℝⁿ.
pub trait SmoothField: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_shape(&self) -> &[usize];
    fn eval(&self, point: &[f64]) -> Result<Tensor>;
    /// Analytic derivative (derivative index last) if the field provides one.
    fn jacobian(&self, _point: &[f64]) -> Option<Result<Tensor>> {
        None
    }
    /// Analytic second derivative (two derivative indices last) if provided.
    fn hessian(&self, _point: &[f64]) -> Option<Result<Tensor>> {
        None
    }
}

type MapFn = Box<dyn Fn(&[f64]) -> Tensor + Send + Sync>;

/// A field defined by closures.
pub struct FnField {
    dim: usize,
    shape: Vec<usize>,
    eval: MapFn,
    jacobian: Option<MapFn>,
    hessian: Option<MapFn>,
}

impl FnField {
    pub fn new(dim: usize, shape: &[usize], eval: impl Fn(&[f64]) -> Tensor + Send + Sync + 'static) -> Self {
        FnField { dim, shape: shape.to_vec(), eval: Box::new(eval), jacobian: None, hessian: None }
    }

    /// Attach an analytic Jacobian; its shape must be the codomain shape followed by `dim`.
    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> Tensor + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Box::new(jac));
        self
    }

    /// Attach an analytic second derivative; its shape is the codomain shape followed by `dim, dim`.
    pub fn with_hessian(mut self, hess: impl Fn(&[f64]) -> Tensor + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(hess));
        self
    }

    /// Zero second derivative, for fields affine in the point.
    pub fn affine(self) -> Self {
        let mut hshape = self.shape.clone();
        hshape.push(self.dim);
        hshape.push(self.dim);
        let zero = Tensor::zeros(&hshape);
        self.with_hessian(move |_| zero.clone())
    }

    /// A field constant in the point.
    pub fn constant(dim: usize, value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        let mut jshape = shape.clone();
        jshape.push(dim);
        let zero = Tensor::zeros(&jshape);
        FnField::new(dim, &shape, move |_| value.clone()).with_jacobian(move |_| zero.clone()).affine()
    }
}

impl SmoothField for FnField {
    fn domain_dim(&self) -> usize {
        self.dim
    }

    fn codomain_shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, point: &[f64]) -> Result<Tensor> {
        if point.len() != self.dim {
            return Err(Error::Shape(alloc::format!(
                "field on R^{} evaluated at a point of length {}",
                self.dim,
                point.len()
            )));
        }
        Ok((self.eval)(point))
    }

    fn jacobian(&self, point: &[f64]) -> Option<Result<Tensor>> {
        self.jacobian.as_ref().map(|j| Ok(j(point)))
    }

    fn hessian(&self, point: &[f64]) -> Option<Result<Tensor>> {
        self.hessian.as_ref().map(|h| Ok(h(point)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Stencil {
    /// Three-point central stencil, error O(h²).
    Central3,
    /// Five-point central stencil, error O(h⁴).
    Central5,
}

/// Finite-difference settings. The actual step along coordinate `i` is
/// `step · max(1, |xᵢ|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FdConfig {
    pub step: f64,
    pub stencil: Stencil,
    /// One Richardson level on top of the stencil (steps h and h/2).
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-5, stencil: Stencil::Central3, richardson: false }
    }
}

impl FdConfig {
    /// Setting used for curvature quantities: h = 1e-4 with Richardson extrapolation.
    pub fn curvature() -> Self {
        FdConfig { step: 1e-4, stencil: Stencil::Central3, richardson: true }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    fn h(&self, x: f64) -> f64 {
        self.step * x.abs().max(1.0)
    }
}

fn eval_checked<F>(f: &F, p: &[f64]) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    let t = f(p)?;
    if !t.is_finite() {
        return Err(Error::NonFinite { point: p.to_vec() });
    }
    Ok(t)
}

fn shifted<F>(f: &F, point: &[f64], dir: usize, off: f64, buf: &mut Vec<f64>) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    buf.clear();
    buf.extend_from_slice(point);
    buf[dir] += off;
    eval_checked(f, buf)
}

fn combine(terms: &[(f64, &Tensor)]) -> Tensor {
    let mut out = Tensor::zeros(terms[0].1.shape());
    for (c, t) in terms {
        for (o, v) in out.data_mut().iter_mut().zip(t.data()) {
            *o += c * v;
        }
    }
    out
}

fn first_raw<F>(f: &F, point: &[f64], dir: usize, h: f64, stencil: Stencil) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    let mut buf = Vec::with_capacity(point.len());
    let p1 = shifted(f, point, dir, h, &mut buf)?;
    let m1 = shifted(f, point, dir, -h, &mut buf)?;
    match stencil {
        Stencil::Central3 => Ok(combine(&[(0.5 / h, &p1), (-0.5 / h, &m1)])),
        Stencil::Central5 => {
            let p2 = shifted(f, point, dir, 2.0 * h, &mut buf)?;
            let m2 = shifted(f, point, dir, -2.0 * h, &mut buf)?;
            let c = 1.0 / (12.0 * h);
            Ok(combine(&[(8.0 * c, &p1), (-8.0 * c, &m1), (-c, &p2), (c, &m2)]))
        }
    }
}

fn second_raw<F>(f: &F, point: &[f64], dir: usize, h: f64, stencil: Stencil) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    let mut buf = Vec::with_capacity(point.len());
    let c0 = eval_checked(f, point)?;
    let p1 = shifted(f, point, dir, h, &mut buf)?;
    let m1 = shifted(f, point, dir, -h, &mut buf)?;
    let h2 = h * h;
    match stencil {
        Stencil::Central3 => Ok(combine(&[(1.0 / h2, &p1), (1.0 / h2, &m1), (-2.0 / h2, &c0)])),
        Stencil::Central5 => {
            let p2 = shifted(f, point, dir, 2.0 * h, &mut buf)?;
            let m2 = shifted(f, point, dir, -2.0 * h, &mut buf)?;
            let c = 1.0 / (12.0 * h2);
            Ok(combine(&[
                (16.0 * c, &p1),
                (16.0 * c, &m1),
                (-c, &p2),
                (-c, &m2),
                (-30.0 * c, &c0),
            ]))
        }
    }
}

fn order_of(stencil: Stencil) -> i32 {
    match stencil {
        Stencil::Central3 => 2,
        Stencil::Central5 => 4,
    }
}

fn richardson(coarse: &Tensor, fine: &Tensor, order: i32) -> Tensor {
    let r = (2.0f64).powi(order);
    combine(&[(r / (r - 1.0), fine), (-1.0 / (r - 1.0), coarse)])
}

/// Derivative of order 1 or 2 along coordinate `dir` of a fallible map.
pub fn derivative_fn<F>(f: &F, point: &[f64], dir: usize, order: u8, cfg: &FdConfig) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    if dir >= point.len() {
        return Err(Error::Shape(alloc::format!("direction {dir} out of range for dimension {}", point.len())));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("finite-difference step must be positive, got {}", cfg.step)));
    }
    let h = cfg.h(point[dir]);
    let raw = |h: f64| match order {
        1 => first_raw(f, point, dir, h, cfg.stencil),
        2 => second_raw(f, point, dir, h, cfg.stencil),
        _ => Err(Error::InvalidConfig(alloc::format!("derivative order must be 1 or 2, got {order}"))),
    };
    let coarse = raw(h)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = raw(0.5 * h)?;
    Ok(richardson(&coarse, &fine, order_of(cfg.stencil)))
}

/// Full Jacobian of a fallible map: the derivative index is appended last.
pub fn jacobian_fn<F>(f: &F, point: &[f64], cfg: &FdConfig) -> Result<Tensor>
where
    F: Fn(&[f64]) -> Result<Tensor> + ?Sized,
{
    let n = point.len();
    let parts: Vec<Tensor> = (0..n).map(|d| derivative_fn(f, point, d, 1, cfg)).collect::<Result<_>>()?;
    Ok(stack_last(&parts))
}

/// Stack equally shaped tensors along a new last axis.
pub fn stack_last(parts: &[Tensor]) -> Tensor {
    let n = parts.len();
    let base = parts[0].shape().to_vec();
    let m = parts[0].len();
    let mut shape = base;
    shape.push(n);
    let mut data = alloc::vec![0.0; m * n];
    for (d, t) in parts.iter().enumerate() {
        for (i, v) in t.data().iter().enumerate() {
            data[i * n + d] = *v;
        }
    }
    Tensor::new(&shape, data).expect("stack shape")
}

/// Central-difference derivative of a field along one coordinate (order 1 or 2).
pub fn fd_derivative(field: &dyn SmoothField, point: &[f64], direction: usize, order: u8, cfg: &FdConfig) -> Result<Tensor> {
    derivative_fn(&|p: &[f64]| field.eval(p), point, direction, order, cfg)
}

/// Jacobian of a field: analytic when supplied, finite differences otherwise.
pub fn field_jacobian(field: &dyn SmoothField, point: &[f64], cfg: &FdConfig) -> Result<Tensor> {
    match field.jacobian(point) {
        Some(j) => j,
        None => jacobian_fn(&|p: &[f64]| field.eval(p), point, cfg),
    }
}

/// Values of an arbitrary map sampled on the finite-difference stencil of a
/// point, so that derivatives of many derived quantities share one set of
/// (possibly expensive) evaluations.
pub struct StencilCache<T> {
    point: Vec<f64>,
    cfg: FdConfig,
    /// `[dir][level]` → (h, samples at the stencil offsets of that level)
    samples: Vec<Vec<(f64, Vec<T>)>>,
}

fn offsets(stencil: Stencil) -> &'static [f64] {
    match stencil {
        Stencil::Central3 => &[1.0, -1.0],
        Stencil::Central5 => &[1.0, -1.0, 2.0, -2.0],
    }
}

fn first_weights(stencil: Stencil) -> &'static [f64] {
    match stencil {
        Stencil::Central3 => &[0.5, -0.5],
        Stencil::Central5 => &[8.0 / 12.0, -8.0 / 12.0, -1.0 / 12.0, 1.0 / 12.0],
    }
}

impl<T> StencilCache<T> {
    pub fn build(point: &[f64], cfg: &FdConfig, f: impl Fn(&[f64]) -> Result<T>) -> Result<Self> {
        if !(cfg.step > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("finite-difference step must be positive, got {}", cfg.step)));
        }
        let levels = if cfg.richardson { 2 } else { 1 };
        let mut samples = Vec::with_capacity(point.len());
        let mut buf = point.to_vec();
        for d in 0..point.len() {
            let mut per_dir = Vec::with_capacity(levels);
            let mut h = cfg.h(point[d]);
            for _ in 0..levels {
                let mut vals = Vec::with_capacity(4);
                for o in offsets(cfg.stencil) {
                    buf[d] = point[d] + o * h;
                    vals.push(f(&buf)?);
                }
                buf[d] = point[d];
                per_dir.push((h, vals));
                h *= 0.5;
            }
            samples.push(per_dir);
        }
        Ok(StencilCache { point: point.to_vec(), cfg: *cfg, samples })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Jacobian of `g ∘ f`, derivative index appended last.
    pub fn jacobian(&self, g: impl Fn(&T) -> Tensor) -> Result<Tensor> {
        let w = first_weights(self.cfg.stencil);
        let mut parts = Vec::with_capacity(self.samples.len());
        for (d, per_dir) in self.samples.iter().enumerate() {
            let mut est = Vec::with_capacity(per_dir.len());
            for (h, vals) in per_dir {
                let ts: Vec<Tensor> = vals.iter().map(&g).collect();
                for (k, t) in ts.iter().enumerate() {
                    if !t.is_finite() {
                        let mut p = self.point.clone();
                        p[d] += offsets(self.cfg.stencil)[k] * h;
                        return Err(Error::NonFinite { point: p });
                    }
                }
                let terms: Vec<(f64, &Tensor)> = w.iter().zip(&ts).map(|(c, t)| (c / h, t)).collect();
                est.push(combine(&terms));
            }
            let v = if est.len() == 2 { richardson(&est[0], &est[1], order_of(self.cfg.stencil)) } else { est.pop().unwrap() };
            parts.push(v);
        }
        Ok(stack_last(&parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> FnField {
        FnField::new(1, &[], move |p| Tensor::scalar(f(p[0])))
    }

    #[test]
    fn derivative_of_square() {
        let f = scalar(|x| x * x);
        let d = fd_derivative(&f, &[3.0], 0, 1, &FdConfig::default()).unwrap();
        assert!((d.data()[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn second_derivative_of_quartic() {
        let f = scalar(|r| r.powi(4));
        let d = fd_derivative(&f, &[1.0], 0, 2, &FdConfig::curvature()).unwrap();
        assert!((d.data()[0] - 12.0).abs() < 1e-6, "{}", d.data()[0]);
        let d = fd_derivative(&f, &[1.0], 0, 2, &FdConfig { step: 1e-3, stencil: Stencil::Central5, richardson: false })
            .unwrap();
        assert!((d.data()[0] - 12.0).abs() < 1e-6, "{}", d.data()[0]);
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let f = FnField::new(3, &[2, 2], |_| Tensor::matrix(2, 2, &[1.5, -2.0, 0.25, 7.0]));
        for order in [1, 2] {
            let d = fd_derivative(&f, &[0.3, -1.2, 40.0], 1, order, &FdConfig::default()).unwrap();
            assert!(d.max_abs() < 1e-9);
        }
    }

    #[test]
    fn non_finite_value_names_stencil_point() {
        let f = scalar(|x| if x > 1.0 { f64::NAN } else { x });
        let err = fd_derivative(&f, &[1.0], 0, 1, &FdConfig::default()).unwrap_err();
        match err {
            Error::NonFinite { point } => assert!(point[0] > 1.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn jacobian_appends_derivative_axis() {
        let f = FnField::new(2, &[2], |p| Tensor::vector(&[p[0] * p[1], p[1] * p[1]]));
        let j = field_jacobian(&f, &[2.0, 3.0], &FdConfig::curvature()).unwrap();
        assert_eq!(j.shape(), &[2, 2]);
        let want = [3.0, 2.0, 0.0, 6.0];
        for (a, b) in j.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
        let g = FnField::new(2, &[2], |p| Tensor::vector(&[p[0], 0.0])).with_jacobian(|_| Tensor::matrix(2, 2, &[9.0, 0.0, 0.0, 0.0]));
        assert_eq!(field_jacobian(&g, &[0.0, 0.0], &FdConfig::default()).unwrap().data(), &[9.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_order_and_step() {
        let f = scalar(|x| x);
        assert!(fd_derivative(&f, &[0.0], 0, 3, &FdConfig::default()).is_err());
        assert!(fd_derivative(&f, &[0.0], 0, 1, &FdConfig::default().with_step(0.0)).is_err());
        assert!(fd_derivative(&f, &[0.0], 1, 1, &FdConfig::default()).is_err());
    }

    #[test]
    fn stencil_cache_matches_direct_jacobian() {
        let f = |p: &[f64]| Ok(Tensor::vector(&[p[0].sin() * p[1], p[1].exp()]));
        for cfg in [FdConfig::curvature(), FdConfig { step: 1e-3, stencil: Stencil::Central5, richardson: true }] {
            let cache = StencilCache::build(&[0.4, -0.3], &cfg, f).unwrap();
            let a = cache.jacobian(|t| t.clone()).unwrap();
            let b = jacobian_fn(&f, &[0.4, -0.3], &cfg).unwrap();
            assert!(a.sub(&b).max_abs() < 1e-12);
            let want = [0.4f64.cos() * -0.3, 0.4f64.sin(), 0.0, (-0.3f64).exp()];
            for (x, y) in a.data().iter().zip(want) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
