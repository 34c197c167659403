//! Dense row-major tensors and the small linear-algebra kernel.
//!
//! Everything indexed in the library (metrics, Killing fields, Christoffel
//! symbols, curvature tensors) is a [`Tensor`]. Derivative indices produced by
//! the finite-difference routines are always appended as the last axis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest supported tensor rank.
pub const MAX_RANK: usize = 6;

/// Inline shape storage; unused slots stay zero so derived equality works.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Dims {
    rank: usize,
    dims: [usize; MAX_RANK],
}

impl Dims {
    fn from_slice(shape: &[usize]) -> Self {
        assert!(shape.len() <= MAX_RANK, "rank {} exceeds {MAX_RANK}", shape.len());
        let mut dims = [0; MAX_RANK];
        dims[..shape.len()].copy_from_slice(shape);
        Dims { rank: shape.len(), dims }
    }
}

impl core::ops::Deref for Dims {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.dims[..self.rank]
    }
}

impl core::fmt::Debug for Dims {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        core::fmt::Debug::fmt(&**self, f)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Dims {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        (**self).serialize(s)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Dims {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let v: Vec<usize> = Vec::deserialize(d)?;
        if v.len() > MAX_RANK {
            return Err(serde::de::Error::custom(format!("rank {} exceeds {MAX_RANK}", v.len())));
        }
        Ok(Dims::from_slice(&v))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tensor {
    shape: Dims,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.len() > MAX_RANK {
            return Err(Error::Shape(format!("rank {} exceeds {MAX_RANK}", shape.len())));
        }
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                len,
                data.len()
            )));
        }
        Ok(Tensor { shape: Dims::from_slice(shape), data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: Dims::from_slice(shape), data: vec![0.0; shape.iter().product()] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: Dims::from_slice(&[]), data: vec![value] }
    }

    pub fn vector(data: &[f64]) -> Self {
        Tensor { shape: Dims::from_slice(&[data.len()]), data: data.to_vec() }
    }

    /// Rank-2 tensor from a row-major slice.
    pub fn matrix(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix {rows}x{cols} from {} entries", data.len());
        Tensor { shape: Dims::from_slice(&[rows, cols]), data: data.to_vec() }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut t = Tensor::zeros(&[n, n]);
        for (i, v) in d.iter().enumerate() {
            t.data[i * n + i] = *v;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..]
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if shape.len() > MAX_RANK || shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::Shape(format!("cannot reshape {:?} into {:?}", self.shape, shape)));
        }
        self.shape = Dims::from_slice(shape);
        Ok(self)
    }

    fn offset(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (i, (&k, &n)) in idx.iter().zip(self.shape.iter()).enumerate() {
            if k >= n {
                return None;
            }
            off = if i == 0 { k } else { off * n + k };
        }
        Some(off)
    }

    /// Bounds-checked read; `None` if the index is out of range or has the wrong rank.
    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        self.offset(idx).map(|o| self.data[o])
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> Option<&mut f64> {
        match self.offset(idx) {
            Some(o) => Some(&mut self.data[o]),
            None => None,
        }
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        assert!(i < self.shape[0] && j < self.shape[1], "index ({i},{j}) out of {:?}", self.shape);
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 3);
        let s = &self.shape;
        assert!(i < s[0] && j < s[1] && k < s[2], "index ({i},{j},{k}) out of {s:?}");
        self.data[(i * s[1] + j) * s[2] + k]
    }

    #[inline]
    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 4);
        let s = &self.shape;
        assert!(i < s[0] && j < s[1] && k < s[2] && l < s[3], "index ({i},{j},{k},{l}) out of {s:?}");
        self.data[((i * s[1] + j) * s[2] + k) * s[3] + l]
    }

    #[inline]
    pub fn set2(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.shape[0] && j < self.shape[1], "index ({i},{j}) out of {:?}", self.shape);
        let c = self.shape[1];
        self.data[i * c + j] = v;
    }

    #[inline]
    pub fn set3(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let s = &self.shape;
        assert!(i < s[0] && j < s[1] && k < s[2], "index ({i},{j},{k}) out of {s:?}");
        let o = (i * s[1] + j) * s[2] + k;
        self.data[o] = v;
    }

    #[inline]
    pub fn set4(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let s = &self.shape;
        assert!(i < s[0] && j < s[1] && k < s[2] && l < s[3], "index ({i},{j},{k},{l}) out of {s:?}");
        let o = ((i * s[1] + j) * s[2] + k) * s[3] + l;
        self.data[o] = v;
    }

    pub fn rows(&self) -> usize {
        assert_eq!(self.rank(), 2, "rows() on rank-{} tensor", self.rank());
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.rank(), 2, "cols() on rank-{} tensor", self.rank());
        self.shape[1]
    }

    pub fn transpose(&self) -> Tensor {
        let (r, c) = (self.rows(), self.cols());
        let mut t = Tensor::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                t.data[j * r + i] = self.data[i * c + j];
            }
        }
        t
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        let (r, k) = (self.rows(), self.cols());
        let (k2, c) = (other.rows(), other.cols());
        assert_eq!(k, k2, "matmul {:?} x {:?}", self.shape, other.shape);
        let mut t = Tensor::zeros(&[r, c]);
        for i in 0..r {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..c {
                    t.data[i * c + j] += a * other.data[l * c + j];
                }
            }
        }
        t
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let (r, c) = (self.rows(), self.cols());
        assert_eq!(c, v.len(), "matvec {:?} x {}", self.shape, v.len());
        (0..r).map(|i| (0..c).map(|j| self.data[i * c + j] * v[j]).sum()).collect()
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape, "add {:?} + {:?}", self.shape, other.shape);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Tensor { shape: self.shape, data }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape, "sub {:?} - {:?}", self.shape, other.shape);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Tensor { shape: self.shape, data }
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor { shape: self.shape, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Infinity norm of a matrix (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let c = self.cols();
        self.data.chunks(c).map(|r| r.iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        let n = self.rows();
        assert_eq!(n, self.cols());
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    /// Largest |M_ij − M_ji|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rows();
        assert_eq!(n, self.cols());
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        m
    }
}

impl Index<&[usize]> for Tensor {
    type Output = f64;
    fn index(&self, idx: &[usize]) -> &f64 {
        match self.offset(idx) {
            Some(o) => &self.data[o],
            None => panic!("index {:?} out of bounds for shape {:?}", idx, self.shape),
        }
    }
}

impl IndexMut<&[usize]> for Tensor {
    fn index_mut(&mut self, idx: &[usize]) -> &mut f64 {
        match self.offset(idx) {
            Some(o) => &mut self.data[o],
            None => panic!("index {:?} out of bounds for shape {:?}", idx, self.shape),
        }
    }
}

/// Relative pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting. Returns the packed factors, the
/// permutation and the sign of the permutation.
fn lu(m: &Tensor) -> Result<(Vec<f64>, Vec<usize>, f64, f64)> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Shape(format!("square matrix expected, got {:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let scale = m.norm_inf();
    let mut a = m.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[p * n + k].abs() {
                p = i;
            }
        }
        let piv = a[p * n + k];
        if scale == 0.0 || piv.abs() <= SINGULAR_TOL * scale {
            let condition = if piv == 0.0 { f64::INFINITY } else { scale / piv.abs() };
            return Err(Error::Singular { condition });
        }
        min_pivot = min_pivot.min(piv.abs());
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            a[i * n + k] = f;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    Ok((a, perm, sign, min_pivot))
}

/// Determinant by LU; zero for exactly singular input.
pub fn det(m: &Tensor) -> Result<f64> {
    let n = m.rows();
    if n == 0 {
        return Ok(1.0);
    }
    match lu(m) {
        Ok((a, _, sign, _)) => Ok(sign * (0..n).map(|i| a[i * n + i]).product::<f64>()),
        Err(Error::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Inverse and determinant of a square matrix.
///
/// Fails with [`Error::Singular`] (carrying an infinity-norm condition
/// estimate) when a pivot falls below `1e-14` times the matrix norm.
pub fn inverse_det(m: &Tensor) -> Result<(Tensor, f64)> {
    let n = m.rows();
    if n == 0 {
        return Ok((Tensor::zeros(&[0, 0]), 1.0));
    }
    if n <= 2 {
        return small_inverse_det(m);
    }
    let (a, perm, sign, _) = lu(m)?;
    let det = sign * (0..n).map(|i| a[i * n + i]).product::<f64>();
    let mut inv = Tensor::zeros(&[n, n]);
    let mut x = vec![0.0; n];
    for col in 0..n {
        for (xi, &pi) in x.iter_mut().zip(&perm) {
            *xi = if pi == col { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            for j in 0..i {
                x[i] -= a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= a[i * n + j] * x[j];
            }
            x[i] /= a[i * n + i];
        }
        for i in 0..n {
            inv.data[i * n + col] = x[i];
        }
    }
    let condition = m.norm_inf() * inv.norm_inf();
    if !condition.is_finite() || condition * SINGULAR_TOL >= 1.0 {
        return Err(Error::Singular { condition });
    }
    Ok((inv, det))
}

/// Closed-form inverse for 1×1 and 2×2 matrices with the same rejection rule.
fn small_inverse_det(m: &Tensor) -> Result<(Tensor, f64)> {
    if m.cols() != m.rows() {
        return Err(Error::Shape(format!("square matrix expected, got {:?}", m.shape())));
    }
    let d = m.data();
    let (inv, det) = if m.rows() == 1 {
        (Tensor::matrix(1, 1, &[1.0 / d[0]]), d[0])
    } else {
        let det = d[0] * d[3] - d[1] * d[2];
        let r = 1.0 / det;
        (Tensor::matrix(2, 2, &[d[3] * r, -d[1] * r, -d[2] * r, d[0] * r]), det)
    };
    let condition = m.norm_inf() * inv.norm_inf();
    if !m.is_finite() || det == 0.0 || !condition.is_finite() || condition * SINGULAR_TOL >= 1.0 {
        return Err(Error::Singular { condition: if condition.is_finite() { condition } else { f64::INFINITY } });
    }
    Ok((inv, det))
}

/// Cholesky factor `X` (lower triangular) with `X·Xᵀ = M`.
pub fn sym_factor(m: &Tensor) -> Result<Tensor> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Shape(format!("square matrix expected, got {:?}", m.shape())));
    }
    let asym = m.asymmetry();
    if asym > 1e-12 * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut x = Tensor::zeros(&[n, n]);
    for j in 0..n {
        let mut d = m.data[j * n + j];
        for k in 0..j {
            d -= x.data[j * n + k] * x.data[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let dj = d.sqrt();
        x.data[j * n + j] = dj;
        for i in j + 1..n {
            let mut s = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
            for k in 0..j {
                s -= x.data[i * n + k] * x.data[j * n + k];
            }
            x.data[i * n + j] = s / dj;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accessors_are_bounds_checked() {
        let t = Tensor::new(&[2, 3], (0..6).map(|i| i as f64).collect()).unwrap();
        assert_eq!(t.get(&[1, 2]), Some(5.0));
        assert_eq!(t.get(&[2, 0]), None);
        assert_eq!(t.get(&[0]), None);
        assert!(Tensor::new(&[2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    #[should_panic]
    fn index_out_of_range_panics() {
        let t = Tensor::zeros(&[2, 2]);
        let _ = t[&[0, 2][..]];
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        let (inv, d) = inverse_det(&Tensor::identity(3)).unwrap();
        assert_eq!(inv, Tensor::identity(3));
        assert_eq!(d, 1.0);
        let (inv, d) = inverse_det(&Tensor::diag(&[2.0, 5.0])).unwrap();
        assert!((inv.at2(0, 0) - 0.5).abs() < 1e-15 && (inv.at2(1, 1) - 0.2).abs() < 1e-15);
        assert!((d - 10.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = Tensor::matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(inverse_det(&m), Err(Error::Singular { .. })));
        assert_eq!(det(&m).unwrap(), 0.0);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(sym_factor(&Tensor::identity(2)).unwrap(), Tensor::identity(2));
        let x = sym_factor(&Tensor::diag(&[4.0, 1.0])).unwrap();
        assert_eq!(x, Tensor::diag(&[2.0, 1.0]));
        let bad = Tensor::diag(&[1.0, -1.0]);
        assert!(matches!(sym_factor(&bad), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
        let asym = Tensor::matrix(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(sym_factor(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn empty_matrices() {
        let (inv, d) = inverse_det(&Tensor::zeros(&[0, 0])).unwrap();
        assert!(inv.is_empty());
        assert_eq!(d, 1.0);
    }
}
