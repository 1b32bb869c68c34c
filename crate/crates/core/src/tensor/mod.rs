//! Dense tensors with explicit forward/backward pairs for every
//! differentiable operation, plus a central finite-difference oracle.
//!
//! Two precision regimes are used throughout the crate: `f64` for all
//! verification and oracle paths (gradient checks are meaningless at f32
//! tolerances) and `f32` for training. Everything here is generic over
//! [`Scalar`] so both regimes share one implementation.

pub mod gradcheck;
pub mod ops;

use std::fmt;

use crate::error::{LasError, Result};

/// Runtime tag for the element type of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

/// Element types tensors can hold.
///
/// The `gemm` hook lets `f32`/`f64` dispatch to the matching BLAS-style
/// kernel without the call sites caring which regime they are in.
pub trait Scalar:
    num_traits::Float + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const DTYPE: DType;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// C[m x n] = A_eff[m x k] * B_eff[k x n], row-major buffers.
    ///
    /// `a_trans` means the stored buffer is the [k x m] transpose of the
    /// effective operand (likewise `b_trans` with [n x k]); the kernel is
    /// driven through strides so no copies are made.
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_trans: bool,
        b: &[Self],
        b_trans: bool,
        c: &mut [Self],
    );
}

macro_rules! impl_scalar {
    ($t:ty, $dtype:expr, $gemm:path) => {
        impl Scalar for $t {
            const DTYPE: DType = $dtype;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                a_trans: bool,
                b: &[Self],
                b_trans: bool,
                c: &mut [Self],
            ) {
                debug_assert_eq!(a.len(), m * k);
                debug_assert_eq!(b.len(), k * n);
                debug_assert_eq!(c.len(), m * n);
                let (rsa, csa) = if a_trans {
                    (1, m as isize)
                } else {
                    (k as isize, 1)
                };
                let (rsb, csb) = if b_trans {
                    (1, k as isize)
                } else {
                    (n as isize, 1)
                };
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        0.0,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, DType::F32, matrixmultiply::sgemm);
impl_scalar!(f64, DType::F64, matrixmultiply::dgemm);

/// Dense n-dimensional array of reals with shape metadata; the universal
/// value carrier of the crate.
///
/// Invariant: `product(shape) == data.len()` with every extent positive.
/// Elements are finite except for the explicit `-inf` sentinel allowed on
/// masked-softmax inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(LasError::Dimension(format!(
                "extents must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(LasError::Dimension(format!(
                "shape {shape:?} implies {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        assert!(shape.iter().all(|&e| e > 0), "extents must be positive");
        Self {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: Vec<usize>, v: T) -> Self {
        let mut t = Self::zeros(shape);
        t.data.iter_mut().for_each(|x| *x = v);
        t
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(LasError::Dimension("no rows".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LasError::Dimension("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    /// Build a rows x cols matrix from a function of (row, col).
    pub fn from_fn2(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        T::DTYPE
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// (rows, cols) of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(LasError::Dimension(format!(
                "expected rank-2 tensor, got shape {other:?}"
            ))),
        }
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> T {
        let cols = self.shape[self.shape.len() - 1];
        self.data[i * cols + j]
    }

    #[inline]
    pub fn set2(&mut self, i: usize, j: usize, v: T) {
        let cols = self.shape[self.shape.len() - 1];
        self.data[i * cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let cols = self.shape[self.shape.len() - 1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    /// Copy of rows `range.0 .. range.0 + range.1` of a rank-2 tensor.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Tensor<T>> {
        let (r, c) = self.dims2()?;
        if start + len > r {
            return Err(LasError::Dimension(format!(
                "row slice {start}..{} out of {r}",
                start + len
            )));
        }
        Tensor::new(vec![len, c], self.data[start * c..(start + len) * c].to_vec())
    }

    pub fn transpose2(&self) -> Result<Tensor<T>> {
        let (r, c) = self.dims2()?;
        let mut out = Tensor::zeros(vec![c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Tensor<T> {
        self.map(|x| x * s)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Finite, or the -inf sentinel permitted on masked-softmax inputs.
    pub fn finite_or_neg_inf(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.is_finite() || *x == T::neg_infinity())
    }

    pub fn max_abs_diff(&self, other: &Tensor<T>) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch in comparison");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }

    /// Convert between precision regimes.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| U::from_f64(x.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_shape_data_mismatch() {
        let err = Tensor::new(vec![2, 2], vec![1.0f64, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, LasError::Dimension(_)));
    }

    #[test]
    fn new_rejects_zero_extent() {
        let err = Tensor::<f64>::new(vec![0, 2], vec![]).unwrap_err();
        assert!(matches!(err, LasError::Dimension(_)));
    }

    #[test]
    fn dtype_tags_follow_element_type() {
        assert_eq!(Tensor::<f32>::zeros(vec![1]).dtype(), DType::F32);
        assert_eq!(Tensor::<f64>::zeros(vec![1]).dtype(), DType::F64);
    }

    #[test]
    fn transpose_roundtrip() {
        let t = Tensor::from_fn2(3, 4, |i, j| (i * 4 + j) as f64);
        let tt = t.transpose2().unwrap().transpose2().unwrap();
        assert_eq!(t, tt);
    }

    #[test]
    fn slice_rows_copies_block() {
        let t = Tensor::from_fn2(4, 2, |i, j| (10 * i + j) as f64);
        let s = t.slice_rows(1, 2).unwrap();
        assert_eq!(s.shape(), &[2, 2]);
        assert_eq!(s.data(), &[10.0, 11.0, 20.0, 21.0]);
    }
}
