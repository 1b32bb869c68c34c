//! Forward/backward pairs for every differentiable operation.
//!
//! Each op comes as a plain function pair. [`Op`] / [`OpRecord`] wrap the
//! same pairs behind a uniform dispatch used by the finite-difference
//! oracle: a record saves exactly the inputs and output a backward pass
//! needs, and replaying the forward on the saved inputs reproduces the
//! saved output bit for bit.

use num_traits::Float;

use super::{Scalar, Tensor};
use crate::error::{LasError, Result};

/// Epsilon inside the layer-norm variance denominator.
pub const LAYER_NORM_EPS: f64 = 1e-5;

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

/// C[m x n] = A[m x k] * B[k x n].
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, ka) = a.dims2()?;
    let (kb, n) = b.dims2()?;
    if ka != kb {
        return Err(LasError::Dimension(format!(
            "matmul inner extents differ: {ka} vs {kb}"
        )));
    }
    let mut out = Tensor::zeros(vec![m, n]);
    T::gemm(m, ka, n, a.data(), false, b.data(), false, out.data_mut());
    Ok(out)
}

/// A[m x k] * B^T where B is stored [n x k].
pub fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, ka) = a.dims2()?;
    let (n, kb) = b.dims2()?;
    if ka != kb {
        return Err(LasError::Dimension(format!(
            "matmul_nt inner extents differ: {ka} vs {kb}"
        )));
    }
    let mut out = Tensor::zeros(vec![m, n]);
    T::gemm(m, ka, n, a.data(), false, b.data(), true, out.data_mut());
    Ok(out)
}

/// A^T * B where A is stored [k x m], B is [k x n].
pub fn matmul_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (ka, m) = a.dims2()?;
    let (kb, n) = b.dims2()?;
    if ka != kb {
        return Err(LasError::Dimension(format!(
            "matmul_tn inner extents differ: {ka} vs {kb}"
        )));
    }
    let mut out = Tensor::zeros(vec![m, n]);
    T::gemm(m, ka, n, a.data(), true, b.data(), false, out.data_mut());
    Ok(out)
}

/// Gradients of `matmul`: (g * B^T, A^T * g).
pub fn matmul_backward<T: Scalar>(
    grad: &Tensor<T>,
    a: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    Ok((matmul_nt(grad, b)?, matmul_tn(a, grad)?))
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

fn check_same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, op: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(LasError::Dimension(format!(
            "{op}: shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape(a, b, "add")?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub fn add_backward<T: Scalar>(grad: &Tensor<T>) -> (Tensor<T>, Tensor<T>) {
    (grad.clone(), grad.clone())
}

pub fn elem_mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape(a, b, "elem_mul")?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub fn elem_mul_backward<T: Scalar>(
    grad: &Tensor<T>,
    a: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    Ok((elem_mul(grad, b)?, elem_mul(grad, a)?))
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient 0 at the kink and on the negative side.
pub fn relu_backward<T: Scalar>(grad: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape(grad, x, "relu_backward")?;
    let data = grad
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

// ---------------------------------------------------------------------------
// softmax over rows
// ---------------------------------------------------------------------------

/// Row-wise softmax, stabilized by row-max subtraction.
///
/// `-inf` entries are the masking sentinel and map to exact 0. A row of
/// all `-inf` is a degenerate-row error; NaN or `+inf` anywhere is a
/// numeric error.
pub fn softmax_rows<T: Scalar>(s: &Tensor<T>) -> Result<Tensor<T>> {
    let (rows, cols) = s.dims2()?;
    if !s.finite_or_neg_inf() {
        return Err(LasError::Numeric(
            "softmax input contains NaN or +inf".into(),
        ));
    }
    let mut out = Tensor::zeros(vec![rows, cols]);
    for i in 0..rows {
        let row = s.row(i);
        let m = row.iter().cloned().fold(T::neg_infinity(), T::max);
        if m == T::neg_infinity() {
            return Err(LasError::DegenerateRow { row: i });
        }
        let orow = out.row_mut(i);
        let mut sum = T::zero();
        for (o, &x) in orow.iter_mut().zip(row) {
            // exp(-inf - m) is exactly 0 for finite m.
            let e = (x - m).exp();
            *o = e;
            sum = sum + e;
        }
        for o in orow.iter_mut() {
            *o = *o / sum;
        }
    }
    Ok(out)
}

/// VJP of `softmax_rows` in terms of the saved probabilities:
/// g_s = p .* (g - rowsum(g .* p)).
pub fn softmax_rows_backward<T: Scalar>(grad: &Tensor<T>, probs: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape(grad, probs, "softmax_rows_backward")?;
    let (rows, cols) = probs.dims2()?;
    let mut out = Tensor::zeros(vec![rows, cols]);
    for i in 0..rows {
        let g = grad.row(i);
        let p = probs.row(i);
        let mut dot = T::zero();
        for j in 0..cols {
            dot = dot + g[j] * p[j];
        }
        let o = out.row_mut(i);
        for j in 0..cols {
            o[j] = p[j] * (g[j] - dot);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 1-D average pooling over rows
// ---------------------------------------------------------------------------

/// Per-row 1-D average pooling with an odd centered window, zero padding
/// of (P-1)/2 on both row ends, and a fixed divisor of P. Out-of-range
/// taps contribute 0, so mass near the edges is lost by design.
pub fn avg_pool_rows<T: Scalar>(a: &Tensor<T>, window: usize) -> Result<Tensor<T>> {
    if window == 0 || window % 2 == 0 {
        return Err(LasError::Parameter(format!(
            "pooling window must be odd and positive, got {window}"
        )));
    }
    let (rows, cols) = a.dims2()?;
    if window == 1 {
        return Ok(a.clone());
    }
    let half = (window - 1) / 2;
    let inv = T::from_f64(1.0 / window as f64);
    let mut out = Tensor::zeros(vec![rows, cols]);
    let mut prefix = vec![T::zero(); cols + 1];
    for i in 0..rows {
        let row = a.row(i);
        for j in 0..cols {
            prefix[j + 1] = prefix[j] + row[j];
        }
        let o = out.row_mut(i);
        for j in 0..cols {
            let lo = j.saturating_sub(half);
            let hi = (j + half + 1).min(cols);
            o[j] = (prefix[hi] - prefix[lo]) * inv;
        }
    }
    Ok(out)
}

/// The transposed pooling stencil. The centered window with zero padding
/// and fixed divisor is self-adjoint, so this is the forward stencil
/// applied to the upstream gradient.
pub fn avg_pool_rows_backward<T: Scalar>(grad: &Tensor<T>, window: usize) -> Result<Tensor<T>> {
    avg_pool_rows(grad, window)
}

// ---------------------------------------------------------------------------
// layer norm over the last axis
// ---------------------------------------------------------------------------

/// Saved values for the layer-norm backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
}

/// Layer norm over the last axis with learned scale/shift.
///
/// A constant row normalizes to the zero vector (the eps inside the
/// square root guards the zero-variance path).
pub fn layer_norm<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
) -> Result<(Tensor<T>, LayerNormCache<T>)> {
    let (rows, cols) = x.dims2()?;
    if gamma.len() != cols || beta.len() != cols {
        return Err(LasError::Dimension(format!(
            "layer_norm scale/shift length {} / {} vs {cols} columns",
            gamma.len(),
            beta.len()
        )));
    }
    let eps = T::from_f64(LAYER_NORM_EPS);
    let nf = T::from_f64(cols as f64);
    let mut y = Tensor::zeros(vec![rows, cols]);
    let mut x_hat = Tensor::zeros(vec![rows, cols]);
    let mut inv_std = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = x.row(i);
        let mut mean = T::zero();
        for &v in row {
            mean = mean + v;
        }
        mean = mean / nf;
        let mut var = T::zero();
        for &v in row {
            let d = v - mean;
            var = var + d * d;
        }
        var = var / nf;
        let istd = (var + eps).sqrt().recip();
        inv_std.push(istd);
        let xh = x_hat.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            xh[j] = (v - mean) * istd;
        }
        let yr = y.row_mut(i);
        for j in 0..cols {
            yr[j] = x_hat.at2(i, j) * gamma.data()[j] + beta.data()[j];
        }
    }
    Ok((y, LayerNormCache { x_hat, inv_std }))
}

/// Gradients of `layer_norm`: (g_x, g_gamma, g_beta).
pub fn layer_norm_backward<T: Scalar>(
    grad: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &LayerNormCache<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (rows, cols) = cache.x_hat.dims2()?;
    check_same_shape(grad, &cache.x_hat, "layer_norm_backward")?;
    let nf = T::from_f64(cols as f64);
    let mut gx = Tensor::zeros(vec![rows, cols]);
    let mut ggamma = Tensor::zeros(vec![cols]);
    let mut gbeta = Tensor::zeros(vec![cols]);
    for i in 0..rows {
        let g = grad.row(i);
        let xh = cache.x_hat.row(i);
        let istd = cache.inv_std[i];
        let mut sum_gxh = T::zero(); // sum of g_x_hat
        let mut sum_gxh_xh = T::zero(); // sum of g_x_hat .* x_hat
        for j in 0..cols {
            let gxh = g[j] * gamma.data()[j];
            sum_gxh = sum_gxh + gxh;
            sum_gxh_xh = sum_gxh_xh + gxh * xh[j];
            ggamma.data_mut()[j] = ggamma.data()[j] + g[j] * xh[j];
            gbeta.data_mut()[j] = gbeta.data()[j] + g[j];
        }
        let o = gx.row_mut(i);
        for j in 0..cols {
            let gxh = g[j] * gamma.data()[j];
            o[j] = istd * (gxh - sum_gxh / nf - xh[j] * (sum_gxh_xh / nf));
        }
    }
    Ok((gx, ggamma, gbeta))
}

// ---------------------------------------------------------------------------
// cross entropy
// ---------------------------------------------------------------------------

/// Softmax cross-entropy of a logit vector against a class label.
/// Returns (loss, probabilities) so the backward pass can reuse them.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, label: usize) -> Result<(T, Tensor<T>)> {
    if logits.shape().len() != 1 {
        return Err(LasError::Dimension(format!(
            "cross_entropy expects a rank-1 logit vector, got {:?}",
            logits.shape()
        )));
    }
    let k = logits.len();
    if label >= k {
        return Err(LasError::Input(format!(
            "label {label} out of range for {k} classes"
        )));
    }
    if !logits.all_finite() {
        return Err(LasError::Numeric("non-finite logits".into()));
    }
    let m = logits
        .data()
        .iter()
        .cloned()
        .fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    let mut probs = Tensor::zeros(vec![k]);
    for (p, &x) in probs.data_mut().iter_mut().zip(logits.data()) {
        let e = (x - m).exp();
        *p = e;
        sum = sum + e;
    }
    for p in probs.data_mut() {
        *p = *p / sum;
    }
    let loss = m + sum.ln() - logits.data()[label];
    Ok((loss, probs))
}

/// Gradient of `cross_entropy` w.r.t. the logits: upstream * (p - onehot).
pub fn cross_entropy_backward<T: Scalar>(
    probs: &Tensor<T>,
    label: usize,
    upstream: T,
) -> Tensor<T> {
    let mut g = probs.scale(upstream);
    g.data_mut()[label] = g.data()[label] - upstream;
    g
}

// ---------------------------------------------------------------------------
// op dispatch and records
// ---------------------------------------------------------------------------

/// Identifier of a differentiable operation, carrying the op-level
/// attributes that are not tensors.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Matmul,
    SoftmaxRows,
    AvgPoolRows { window: usize },
    Add,
    ElemMul,
    Relu,
    LayerNorm,
    CrossEntropy { label: usize },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Matmul => "matmul",
            Op::SoftmaxRows => "softmax_rows",
            Op::AvgPoolRows { .. } => "avg_pool_rows",
            Op::Add => "add",
            Op::ElemMul => "elem_mul",
            Op::Relu => "relu",
            Op::LayerNorm => "layer_norm",
            Op::CrossEntropy { .. } => "cross_entropy",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Op::Matmul | Op::Add | Op::ElemMul => 2,
            Op::LayerNorm => 3,
            _ => 1,
        }
    }

    fn forward<T: Scalar>(&self, inputs: &[Tensor<T>]) -> Result<Tensor<T>> {
        if inputs.len() != self.arity() {
            return Err(LasError::Dimension(format!(
                "{} expects {} inputs, got {}",
                self.name(),
                self.arity(),
                inputs.len()
            )));
        }
        match self {
            Op::Matmul => matmul(&inputs[0], &inputs[1]),
            Op::SoftmaxRows => softmax_rows(&inputs[0]),
            Op::AvgPoolRows { window } => avg_pool_rows(&inputs[0], *window),
            Op::Add => add(&inputs[0], &inputs[1]),
            Op::ElemMul => elem_mul(&inputs[0], &inputs[1]),
            Op::Relu => Ok(relu(&inputs[0])),
            Op::LayerNorm => layer_norm(&inputs[0], &inputs[1], &inputs[2]).map(|(y, _)| y),
            Op::CrossEntropy { label } => {
                cross_entropy(&inputs[0], *label).map(|(l, _)| Tensor::scalar(l))
            }
        }
    }
}

/// One executed operation: the op identifier plus exactly the saved
/// values its backward pass consumes.
#[derive(Debug, Clone)]
pub struct OpRecord<T> {
    pub op: Op,
    pub inputs: Vec<Tensor<T>>,
    pub output: Tensor<T>,
}

/// Run `op` on `inputs`, saving what backward needs.
pub fn apply<T: Scalar>(op: &Op, inputs: &[Tensor<T>]) -> Result<OpRecord<T>> {
    let output = op.forward(inputs)?;
    Ok(OpRecord {
        op: op.clone(),
        inputs: inputs.to_vec(),
        output,
    })
}

impl<T: Scalar> OpRecord<T> {
    /// Re-run the forward pass on the saved inputs. Must reproduce the
    /// saved output bit for bit at the same precision.
    pub fn replay(&self) -> Result<Tensor<T>> {
        self.op.forward(&self.inputs)
    }

    /// Gradients w.r.t. each saved input given the upstream gradient.
    pub fn backward(&self, grad: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        match &self.op {
            Op::Matmul => {
                let (ga, gb) = matmul_backward(grad, &self.inputs[0], &self.inputs[1])?;
                Ok(vec![ga, gb])
            }
            Op::SoftmaxRows => Ok(vec![softmax_rows_backward(grad, &self.output)?]),
            Op::AvgPoolRows { window } => Ok(vec![avg_pool_rows_backward(grad, *window)?]),
            Op::Add => {
                let (ga, gb) = add_backward(grad);
                Ok(vec![ga, gb])
            }
            Op::ElemMul => {
                let (ga, gb) = elem_mul_backward(grad, &self.inputs[0], &self.inputs[1])?;
                Ok(vec![ga, gb])
            }
            Op::Relu => Ok(vec![relu_backward(grad, &self.inputs[0])?]),
            Op::LayerNorm => {
                // Stats are recomputed from the saved inputs.
                let (_, cache) = layer_norm(&self.inputs[0], &self.inputs[1], &self.inputs[2])?;
                let (gx, gg, gb) = layer_norm_backward(grad, &self.inputs[1], &cache)?;
                Ok(vec![gx, gg, gb])
            }
            Op::CrossEntropy { label } => {
                let (_, probs) = cross_entropy(&self.inputs[0], *label)?;
                Ok(vec![cross_entropy_backward(
                    &probs,
                    *label,
                    grad.data()[0],
                )])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y} beyond {tol}");
        }
    }

    #[test]
    fn matmul_identity_passthrough() {
        let eye = Tensor::from_fn2(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = Tensor::from_fn2(3, 2, |i, j| (i * 2 + j) as f64 + 0.5);
        let y = matmul(&eye, &x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn matmul_hand_example() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_shape_mismatch_is_dimension_error() {
        let a = Tensor::<f64>::zeros(vec![2, 3]);
        let b = Tensor::<f64>::zeros(vec![2, 3]);
        assert!(matches!(
            matmul(&a, &b).unwrap_err(),
            LasError::Dimension(_)
        ));
    }

    #[test]
    fn matmul_associativity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = Tensor::from_fn2(4, 3, |_, _| rng.gen_range(-1.0..1.0));
            let b = Tensor::from_fn2(3, 5, |_, _| rng.gen_range(-1.0..1.0));
            let c = Tensor::from_fn2(5, 2, |_, _| rng.gen_range(-1.0..1.0));
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right) < 1e-9);
        }
    }

    #[test]
    fn softmax_symmetry_and_mask() {
        let s = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let p = softmax_rows(&s).unwrap();
        assert_close(p.data(), &[0.5, 0.5], 1e-15);

        let s = Tensor::from_rows(&[vec![3.25, f64::NEG_INFINITY]]).unwrap();
        let p = softmax_rows(&s).unwrap();
        assert_eq!(p.data(), &[1.0, 0.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = Tensor::from_fn2(6, 9, |_, _| rng.gen_range(-4.0..4.0));
        let p = softmax_rows(&s).unwrap();
        for i in 0..6 {
            let sum: f64 = p.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.row(i).iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn softmax_all_masked_row_is_degenerate() {
        let s = Tensor::from_rows(&[vec![f64::NEG_INFINITY, f64::NEG_INFINITY]]).unwrap();
        assert!(matches!(
            softmax_rows(&s).unwrap_err(),
            LasError::DegenerateRow { row: 0 }
        ));
    }

    #[test]
    fn softmax_rejects_nan_and_pos_inf() {
        let s = Tensor::from_rows(&[vec![f64::NAN, 0.0]]).unwrap();
        assert!(matches!(softmax_rows(&s).unwrap_err(), LasError::Numeric(_)));
        let s = Tensor::from_rows(&[vec![f64::INFINITY, 0.0]]).unwrap();
        assert!(matches!(softmax_rows(&s).unwrap_err(), LasError::Numeric(_)));
    }

    #[test]
    fn avg_pool_window_one_is_identity() {
        let a = Tensor::from_fn2(2, 5, |i, j| (i + j) as f64 * 0.3);
        assert_eq!(avg_pool_rows(&a, 1).unwrap(), a);
    }

    #[test]
    fn avg_pool_hand_examples() {
        let a = Tensor::from_rows(&[vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let p = avg_pool_rows(&a, 3).unwrap();
        assert_close(p.data(), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0], 1e-12);

        // Edge mass is lost under zero padding with fixed divisor P.
        let a = Tensor::from_rows(&[vec![0.25; 4]]).unwrap();
        let p = avg_pool_rows(&a, 3).unwrap();
        assert_close(p.data(), &[1.0 / 6.0, 0.25, 0.25, 1.0 / 6.0], 1e-12);
    }

    #[test]
    fn avg_pool_rejects_even_or_zero_window() {
        let a = Tensor::<f64>::zeros(vec![1, 4]);
        assert!(matches!(
            avg_pool_rows(&a, 2).unwrap_err(),
            LasError::Parameter(_)
        ));
        assert!(matches!(
            avg_pool_rows(&a, 0).unwrap_err(),
            LasError::Parameter(_)
        ));
    }

    #[test]
    fn avg_pool_preserves_interior_mass() {
        // Support at least (P-1)/2 from both ends: row sum exactly kept.
        let a = Tensor::from_rows(&[vec![0.0, 0.0, 0.4, 0.6, 0.0, 0.0]]).unwrap();
        let p = avg_pool_rows(&a, 5).unwrap();
        let sum: f64 = p.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layer_norm_constant_row_is_zero_before_affine() {
        let x = Tensor::from_rows(&[vec![2.5; 6]]).unwrap();
        let gamma = Tensor::filled(vec![6], 1.0);
        let beta = Tensor::zeros(vec![6]);
        let (y, _) = layer_norm(&x, &gamma, &beta).unwrap();
        for &v in y.data() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_k() {
        for k in [2usize, 5, 10] {
            let logits = Tensor::filled(vec![k], 0.7);
            let (loss, _) = cross_entropy(&logits, k - 1).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_label_out_of_range() {
        let logits = Tensor::<f64>::zeros(vec![3]);
        assert!(matches!(
            cross_entropy(&logits, 3).unwrap_err(),
            LasError::Input(_)
        ));
    }

    #[test]
    fn relu_backward_zero_on_negative_side() {
        let x = Tensor::from_rows(&[vec![-1.0, 0.0, 2.0]]).unwrap();
        let g = Tensor::from_rows(&[vec![5.0, 5.0, 5.0]]).unwrap();
        let gx = relu_backward(&g, &x).unwrap();
        assert_eq!(gx.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn op_record_replay_is_bit_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = Tensor::from_fn2(4, 3, |_, _| rng.gen_range(-1.0..1.0f64));
        let b = Tensor::from_fn2(3, 5, |_, _| rng.gen_range(-1.0..1.0f64));
        for op in [Op::Matmul, Op::ElemMul, Op::Add] {
            let inputs = match op {
                Op::Matmul => vec![a.clone(), b.clone()],
                _ => vec![a.clone(), a.clone()],
            };
            let rec = apply(&op, &inputs).unwrap();
            assert_eq!(rec.replay().unwrap(), rec.output, "{}", op.name());
        }
        let rec = apply(&Op::SoftmaxRows, &[a.clone()]).unwrap();
        assert_eq!(rec.replay().unwrap(), rec.output);
        let rec = apply(&Op::AvgPoolRows { window: 3 }, &[a.clone()]).unwrap();
        assert_eq!(rec.replay().unwrap(), rec.output);
    }
}
