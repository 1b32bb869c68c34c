//! Single attention head: forward pass with saved intermediates and the
//! matching hand-written backward pass.

use super::mask::MaskCache;
use super::{HeadSpec, PreSoftmax};
use crate::error::{LasError, Result};
use crate::tensor::ops::{
    avg_pool_rows, avg_pool_rows_backward, elem_mul, matmul, matmul_nt, matmul_tn, softmax_rows,
    softmax_rows_backward,
};
use crate::tensor::{Scalar, Tensor};

/// Saved values for one head's backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache<T: Scalar> {
    pub q: Tensor<T>,
    pub k: Tensor<T>,
    pub v: Tensor<T>,
    /// Post-softmax attention rows (pre-pooling); each row is stochastic.
    pub probs: Tensor<T>,
    /// Final attention matrix multiplied against V.
    pub attn: Tensor<T>,
    /// Pre-renormalization row sums, when renormalization ran.
    renorm_sums: Option<Vec<T>>,
}

fn mask_causal<T: Scalar>(s: &mut Tensor<T>) {
    let (rows, cols) = s.dims2().expect("rank-2 scores");
    for i in 0..rows {
        let r = s.row_mut(i);
        for v in r.iter_mut().skip(i + 1).take(cols.saturating_sub(i + 1)) {
            *v = T::neg_infinity();
        }
    }
}

fn zero_above_diagonal<T: Scalar>(m: &mut Tensor<T>) {
    let (rows, _) = m.dims2().expect("rank-2");
    for i in 0..rows {
        for v in m.row_mut(i).iter_mut().skip(i + 1) {
            *v = T::zero();
        }
    }
}

/// Pooling is a no-op on a single-position block: a 1 x 1 attention row
/// has nothing to smooth, and the zero-padded fixed divisor would
/// otherwise bleed its unit mass into the padding (output = V row 0 must
/// hold for every variant at L = 1).
fn effective_pool(spec: &HeadSpec, len: usize) -> Option<usize> {
    if len <= 1 {
        None
    } else {
        spec.pool
    }
}

/// Forward pass of one attention head.
///
/// Q, K, V are [L x d_k] slices for this head. Step order (LaS, literal
/// composition of the decay and smoothing operators):
/// scale -> decay mask -> causal -inf mask -> softmax -> pooling ->
/// strict-causal re-zeroing -> optional renormalization -> weights x V.
pub fn head_forward<T: Scalar>(
    q: Tensor<T>,
    k: Tensor<T>,
    v: Tensor<T>,
    spec: &HeadSpec,
    masks: &MaskCache<T>,
) -> Result<(Tensor<T>, HeadCache<T>)> {
    let (l, d_k) = q.dims2()?;
    if k.dims2()? != (l, d_k) || v.dims2()? != (l, d_k) {
        return Err(LasError::Dimension(format!(
            "Q/K/V shapes differ: {:?} {:?} {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }

    let scale = T::from_f64(1.0 / (d_k as f64).sqrt());
    let mut scores = matmul_nt(&q, &k)?.scale(scale);
    if !scores.all_finite() {
        return Err(LasError::Numeric("non-finite attention scores".into()));
    }

    match spec.pre {
        PreSoftmax::None => {}
        PreSoftmax::EldScale { alpha } => {
            let e = masks.eld(alpha, l)?;
            scores = elem_mul(&scores, &e)?;
        }
        PreSoftmax::AlibiBias { slope } => {
            let d = masks.distance(l)?;
            let m = T::from_f64(slope);
            for (s, &dist) in scores.data_mut().iter_mut().zip(d.data()) {
                *s = *s - m * dist;
            }
        }
    }
    mask_causal(&mut scores);
    let probs = softmax_rows(&scores)?;

    let mut attn = probs.clone();
    if let Some(alpha) = spec.eld_prob {
        let e = masks.eld(alpha, l)?;
        attn = elem_mul(&attn, &e)?;
    }
    if let Some(window) = effective_pool(spec, l) {
        attn = avg_pool_rows(&attn, window)?;
        if spec.strict_causal {
            zero_above_diagonal(&mut attn);
        }
    }
    let renorm_sums = if spec.renormalize {
        let mut sums = Vec::with_capacity(l);
        for i in 0..l {
            let s = attn.row(i).iter().fold(T::zero(), |a, &x| a + x);
            sums.push(s);
            for x in attn.row_mut(i) {
                *x = *x / s;
            }
        }
        Some(sums)
    } else {
        None
    };

    let out = matmul(&attn, &v)?;
    Ok((
        out,
        HeadCache {
            q,
            k,
            v,
            probs,
            attn,
            renorm_sums,
        },
    ))
}

/// Backward pass of one head: gradients w.r.t. Q, K, V.
pub fn head_backward<T: Scalar>(
    cache: &HeadCache<T>,
    spec: &HeadSpec,
    masks: &MaskCache<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (l, d_k) = cache.q.dims2()?;
    if grad_out.dims2()? != (l, d_k) {
        return Err(LasError::Dimension(format!(
            "grad shape {:?} vs output [{l}, {d_k}]",
            grad_out.shape()
        )));
    }

    // out = attn * V
    let g_v = matmul_tn(&cache.attn, grad_out)?;
    let mut g_attn = matmul_nt(grad_out, &cache.v)?;

    if let Some(sums) = &cache.renorm_sums {
        // y = x / r with r = rowsum(x):
        // g_x[j] = (g[j] - sum_j g[j] y[j]) / r
        for i in 0..l {
            let y = cache.attn.row(i);
            let g = g_attn.row(i);
            let mut dot = T::zero();
            for j in 0..l {
                dot = dot + g[j] * y[j];
            }
            let r = sums[i];
            let gm = g_attn.row_mut(i);
            for x in gm.iter_mut() {
                *x = (*x - dot) / r;
            }
        }
    }
    if let Some(window) = effective_pool(spec, l) {
        if spec.strict_causal {
            zero_above_diagonal(&mut g_attn);
        }
        g_attn = avg_pool_rows_backward(&g_attn, window)?;
    }
    if let Some(alpha) = spec.eld_prob {
        let e = masks.eld(alpha, l)?;
        g_attn = elem_mul(&g_attn, &e)?;
    }

    // Masked (future) positions carry probability exactly 0, so the
    // softmax VJP already returns zero gradient there.
    let mut g_scores = softmax_rows_backward(&g_attn, &cache.probs)?;

    match spec.pre {
        PreSoftmax::None | PreSoftmax::AlibiBias { .. } => {}
        PreSoftmax::EldScale { alpha } => {
            let e = masks.eld(alpha, l)?;
            g_scores = elem_mul(&g_scores, &e)?;
        }
    }
    let scale = T::from_f64(1.0 / (d_k as f64).sqrt());
    let g_scores = g_scores.scale(scale);

    // scores = Q K^T
    let g_q = matmul(&g_scores, &cache.k)?;
    let g_k = matmul_tn(&g_scores, &cache.q)?;
    Ok((g_q, g_k, g_v))
}

/// Forward-only convenience wrapper.
pub fn attention_head<T: Scalar>(
    q: &Tensor<T>,
    k: &Tensor<T>,
    v: &Tensor<T>,
    spec: &HeadSpec,
    masks: &MaskCache<T>,
) -> Result<Tensor<T>> {
    head_forward(q.clone(), k.clone(), v.clone(), spec, masks).map(|(out, _)| out)
}
