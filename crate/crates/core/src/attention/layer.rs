//! Multi-head attention with optional block-chunked execution.
//!
//! Chunked mode segments the sequence into consecutive fixed-size blocks
//! and runs the configured variant independently inside each block; the
//! final partial block is processed at its natural length. Full
//! attention is the single-block case of the same code path, so
//! `chunk_size >= L` is bit-identical to full attention.

use rand::Rng;

use super::head::{head_backward, head_forward, HeadCache};
use super::mask::MaskCache;
use super::AttentionConfig;
use crate::error::{LasError, Result};
use crate::tensor::ops::{matmul, matmul_nt, matmul_tn};
use crate::tensor::{Scalar, Tensor};

/// Projection weights for one attention layer: per-head W^q/W^k/W^v of
/// shape d_model x d_k plus the shared output projection W^o.
#[derive(Debug, Clone)]
pub struct AttentionWeights<T: Scalar> {
    pub w_q: Vec<Tensor<T>>,
    pub w_k: Vec<Tensor<T>>,
    pub w_v: Vec<Tensor<T>>,
    pub w_o: Tensor<T>,
}

impl<T: Scalar> AttentionWeights<T> {
    /// Uniform(-s, s) init with s = 1/sqrt(fan_in).
    pub fn init(cfg: &AttentionConfig, rng: &mut impl Rng) -> Self {
        let d_model = cfg.d_model;
        let d_k = cfg.d_k();
        let s = 1.0 / (d_model as f64).sqrt();
        let mut mat = |r: usize, c: usize| {
            Tensor::from_fn2(r, c, |_, _| T::from_f64(rng.gen_range(-s..s)))
        };
        let mut w_q = Vec::with_capacity(cfg.heads);
        let mut w_k = Vec::with_capacity(cfg.heads);
        let mut w_v = Vec::with_capacity(cfg.heads);
        for _ in 0..cfg.heads {
            w_q.push(mat(d_model, d_k));
            w_k.push(mat(d_model, d_k));
            w_v.push(mat(d_model, d_k));
        }
        let w_o = mat(d_model, d_model);
        Self { w_q, w_k, w_v, w_o }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w_q: self.w_q.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect(),
            w_k: self.w_k.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect(),
            w_v: self.w_v.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect(),
            w_o: Tensor::zeros(self.w_o.shape().to_vec()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w_q.iter().map(Tensor::len).sum::<usize>()
            + self.w_k.iter().map(Tensor::len).sum::<usize>()
            + self.w_v.iter().map(Tensor::len).sum::<usize>()
            + self.w_o.len()
    }

    fn check(&self, cfg: &AttentionConfig) -> Result<()> {
        let d_k = cfg.d_k();
        if self.w_q.len() != cfg.heads
            || self.w_k.len() != cfg.heads
            || self.w_v.len() != cfg.heads
        {
            return Err(LasError::Dimension(format!(
                "weights hold {} heads, config says {}",
                self.w_q.len(),
                cfg.heads
            )));
        }
        for h in 0..cfg.heads {
            for w in [&self.w_q[h], &self.w_k[h], &self.w_v[h]] {
                if w.dims2()? != (cfg.d_model, d_k) {
                    return Err(LasError::Dimension(format!(
                        "head {h} projection shape {:?}, expected [{}, {d_k}]",
                        w.shape(),
                        cfg.d_model
                    )));
                }
            }
        }
        if self.w_o.dims2()? != (cfg.d_model, cfg.d_model) {
            return Err(LasError::Dimension(format!(
                "w_o shape {:?}, expected [{d}, {d}]",
                self.w_o.shape(),
                d = cfg.d_model
            )));
        }
        Ok(())
    }
}

/// Saved forward state of one multi-head layer.
#[derive(Debug, Clone)]
pub struct MhaCache<T: Scalar> {
    pub x: Tensor<T>,
    /// (block start row, per-head caches) per block.
    blocks: Vec<(usize, Vec<HeadCache<T>>)>,
    /// Concatenated head outputs before the output projection.
    headcat: Tensor<T>,
}

impl<T: Scalar> MhaCache<T> {
    /// Final attention matrix of one (block, head), for map export.
    pub fn attention_matrix(&self, block: usize, head: usize) -> &Tensor<T> {
        &self.blocks[block].1[head].attn
    }

    /// Pre-pooling attention rows of one (block, head).
    pub fn attention_probs(&self, block: usize, head: usize) -> &Tensor<T> {
        &self.blocks[block].1[head].probs
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

fn block_ranges(len: usize, chunk: usize) -> Vec<(usize, usize)> {
    if chunk == 0 || chunk >= len {
        return vec![(0, len)];
    }
    let mut out = Vec::with_capacity(len.div_ceil(chunk));
    let mut start = 0;
    while start < len {
        let blen = chunk.min(len - start);
        out.push((start, blen));
        start += blen;
    }
    out
}

/// Multi-head attention forward: per-head outputs concatenated, then
/// projected by W^o. Head decay rates come from the alpha schedule
/// (Alibi: geometric slopes), head 0 staying vanilla by default.
pub fn multi_head_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &AttentionWeights<T>,
    cfg: &AttentionConfig,
    masks: &MaskCache<T>,
) -> Result<(Tensor<T>, MhaCache<T>)> {
    cfg.validate()?;
    w.check(cfg)?;
    let (l, d_model) = x.dims2()?;
    if d_model != cfg.d_model {
        return Err(LasError::Dimension(format!(
            "input width {d_model} vs d_model {}",
            cfg.d_model
        )));
    }
    let d_k = cfg.d_k();

    // Full-sequence projections; blocks slice rows afterwards.
    let mut q_full = Vec::with_capacity(cfg.heads);
    let mut k_full = Vec::with_capacity(cfg.heads);
    let mut v_full = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        q_full.push(matmul(x, &w.w_q[h])?);
        k_full.push(matmul(x, &w.w_k[h])?);
        v_full.push(matmul(x, &w.w_v[h])?);
    }

    let mut headcat = Tensor::zeros(vec![l, d_model]);
    let mut blocks = Vec::new();
    for (start, blen) in block_ranges(l, cfg.chunk_size) {
        let mut caches = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let spec = cfg.head_spec(h)?;
            let q = q_full[h].slice_rows(start, blen)?;
            let k = k_full[h].slice_rows(start, blen)?;
            let v = v_full[h].slice_rows(start, blen)?;
            let (out, cache) = head_forward(q, k, v, &spec, masks)?;
            for i in 0..blen {
                let dst = headcat.row_mut(start + i);
                dst[h * d_k..(h + 1) * d_k].copy_from_slice(out.row(i));
            }
            caches.push(cache);
        }
        blocks.push((start, caches));
    }

    let out = matmul(&headcat, &w.w_o)?;
    Ok((
        out,
        MhaCache {
            x: x.clone(),
            blocks,
            headcat,
        },
    ))
}

/// Backward pass: gradients w.r.t. the layer input and all weights.
pub fn multi_head_backward<T: Scalar>(
    grad: &Tensor<T>,
    cache: &MhaCache<T>,
    w: &AttentionWeights<T>,
    cfg: &AttentionConfig,
    masks: &MaskCache<T>,
) -> Result<(Tensor<T>, AttentionWeights<T>)> {
    let (l, d_model) = cache.x.dims2()?;
    if grad.dims2()? != (l, d_model) {
        return Err(LasError::Dimension(format!(
            "grad shape {:?} vs [{l}, {d_model}]",
            grad.shape()
        )));
    }
    let d_k = cfg.d_k();
    let mut grads = w.zeros_like();

    // out = headcat * w_o
    grads.w_o = matmul_tn(&cache.headcat, grad)?;
    let g_headcat = matmul_nt(grad, &w.w_o)?;

    let mut g_x = Tensor::zeros(vec![l, d_model]);
    for h in 0..cfg.heads {
        let spec = cfg.head_spec(h)?;
        let mut g_q_full = Tensor::zeros(vec![l, d_k]);
        let mut g_k_full = Tensor::zeros(vec![l, d_k]);
        let mut g_v_full = Tensor::zeros(vec![l, d_k]);
        for (start, caches) in &cache.blocks {
            let hc = &caches[h];
            let blen = hc.q.dims2()?.0;
            let mut g_out = Tensor::zeros(vec![blen, d_k]);
            for i in 0..blen {
                g_out
                    .row_mut(i)
                    .copy_from_slice(&g_headcat.row(start + i)[h * d_k..(h + 1) * d_k]);
            }
            let (gq, gk, gv) = head_backward(hc, &spec, masks, &g_out)?;
            for i in 0..blen {
                g_q_full.row_mut(start + i).copy_from_slice(gq.row(i));
                g_k_full.row_mut(start + i).copy_from_slice(gk.row(i));
                g_v_full.row_mut(start + i).copy_from_slice(gv.row(i));
            }
        }
        // q = x * w_q[h], likewise k, v
        grads.w_q[h] = matmul_tn(&cache.x, &g_q_full)?;
        grads.w_k[h] = matmul_tn(&cache.x, &g_k_full)?;
        grads.w_v[h] = matmul_tn(&cache.x, &g_v_full)?;
        for (g_full, w_h) in [
            (&g_q_full, &w.w_q[h]),
            (&g_k_full, &w.w_k[h]),
            (&g_v_full, &w.w_v[h]),
        ] {
            let c = matmul_nt(g_full, w_h)?;
            for (dst, src) in g_x.data_mut().iter_mut().zip(c.data()) {
                *dst = *dst + *src;
            }
        }
    }
    Ok((g_x, grads))
}

/// Forward-only multi-head attention.
pub fn multi_head_attention<T: Scalar>(
    x: &Tensor<T>,
    w: &AttentionWeights<T>,
    cfg: &AttentionConfig,
    masks: &MaskCache<T>,
) -> Result<Tensor<T>> {
    multi_head_forward(x, w, cfg, masks).map(|(out, _)| out)
}

/// Block-chunked attention; requires `chunk_size >= 1` in the config.
pub fn chunked_attention<T: Scalar>(
    x: &Tensor<T>,
    w: &AttentionWeights<T>,
    cfg: &AttentionConfig,
    masks: &MaskCache<T>,
) -> Result<Tensor<T>> {
    if cfg.chunk_size == 0 {
        return Err(LasError::Parameter(
            "chunked attention needs chunk_size >= 1".into(),
        ));
    }
    multi_head_attention(x, w, cfg, masks)
}
