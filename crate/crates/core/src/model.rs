//! Causal transformer encoder for sequence classification: token and
//! learned absolute positional embeddings, stacked attention/FFN blocks
//! (pre- or post-norm), and a last-token classification head, with a
//! hand-written backward pass over the whole stack.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attention::{
    multi_head_backward, multi_head_forward, AttentionConfig, AttentionWeights, MaskCache,
    MhaCache,
};
use crate::error::{LasError, Result};
use crate::tensor::ops::{
    cross_entropy, cross_entropy_backward, layer_norm, layer_norm_backward, matmul, matmul_nt,
    matmul_tn, relu, relu_backward, LayerNormCache,
};
use crate::tensor::{Scalar, Tensor};

/// Architecture hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Transformer blocks; 0 bypasses straight to the classifier.
    pub depth: usize,
    pub ffn_multiplier: usize,
    pub prenorm: bool,
    /// Token/pixel-bin vocabulary size.
    pub vocab_size: usize,
    pub num_classes: usize,
    pub max_length: usize,
    pub attention: AttentionConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            ffn_multiplier: 4,
            prenorm: true,
            vocab_size: 256,
            num_classes: 10,
            max_length: 256,
            attention: AttentionConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn d_model(&self) -> usize {
        self.attention.d_model
    }

    pub fn ffn_width(&self) -> usize {
        self.ffn_multiplier * self.attention.d_model
    }

    pub fn validate(&self) -> Result<()> {
        self.attention.validate()?;
        if self.ffn_multiplier == 0 {
            return Err(LasError::Config("ffn_multiplier must be positive".into()));
        }
        if self.vocab_size == 0 {
            return Err(LasError::Config("vocab_size must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(LasError::Config("num_classes must be at least 2".into()));
        }
        if self.max_length == 0 {
            return Err(LasError::Config("max_length must be positive".into()));
        }
        Ok(())
    }
}

/// Per-block parameters.
#[derive(Debug, Clone)]
pub struct LayerParams<T: Scalar> {
    pub attn: AttentionWeights<T>,
    pub ln1_gamma: Tensor<T>,
    pub ln1_beta: Tensor<T>,
    pub ln2_gamma: Tensor<T>,
    pub ln2_beta: Tensor<T>,
    pub w1: Tensor<T>,
    pub b1: Tensor<T>,
    pub w2: Tensor<T>,
    pub b2: Tensor<T>,
}

/// Full parameter set.
#[derive(Debug, Clone)]
pub struct ModelParams<T: Scalar> {
    pub embed: Tensor<T>,
    pub pos: Tensor<T>,
    pub layers: Vec<LayerParams<T>>,
    pub final_gamma: Tensor<T>,
    pub final_beta: Tensor<T>,
    pub cls_w: Tensor<T>,
    pub cls_b: Tensor<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// All-zero parameters with the shapes the config implies; also the
    /// gradient container.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let m = cfg.d_model();
        let f = cfg.ffn_width();
        let d_k = cfg.attention.d_k();
        let layer = || LayerParams {
            attn: AttentionWeights {
                w_q: (0..cfg.attention.heads).map(|_| Tensor::zeros(vec![m, d_k])).collect(),
                w_k: (0..cfg.attention.heads).map(|_| Tensor::zeros(vec![m, d_k])).collect(),
                w_v: (0..cfg.attention.heads).map(|_| Tensor::zeros(vec![m, d_k])).collect(),
                w_o: Tensor::zeros(vec![m, m]),
            },
            ln1_gamma: Tensor::zeros(vec![m]),
            ln1_beta: Tensor::zeros(vec![m]),
            ln2_gamma: Tensor::zeros(vec![m]),
            ln2_beta: Tensor::zeros(vec![m]),
            w1: Tensor::zeros(vec![m, f]),
            b1: Tensor::zeros(vec![f]),
            w2: Tensor::zeros(vec![f, m]),
            b2: Tensor::zeros(vec![m]),
        };
        Self {
            embed: Tensor::zeros(vec![cfg.vocab_size, m]),
            pos: Tensor::zeros(vec![cfg.max_length, m]),
            layers: (0..cfg.depth).map(|_| layer()).collect(),
            final_gamma: Tensor::zeros(vec![m]),
            final_beta: Tensor::zeros(vec![m]),
            cls_w: Tensor::zeros(vec![m, cfg.num_classes]),
            cls_b: Tensor::zeros(vec![cfg.num_classes]),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.for_each_mut(&mut |_, t| t.data_mut().iter_mut().for_each(|v| *v = T::zero()));
        out
    }

    /// Visit every parameter tensor in a fixed, documented order. The
    /// optimizer pairs parameters with gradients by this order.
    pub fn for_each<'a>(&'a self, f: &mut impl FnMut(String, &'a Tensor<T>)) {
        f("embed".into(), &self.embed);
        f("pos".into(), &self.pos);
        for (i, l) in self.layers.iter().enumerate() {
            for (h, w) in l.attn.w_q.iter().enumerate() {
                f(format!("layer{i}.attn.w_q{h}"), w);
            }
            for (h, w) in l.attn.w_k.iter().enumerate() {
                f(format!("layer{i}.attn.w_k{h}"), w);
            }
            for (h, w) in l.attn.w_v.iter().enumerate() {
                f(format!("layer{i}.attn.w_v{h}"), w);
            }
            f(format!("layer{i}.attn.w_o"), &l.attn.w_o);
            f(format!("layer{i}.ln1.gamma"), &l.ln1_gamma);
            f(format!("layer{i}.ln1.beta"), &l.ln1_beta);
            f(format!("layer{i}.ln2.gamma"), &l.ln2_gamma);
            f(format!("layer{i}.ln2.beta"), &l.ln2_beta);
            f(format!("layer{i}.ffn.w1"), &l.w1);
            f(format!("layer{i}.ffn.b1"), &l.b1);
            f(format!("layer{i}.ffn.w2"), &l.w2);
            f(format!("layer{i}.ffn.b2"), &l.b2);
        }
        f("final_norm.gamma".into(), &self.final_gamma);
        f("final_norm.beta".into(), &self.final_beta);
        f("classifier.weight".into(), &self.cls_w);
        f("classifier.bias".into(), &self.cls_b);
    }

    /// Mutable twin of [`Self::for_each`]; must keep the same order.
    pub fn for_each_mut(&mut self, f: &mut impl FnMut(String, &mut Tensor<T>)) {
        f("embed".into(), &mut self.embed);
        f("pos".into(), &mut self.pos);
        for (i, l) in self.layers.iter_mut().enumerate() {
            for (h, w) in l.attn.w_q.iter_mut().enumerate() {
                f(format!("layer{i}.attn.w_q{h}"), w);
            }
            for (h, w) in l.attn.w_k.iter_mut().enumerate() {
                f(format!("layer{i}.attn.w_k{h}"), w);
            }
            for (h, w) in l.attn.w_v.iter_mut().enumerate() {
                f(format!("layer{i}.attn.w_v{h}"), w);
            }
            f(format!("layer{i}.attn.w_o"), &mut l.attn.w_o);
            f(format!("layer{i}.ln1.gamma"), &mut l.ln1_gamma);
            f(format!("layer{i}.ln1.beta"), &mut l.ln1_beta);
            f(format!("layer{i}.ln2.gamma"), &mut l.ln2_gamma);
            f(format!("layer{i}.ln2.beta"), &mut l.ln2_beta);
            f(format!("layer{i}.ffn.w1"), &mut l.w1);
            f(format!("layer{i}.ffn.b1"), &mut l.b1);
            f(format!("layer{i}.ffn.w2"), &mut l.w2);
            f(format!("layer{i}.ffn.b2"), &mut l.b2);
        }
        f("final_norm.gamma".into(), &mut self.final_gamma);
        f("final_norm.beta".into(), &mut self.final_beta);
        f("classifier.weight".into(), &mut self.cls_w);
        f("classifier.bias".into(), &mut self.cls_b);
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each(&mut |_, t| n += t.len());
        n
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(&mut |_, t| ok &= t.all_finite());
        ok
    }
}

/// Closed-form parameter count for a config.
pub fn expected_param_count(cfg: &ModelConfig) -> usize {
    let m = cfg.d_model();
    let f = cfg.ffn_width();
    let per_layer = 4 * m * m // per-head q/k/v projections plus w_o
        + 4 * m              // two layer norms
        + m * f + f          // ffn in
        + f * m + m; // ffn out
    cfg.vocab_size * m
        + cfg.max_length * m
        + cfg.depth * per_layer
        + 2 * m
        + m * cfg.num_classes
        + cfg.num_classes
}

/// Deterministic initialization: matrices from uniform(-s, s) with
/// s = 1/sqrt(fan_in), embedding and positional tables from N(0, 0.02),
/// norms at identity, biases at zero.
pub fn init_params<T: Scalar>(cfg: &ModelConfig, seed: u64) -> Result<ModelParams<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 0.02).expect("std is positive");
    let m = cfg.d_model();
    let f = cfg.ffn_width();

    fn table<T: Scalar>(
        rng: &mut ChaCha8Rng,
        normal: &Normal<f64>,
        rows: usize,
        cols: usize,
    ) -> Tensor<T> {
        Tensor::from_fn2(rows, cols, |_, _| T::from_f64(normal.sample(rng)))
    }
    fn uniform<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<T> {
        let s = 1.0 / (rows as f64).sqrt();
        Tensor::from_fn2(rows, cols, |_, _| T::from_f64(rng.gen_range(-s..s)))
    }

    let embed = table(&mut rng, &normal, cfg.vocab_size, m);
    let pos = table(&mut rng, &normal, cfg.max_length, m);

    let mut layers = Vec::with_capacity(cfg.depth);
    for _ in 0..cfg.depth {
        layers.push(LayerParams {
            attn: AttentionWeights::init(&cfg.attention, &mut rng),
            ln1_gamma: Tensor::filled(vec![m], T::one()),
            ln1_beta: Tensor::zeros(vec![m]),
            ln2_gamma: Tensor::filled(vec![m], T::one()),
            ln2_beta: Tensor::zeros(vec![m]),
            w1: uniform(&mut rng, m, f),
            b1: Tensor::zeros(vec![f]),
            w2: uniform(&mut rng, f, m),
            b2: Tensor::zeros(vec![m]),
        });
    }
    Ok(ModelParams {
        embed,
        pos,
        layers,
        final_gamma: Tensor::filled(vec![m], T::one()),
        final_beta: Tensor::zeros(vec![m]),
        cls_w: uniform(&mut rng, m, cfg.num_classes),
        cls_b: Tensor::zeros(vec![cfg.num_classes]),
    })
}

/// Which position feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// Final token; a causal model's last position attends to everything.
    Last,
    /// Interior position, used by causality tests.
    Position(usize),
}

fn add_row_bias<T: Scalar>(x: &mut Tensor<T>, b: &Tensor<T>) {
    let (rows, cols) = x.dims2().expect("rank-2");
    debug_assert_eq!(b.len(), cols);
    for i in 0..rows {
        let r = x.row_mut(i);
        for (v, &bias) in r.iter_mut().zip(b.data()) {
            *v = *v + bias;
        }
    }
}

fn column_sums<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (rows, cols) = x.dims2().expect("rank-2");
    let mut out = Tensor::zeros(vec![cols]);
    for i in 0..rows {
        for (o, &v) in out.data_mut().iter_mut().zip(x.row(i)) {
            *o = *o + v;
        }
    }
    out
}

#[derive(Debug, Clone)]
struct LayerFwd<T: Scalar> {
    mha: MhaCache<T>,
    ln1: LayerNormCache<T>,
    ln2: LayerNormCache<T>,
    /// Input of the FFN in-projection.
    ffn_in: Tensor<T>,
    h_pre: Tensor<T>,
    h: Tensor<T>,
}

/// Saved activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ModelCache<T: Scalar> {
    tokens: Vec<u32>,
    layers: Vec<LayerFwd<T>>,
    final_ln: LayerNormCache<T>,
    /// Final normalized activations [L x d_model].
    y: Tensor<T>,
    readout_row: usize,
}

impl<T: Scalar> ModelCache<T> {
    /// Final attention matrix of (layer, block, head), for map export.
    pub fn attention_matrix(&self, layer: usize, block: usize, head: usize) -> &Tensor<T> {
        self.layers[layer].mha.attention_matrix(block, head)
    }

    pub fn block_count(&self, layer: usize) -> usize {
        self.layers[layer].mha.block_count()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

fn embed_tokens<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    tokens: &[u32],
) -> Result<Tensor<T>> {
    if tokens.is_empty() {
        return Err(LasError::Input("empty token sequence".into()));
    }
    if tokens.len() > cfg.max_length {
        return Err(LasError::Input(format!(
            "sequence length {} exceeds max_length {}",
            tokens.len(),
            cfg.max_length
        )));
    }
    let m = cfg.d_model();
    let mut x = Tensor::zeros(vec![tokens.len(), m]);
    for (i, &t) in tokens.iter().enumerate() {
        if t as usize >= cfg.vocab_size {
            return Err(LasError::Input(format!(
                "token id {t} out of vocabulary {}",
                cfg.vocab_size
            )));
        }
        let dst = x.row_mut(i);
        for (d, (&e, &p)) in dst
            .iter_mut()
            .zip(params.embed.row(t as usize).iter().zip(params.pos.row(i)))
        {
            *d = e + p;
        }
    }
    Ok(x)
}

/// Forward pass returning the class logits and every saved activation.
pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    tokens: &[u32],
    masks: &MaskCache<T>,
    readout: Readout,
) -> Result<(Tensor<T>, ModelCache<T>)> {
    cfg.validate()?;
    let l = tokens.len();
    let readout_row = match readout {
        Readout::Last => l.saturating_sub(1),
        Readout::Position(p) => {
            if p >= l {
                return Err(LasError::Input(format!(
                    "readout position {p} out of sequence length {l}"
                )));
            }
            p
        }
    };

    let mut x = embed_tokens(params, cfg, tokens)?;
    let mut layers = Vec::with_capacity(cfg.depth);
    for lp in &params.layers {
        if cfg.prenorm {
            let (ln1_out, ln1) = layer_norm(&x, &lp.ln1_gamma, &lp.ln1_beta)?;
            let (attn, mha) = multi_head_forward(&ln1_out, &lp.attn, &cfg.attention, masks)?;
            let mut x1 = x;
            for (d, &a) in x1.data_mut().iter_mut().zip(attn.data()) {
                *d = *d + a;
            }
            let (ffn_in, ln2) = layer_norm(&x1, &lp.ln2_gamma, &lp.ln2_beta)?;
            let mut h_pre = matmul(&ffn_in, &lp.w1)?;
            add_row_bias(&mut h_pre, &lp.b1);
            let h = relu(&h_pre);
            let mut f = matmul(&h, &lp.w2)?;
            add_row_bias(&mut f, &lp.b2);
            let mut x2 = x1;
            for (d, &v) in x2.data_mut().iter_mut().zip(f.data()) {
                *d = *d + v;
            }
            x = x2;
            layers.push(LayerFwd {
                mha,
                ln1,
                ln2,
                ffn_in,
                h_pre,
                h,
            });
        } else {
            let (attn, mha) = multi_head_forward(&x, &lp.attn, &cfg.attention, masks)?;
            let mut s1 = x;
            for (d, &a) in s1.data_mut().iter_mut().zip(attn.data()) {
                *d = *d + a;
            }
            let (x1, ln1) = layer_norm(&s1, &lp.ln1_gamma, &lp.ln1_beta)?;
            let mut h_pre = matmul(&x1, &lp.w1)?;
            add_row_bias(&mut h_pre, &lp.b1);
            let h = relu(&h_pre);
            let mut f = matmul(&h, &lp.w2)?;
            add_row_bias(&mut f, &lp.b2);
            let mut s2 = x1.clone();
            for (d, &v) in s2.data_mut().iter_mut().zip(f.data()) {
                *d = *d + v;
            }
            let (x2, ln2) = layer_norm(&s2, &lp.ln2_gamma, &lp.ln2_beta)?;
            x = x2;
            layers.push(LayerFwd {
                mha,
                ln1,
                ln2,
                ffn_in: x1,
                h_pre,
                h,
            });
        }
    }

    let (y, final_ln) = layer_norm(&x, &params.final_gamma, &params.final_beta)?;
    let yr = Tensor::new(vec![1, cfg.d_model()], y.row(readout_row).to_vec())?;
    let mut logits_mat = matmul(&yr, &params.cls_w)?;
    add_row_bias(&mut logits_mat, &params.cls_b);
    let logits = Tensor::new(vec![cfg.num_classes], logits_mat.into_data())?;

    Ok((
        logits,
        ModelCache {
            tokens: tokens.to_vec(),
            layers,
            final_ln,
            y,
            readout_row,
        },
    ))
}

/// Forward without keeping activations.
pub fn logits_only<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    tokens: &[u32],
    masks: &MaskCache<T>,
) -> Result<Tensor<T>> {
    forward(params, cfg, tokens, masks, Readout::Last).map(|(l, _)| l)
}

/// Backward pass from an upstream logits gradient; returns parameter
/// gradients shaped like the model.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    cache: &ModelCache<T>,
    masks: &MaskCache<T>,
    g_logits: &Tensor<T>,
) -> Result<ModelParams<T>> {
    let m = cfg.d_model();
    let l = cache.tokens.len();
    let mut grads = ModelParams::zeros(cfg);

    // Classifier.
    let yr = Tensor::new(vec![1, m], cache.y.row(cache.readout_row).to_vec())?;
    let g_row = Tensor::new(vec![1, cfg.num_classes], g_logits.data().to_vec())?;
    grads.cls_w = matmul_tn(&yr, &g_row)?;
    grads.cls_b = Tensor::new(vec![cfg.num_classes], g_logits.data().to_vec())?;
    let g_yr = matmul_nt(&g_row, &params.cls_w)?;
    let mut g_y = Tensor::zeros(vec![l, m]);
    g_y.row_mut(cache.readout_row).copy_from_slice(g_yr.row(0));

    // Final norm.
    let (mut g_x, g_fg, g_fb) = layer_norm_backward(&g_y, &params.final_gamma, &cache.final_ln)?;
    grads.final_gamma = g_fg;
    grads.final_beta = g_fb;

    // Blocks in reverse.
    for (li, (lp, fwd)) in params
        .layers
        .iter()
        .zip(&cache.layers)
        .enumerate()
        .rev()
    {
        let gl = &mut grads.layers[li];
        if cfg.prenorm {
            // x2 = x1 + ffn(ln2(x1)); x1 = x + attn(ln1(x))
            let g_f = &g_x;
            let g_h = matmul_nt(g_f, &lp.w2)?;
            gl.w2 = matmul_tn(&fwd.h, g_f)?;
            gl.b2 = column_sums(g_f);
            let g_hpre = relu_backward(&g_h, &fwd.h_pre)?;
            let g_ffn_in = matmul_nt(&g_hpre, &lp.w1)?;
            gl.w1 = matmul_tn(&fwd.ffn_in, &g_hpre)?;
            gl.b1 = column_sums(&g_hpre);
            let (g_x1a, g2g, g2b) = layer_norm_backward(&g_ffn_in, &lp.ln2_gamma, &fwd.ln2)?;
            gl.ln2_gamma = g2g;
            gl.ln2_beta = g2b;
            let mut g_x1 = g_x.clone();
            for (d, &v) in g_x1.data_mut().iter_mut().zip(g_x1a.data()) {
                *d = *d + v;
            }

            let (g_ln1_out, attn_grads) =
                multi_head_backward(&g_x1, &fwd.mha, &lp.attn, &cfg.attention, masks)?;
            gl.attn = attn_grads;
            let (g_xa, g1g, g1b) = layer_norm_backward(&g_ln1_out, &lp.ln1_gamma, &fwd.ln1)?;
            gl.ln1_gamma = g1g;
            gl.ln1_beta = g1b;
            g_x = g_x1;
            for (d, &v) in g_x.data_mut().iter_mut().zip(g_xa.data()) {
                *d = *d + v;
            }
        } else {
            // x2 = ln2(x1 + ffn(x1)); x1 = ln1(x + attn(x))
            let (g_s2, g2g, g2b) = layer_norm_backward(&g_x, &lp.ln2_gamma, &fwd.ln2)?;
            gl.ln2_gamma = g2g;
            gl.ln2_beta = g2b;
            let g_h = matmul_nt(&g_s2, &lp.w2)?;
            gl.w2 = matmul_tn(&fwd.h, &g_s2)?;
            gl.b2 = column_sums(&g_s2);
            let g_hpre = relu_backward(&g_h, &fwd.h_pre)?;
            let g_ffn = matmul_nt(&g_hpre, &lp.w1)?;
            gl.w1 = matmul_tn(&fwd.ffn_in, &g_hpre)?;
            gl.b1 = column_sums(&g_hpre);
            let mut g_x1 = g_s2;
            for (d, &v) in g_x1.data_mut().iter_mut().zip(g_ffn.data()) {
                *d = *d + v;
            }

            let (g_s1, g1g, g1b) = layer_norm_backward(&g_x1, &lp.ln1_gamma, &fwd.ln1)?;
            gl.ln1_gamma = g1g;
            gl.ln1_beta = g1b;
            let (g_xa, attn_grads) =
                multi_head_backward(&g_s1, &fwd.mha, &lp.attn, &cfg.attention, masks)?;
            gl.attn = attn_grads;
            g_x = g_s1;
            for (d, &v) in g_x.data_mut().iter_mut().zip(g_xa.data()) {
                *d = *d + v;
            }
        }
    }

    // Embedding tables.
    for (i, &t) in cache.tokens.iter().enumerate() {
        let g = g_x.row(i).to_vec();
        for (d, &v) in grads.embed.row_mut(t as usize).iter_mut().zip(&g) {
            *d = *d + v;
        }
        for (d, &v) in grads.pos.row_mut(i).iter_mut().zip(&g) {
            *d = *d + v;
        }
    }
    Ok(grads)
}

/// Cross-entropy loss, logits, and full parameter gradients for one
/// labeled sequence.
pub fn loss_and_grads<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    tokens: &[u32],
    label: usize,
    masks: &MaskCache<T>,
) -> Result<(T, Tensor<T>, ModelParams<T>)> {
    let (logits, cache) = forward(params, cfg, tokens, masks, Readout::Last)?;
    let (loss, probs) = cross_entropy(&logits, label)?;
    let g_logits = cross_entropy_backward(&probs, label, T::one());
    let grads = backward(params, cfg, &cache, masks, &g_logits)?;
    Ok((loss, logits, grads))
}

// ---------------------------------------------------------------------------
// checkpoints: u32-LE header length, JSON header, flat little-endian f32 data
// ---------------------------------------------------------------------------

const CHECKPOINT_FORMAT: &str = "lasattn.checkpoint.v1";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    config: ModelConfig,
    seed: u64,
    tensors: Vec<TensorMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
}

/// A loaded checkpoint.
#[derive(Debug)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub seed: u64,
    pub params: ModelParams<f32>,
}

pub fn save_checkpoint(
    path: &Path,
    cfg: &ModelConfig,
    seed: u64,
    params: &ModelParams<f32>,
) -> Result<()> {
    let mut tensors = Vec::new();
    params.for_each(&mut |name, t| {
        tensors.push(TensorMeta {
            name,
            shape: t.shape().to_vec(),
        })
    });
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        config: cfg.clone(),
        seed,
        tensors,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    params.for_each(&mut |_, t| {
        for v in t.data() {
            // Writes to the buffered file; errors surface on flush.
            let _ = w.write_all(&v.to_le_bytes());
        }
    });
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)
        .map_err(|_| LasError::Format("checkpoint too short for header length".into()))?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbytes = vec![0u8; hlen];
    r.read_exact(&mut hbytes)
        .map_err(|_| LasError::Format("checkpoint header truncated".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&hbytes)
        .map_err(|e| LasError::Format(format!("bad checkpoint header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(LasError::Format(format!(
            "unknown checkpoint format {:?}",
            header.format
        )));
    }
    header.config.validate()?;

    let mut params = ModelParams::<f32>::zeros(&header.config);
    let mut idx = 0usize;
    let mut err: Option<LasError> = None;
    params.for_each_mut(&mut |name, t| {
        if err.is_some() {
            return;
        }
        if idx >= header.tensors.len()
            || header.tensors[idx].name != name
            || header.tensors[idx].shape != t.shape()
        {
            err = Some(LasError::Format(format!(
                "checkpoint tensor {idx} mismatch at {name}"
            )));
            return;
        }
        let mut buf = vec![0u8; t.len() * 4];
        if r.read_exact(&mut buf).is_err() {
            err = Some(LasError::Format("checkpoint payload truncated".into()));
            return;
        }
        for (v, c) in t.data_mut().iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        idx += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    if idx != header.tensors.len() {
        return Err(LasError::Format("checkpoint lists extra tensors".into()));
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(LasError::Format("trailing bytes after checkpoint payload".into()));
    }
    Ok(Checkpoint {
        config: header.config,
        seed: header.seed,
        params,
    })
}
