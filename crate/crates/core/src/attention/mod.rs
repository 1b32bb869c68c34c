//! Attention variants: vanilla causal, Alibi, L (decay only), S (smooth
//! only), LaS, and their block-chunked forms.
//!
//! One LaS head computes
//! `AP(softmax(exp(-alpha_c * D_L) .* (Q K^T / sqrt(d_k)))) V`
//! where AP is per-row 1-D average pooling and D_L the causal distance
//! matrix. The decay mask is applied to the already-scaled scores, then
//! the causal -inf mask, then softmax; pooling runs on the attention
//! rows after softmax. In strict-causal mode weight leaked by pooling
//! onto future keys is re-zeroed (default), with optional row
//! renormalization (default off).

pub mod export;
pub mod head;
pub mod layer;
pub mod mask;

use serde::{Deserialize, Serialize};

use crate::error::{LasError, Result};

pub use export::{column_smoothness, export_attention_map, min_max_normalize};
pub use head::{attention_head, head_backward, head_forward, HeadCache};
pub use layer::{
    chunked_attention, multi_head_attention, multi_head_backward, multi_head_forward,
    AttentionWeights, MhaCache,
};
pub use mask::{build_distance_matrix, build_eld_mask, EldMask, MaskCache};

/// Attention variant selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Vanilla,
    Alibi,
    /// Decay (local) operator only.
    L,
    /// Smoothing operator only.
    S,
    /// Decay then smoothing.
    Las,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Alibi => "alibi",
            Variant::L => "l",
            Variant::S => "s",
            Variant::Las => "las",
        }
    }
}

/// Where the decay mask multiplies in.
///
/// `ScoreScale` is the literal placement: scores are multiplied before
/// softmax, which pushes distant scores toward the neutral value 0
/// rather than toward -inf. `ProbScale` multiplies the post-softmax
/// attention rows instead, suppressing distant weight toward 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EldMode {
    #[serde(rename = "score-scale")]
    ScoreScale,
    #[serde(rename = "prob-scale")]
    ProbScale,
}

/// All attention hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionConfig {
    /// Head count H.
    pub heads: usize,
    pub d_model: usize,
    pub variant: Variant,
    /// Decay hyperparameter B in (0,1): exp(-alpha_c) is spaced evenly
    /// in (0, B] across heads.
    pub b: f64,
    /// Pooling window P (odd).
    pub p: usize,
    /// Block size for chunked attention; 0 = full attention.
    pub chunk_size: usize,
    pub eld_mode: EldMode,
    /// Re-zero pooled weight on future keys.
    pub strict_causal: bool,
    /// Renormalize attention rows after pooling / probability scaling.
    pub renormalize_rows: bool,
    /// Head 0 skips pooling as well as decay, making it exactly vanilla.
    pub head0_vanilla: bool,
    /// Single-slope override for the Alibi variant; per-head geometric
    /// slopes 2^(-8(h+1)/H) when unset.
    pub alibi_slope: Option<f64>,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            heads: 8,
            d_model: 64,
            variant: Variant::Las,
            b: 0.001,
            p: 5,
            chunk_size: 0,
            eld_mode: EldMode::ScoreScale,
            strict_causal: true,
            renormalize_rows: false,
            head0_vanilla: true,
            alibi_slope: None,
        }
    }
}

impl AttentionConfig {
    pub fn d_k(&self) -> usize {
        self.d_model / self.heads
    }

    /// Validate the invariants; error messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 {
            return Err(LasError::Config("heads must be positive".into()));
        }
        if self.d_model == 0 || self.d_model % self.heads != 0 {
            return Err(LasError::Config(format!(
                "d_model ({}) must be a positive multiple of heads ({})",
                self.d_model, self.heads
            )));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(LasError::Config(format!(
                "b must lie in (0,1), got {}",
                self.b
            )));
        }
        if self.p == 0 || self.p % 2 == 0 {
            return Err(LasError::Config(format!(
                "p must be odd and positive, got {}",
                self.p
            )));
        }
        if let Some(m) = self.alibi_slope {
            if !(m >= 0.0) {
                return Err(LasError::Config(format!(
                    "alibi_slope must be nonnegative, got {m}"
                )));
            }
        }
        Ok(())
    }

    /// Resolved per-head behavior under this config.
    pub fn head_spec(&self, head: usize) -> Result<HeadSpec> {
        self.validate()?;
        if head >= self.heads {
            return Err(LasError::Parameter(format!(
                "head {head} out of {}",
                self.heads
            )));
        }
        let skip_pool = self.head0_vanilla && head == 0;
        let spec = match self.variant {
            Variant::Vanilla => HeadSpec::vanilla(),
            Variant::Alibi => {
                let m = self
                    .alibi_slope
                    .unwrap_or_else(|| alibi_slopes(self.heads)[head]);
                HeadSpec {
                    pre: PreSoftmax::AlibiBias { slope: m },
                    ..HeadSpec::vanilla()
                }
            }
            Variant::L => {
                let alpha = alpha_schedule(self.heads, self.b)?[head];
                match self.eld_mode {
                    EldMode::ScoreScale => HeadSpec {
                        pre: PreSoftmax::EldScale { alpha },
                        ..HeadSpec::vanilla()
                    },
                    EldMode::ProbScale => HeadSpec {
                        eld_prob: Some(alpha),
                        renormalize: self.renormalize_rows,
                        ..HeadSpec::vanilla()
                    },
                }
            }
            Variant::S => HeadSpec {
                pool: if skip_pool { None } else { Some(self.p) },
                strict_causal: self.strict_causal,
                renormalize: self.renormalize_rows,
                ..HeadSpec::vanilla()
            },
            Variant::Las => {
                let alpha = alpha_schedule(self.heads, self.b)?[head];
                let pool = if skip_pool { None } else { Some(self.p) };
                match self.eld_mode {
                    EldMode::ScoreScale => HeadSpec {
                        pre: PreSoftmax::EldScale { alpha },
                        pool,
                        strict_causal: self.strict_causal,
                        renormalize: self.renormalize_rows,
                        eld_prob: None,
                    },
                    EldMode::ProbScale => HeadSpec {
                        pre: PreSoftmax::None,
                        eld_prob: Some(alpha),
                        pool,
                        strict_causal: self.strict_causal,
                        renormalize: self.renormalize_rows,
                    },
                }
            }
        };
        Ok(spec)
    }
}

/// Score transform before the causal mask and softmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreSoftmax {
    None,
    /// scores .* exp(-alpha * D_L)
    EldScale { alpha: f64 },
    /// scores - slope * D_L
    AlibiBias { slope: f64 },
}

/// Fully resolved behavior of one attention head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSpec {
    pub pre: PreSoftmax,
    /// Post-softmax decay (prob-scale mode).
    pub eld_prob: Option<f64>,
    /// Pooling window, if the smoothing operator applies.
    pub pool: Option<usize>,
    /// Re-zero future-key weight after pooling.
    pub strict_causal: bool,
    /// Renormalize rows after the post-softmax transforms.
    pub renormalize: bool,
}

impl HeadSpec {
    pub fn vanilla() -> Self {
        Self {
            pre: PreSoftmax::None,
            eld_prob: None,
            pool: None,
            strict_causal: false,
            renormalize: false,
        }
    }
}

/// Per-head decay rates: alpha_0 = 0 (the first head stays vanilla) and
/// exp(-alpha_c) = B * c / (H-1) for c = 1..H-1, i.e. evenly spaced in
/// exponential space with the largest decay at c = 1 and maximum exactly
/// B at c = H-1.
pub fn alpha_schedule(heads: usize, b: f64) -> Result<Vec<f64>> {
    if heads == 0 {
        return Err(LasError::Parameter("heads must be positive".into()));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(LasError::Parameter(format!(
            "b must lie in (0,1), got {b}"
        )));
    }
    let mut alphas = vec![0.0];
    for c in 1..heads {
        alphas.push(-(b * c as f64 / (heads - 1) as f64).ln());
    }
    Ok(alphas)
}

/// Geometric Alibi slopes m_h = 2^(-8(h+1)/H).
pub fn alibi_slopes(heads: usize) -> Vec<f64> {
    (0..heads)
        .map(|h| 2.0f64.powf(-8.0 * (h + 1) as f64 / heads as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_single_head_is_vanilla() {
        assert_eq!(alpha_schedule(1, 0.5).unwrap(), vec![0.0]);
    }

    #[test]
    fn schedule_hand_computed_h4() {
        let a = alpha_schedule(4, 0.5).unwrap();
        let expected = [0.0, 6.0f64.ln(), 3.0f64.ln(), 2.0f64.ln()];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn schedule_h8_is_evenly_spaced() {
        let b = 0.001;
        let a = alpha_schedule(8, b).unwrap();
        assert_eq!(a[0], 0.0);
        for c in 1..8 {
            let e = (-a[c]).exp();
            assert!((e - b * c as f64 / 7.0).abs() < 1e-12, "c={c} e={e}");
        }
        // strictly decreasing over c = 1..H-1, maximum exp(-alpha) is B
        for c in 2..8 {
            assert!(a[c] < a[c - 1]);
        }
        assert!(((-a[7]).exp() - b).abs() < 1e-15);
    }

    #[test]
    fn schedule_rejects_bad_arguments() {
        assert!(alpha_schedule(0, 0.5).is_err());
        assert!(alpha_schedule(4, 0.0).is_err());
        assert!(alpha_schedule(4, 1.0).is_err());
        assert!(alpha_schedule(4, 1.5).is_err());
    }

    #[test]
    fn alibi_slopes_positive_decreasing() {
        let m = alibi_slopes(8);
        assert_eq!(m.len(), 8);
        for h in 0..8 {
            assert!(m[h] > 0.0);
            assert!((m[h] - 2.0f64.powf(-(h as f64 + 1.0))).abs() < 1e-15);
            if h > 0 {
                assert!(m[h] < m[h - 1]);
            }
        }
    }

    #[test]
    fn config_validation_bounds() {
        let mut cfg = AttentionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.b = 1.5;
        assert!(matches!(cfg.validate().unwrap_err(), LasError::Config(_)));
        cfg.b = 0.001;
        cfg.p = 4;
        assert!(matches!(cfg.validate().unwrap_err(), LasError::Config(_)));
        cfg.p = 5;
        cfg.d_model = 63;
        assert!(matches!(cfg.validate().unwrap_err(), LasError::Config(_)));
    }

    #[test]
    fn head_zero_is_vanilla_for_las() {
        let cfg = AttentionConfig {
            variant: Variant::Las,
            ..Default::default()
        };
        let s0 = cfg.head_spec(0).unwrap();
        assert_eq!(s0.pre, PreSoftmax::EldScale { alpha: 0.0 });
        assert_eq!(s0.pool, None);
        let s1 = cfg.head_spec(1).unwrap();
        assert!(matches!(s1.pre, PreSoftmax::EldScale { alpha } if alpha > 0.0));
        assert_eq!(s1.pool, Some(5));
        assert!(s1.strict_causal);
    }

    #[test]
    fn head0_pooling_restorable() {
        let cfg = AttentionConfig {
            variant: Variant::S,
            head0_vanilla: false,
            ..Default::default()
        };
        assert_eq!(cfg.head_spec(0).unwrap().pool, Some(5));
    }
}
