//! Constructive equivalence between one attention head and one causal
//! convolution channel (a state-space layer channel).
//!
//! Given a nonnegative kernel k with positive mass, explicit query/key/
//! value matrices and an indicator positional encoding make a single
//! softmax attention head compute exactly `A_k u`, where `A_k` is the
//! lower-triangular Toeplitz matrix realizing the causal convolution
//! `y = k * u`. The verifier runs the full attention computation and
//! reports the worst absolute deviation from an independent direct-loop
//! convolution oracle.
//!
//! Everything here runs at 64-bit; this is a verification path.

use crate::error::{LasError, Result};
use crate::tensor::ops::{matmul, softmax_rows};
use crate::tensor::Tensor;

/// Causal convolution kernel: nonnegative entries, at least one positive.
///
/// Log-domain query entries make negative kernels unrepresentable here;
/// zero entries map to the -inf sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    k: Vec<f64>,
}

impl ConvKernel {
    pub fn new(k: Vec<f64>) -> Result<Self> {
        if k.is_empty() {
            return Err(LasError::Parameter("empty kernel".into()));
        }
        if let Some(bad) = k.iter().find(|&&v| !(v >= 0.0)) {
            return Err(LasError::UnsupportedKernel(format!(
                "kernel entries must be nonnegative, found {bad}"
            )));
        }
        if k.iter().sum::<f64>() <= 0.0 {
            return Err(LasError::DegenerateKernel);
        }
        Ok(Self { k })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.k
    }

    /// Total mass c = sum of entries.
    pub fn total(&self) -> f64 {
        self.k.iter().sum()
    }

    /// Tail mass c_i = sum of entries after position i (1-indexed i).
    pub fn tail(&self, i: usize) -> f64 {
        self.k[i..].iter().sum()
    }
}

/// Lower-triangular Toeplitz matrix A_k with A_k[i][j] = k_{i-j+1}
/// (1-indexed kernel), so that A_k u is the causal convolution k * u.
pub fn build_kernel_matrix(k: &ConvKernel) -> Tensor<f64> {
    let l = k.len();
    Tensor::from_fn2(l, l, |i, j| if i >= j { k.k[i - j] } else { 0.0 })
}

/// Direct double-loop causal convolution: y_i = sum_{j<=i} k_{i-j+1} u_j.
///
/// This is the independent oracle the attention construction is checked
/// against; it deliberately shares no code with the matrix path.
pub fn causal_conv_oracle(k: &ConvKernel, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != k.len() {
        return Err(LasError::Dimension(format!(
            "input length {} vs kernel length {}",
            u.len(),
            k.len()
        )));
    }
    let l = u.len();
    let mut y = vec![0.0; l];
    for i in 0..l {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += k.k[i - j] * u[j];
        }
        y[i] = acc;
    }
    Ok(y)
}

/// The constructed head: W^q/W^k/W^v of size (L+1) x (L+1), the derived
/// constants, and the indicator positional encoding.
///
/// W^v = c I, W^k = sqrt(d_k) I with d_k = L+1, and each W^q row's
/// finite entries exponentiate and sum to exactly c, so the softmax of
/// W^q reproduces A_k / c on its leading L x L block.
#[derive(Debug, Clone)]
pub struct ConstructedHead {
    pub w_q: Tensor<f64>,
    pub w_k: Tensor<f64>,
    pub w_v: Tensor<f64>,
    /// Total kernel mass c.
    pub total: f64,
    /// Tail masses c_i for i = 1..L-1 (c_L = 0 is implicit).
    pub tail_sums: Vec<f64>,
    /// Kernel length L; the head operates on L+1 positions.
    pub len: usize,
}

impl ConstructedHead {
    /// d_k of the constructed head (hidden width L+1).
    pub fn d_k(&self) -> usize {
        self.len + 1
    }

    /// Indicator positional encoding of the L+1 positions: the identity.
    pub fn positional_encoding(&self) -> Tensor<f64> {
        identity(self.len + 1)
    }

    /// Sum of exp over the finite entries of each W^q row; the
    /// construction forces every row to c.
    pub fn row_exp_sums(&self) -> Vec<f64> {
        let n = self.len + 1;
        (0..n)
            .map(|i| {
                self.w_q
                    .row(i)
                    .iter()
                    .filter(|v| v.is_finite())
                    .map(|v| v.exp())
                    .sum()
            })
            .collect()
    }
}

fn identity(n: usize) -> Tensor<f64> {
    Tensor::from_fn2(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Matrix products on the score path under the masked-attention
/// convention 0 * x = 0 even for x = -inf: a zero positional-indicator
/// weight annihilates a masked score instead of producing NaN.
fn sentinel_matmul(a: &Tensor<f64>, b: &Tensor<f64>) -> Result<Tensor<f64>> {
    let (m, ka) = a.dims2()?;
    let (kb, n) = b.dims2()?;
    if ka != kb {
        return Err(LasError::Dimension(format!(
            "sentinel_matmul inner extents differ: {ka} vs {kb}"
        )));
    }
    Ok(Tensor::from_fn2(m, n, |i, j| {
        let mut acc = 0.0;
        for t in 0..ka {
            let x = a.at2(i, t);
            let y = b.at2(t, j);
            if x != 0.0 && y != 0.0 {
                acc += x * y;
            }
        }
        acc
    }))
}

/// a * b^T under the same sentinel convention.
fn sentinel_matmul_nt(a: &Tensor<f64>, b: &Tensor<f64>) -> Result<Tensor<f64>> {
    sentinel_matmul(a, &b.transpose2()?)
}

fn ln_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Build the explicit (W^q, W^k, W^v) triplet for a kernel.
///
/// W^q[i][j] = ln A_k[i][j] on the leading L x L block, the last column
/// holds ln c_i (ln c in the empty-token row), and every other entry is
/// the ln 0 = -inf sentinel consumed by the stabilized softmax.
pub fn theorem1_construct(k: &ConvKernel) -> Result<ConstructedHead> {
    let l = k.len();
    let n = l + 1;
    let c = k.total();
    let tail_sums: Vec<f64> = (1..l).map(|i| k.tail(i)).collect();

    let mut w_q = Tensor::filled(vec![n, n], f64::NEG_INFINITY);
    for i in 0..l {
        for j in 0..=i {
            w_q.set2(i, j, ln_or_neg_inf(k.k[i - j]));
        }
        // Tail mass in the last column; the final kernel row has an
        // empty tail and keeps the sentinel.
        if i + 1 < l {
            w_q.set2(i, l, ln_or_neg_inf(tail_sums[i]));
        }
    }
    w_q.set2(l, l, ln_or_neg_inf(c));

    let sqrt_dk = (n as f64).sqrt();
    let w_k = identity(n).scale(sqrt_dk);
    let w_v = identity(n).scale(c);

    Ok(ConstructedHead {
        w_q,
        w_k,
        w_v,
        total: c,
        tail_sums,
        len: l,
    })
}

/// Run the constructed head on an input sequence and return the worst
/// absolute deviation from the direct convolution oracle.
///
/// The full attention computation is executed literally:
/// softmax((u' W^q)(u' W^k)^T / sqrt(d_k)) (W^v u_ext) with
/// u' = PE(u) = I_{L+1} and an appended empty token of value 0 whose
/// output row is discarded.
pub fn theorem1_verify(k: &ConvKernel, u: &[f64]) -> Result<f64> {
    if u.len() != k.len() {
        return Err(LasError::Dimension(format!(
            "input length {} vs kernel length {}",
            u.len(),
            k.len()
        )));
    }
    let head = theorem1_construct(k)?;
    let l = head.len;
    let n = l + 1;

    let u_prime = head.positional_encoding();
    let q = sentinel_matmul(&u_prime, &head.w_q)?;
    let kk = sentinel_matmul(&u_prime, &head.w_k)?;
    let scale = 1.0 / (head.d_k() as f64).sqrt();
    let scores = sentinel_matmul_nt(&q, &kk)?.scale(scale);
    let z = softmax_rows(&scores)?;

    // Values: the input with the appended empty token, through W^v.
    let mut u_ext = Tensor::zeros(vec![n, 1]);
    for (i, &v) in u.iter().enumerate() {
        u_ext.set2(i, 0, v);
    }
    let values = matmul(&head.w_v, &u_ext)?;
    let out = matmul(&z, &values)?;

    let want = causal_conv_oracle(k, u)?;
    let mut max_err = 0.0f64;
    for i in 0..l {
        max_err = max_err.max((out.at2(i, 0) - want[i]).abs());
    }
    Ok(max_err)
}
