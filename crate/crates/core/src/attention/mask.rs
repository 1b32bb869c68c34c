//! Causal distance matrices and exponentially-decaying (ELD) masks.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{LasError, Result};
use crate::tensor::{Scalar, Tensor};

/// D[i][j] = i - j for i >= j, 0 above the diagonal (distance matrix
/// multiplied by the causal mask).
pub fn build_distance_matrix<T: Scalar>(len: usize) -> Result<Tensor<T>> {
    if len == 0 {
        return Err(LasError::Parameter(
            "sequence length must be positive".into(),
        ));
    }
    Ok(Tensor::from_fn2(len, len, |i, j| {
        if i >= j {
            T::from_f64((i - j) as f64)
        } else {
            T::zero()
        }
    }))
}

/// Per-head decay mask exp(-alpha * D_L).
///
/// Toeplitz by construction: entries depend only on i - j. The diagonal
/// is exactly 1 and entries are non-increasing in the distance when
/// alpha > 0. Above the diagonal D_L is 0, so entries there are 1; they
/// are inert because every consumer applies the causal -inf mask (or
/// multiplies probabilities that are already 0) at those positions.
#[derive(Debug)]
pub struct EldMask<T: Scalar> {
    alpha: f64,
    len: usize,
    matrix: OnceLock<Tensor<T>>,
}

/// Construct the mask descriptor; the L x L matrix materializes lazily.
pub fn build_eld_mask<T: Scalar>(alpha: f64, len: usize) -> Result<EldMask<T>> {
    if !(alpha >= 0.0) {
        return Err(LasError::Parameter(format!(
            "decay rate must be nonnegative, got {alpha}"
        )));
    }
    if len == 0 {
        return Err(LasError::Parameter(
            "sequence length must be positive".into(),
        ));
    }
    Ok(EldMask {
        alpha,
        len,
        matrix: OnceLock::new(),
    })
}

impl<T: Scalar> EldMask<T> {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entry (i, j) without materializing the matrix.
    pub fn entry(&self, i: usize, j: usize) -> T {
        if i >= j {
            T::from_f64((-self.alpha * (i - j) as f64).exp())
        } else {
            T::one()
        }
    }

    /// The dense L x L matrix, built on first use.
    pub fn matrix(&self) -> &Tensor<T> {
        self.matrix
            .get_or_init(|| Tensor::from_fn2(self.len, self.len, |i, j| self.entry(i, j)))
    }

    /// First-column decay profile exp(-alpha * d), d = 0..L-1. A Toeplitz
    /// matrix is fully described by it; handy for plotting.
    pub fn decay_profile(&self) -> Vec<T> {
        (0..self.len).map(|d| self.entry(d, 0)).collect()
    }
}

/// Shared cache of ELD and distance matrices keyed by (alpha, length).
///
/// Masks are input-independent, so benchmark and training paths build
/// them here once and keep allocation out of timed/hot regions. Values
/// are deterministic functions of the key, so concurrent builders racing
/// on the same key produce identical tensors.
#[derive(Debug, Default)]
pub struct MaskCache<T: Scalar> {
    eld: RwLock<HashMap<(u64, usize), Arc<Tensor<T>>>>,
    dist: RwLock<HashMap<usize, Arc<Tensor<T>>>>,
}

impl<T: Scalar> MaskCache<T> {
    pub fn new() -> Self {
        Self {
            eld: RwLock::new(HashMap::new()),
            dist: RwLock::new(HashMap::new()),
        }
    }

    pub fn eld(&self, alpha: f64, len: usize) -> Result<Arc<Tensor<T>>> {
        let key = (alpha.to_bits(), len);
        if let Some(m) = self.eld.read().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let mask = build_eld_mask::<T>(alpha, len)?;
        let m = Arc::new(mask.matrix().clone());
        self.eld.write().unwrap().entry(key).or_insert_with(|| m.clone());
        Ok(m)
    }

    pub fn distance(&self, len: usize) -> Result<Arc<Tensor<T>>> {
        if let Some(m) = self.dist.read().unwrap().get(&len) {
            return Ok(m.clone());
        }
        let m = Arc::new(build_distance_matrix::<T>(len)?);
        self.dist.write().unwrap().entry(len).or_insert_with(|| m.clone());
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_matrix_matches_displayed_form() {
        let d = build_distance_matrix::<f64>(3).unwrap();
        assert_eq!(
            d.data(),
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0]
        );
    }

    #[test]
    fn distance_matrix_single_token_and_corner() {
        let d = build_distance_matrix::<f64>(1).unwrap();
        assert_eq!(d.data(), &[0.0]);
        let d = build_distance_matrix::<f64>(4).unwrap();
        assert_eq!(d.at2(3, 0), 3.0);
    }

    #[test]
    fn distance_matrix_rejects_zero_length() {
        assert!(matches!(
            build_distance_matrix::<f64>(0).unwrap_err(),
            LasError::Parameter(_)
        ));
    }

    #[test]
    fn eld_alpha_zero_is_all_ones_lower_triangle() {
        let m = build_eld_mask::<f64>(0.0, 3).unwrap();
        let mat = m.matrix();
        for i in 0..3 {
            for j in 0..=i {
                assert_eq!(mat.at2(i, j), 1.0);
            }
        }
    }

    #[test]
    fn eld_ln2_first_column_halves() {
        let m = build_eld_mask::<f64>(2.0f64.ln(), 4).unwrap();
        let mat = m.matrix();
        let col: Vec<f64> = (0..4).map(|i| mat.at2(i, 0)).collect();
        for (d, v) in col.iter().enumerate() {
            assert!((v - 0.5f64.powi(d as i32)).abs() < 1e-15, "d={d} v={v}");
        }
    }

    #[test]
    fn eld_rejects_negative_alpha() {
        assert!(matches!(
            build_eld_mask::<f64>(-0.1, 4).unwrap_err(),
            LasError::Parameter(_)
        ));
        assert!(matches!(
            build_eld_mask::<f64>(f64::NAN, 4).unwrap_err(),
            LasError::Parameter(_)
        ));
    }

    #[test]
    fn eld_toeplitz_and_monotone_over_random_alphas() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.0..5.0);
            let l = rng.gen_range(2..12);
            let m = build_eld_mask::<f64>(alpha, l).unwrap();
            let mat = m.matrix();
            for i in 0..l {
                assert_eq!(mat.at2(i, i), 1.0);
                for j in 0..=i {
                    // Toeplitz: depends only on i - j.
                    assert_eq!(mat.at2(i, j), m.entry(i - j, 0));
                    if j > 0 {
                        // Non-increasing with distance.
                        assert!(mat.at2(i, j) >= mat.at2(i, j - 1));
                    }
                }
            }
        }
    }

    #[test]
    fn cache_returns_shared_matrices() {
        let cache = MaskCache::<f64>::new();
        let a = cache.eld(0.5, 6).unwrap();
        let b = cache.eld(0.5, 6).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.shape(), &[6, 6]);
        let d = cache.distance(6).unwrap();
        assert_eq!(d.at2(5, 0), 5.0);
    }
}
