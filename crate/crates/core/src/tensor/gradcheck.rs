//! Central finite-difference gradient oracle.
//!
//! Verification runs at 64-bit only; the checks are meaningless at f32
//! tolerances. The oracle projects the op output onto a fixed random
//! cotangent, compares the analytic vector-Jacobian product against
//! central differences of the projected scalar, and reports the worst
//! relative error over every input parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{apply, Op};
use super::Tensor;
use crate::error::{LasError, Result};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Floor inside the relative-error denominator.
const REL_FLOOR: f64 = 1e-8;

fn cotangent(shape: &[usize]) -> Tensor<f64> {
    // Fixed seed: the projection must be reproducible across runs.
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a5_a77);
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.25..1.25);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("cotangent shape")
}

fn projected(output: &Tensor<f64>, w: &Tensor<f64>) -> Result<f64> {
    let s: f64 = output
        .data()
        .iter()
        .zip(w.data())
        .map(|(&y, &c)| y * c)
        .sum();
    if !s.is_finite() {
        return Err(LasError::Numeric(
            "non-finite intermediate in finite-difference check".into(),
        ));
    }
    Ok(s)
}

/// Check an arbitrary forward/VJP pair against central differences.
///
/// `forward` maps the inputs to one output tensor; `vjp` maps (inputs,
/// cotangent) to per-input gradients. Returns the max over parameters of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
pub fn finite_diff_check_fn<F, B>(
    forward: F,
    vjp: B,
    inputs: &[Tensor<f64>],
    h: f64,
) -> Result<f64>
where
    F: Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>,
    B: Fn(&[Tensor<f64>], &Tensor<f64>) -> Result<Vec<Tensor<f64>>>,
{
    if h <= 0.0 {
        return Err(LasError::Parameter(format!("step must be positive: {h}")));
    }
    let y0 = forward(inputs)?;
    if !y0.all_finite() {
        return Err(LasError::Numeric(
            "non-finite intermediate in finite-difference check".into(),
        ));
    }
    let w = cotangent(y0.shape());
    let analytic = vjp(inputs, &w)?;
    if analytic.len() != inputs.len() {
        return Err(LasError::Dimension(format!(
            "vjp returned {} gradients for {} inputs",
            analytic.len(),
            inputs.len()
        )));
    }

    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut max_rel = 0.0f64;
    for t in 0..inputs.len() {
        for i in 0..inputs[t].len() {
            let orig = inputs[t].data()[i];
            if !orig.is_finite() {
                // -inf mask sentinels are constants, not parameters.
                continue;
            }
            work[t].data_mut()[i] = orig + h;
            let plus = projected(&forward(&work)?, &w)?;
            work[t].data_mut()[i] = orig - h;
            let minus = projected(&forward(&work)?, &w)?;
            work[t].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[t].data()[i];
            if !a.is_finite() || !numeric.is_finite() {
                return Err(LasError::Numeric(
                    "non-finite intermediate in finite-difference check".into(),
                ));
            }
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}

/// Finite-difference check for a registered [`Op`].
pub fn finite_diff_check(op: &Op, inputs: &[Tensor<f64>], h: f64) -> Result<f64> {
    finite_diff_check_fn(
        |xs| apply(op, xs).map(|r| r.output),
        |xs, w| apply(op, xs)?.backward(w),
        inputs,
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor<f64> {
        Tensor::from_fn2(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn matmul_oracle_self_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = rand_mat(&mut rng, 3, 3);
        let b = rand_mat(&mut rng, 3, 3);
        let err = finite_diff_check(&Op::Matmul, &[a, b], DEFAULT_STEP).unwrap();
        assert!(err < 1e-6, "matmul rel err {err}");
    }

    #[test]
    fn spec_sized_matmul_below_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = rand_mat(&mut rng, 5, 4);
        let b = rand_mat(&mut rng, 4, 3);
        let err = finite_diff_check(&Op::Matmul, &[a, b], DEFAULT_STEP).unwrap();
        assert!(err < 1e-4, "matmul rel err {err}");
    }

    #[test]
    fn softmax_jvp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = rand_mat(&mut rng, 4, 4);
        let err = finite_diff_check(&Op::SoftmaxRows, &[s], DEFAULT_STEP).unwrap();
        assert!(err < 1e-4, "softmax rel err {err}");
    }

    #[test]
    fn every_op_passes_on_twenty_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for trial in 0..20 {
            let r = rng.gen_range(2..6);
            let c = rng.gen_range(2..6);
            let x = rand_mat(&mut rng, r, c);
            let y = rand_mat(&mut rng, r, c);
            let checks: Vec<(Op, Vec<Tensor<f64>>)> = vec![
                (Op::Matmul, vec![rand_mat(&mut rng, r, c), rand_mat(&mut rng, c, r)]),
                (Op::SoftmaxRows, vec![x.clone()]),
                (Op::AvgPoolRows { window: 3 }, vec![x.clone()]),
                (Op::Add, vec![x.clone(), y.clone()]),
                (Op::ElemMul, vec![x.clone(), y.clone()]),
                (
                    Op::LayerNorm,
                    vec![
                        x.clone(),
                        Tensor::new(vec![c], (0..c).map(|j| 0.5 + 0.1 * j as f64).collect())
                            .unwrap(),
                        Tensor::new(vec![c], (0..c).map(|j| -0.2 + 0.05 * j as f64).collect())
                            .unwrap(),
                    ],
                ),
                (
                    Op::CrossEntropy { label: c - 1 },
                    vec![Tensor::new(vec![c], x.row(0).to_vec()).unwrap()],
                ),
            ];
            for (op, inputs) in checks {
                let err = finite_diff_check(&op, &inputs, DEFAULT_STEP).unwrap();
                assert!(err < 1e-4, "trial {trial} op {} rel err {err}", op.name());
            }
            // relu away from the kink so the subgradient is well-defined
            let xr = x.map(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
            let err = finite_diff_check(&Op::Relu, &[xr], DEFAULT_STEP).unwrap();
            assert!(err < 1e-4, "trial {trial} relu rel err {err}");
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        let x = Tensor::<f64>::zeros(vec![2, 2]);
        assert!(finite_diff_check(&Op::SoftmaxRows, &[x], 0.0).is_err());
    }
}
