//! Local-and-Smooth (LaS) attention laboratory.
//!
//! A self-contained CPU implementation of causal attention variants built
//! around two inductive biases for long-range sequence modeling —
//! exponentially decaying positional locality and row smoothing — plus:
//!
//! - a minimal dense tensor layer with explicit forward/backward pairs,
//!   verified against a central finite-difference oracle ([`tensor`]);
//! - every attention variant (vanilla causal, Alibi, L, S, LaS, and their
//!   block-chunked forms) with hand-written backward passes ([`attention`]);
//! - a constructive verifier that a single attention head can express an
//!   arbitrary causal convolution channel ([`ssm`]);
//! - a small causal transformer classifier, dataset generators, a
//!   deterministic trainer with sweep protocols, and forward-pass
//!   benchmarks ([`model`], [`data`], [`train`], [`bench`]).

pub mod attention;
pub mod data;
pub mod error;
pub mod model;
pub mod ssm;
pub mod tensor;

pub use error::{LasError, Result};
pub use tensor::{DType, Scalar, Tensor};
