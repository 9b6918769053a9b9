//! Windowed temporal cross-attention over patch features.
//!
//! Patch features of the current frame are grouped into 2x2 windows and attend to the
//! same windows of a context feature (the mean of the last few frames). The enriched
//! windows are pooled to one token each, projected, and scored with cross-entropy.
//! Every stage has a hand-written backward pass checked against finite differences.

mod attention;
mod context;
mod grad;
mod loss;
mod model;
mod pool;
mod project;
mod snapshot;
mod tensor;

use thiserror::Error;

pub use attention::{attention_weights, mhca, temporal_enrich, MhcaParams};
pub use context::{ContextBuffer, DEFAULT_CONTEXT_LEN};
pub use grad::{grad_check, GradReport, ModelObjective, Objective, ScaledGradient};
pub use loss::cross_entropy;
pub use model::{enrich_sequence, Batch, TemporalModel};
pub use pool::{attn_pool, pool_weights, PoolParams};
pub use project::{project, Projection};
pub use snapshot::{decode_tensors, encode_tensors, NamedTensor};
pub use tensor::{window_merge, window_partition, FeatureTensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("target class {target} out of range for {classes} classes")]
    Target { target: usize, classes: usize },
    #[error("context buffer is empty")]
    EmptyContext,
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// In-place softmax with max subtraction.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<(), TemporalError> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TemporalError::NonFinite)
    }
}
