use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};

use super::{check_finite, softmax_in_place, TemporalError};

/// A learned query that scores the four slots of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolParams {
    pub query: Array1<f64>,
}

impl PoolParams {
    pub fn zeros(dim: usize) -> Self {
        Self { query: Array1::zeros(dim) }
    }
}

/// Softmax over `x_j . query / sqrt(D)` for the slots `x_j` of one window.
pub(crate) fn window_weights(window: ArrayView2<f64>, query: &Array1<f64>) -> Array1<f64> {
    let scale = 1.0 / (query.len() as f64).sqrt();
    let mut w = window.dot(query) * scale;
    softmax_in_place(w.as_slice_mut().expect("standard layout"));
    w
}

fn check(windows: &Array3<f64>, p: &PoolParams) -> Result<(), TemporalError> {
    let (_, slots, d) = windows.dim();
    if slots != 4 || d != p.query.len() {
        return Err(TemporalError::Shape(format!(
            "windows {:?} vs pool query of length {}",
            windows.dim(),
            p.query.len()
        )));
    }
    check_finite(windows.iter())?;
    check_finite(p.query.iter())
}

/// Pooling weights, one row of four per window.
pub fn pool_weights(windows: &Array3<f64>, p: &PoolParams) -> Result<Array2<f64>, TemporalError> {
    check(windows, p)?;
    let mut out = Array2::zeros((windows.dim().0, 4));
    for (w, mut row) in out.rows_mut().into_iter().enumerate() {
        row.assign(&window_weights(windows.index_axis(Axis(0), w), &p.query));
    }
    Ok(out)
}

/// One token per window: the slot vectors averaged under the pooling weights.
pub fn attn_pool(windows: &Array3<f64>, p: &PoolParams) -> Result<Array2<f64>, TemporalError> {
    check(windows, p)?;
    let (n, _, d) = windows.dim();
    let mut out = Array2::zeros((n, d));
    for (w, mut row) in out.rows_mut().into_iter().enumerate() {
        let x = windows.index_axis(Axis(0), w);
        row.assign(&window_weights(x, &p.query).dot(&x));
    }
    Ok(out)
}
