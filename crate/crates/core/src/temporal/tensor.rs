use ndarray::{Array3, ArrayD, IxDyn};

use super::TemporalError;

/// A real tensor with a name per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    axes: Vec<String>,
    values: ArrayD<f64>,
}

impl FeatureTensor {
    pub fn new(axes: &[&str], values: ArrayD<f64>) -> Result<Self, TemporalError> {
        if axes.len() != values.ndim() {
            return Err(TemporalError::Shape(format!(
                "{} axis names for a rank-{} tensor",
                axes.len(),
                values.ndim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TemporalError::NonFinite);
        }
        Ok(Self {
            axes: axes.iter().map(|s| s.to_string()).collect(),
            values,
        })
    }

    pub fn from_shape_vec(axes: &[&str], shape: &[usize], data: Vec<f64>) -> Result<Self, TemporalError> {
        let values = ArrayD::from_shape_vec(IxDyn(shape), data)
            .map_err(|e| TemporalError::Shape(e.to_string()))?;
        Self::new(axes, values)
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn to_array3(&self) -> Result<Array3<f64>, TemporalError> {
        self.values
            .clone()
            .into_dimensionality()
            .map_err(|e| TemporalError::Shape(e.to_string()))
    }
}

fn grid_side(patches: usize) -> Result<usize, TemporalError> {
    let s = (patches as f64).sqrt().round() as usize;
    if s == 0 || s * s != patches || !s.is_multiple_of(2) {
        return Err(TemporalError::Shape(format!(
            "{patches} patches do not form an even-sided square grid"
        )));
    }
    Ok(s)
}

/// Index of patch `(r, c)` of crop `n` after partitioning: `(window, slot)`.
fn window_slot(n: usize, r: usize, c: usize, side: usize) -> (usize, usize) {
    let half = side / 2;
    (n * half * half + (r / 2) * half + c / 2, (r % 2) * 2 + c % 2)
}

/// Regroups `[crops, patches, channels]` into `[windows, 4, channels]`, where each
/// window holds a 2x2 block of neighbouring patches in row-major slot order.
pub fn window_partition(f: &FeatureTensor) -> Result<FeatureTensor, TemporalError> {
    let a = f.to_array3()?;
    let (n, p, d) = a.dim();
    let side = grid_side(p)?;
    let mut out = Array3::zeros((n * p / 4, 4, d));
    for crop in 0..n {
        for r in 0..side {
            for c in 0..side {
                let (w, s) = window_slot(crop, r, c, side);
                out.slice_mut(ndarray::s![w, s, ..])
                    .assign(&a.slice(ndarray::s![crop, r * side + c, ..]));
            }
        }
    }
    FeatureTensor::new(&["windows", "slots", "channels"], out.into_dyn())
}

/// Inverse of [`window_partition`] for a known number of crops.
pub fn window_merge(w: &FeatureTensor, crops: usize) -> Result<FeatureTensor, TemporalError> {
    let a = w.to_array3()?;
    let (windows, slots, d) = a.dim();
    if slots != 4 || crops == 0 || windows % crops != 0 {
        return Err(TemporalError::Shape(format!(
            "cannot merge [{windows}, {slots}, {d}] into {crops} crops"
        )));
    }
    let p = windows / crops * 4;
    let side = grid_side(p)?;
    let mut out = Array3::zeros((crops, p, d));
    for crop in 0..crops {
        for r in 0..side {
            for c in 0..side {
                let (wi, s) = window_slot(crop, r, c, side);
                out.slice_mut(ndarray::s![crop, r * side + c, ..])
                    .assign(&a.slice(ndarray::s![wi, s, ..]));
            }
        }
    }
    FeatureTensor::new(&["crops", "patches", "channels"], out.into_dyn())
}
