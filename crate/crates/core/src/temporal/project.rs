use ndarray::{Array1, Array2};

use super::{check_finite, TemporalError};

/// Affine token map `y = x W + b`, `W` of shape `[D, D_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Projection {
    pub fn zeros(dim: usize, out: usize) -> Self {
        Self {
            weight: Array2::zeros((dim, out)),
            bias: Array1::zeros(out),
        }
    }
}

pub fn project(tokens: &Array2<f64>, p: &Projection) -> Result<Array2<f64>, TemporalError> {
    if tokens.ncols() != p.weight.nrows() || p.bias.len() != p.weight.ncols() {
        return Err(TemporalError::Shape(format!(
            "tokens {:?}, weight {:?}, bias {}",
            tokens.dim(),
            p.weight.dim(),
            p.bias.len()
        )));
    }
    check_finite(tokens.iter())?;
    Ok(tokens.dot(&p.weight) + &p.bias)
}
