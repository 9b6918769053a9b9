use rayon::prelude::*;

use super::model::{Batch, TemporalModel};
use super::TemporalError;

/// A scalar function of a flat parameter vector with a claimed gradient.
pub trait Objective: Sync {
    /// Tensor names and sizes, partitioning the flat vector in order.
    fn layout(&self) -> Vec<(String, usize)>;
    fn parameters(&self) -> Vec<f64>;
    fn loss_at(&self, theta: &[f64]) -> Result<f64, TemporalError>;
    fn gradient_at(&self, theta: &[f64]) -> Result<Vec<f64>, TemporalError>;
}

/// The full enrich, pool, project and cross-entropy chain on a fixed batch.
pub struct ModelObjective<'a> {
    pub model: &'a TemporalModel,
    pub batch: &'a Batch,
}

impl ModelObjective<'_> {
    fn at(&self, theta: &[f64]) -> Result<TemporalModel, TemporalError> {
        let mut m = self.model.clone();
        m.set_flat(theta)?;
        Ok(m)
    }
}

impl Objective for ModelObjective<'_> {
    fn layout(&self) -> Vec<(String, usize)> {
        self.model
            .tensors()
            .into_iter()
            .map(|(n, _, d)| (n.to_owned(), d.len()))
            .collect()
    }

    fn parameters(&self) -> Vec<f64> {
        self.model.flatten()
    }

    fn loss_at(&self, theta: &[f64]) -> Result<f64, TemporalError> {
        self.at(theta)?.loss(self.batch)
    }

    fn gradient_at(&self, theta: &[f64]) -> Result<Vec<f64>, TemporalError> {
        Ok(self.at(theta)?.loss_and_gradient(self.batch)?.1.flatten())
    }
}

/// Reports `factor` times the wrapped gradient. Used to confirm the checker notices
/// a wrong gradient.
pub struct ScaledGradient<O> {
    pub inner: O,
    pub factor: f64,
}

impl<O: Objective> Objective for ScaledGradient<O> {
    fn layout(&self) -> Vec<(String, usize)> {
        self.inner.layout()
    }

    fn parameters(&self) -> Vec<f64> {
        self.inner.parameters()
    }

    fn loss_at(&self, theta: &[f64]) -> Result<f64, TemporalError> {
        self.inner.loss_at(theta)
    }

    fn gradient_at(&self, theta: &[f64]) -> Result<Vec<f64>, TemporalError> {
        Ok(self.inner.gradient_at(theta)?.into_iter().map(|g| g * self.factor).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    /// Largest relative error within each tensor.
    pub tensors: Vec<(String, f64)>,
    pub max_rel: f64,
}

impl GradReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel <= tolerance
    }
}

/// Compares the analytic gradient with central differences `(f(x+h) - f(x-h)) / 2h`
/// for every parameter. Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check(obj: &dyn Objective, h: f64) -> Result<GradReport, TemporalError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(TemporalError::Shape(format!("step must be positive and finite, got {h}")));
    }
    let theta = obj.parameters();
    let base = obj.loss_at(&theta)?;
    if !base.is_finite() {
        return Err(TemporalError::NonFinite);
    }
    let analytic = obj.gradient_at(&theta)?;
    if analytic.len() != theta.len() {
        return Err(TemporalError::Shape(format!(
            "gradient of length {} for {} parameters",
            analytic.len(),
            theta.len()
        )));
    }
    let errors = (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let mut t = theta.clone();
            t[i] = theta[i] + h;
            let up = obj.loss_at(&t)?;
            t[i] = theta[i] - h;
            let down = obj.loss_at(&t)?;
            if !(up.is_finite() && down.is_finite()) {
                return Err(TemporalError::NonFinite);
            }
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[i];
            Ok((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8))
        })
        .collect::<Result<Vec<f64>, TemporalError>>()?;
    let mut tensors = Vec::new();
    let mut offset = 0;
    for (name, len) in obj.layout() {
        let worst = errors[offset..offset + len].iter().copied().fold(0.0, f64::max);
        tensors.push((name, worst));
        offset += len;
    }
    let max_rel = errors.iter().copied().fold(0.0, f64::max);
    Ok(GradReport { tensors, max_rel })
}
