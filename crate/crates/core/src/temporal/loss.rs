use super::{check_finite, softmax_in_place, TemporalError};

/// `-log softmax(logits)[target]`, evaluated as `logsumexp(logits) - logits[target]`
/// with the maximum subtracted first.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<f64, TemporalError> {
    if target >= logits.len() {
        return Err(TemporalError::Target {
            target,
            classes: logits.len(),
        });
    }
    check_finite(logits)?;
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[target])
}

/// Gradient of [`cross_entropy`] with respect to the logits.
pub(crate) fn cross_entropy_grad(logits: &[f64], target: usize) -> Vec<f64> {
    let mut p = logits.to_vec();
    softmax_in_place(&mut p);
    p[target] -= 1.0;
    p
}
