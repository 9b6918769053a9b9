use std::collections::VecDeque;

use ndarray::Array3;

use super::TemporalError;

pub const DEFAULT_CONTEXT_LEN: usize = 4;

/// The most recent `capacity` frames of window features, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBuffer {
    capacity: usize,
    frames: VecDeque<Array3<f64>>,
}

impl ContextBuffer {
    pub fn new(capacity: usize) -> Result<Self, TemporalError> {
        if capacity == 0 {
            return Err(TemporalError::Shape("context length must be at least 1".into()));
        }
        Ok(Self {
            capacity,
            frames: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, frame: Array3<f64>) -> Result<(), TemporalError> {
        if let Some(first) = self.frames.front() {
            if first.dim() != frame.dim() {
                return Err(TemporalError::Shape(format!(
                    "context frame {:?} does not match {:?}",
                    frame.dim(),
                    first.dim()
                )));
            }
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    /// Element-wise mean of the stored frames.
    pub fn mean(&self) -> Result<Array3<f64>, TemporalError> {
        let first = self.frames.front().ok_or(TemporalError::EmptyContext)?;
        let mut acc = Array3::zeros(first.dim());
        for f in &self.frames {
            acc += f;
        }
        Ok(acc / self.frames.len() as f64)
    }

    /// Context for `current`: the stored mean, or `current` itself before any frame
    /// has been pushed.
    pub fn context_for(&self, current: &Array3<f64>) -> Result<Array3<f64>, TemporalError> {
        if self.is_empty() {
            Ok(current.clone())
        } else {
            self.mean()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> Array3<f64> {
        Array3::from_elem((2, 4, 3), v)
    }

    #[test]
    fn mean_cases() {
        let mut b = ContextBuffer::new(1).unwrap();
        assert_eq!(b.mean(), Err(TemporalError::EmptyContext));
        b.push(constant(5.0)).unwrap();
        b.push(constant(7.0)).unwrap();
        assert_eq!(b.mean().unwrap(), constant(7.0));

        let mut b = ContextBuffer::new(4).unwrap();
        b.push(constant(1.0)).unwrap();
        b.push(constant(3.0)).unwrap();
        assert_eq!(b.mean().unwrap(), constant(2.0));
    }

    #[test]
    fn capacity_is_respected() {
        let mut b = ContextBuffer::new(2).unwrap();
        for v in [1.0, 2.0, 3.0] {
            b.push(constant(v)).unwrap();
        }
        assert_eq!(b.len(), 2);
        assert_eq!(b.mean().unwrap(), constant(2.5));
        assert!(b.push(Array3::zeros((1, 4, 3))).is_err());
        assert!(ContextBuffer::new(0).is_err());
    }

    #[test]
    fn first_frame_is_its_own_context() {
        let b = ContextBuffer::new(3).unwrap();
        assert_eq!(b.context_for(&constant(4.0)).unwrap(), constant(4.0));
    }
}
