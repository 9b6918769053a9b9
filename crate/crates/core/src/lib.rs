//! Point-supervised video object segmentation toolkit: binary masks and metrics,
//! simulated point annotation, bidirectional keyframe fusion, temporal
//! cross-attention, and synthetic clip generation.

pub mod annotator;
pub mod benchmark;
pub mod clip;
pub mod distance;
pub mod fusion;
pub mod mask;
pub mod metrics;
pub mod pgm;
pub mod report;
pub mod rle;
pub mod seed;
pub mod store;
pub mod synth;
pub mod temporal;

pub use clip::{MaskClip, ObjectId, ObjectTrack};
pub use mask::{BinaryMask, LabelFrame, MaskError, PixelPoint};
