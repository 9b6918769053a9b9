//! Point annotation from masks.
//!
//! For each object mask, candidate points are drawn with probability proportional to
//! their distance from the mask boundary, each candidate is turned back into a mask by
//! a segment-from-point oracle, and the candidate whose mask best matches the ground
//! truth (highest IoU) becomes the annotation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::{MaskClip, ObjectId};
use crate::distance::distance_to_boundary;
use crate::mask::{iou, BinaryMask, MaskError, PixelPoint};
use crate::seed;

/// Candidate count used when none is given.
pub const DEFAULT_CANDIDATES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotateError {
    #[error("cannot sample candidates from an empty mask")]
    EmptyMask,
    #[error("candidate count must be at least 1")]
    ZeroCandidates,
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// Maps a prompt point on a frame to an object mask.
pub trait SegmentOracle: Sync {
    fn segment(&self, frame: usize, point: PixelPoint) -> Result<BinaryMask, AnnotateError>;
}

impl<F> SegmentOracle for F
where
    F: Fn(usize, PixelPoint) -> Result<BinaryMask, AnnotateError> + Sync,
{
    fn segment(&self, frame: usize, point: PixelPoint) -> Result<BinaryMask, AnnotateError> {
        self(frame, point)
    }
}

/// Drawn candidates and the sampling weight each was drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub points: Vec<PixelPoint>,
    pub weights: Vec<f64>,
}

/// Per-pixel sampling weights over the mask's pixels (row-major), and whether the
/// uniform fallback was used because every pixel lies on the boundary.
pub fn sampling_weights(m: &BinaryMask) -> Result<(Vec<PixelPoint>, Vec<f64>, bool), AnnotateError> {
    if m.is_empty() {
        return Err(AnnotateError::EmptyMask);
    }
    let field = distance_to_boundary(m)?;
    let pixels: Vec<PixelPoint> = m.pixels().collect();
    let weights: Vec<f64> = pixels.iter().map(|&p| field.at(p)).collect();
    if weights.iter().all(|&w| w == 0.0) {
        let uniform = vec![1.0; pixels.len()];
        return Ok((pixels, uniform, true));
    }
    Ok((pixels, weights, false))
}

/// Draws `k` points with replacement, weighted by distance to the boundary.
pub fn sample_candidates<R: Rng + ?Sized>(
    m: &BinaryMask,
    k: usize,
    rng: &mut R,
) -> Result<CandidateSet, AnnotateError> {
    if k == 0 {
        return Err(AnnotateError::ZeroCandidates);
    }
    let (pixels, weights, _) = sampling_weights(m)?;
    let dist = WeightedIndex::new(&weights).expect("weights are finite with a positive sum");
    let mut points = Vec::with_capacity(k);
    let mut drawn = Vec::with_capacity(k);
    for _ in 0..k {
        let i = dist.sample(rng);
        points.push(pixels[i]);
        drawn.push(weights[i]);
    }
    Ok(CandidateSet {
        points,
        weights: drawn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub point: PixelPoint,
    pub index: usize,
    pub iou: f64,
}

/// The candidate whose oracle mask has the highest IoU with `gt`; the lowest index
/// wins ties.
pub fn select_point(
    gt: &BinaryMask,
    cands: &CandidateSet,
    oracle: &dyn SegmentOracle,
    frame: usize,
) -> Result<Selection, AnnotateError> {
    let mut best: Option<Selection> = None;
    for (index, &point) in cands.points.iter().enumerate() {
        let predicted = oracle.segment(frame, point)?;
        let score = iou(&predicted, gt)?;
        if best.is_none_or(|b| score > b.iou) {
            best = Some(Selection {
                point,
                index,
                iou: score,
            });
        }
    }
    best.ok_or(AnnotateError::ZeroCandidates)
}

/// A point annotation in percent-of-frame coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAnnotation {
    pub video: String,
    pub frame: usize,
    pub object: ObjectId,
    pub x: f64,
    pub y: f64,
}

/// Pixel centre in percent of width/height.
pub fn pixel_to_percent(p: PixelPoint, width: usize, height: usize) -> (f64, f64) {
    (
        100.0 * (p.x as f64 + 0.5) / width as f64,
        100.0 * (p.y as f64 + 0.5) / height as f64,
    )
}

/// Inverse of [`pixel_to_percent`], clamped into the frame.
pub fn percent_to_pixel(x: f64, y: f64, width: usize, height: usize) -> PixelPoint {
    let axis = |v: f64, n: usize| -> usize {
        let c = (v / 100.0 * n as f64).floor();
        if c.is_nan() || c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    };
    PixelPoint::new(axis(x, width), axis(y, height))
}

/// Rounds to two decimals, the precision of annotation files.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFailure {
    pub frame: usize,
    pub object: ObjectId,
    pub error: AnnotateError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationOutcome {
    pub annotations: Vec<PointAnnotation>,
    pub failures: Vec<AnnotationFailure>,
}

/// Annotates every (frame, object) with a nonempty mask. Each task draws from its own
/// stream derived from `seed`, frame and object, so the output does not depend on the
/// order tasks run in. Failures are collected rather than aborting the clip.
pub fn annotate_clip(
    gt: &MaskClip,
    video: &str,
    k: usize,
    oracle: &dyn SegmentOracle,
    seed: u64,
) -> AnnotationOutcome {
    let mut out = AnnotationOutcome::default();
    for frame in 0..gt.frame_count() {
        for track in gt.tracks() {
            let m = &track.masks[frame];
            if m.is_empty() {
                continue;
            }
            let mut rng = seed::task_rng(seed, &[frame as u64, track.id as u64]);
            let picked = sample_candidates(m, k, &mut rng)
                .and_then(|c| select_point(m, &c, oracle, frame));
            match picked {
                Ok(sel) => {
                    let (x, y) = pixel_to_percent(sel.point, gt.width(), gt.height());
                    out.annotations.push(PointAnnotation {
                        video: video.to_owned(),
                        frame,
                        object: track.id,
                        x: round2(x),
                        y: round2(y),
                    });
                }
                Err(error) => out.failures.push(AnnotationFailure {
                    frame,
                    object: track.id,
                    error,
                }),
            }
        }
    }
    out
}
