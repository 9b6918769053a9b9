//! Segmentation, pointing and counting metrics.
//!
//! Region similarity `J` is mask IoU; boundary accuracy `F` is the F-measure between
//! mask boundaries under a pixel tolerance. Both are averaged over frames per object
//! and then over objects. Frames where an object is absent in both prediction and
//! ground truth score 1 on both.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::{ClipError, MaskClip};
use crate::distance::squared_distance_to_sites;
use crate::mask::{boundary_mask, iou, BinaryMask, MaskError, PixelPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("nothing to score: no objects")]
    NoObjects,
    #[error("prediction for frame {frame} but clip has {frames} frames")]
    FrameOutOfRange { frame: usize, frames: usize },
    #[error("count lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("count lists are empty")]
    EmptyCounts,
    #[error("boundary tolerance must be finite and nonnegative, got {0}")]
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegScore {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

impl SegScore {
    pub fn new(j: f64, f: f64) -> Self {
        Self { j, f, jf: (j + f) / 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub actual: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountScore {
    pub mae: f64,
    pub ema: f64,
}

/// Boundary tolerance in pixels for a `width x height` frame: 0.8% of the diagonal,
/// rounded, and never below one pixel.
pub fn boundary_tolerance(width: usize, height: usize) -> f64 {
    let diag = ((width * width + height * height) as f64).sqrt();
    (0.008 * diag).round().max(1.0)
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Boundary F-measure between two masks with a Euclidean pixel tolerance.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tol: f64) -> Result<f64, MetricsError> {
    pred.check_dims(gt)?;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(MetricsError::Tolerance(tol));
    }
    let bp = boundary_mask(pred);
    let bg = boundary_mask(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let tol_sq = tol * tol;
    let within = |from: &BinaryMask, to_field: &[Option<u64>]| -> f64 {
        let hits = from
            .pixels()
            .filter(|p| {
                to_field[p.y * from.width() + p.x].is_some_and(|d| d as f64 <= tol_sq)
            })
            .count();
        hits as f64 / from.count() as f64
    };
    let precision = within(&bp, &squared_distance_to_sites(&bg));
    let recall = within(&bg, &squared_distance_to_sites(&bp));
    Ok(f_measure(precision, recall))
}

/// Per-object `(J, F)` averaged over frames, in roster order.
pub fn per_object_scores(
    pred: &MaskClip,
    gt: &MaskClip,
    tol: f64,
) -> Result<Vec<(f64, f64)>, MetricsError> {
    pred.check_compatible(gt)?;
    let frames = gt.frame_count() as f64;
    pred.tracks()
        .iter()
        .zip(gt.tracks())
        .map(|(p, g)| {
            let mut j = 0.0;
            let mut f = 0.0;
            for (pm, gm) in p.masks.iter().zip(&g.masks) {
                j += iou(pm, gm)?;
                f += boundary_f(pm, gm, tol)?;
            }
            Ok((j / frames, f / frames))
        })
        .collect()
}

pub fn region_jaccard(pred: &MaskClip, gt: &MaskClip) -> Result<f64, MetricsError> {
    pred.check_compatible(gt)?;
    if gt.tracks().is_empty() {
        return Err(MetricsError::NoObjects);
    }
    let frames = gt.frame_count() as f64;
    let mut total = 0.0;
    for (p, g) in pred.tracks().iter().zip(gt.tracks()) {
        let mut j = 0.0;
        for (pm, gm) in p.masks.iter().zip(&g.masks) {
            j += iou(pm, gm)?;
        }
        total += j / frames;
    }
    Ok(total / gt.tracks().len() as f64)
}

/// `J`, `F` and `J&F` for one clip with the frame-size tolerance.
pub fn jf(pred: &MaskClip, gt: &MaskClip) -> Result<SegScore, MetricsError> {
    jf_pooled(&[(pred, gt)])
}

/// Pools objects across several clips, each scored with its own frame-size tolerance,
/// and averages over all objects.
pub fn jf_pooled(pairs: &[(&MaskClip, &MaskClip)]) -> Result<SegScore, MetricsError> {
    let mut j = 0.0;
    let mut f = 0.0;
    let mut n = 0usize;
    for (pred, gt) in pairs {
        let tol = boundary_tolerance(gt.width(), gt.height());
        for (oj, of) in per_object_scores(pred, gt, tol)? {
            j += oj;
            f += of;
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::NoObjects);
    }
    Ok(SegScore::new(j / n as f64, f / n as f64))
}

/// Running totals for point matching, so several clips can be pooled before the
/// ratios are taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointTally {
    pub matched: usize,
    pub predicted: usize,
    pub actual: usize,
}

impl PointTally {
    pub fn add(&mut self, other: PointTally) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.actual += other.actual;
    }

    pub fn score(&self) -> PointScore {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.matched, self.predicted);
        let recall = ratio(self.matched, self.actual);
        PointScore {
            precision,
            recall,
            f1: f_measure(precision, recall),
            matched: self.matched,
            predicted: self.predicted,
            actual: self.actual,
        }
    }
}

/// Matches predicted points to ground-truth objects frame by frame. A point matches an
/// object when it lies inside that object's mask; each object is matched at most once,
/// greedily in prediction order. `actual` counts nonempty (frame, object) pairs.
pub fn point_tally(preds: &[(usize, PixelPoint)], gt: &MaskClip) -> Result<PointTally, MetricsError> {
    let frames = gt.frame_count();
    if let Some(&(frame, _)) = preds.iter().find(|(f, _)| *f >= frames) {
        return Err(MetricsError::FrameOutOfRange { frame, frames });
    }
    let mut tally = PointTally {
        predicted: preds.len(),
        ..Default::default()
    };
    for frame in 0..frames {
        let mut taken = vec![false; gt.tracks().len()];
        tally.actual += gt
            .tracks()
            .iter()
            .filter(|t| !t.masks[frame].is_empty())
            .count();
        for (_, p) in preds.iter().filter(|(f, _)| *f == frame) {
            let hit = gt
                .tracks()
                .iter()
                .enumerate()
                .find(|(i, t)| !taken[*i] && t.masks[frame].at(*p));
            if let Some((i, _)) = hit {
                taken[i] = true;
                tally.matched += 1;
            }
        }
    }
    Ok(tally)
}

pub fn point_prf(preds: &[(usize, PixelPoint)], gt: &MaskClip) -> Result<PointScore, MetricsError> {
    Ok(point_tally(preds, gt)?.score())
}

/// Mean absolute error and exact-match accuracy (percent) of predicted counts.
pub fn counting(preds: &[u32], gts: &[u32]) -> Result<CountScore, MetricsError> {
    if preds.len() != gts.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), gts.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyCounts);
    }
    let n = preds.len() as f64;
    let abs_err: u64 = preds
        .iter()
        .zip(gts)
        .map(|(&p, &g)| p.abs_diff(g) as u64)
        .sum();
    let exact = preds.iter().zip(gts).filter(|(p, g)| p == g).count();
    Ok(CountScore {
        mae: abs_err as f64 / n,
        ema: (100 * exact) as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::ObjectTrack;

    fn px(points: &[(usize, usize)], w: usize, h: usize) -> BinaryMask {
        let p: Vec<_> = points.iter().map(|&(x, y)| PixelPoint::new(x, y)).collect();
        BinaryMask::from_points(w, h, &p).unwrap()
    }

    fn single(masks: Vec<BinaryMask>) -> MaskClip {
        let (w, h) = (masks[0].width(), masks[0].height());
        MaskClip::new(w, h, masks.len(), vec![ObjectTrack { id: 1, masks }]).unwrap()
    }

    #[test]
    fn jaccard_examples() {
        let a = BinaryMask::full(2, 2).unwrap();
        let half = px(&[(0, 0), (1, 0)], 2, 2);
        let gt = single(vec![a.clone(), a.clone()]);
        assert_eq!(region_jaccard(&gt, &gt).unwrap(), 1.0);
        let pred = single(vec![a.clone(), half]);
        assert_eq!(region_jaccard(&pred, &gt).unwrap(), 0.75);
        let none = single(vec![BinaryMask::empty(2, 2).unwrap(); 2]);
        assert_eq!(region_jaccard(&none, &gt).unwrap(), 0.0);
    }

    #[test]
    fn boundary_f_examples() {
        let sq = BinaryMask::from_fn(8, 8, |x, y| (2..5).contains(&x) && (2..5).contains(&y)).unwrap();
        assert_eq!(boundary_f(&sq, &sq, 0.0).unwrap(), 1.0);
        assert_eq!(boundary_f(&sq, &sq, 3.0).unwrap(), 1.0);

        let dot = px(&[(3, 3)], 8, 8);
        let shifted = px(&[(4, 3)], 8, 8);
        assert_eq!(boundary_f(&dot, &shifted, 1.0).unwrap(), 1.0);
        assert_eq!(boundary_f(&dot, &shifted, 0.0).unwrap(), 0.0);

        let far = px(&[(7, 7)], 8, 8);
        assert_eq!(boundary_f(&dot, &far, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn shifted_square_within_one_pixel() {
        let a = BinaryMask::from_fn(10, 10, |x, y| (2..6).contains(&x) && (2..6).contains(&y)).unwrap();
        let b = a.translate(1, 0);
        assert_eq!(boundary_f(&a, &b, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn boundary_f_empty_cases() {
        let e = BinaryMask::empty(4, 4).unwrap();
        let m = px(&[(1, 1)], 4, 4);
        assert_eq!(boundary_f(&e, &e, 1.0).unwrap(), 1.0);
        assert_eq!(boundary_f(&e, &m, 1.0).unwrap(), 0.0);
        assert_eq!(boundary_f(&m, &e, 1.0).unwrap(), 0.0);
        assert!(boundary_f(&m, &m, -1.0).is_err());
    }

    #[test]
    fn tolerance_follows_diagonal() {
        assert_eq!(boundary_tolerance(64, 64), 1.0);
        // 854x480 diagonal is ~979.7 -> 7.84 -> 8
        assert_eq!(boundary_tolerance(854, 480), 8.0);
    }

    #[test]
    fn jf_identity_and_mean() {
        let m = px(&[(1, 1), (2, 1)], 4, 4);
        let gt = single(vec![m]);
        assert_eq!(jf(&gt, &gt).unwrap(), SegScore { j: 1.0, f: 1.0, jf: 1.0 });
        assert_eq!(SegScore::new(0.6, 0.8).jf, 0.7);
    }

    #[test]
    fn point_examples() {
        let gt = single(vec![px(&[(1, 1), (2, 1)], 4, 4)]);
        let one = point_prf(&[(0, PixelPoint::new(1, 1))], &gt).unwrap();
        assert_eq!((one.precision, one.recall, one.f1), (1.0, 1.0, 1.0));

        let two = point_prf(&[(0, PixelPoint::new(3, 3)), (0, PixelPoint::new(2, 1))], &gt).unwrap();
        assert_eq!((two.precision, two.recall), (0.5, 1.0));
        assert_eq!(two.f1, 2.0 / 3.0);

        let none = point_prf(&[], &gt).unwrap();
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));

        assert!(matches!(
            point_prf(&[(1, PixelPoint::new(0, 0))], &gt),
            Err(MetricsError::FrameOutOfRange { .. })
        ));
    }

    #[test]
    fn duplicate_correct_point_does_not_add_matches() {
        let gt = single(vec![px(&[(1, 1)], 3, 3)]);
        let p = PixelPoint::new(1, 1);
        let s = point_prf(&[(0, p), (0, p)], &gt).unwrap();
        assert_eq!(s.matched, 1);
        assert_eq!(s.predicted, 2);
    }

    #[test]
    fn counting_examples() {
        assert_eq!(counting(&[4, 7], &[4, 7]).unwrap(), CountScore { mae: 0.0, ema: 100.0 });
        assert_eq!(counting(&[3, 5], &[3, 4]).unwrap(), CountScore { mae: 0.5, ema: 50.0 });
        assert_eq!(counting(&[0], &[13]).unwrap(), CountScore { mae: 13.0, ema: 0.0 });
        assert!(matches!(counting(&[1], &[1, 2]), Err(MetricsError::LengthMismatch(1, 2))));
        assert!(matches!(counting(&[], &[]), Err(MetricsError::EmptyCounts)));
    }
}
