//! Deterministic moving-shape clips with exact masks, plus reference propagators and a
//! flood-fill segmenter that stand in for learned models in tests and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::{pixel_to_percent, round2, AnnotateError, PointAnnotation, SegmentOracle};
use crate::clip::{ClipError, MaskClip, ObjectId};
use crate::distance::distance_to_boundary;
use crate::fusion::{FusionError, Propagator};
use crate::mask::{flood_fill, iou, BinaryMask, LabelFrame, MaskError, PixelPoint};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("scene needs nonzero width, height and frame count")]
    EmptyScene,
    #[error("object {index}: size must be positive and finite, got {size:?}")]
    ZeroSize { index: usize, size: [f64; 2] },
    #[error("object {index}: size {size:?} does not fit a {width}x{height} frame")]
    TooLarge { index: usize, size: [f64; 2], width: usize, height: usize },
    #[error("object {index}: non-finite position or velocity")]
    NonFinite { index: usize },
    #[error("at most 255 objects per scene, got {0}")]
    TooManyObjects(usize),
    #[error("noise: jitter must be finite and >= 0 and dropout in [0, 1]")]
    Noise,
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Clip(#[from] ClipError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Ellipse,
    Rectangle,
}

/// One moving object. `start` is the centre at frame 0 and `size` the full extent, both
/// in pixels; pixel `(x, y)` sits at coordinate `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub start: [f64; 2],
    pub velocity: [f64; 2],
    pub size: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub dropout: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.jitter.is_finite() && self.jitter >= 0.0 && (0.0..=1.0).contains(&self.dropout)) {
            return Err(SynthError::Noise);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 || self.frame_count == 0 {
            return Err(SynthError::EmptyScene);
        }
        if self.objects.len() > 255 {
            return Err(SynthError::TooManyObjects(self.objects.len()));
        }
        self.noise.validate()?;
        for (index, o) in self.objects.iter().enumerate() {
            let [w, h] = o.size;
            if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
                return Err(SynthError::ZeroSize { index, size: o.size });
            }
            if w > self.width as f64 || h > self.height as f64 {
                return Err(SynthError::TooLarge {
                    index,
                    size: o.size,
                    width: self.width,
                    height: self.height,
                });
            }
            if !o.start.iter().chain(&o.velocity).all(|v| v.is_finite()) {
                return Err(SynthError::NonFinite { index });
            }
        }
        Ok(())
    }
}

/// Folds `x` into `[lo, hi]` by mirror reflection at both ends.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let m = (x - lo).rem_euclid(2.0 * span);
    lo + if m > span { 2.0 * span - m } else { m }
}

/// Centre of `o` at `frame`: linear motion bouncing off the frame edges so the
/// object's extent stays inside `[0, width - 1] x [0, height - 1]`.
pub fn centre_at(o: &ObjectSpec, frame: usize, width: usize, height: usize) -> [f64; 2] {
    let t = frame as f64;
    let axis = |start: f64, v: f64, size: f64, n: usize| {
        let half = size / 2.0;
        reflect(start + v * t, half.min((n - 1) as f64 / 2.0), ((n - 1) as f64 - half).max((n - 1) as f64 / 2.0))
    };
    [
        axis(o.start[0], o.velocity[0], o.size[0], width),
        axis(o.start[1], o.velocity[1], o.size[1], height),
    ]
}

fn covers(o: &ObjectSpec, c: [f64; 2], x: usize, y: usize) -> bool {
    let dx = x as f64 - c[0];
    let dy = y as f64 - c[1];
    let (hw, hh) = (o.size[0] / 2.0, o.size[1] / 2.0);
    match o.shape {
        Shape::Rectangle => dx.abs() <= hw && dy.abs() <= hh,
        Shape::Ellipse => (dx / hw).powi(2) + (dy / hh).powi(2) <= 1.0,
    }
}

/// A generated clip: indexed frames, per-object masks, one reference point per
/// visible (frame, object) and the number of objects that appear.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub name: String,
    pub seed: u64,
    pub config: SceneConfig,
    pub labels: Vec<LabelFrame>,
    pub gt: MaskClip,
    pub points: Vec<PointAnnotation>,
    pub count: u32,
}

impl SynthClip {
    pub fn rename(&mut self, name: &str) {
        self.name = name.to_owned();
        for p in &mut self.points {
            p.video = name.to_owned();
        }
    }

    pub fn exact_propagator(&self) -> ExactPropagator<'_> {
        ExactPropagator::new(&self.gt)
    }

    pub fn noisy_propagator(&self, jitter: f64, dropout: f64, seed: u64) -> NoisyPropagator<'_> {
        NoisyPropagator::new(&self.gt, jitter, dropout, seed)
    }

    pub fn segment_oracle(&self) -> LabelOracle<'_> {
        LabelOracle::new(&self.labels)
    }
}

/// The pixel deepest inside `m` (first in row-major order on ties).
pub fn deepest_pixel(m: &BinaryMask) -> Result<PixelPoint, MaskError> {
    let d = distance_to_boundary(m)?;
    let mut best = (PixelPoint::new(0, 0), f64::NEG_INFINITY);
    for p in m.pixels() {
        let v = d.at(p);
        if v > best.1 {
            best = (p, v);
        }
    }
    Ok(best.0)
}

/// Renders `cfg`. Object `i` gets id `i + 1`; where objects overlap, the earlier one
/// keeps the pixel, so masks are disjoint. `seed` is recorded for downstream noise.
pub fn gen_scene(cfg: &SceneConfig, seed: u64) -> Result<SynthClip, SynthError> {
    cfg.validate()?;
    let (w, h) = (cfg.width, cfg.height);
    let mut labels = Vec::with_capacity(cfg.frame_count);
    for f in 0..cfg.frame_count {
        let mut frame = LabelFrame::blank(w, h)?;
        for (i, o) in cfg.objects.iter().enumerate().rev() {
            let c = centre_at(o, f, w, h);
            let x0 = (c[0] - o.size[0] / 2.0).floor().max(0.0) as usize;
            let y0 = (c[1] - o.size[1] / 2.0).floor().max(0.0) as usize;
            let x1 = ((c[0] + o.size[0] / 2.0).ceil() as usize).min(w - 1);
            let y1 = ((c[1] + o.size[1] / 2.0).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if covers(o, c, x, y) {
                        frame.set(x, y, (i + 1) as u8);
                    }
                }
            }
        }
        labels.push(frame);
    }
    let roster: Vec<ObjectId> = (1..=cfg.objects.len() as u8).collect();
    let gt = MaskClip::from_label_frames(&labels, &roster)?;
    let name = "scene".to_owned();
    let mut points = Vec::new();
    for f in 0..cfg.frame_count {
        for t in gt.tracks() {
            let m = &t.masks[f];
            if m.is_empty() {
                continue;
            }
            let (x, y) = pixel_to_percent(deepest_pixel(m)?, w, h);
            points.push(PointAnnotation {
                video: name.clone(),
                frame: f,
                object: t.id,
                x: round2(x),
                y: round2(y),
            });
        }
    }
    let count = gt.present_count() as u32;
    Ok(SynthClip {
        name,
        seed,
        config: cfg.clone(),
        labels,
        gt,
        points,
        count,
    })
}

/// Draws a scene with `object_count` objects whose frame-0 bounding boxes do not
/// touch (best effort: after many rejected placements an overlapping one is kept, and
/// rendering order resolves it).
pub fn random_scene(
    width: usize,
    height: usize,
    frame_count: usize,
    object_count: usize,
    noise: NoiseConfig,
    seed: u64,
) -> SceneConfig {
    let mut rng = seed::task_rng(seed, &[0x5CE4E]);
    let short = width.min(height) as f64;
    let max_size = (short / ((object_count as f64).sqrt() + 1.0)).clamp(3.0, short);
    let min_size = (max_size / 2.0).max(2.0).min(max_size);
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(object_count);
    for _ in 0..object_count {
        let mut candidate = None;
        for _ in 0..1000 {
            let size = [rng.random_range(min_size..=max_size), rng.random_range(min_size..=max_size)];
            let start = [
                rng.random_range(size[0] / 2.0..=(width as f64 - 1.0 - size[0] / 2.0).max(size[0] / 2.0)),
                rng.random_range(size[1] / 2.0..=(height as f64 - 1.0 - size[1] / 2.0).max(size[1] / 2.0)),
            ];
            let o = ObjectSpec {
                shape: if rng.random_bool(0.5) { Shape::Ellipse } else { Shape::Rectangle },
                start,
                velocity: [rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5)],
                size,
            };
            let clear = objects.iter().all(|p| {
                (p.start[0] - o.start[0]).abs() > (p.size[0] + o.size[0]) / 2.0 + 1.0
                    || (p.start[1] - o.start[1]).abs() > (p.size[1] + o.size[1]) / 2.0 + 1.0
            });
            candidate = Some(o);
            if clear {
                break;
            }
        }
        objects.push(candidate.expect("at least one placement attempt"));
    }
    SceneConfig {
        width,
        height,
        frame_count,
        objects,
        noise,
    }
}

fn default_min_objects() -> usize {
    2
}

fn default_max_objects() -> usize {
    13
}

/// A set of random clips sharing frame geometry. Clip `i` has `object_counts[i]`
/// objects when given, otherwise a count drawn from `[min_objects, max_objects]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub clips: usize,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    #[serde(default)]
    pub object_counts: Option<Vec<usize>>,
    #[serde(default = "default_min_objects")]
    pub min_objects: usize,
    #[serde(default = "default_max_objects")]
    pub max_objects: usize,
    #[serde(default)]
    pub noise: NoiseConfig,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("suite needs at least one clip")]
    NoClips,
    #[error("{counts} object counts for {clips} clips")]
    CountLength { counts: usize, clips: usize },
    #[error("object range [{0}, {1}] is empty or exceeds 255")]
    Range(usize, usize),
    #[error("clip {index}: {source}")]
    Scene { index: usize, source: SynthError },
}

impl SuiteSpec {
    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.clips == 0 {
            return Err(SuiteError::NoClips);
        }
        if let Some(c) = &self.object_counts {
            if c.len() != self.clips {
                return Err(SuiteError::CountLength { counts: c.len(), clips: self.clips });
            }
        } else if self.min_objects > self.max_objects || self.max_objects > 255 {
            return Err(SuiteError::Range(self.min_objects, self.max_objects));
        }
        Ok(())
    }
}

/// Name of clip `i` within a suite.
pub fn suite_clip_name(i: usize) -> String {
    format!("clip_{i:03}")
}

/// Generates every clip of a suite; clip `i` uses the seed `derive(seed, [i])`.
pub fn gen_suite(spec: &SuiteSpec, seed: u64) -> Result<Vec<SynthClip>, SuiteError> {
    spec.validate()?;
    (0..spec.clips)
        .map(|i| {
            let clip_seed = seed::derive(seed, &[i as u64]);
            let count = match &spec.object_counts {
                Some(c) => c[i],
                None => seed::task_rng(clip_seed, &[0xC0])
                    .random_range(spec.min_objects..=spec.max_objects),
            };
            let scene = random_scene(spec.width, spec.height, spec.frame_count, count, spec.noise, clip_seed);
            let mut clip = gen_scene(&scene, clip_seed).map_err(|source| SuiteError::Scene { index: i, source })?;
            clip.rename(&suite_clip_name(i));
            Ok(clip)
        })
        .collect()
}

fn identify(gt: &MaskClip, frame: usize, source: &BinaryMask) -> Result<Option<ObjectId>, FusionError> {
    if frame >= gt.frame_count() {
        return Err(FusionError::Propagation(format!("frame {frame} out of range")));
    }
    let mut best: Option<(ObjectId, f64)> = None;
    for t in gt.tracks() {
        let v = iou(&t.masks[frame], source)?;
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((t.id, v));
        }
    }
    Ok(best.map(|(id, _)| id))
}

/// Returns the ground-truth mask, at the target frame, of whichever object best
/// overlaps the source mask; empty when nothing overlaps.
#[derive(Debug, Clone, Copy)]
pub struct ExactPropagator<'a> {
    gt: &'a MaskClip,
}

impl<'a> ExactPropagator<'a> {
    pub fn new(gt: &'a MaskClip) -> Self {
        Self { gt }
    }
}

impl Propagator for ExactPropagator<'_> {
    fn propagate(
        &self,
        _object: ObjectId,
        source_frame: usize,
        source: &BinaryMask,
        target_frame: usize,
    ) -> Result<BinaryMask, FusionError> {
        if target_frame >= self.gt.frame_count() {
            return Err(FusionError::Propagation(format!("frame {target_frame} out of range")));
        }
        match identify(self.gt, source_frame, source)? {
            Some(id) => Ok(self.gt.mask(id, target_frame).expect("roster member").clone()),
            None => Ok(BinaryMask::empty(self.gt.width(), self.gt.height())?),
        }
    }
}

/// The exact result shifted by a random integer offset with standard deviation
/// `jitter * sqrt(|target - source|)` per axis (clamped so the mask stays inside the
/// frame), and dropped to empty with a per-direction probability.
#[derive(Debug, Clone, Copy)]
pub struct NoisyPropagator<'a> {
    exact: ExactPropagator<'a>,
    jitter: f64,
    forward_dropout: f64,
    backward_dropout: f64,
    seed: u64,
}

impl<'a> NoisyPropagator<'a> {
    pub fn new(gt: &'a MaskClip, jitter: f64, dropout: f64, seed: u64) -> Self {
        Self {
            exact: ExactPropagator::new(gt),
            jitter,
            forward_dropout: dropout,
            backward_dropout: dropout,
            seed,
        }
    }

    /// Separate dropout for forward (`target > source`) and backward propagation.
    pub fn with_dropout(mut self, forward: f64, backward: f64) -> Self {
        self.forward_dropout = forward;
        self.backward_dropout = backward;
        self
    }
}

fn jitter_offset(n: f64, lo: i64, hi: i64) -> i64 {
    (n.round() as i64).clamp(lo, hi)
}

impl Propagator for NoisyPropagator<'_> {
    fn propagate(
        &self,
        object: ObjectId,
        source_frame: usize,
        source: &BinaryMask,
        target_frame: usize,
    ) -> Result<BinaryMask, FusionError> {
        let exact = self.exact.propagate(object, source_frame, source, target_frame)?;
        let distance = source_frame.abs_diff(target_frame);
        if distance == 0 {
            return Ok(exact);
        }
        let mut rng = seed::task_rng(
            self.seed,
            &[object as u64, source_frame as u64, target_frame as u64],
        );
        let dropout = if target_frame > source_frame {
            self.forward_dropout
        } else {
            self.backward_dropout
        };
        let u: f64 = rng.random();
        if u < dropout {
            return Ok(BinaryMask::empty(exact.width(), exact.height())?);
        }
        let Some((x0, y0, x1, y1)) = exact.bounding_box() else {
            return Ok(exact);
        };
        if self.jitter == 0.0 {
            return Ok(exact);
        }
        let normal = Normal::new(0.0, self.jitter * (distance as f64).sqrt())
            .map_err(|e| FusionError::Propagation(e.to_string()))?;
        let dx = jitter_offset(normal.sample(&mut rng), -(x0 as i64), (exact.width() - 1 - x1) as i64);
        let dy = jitter_offset(normal.sample(&mut rng), -(y0 as i64), (exact.height() - 1 - y1) as i64);
        Ok(exact.translate(dx, dy))
    }
}

/// Segments a point by flood-filling the label frame under it.
#[derive(Debug, Clone, Copy)]
pub struct LabelOracle<'a> {
    frames: &'a [LabelFrame],
}

impl<'a> LabelOracle<'a> {
    pub fn new(frames: &'a [LabelFrame]) -> Self {
        Self { frames }
    }
}

impl SegmentOracle for LabelOracle<'_> {
    fn segment(&self, frame: usize, point: PixelPoint) -> Result<BinaryMask, AnnotateError> {
        let labels = self
            .frames
            .get(frame)
            .ok_or_else(|| AnnotateError::Oracle(format!("frame {frame} out of range")))?;
        Ok(flood_fill(labels, point)?)
    }
}
