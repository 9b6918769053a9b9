//! Bidirectional temporal mask fusion over sparse keyframes.
//!
//! Keyframes are sampled every `k` frames. For each frame strictly between two
//! keyframes, the left keyframe mask is propagated forward and the right keyframe mask
//! backward; the two estimates are reconciled by [`fuse_pair`]: intersection when they
//! agree (IoU at least `tau`), union when they do not, and whichever one is nonempty
//! when the other propagation came back empty. Frames after the last keyframe only
//! have a left anchor and use forward propagation alone.
//!
//! The naive baselines (prefer left/right, intersection, larger, smaller) are
//! available through [`Strategy`] for ablations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::{ClipError, MaskClip, ObjectId, ObjectTrack};
use crate::mask::{intersect, iou, union, BinaryMask, MaskError};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_TAU: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("sampling rate k must be at least 1")]
    ZeroK,
    #[error("tau must lie in [0, 1], got {0}")]
    Tau(f64),
    #[error("invalid keyframes: {0}")]
    Keyframes(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("propagation failed: {0}")]
    Propagation(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Clip(#[from] ClipError),
}

/// Moves an object's mask from one frame to another. Implementations hold whatever
/// clip context they need and must be deterministic for fixed inputs.
pub trait Propagator: Sync {
    /// `source` is the object's mask at `source_frame`. Returns the estimated mask at
    /// `target_frame`; direction is the sign of `target_frame - source_frame`.
    fn propagate(
        &self,
        object: ObjectId,
        source_frame: usize,
        source: &BinaryMask,
        target_frame: usize,
    ) -> Result<BinaryMask, FusionError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Bidirectional,
    PreferLeft,
    PreferRight,
    Intersection,
    Larger,
    Smaller,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Bidirectional,
        Strategy::PreferLeft,
        Strategy::PreferRight,
        Strategy::Intersection,
        Strategy::Larger,
        Strategy::Smaller,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bidirectional => "bidirectional",
            Strategy::PreferLeft => "prefer-left",
            Strategy::PreferRight => "prefer-right",
            Strategy::Intersection => "intersection",
            Strategy::Larger => "larger",
            Strategy::Smaller => "smaller",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| FusionError::UnknownStrategy(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub k: usize,
    pub tau: f64,
    pub strategy: Strategy,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            tau: DEFAULT_TAU,
            strategy: Strategy::Bidirectional,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.k == 0 {
            return Err(FusionError::ZeroK);
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(FusionError::Tau(self.tau));
        }
        Ok(())
    }
}

/// `0, k, 2k, ...` below `frame_count`.
pub fn keyframes(frame_count: usize, k: usize) -> Vec<usize> {
    let k = k.max(1);
    (0..frame_count).step_by(k).collect()
}

/// Reconciles a forward (`left`) and backward (`right`) estimate of the same frame.
pub fn fuse_pair(left: &BinaryMask, right: &BinaryMask, tau: f64) -> Result<BinaryMask, MaskError> {
    left.check_dims(right)?;
    match (left.is_empty(), right.is_empty()) {
        (true, _) => Ok(right.clone()),
        (false, true) => Ok(left.clone()),
        (false, false) => {
            if iou(left, right)? >= tau {
                intersect(left, right)
            } else {
                union(left, right)
            }
        }
    }
}

/// Applies `strategy` to one pair of estimates. `tau` only matters for
/// [`Strategy::Bidirectional`]. Cardinality ties go to `left`.
pub fn combine(
    strategy: Strategy,
    left: &BinaryMask,
    right: &BinaryMask,
    tau: f64,
) -> Result<BinaryMask, MaskError> {
    left.check_dims(right)?;
    match strategy {
        Strategy::Bidirectional => fuse_pair(left, right, tau),
        Strategy::PreferLeft => Ok(left.clone()),
        Strategy::PreferRight => Ok(right.clone()),
        Strategy::Intersection => intersect(left, right),
        Strategy::Larger => Ok(if right.count() > left.count() { right } else { left }.clone()),
        Strategy::Smaller => Ok(if right.count() < left.count() { right } else { left }.clone()),
    }
}

/// Keyframe indices and, per object, the mask at each keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeSet {
    pub indices: Vec<usize>,
    pub tracks: Vec<ObjectTrack>,
}

impl KeyframeSet {
    /// Samples the keyframes of `clip` at rate `k`, keeping its masks there.
    pub fn sample(clip: &MaskClip, k: usize) -> Result<Self, FusionError> {
        if k == 0 {
            return Err(FusionError::ZeroK);
        }
        let indices = keyframes(clip.frame_count(), k);
        let tracks = clip
            .tracks()
            .iter()
            .map(|t| ObjectTrack {
                id: t.id,
                masks: indices.iter().map(|&i| t.masks[i].clone()).collect(),
            })
            .collect();
        Ok(Self { indices, tracks })
    }

    pub fn validate(&self, frame_count: usize, k: usize) -> Result<(), FusionError> {
        let bad = |msg: String| Err(FusionError::Keyframes(msg));
        match self.indices.first() {
            Some(0) => {}
            Some(i) => return bad(format!("first keyframe must be 0, got {i}")),
            None => return bad("no keyframes".into()),
        }
        for w in self.indices.windows(2) {
            if w[1] <= w[0] {
                return bad(format!("indices not increasing at {} -> {}", w[0], w[1]));
            }
            if w[1] - w[0] > k {
                return bad(format!("gap {} -> {} exceeds k = {k}", w[0], w[1]));
            }
        }
        let last = *self.indices.last().unwrap();
        if last >= frame_count {
            return bad(format!("keyframe {last} beyond clip of {frame_count} frames"));
        }
        let mut dims: Option<&BinaryMask> = None;
        let mut prev = 0;
        for t in &self.tracks {
            if t.id <= prev {
                return bad("object ids must be nonzero and ascending".into());
            }
            prev = t.id;
            if t.masks.len() != self.indices.len() {
                return bad(format!(
                    "object {} has {} keyframe masks for {} keyframes",
                    t.id,
                    t.masks.len(),
                    self.indices.len()
                ));
            }
            for m in &t.masks {
                match dims {
                    Some(d) => d.check_dims(m)?,
                    None => dims = Some(m),
                }
            }
        }
        Ok(())
    }
}

fn propagate_or_empty(
    prop: &dyn Propagator,
    object: ObjectId,
    source_frame: usize,
    source: &BinaryMask,
    target_frame: usize,
) -> Result<BinaryMask, FusionError> {
    match prop.propagate(object, source_frame, source, target_frame) {
        Ok(m) => {
            source.check_dims(&m)?;
            Ok(m)
        }
        // A failed propagation is an empty estimate; the fallback rule absorbs it.
        Err(FusionError::Propagation(_)) => Ok(BinaryMask::empty(source.width(), source.height())?),
        Err(e) => Err(e),
    }
}

/// Fills every frame of a clip from its keyframes.
pub fn fuse_clip(
    kf: &KeyframeSet,
    prop: &dyn Propagator,
    cfg: &FusionConfig,
    frame_count: usize,
    width: usize,
    height: usize,
) -> Result<MaskClip, FusionError> {
    cfg.validate()?;
    kf.validate(frame_count, cfg.k)?;
    let probe = BinaryMask::empty(width, height)?;
    let mut tracks = Vec::with_capacity(kf.tracks.len());
    for t in &kf.tracks {
        let mut masks: Vec<Option<BinaryMask>> = vec![None; frame_count];
        for (&i, m) in kf.indices.iter().zip(&t.masks) {
            probe.check_dims(m)?;
            masks[i] = Some(m.clone());
        }
        for (pair, anchors) in kf.indices.windows(2).zip(t.masks.windows(2)) {
            let (a, b) = (pair[0], pair[1]);
            for (n, slot) in masks.iter_mut().enumerate().take(b).skip(a + 1) {
                let left = propagate_or_empty(prop, t.id, a, &anchors[0], n)?;
                let right = propagate_or_empty(prop, t.id, b, &anchors[1], n)?;
                *slot = Some(combine(cfg.strategy, &left, &right, cfg.tau)?);
            }
        }
        let last = *kf.indices.last().unwrap();
        let last_mask = t.masks.last().unwrap();
        for (n, slot) in masks.iter_mut().enumerate().skip(last + 1) {
            *slot = Some(propagate_or_empty(prop, t.id, last, last_mask, n)?);
        }
        tracks.push(ObjectTrack {
            id: t.id,
            masks: masks.into_iter().map(|m| m.expect("every frame filled")).collect(),
        });
    }
    Ok(MaskClip::new(width, height, frame_count, tracks)?)
}
