//! Fusion over a whole suite of clips, scored against ground truth.

use rayon::prelude::*;
use thiserror::Error;

use crate::clip::MaskClip;
use crate::fusion::{fuse_clip, FusionConfig, FusionError, KeyframeSet, Propagator};
use crate::metrics::{jf_pooled, MetricsError, SegScore};
use crate::seed;
use crate::synth::{ExactPropagator, NoiseConfig, NoisyPropagator, SynthClip};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("{clip}: {source}")]
    Fusion { clip: String, source: FusionError },
    #[error("{0} predictions for {1} clips")]
    Length(usize, usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// How masks travel between frames in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropagatorKind {
    Exact,
    /// Noisy propagation with `noise`, or each clip's own settings when `None`. Each
    /// clip's stream is seeded from `seed` and the clip seed.
    Noisy { noise: Option<NoiseConfig>, seed: u64 },
}

/// Seed of the noisy propagator for one clip of a run.
pub fn clip_noise_seed(run_seed: u64, clip_seed: u64) -> u64 {
    seed::derive(run_seed, &[clip_seed])
}

/// What fusion needs to know about a ground-truth clip.
#[derive(Debug, Clone, Copy)]
pub struct ClipRef<'a> {
    pub name: &'a str,
    pub seed: u64,
    pub gt: &'a MaskClip,
    pub noise: NoiseConfig,
}

impl SynthClip {
    pub fn as_ref(&self) -> ClipRef<'_> {
        ClipRef {
            name: &self.name,
            seed: self.seed,
            gt: &self.gt,
            noise: self.config.noise,
        }
    }
}

/// Fuses one clip from `keyframes`, or from its own ground truth sampled every `k`
/// frames when none are given.
pub fn fuse_one(
    clip: ClipRef<'_>,
    keyframes: Option<&KeyframeSet>,
    cfg: &FusionConfig,
    kind: PropagatorKind,
) -> Result<MaskClip, BenchError> {
    let gt = clip.gt;
    let wrap = |source| BenchError::Fusion {
        clip: clip.name.to_owned(),
        source,
    };
    let sampled;
    let kf = match keyframes {
        Some(kf) => kf,
        None => {
            sampled = KeyframeSet::sample(gt, cfg.k).map_err(wrap)?;
            &sampled
        }
    };
    let run = |prop: &dyn Propagator| fuse_clip(kf, prop, cfg, gt.frame_count(), gt.width(), gt.height());
    match kind {
        PropagatorKind::Exact => run(&ExactPropagator::new(gt)),
        PropagatorKind::Noisy { noise, seed } => {
            let noise = noise.unwrap_or(clip.noise);
            run(&NoisyPropagator::new(
                gt,
                noise.jitter,
                noise.dropout,
                clip_noise_seed(seed, clip.seed),
            ))
        }
    }
    .map_err(wrap)
}

/// Fuses every clip in parallel; results come back in suite order.
pub fn fuse_suite(clips: &[ClipRef<'_>], cfg: &FusionConfig, kind: PropagatorKind) -> Result<Vec<MaskClip>, BenchError> {
    clips.par_iter().map(|c| fuse_one(*c, None, cfg, kind)).collect()
}

/// J, F and J&F over all objects of all clips.
pub fn score_suite(clips: &[ClipRef<'_>], preds: &[MaskClip]) -> Result<SegScore, BenchError> {
    if clips.len() != preds.len() {
        return Err(BenchError::Length(preds.len(), clips.len()));
    }
    let pairs: Vec<(&MaskClip, &MaskClip)> = preds.iter().zip(clips.iter().map(|c| c.gt)).collect();
    Ok(jf_pooled(&pairs)?)
}

pub fn run_suite(clips: &[ClipRef<'_>], cfg: &FusionConfig, kind: PropagatorKind) -> Result<SegScore, BenchError> {
    score_suite(clips, &fuse_suite(clips, cfg, kind)?)
}
