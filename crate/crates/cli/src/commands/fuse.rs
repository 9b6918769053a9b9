use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::benchmark::{fuse_one, PropagatorKind};
use vpoint::fusion::{FusionConfig, KeyframeSet, Strategy, DEFAULT_K, DEFAULT_TAU};
use vpoint::store::{self, ClipManifest, StoredClip};
use vpoint::synth::NoiseConfig;

use super::{clip_ref, load_clips, resolve_out, resolve_path, PropagatorChoice};
use crate::error::{Classify, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FuseArgs {
    /// A clip directory, or a directory of clips.
    #[arg(long)]
    pub clips: PathBuf,
    /// Keyframes written by `vpoint keyframes`; sampled from the clips when absent.
    #[arg(long)]
    pub keyframes: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// IoU above which the two directions are intersected rather than united.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = Strategy::Bidirectional)]
    pub strategy: Strategy,
    #[arg(long, value_enum, default_value_t = PropagatorChoice::Noisy)]
    pub propagator: PropagatorChoice,
    /// Noise scale; defaults to the value recorded with each clip.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Probability a propagation is lost; defaults to the value recorded with each clip.
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: <out-root>/fuse].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FuseArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.clips)?;
        if let Some(k) = &mut self.keyframes {
            resolve_path(k)?;
        }
        resolve_out(&mut self.out, default_out)
    }

    pub fn config(&self) -> FusionConfig {
        FusionConfig {
            k: self.k,
            tau: self.tau,
            strategy: self.strategy,
        }
    }

    fn kind(&self, clip: &StoredClip) -> CliResult<PropagatorKind> {
        Ok(match self.propagator {
            PropagatorChoice::Exact => PropagatorKind::Exact,
            PropagatorChoice::Noisy => {
                let own = clip.manifest.noise.unwrap_or_default();
                let noise = NoiseConfig {
                    jitter: self.jitter.unwrap_or(own.jitter),
                    dropout: self.dropout.unwrap_or(own.dropout),
                };
                noise.validate().input()?;
                PropagatorKind::Noisy {
                    noise: Some(noise),
                    seed: self.seed,
                }
            }
        })
    }

    fn load_keyframes(&self, dir: &Path, clip: &StoredClip) -> CliResult<KeyframeSet> {
        let m = &clip.manifest;
        let path = dir.join(&m.name);
        let (km, kf) = store::read_keyframes(&path)
            .with_context(|| format!("reading keyframes for {}", m.name))
            .input()?;
        if km.name != m.name || km.width != m.width || km.height != m.height {
            return Err(CliError::input(format!(
                "keyframes in {} are for {} ({}x{}), not {} ({}x{})",
                path.display(),
                km.name,
                km.width,
                km.height,
                m.name,
                m.width,
                m.height
            )));
        }
        kf.validate(m.frames, self.k)
            .with_context(|| format!("keyframes in {} do not fit the clip", path.display()))
            .input()?;
        Ok(kf)
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let cfg = self.config();
        cfg.validate().input()?;
        let clips = load_clips(&self.clips)?;
        let mut preds = Vec::with_capacity(clips.len());
        for c in &clips {
            let kf = match &self.keyframes {
                Some(dir) => Some(self.load_keyframes(dir, c)?),
                None => None,
            };
            preds.push(fuse_one(clip_ref(c), kf.as_ref(), &cfg, self.kind(c)?).input()?);
        }
        store::create_dir(out).processing()?;
        for (c, pred) in clips.iter().zip(&preds) {
            let name = &c.manifest.name;
            store::write_clip(&out.join(name), &ClipManifest::for_clip(name, pred), pred, None).processing()?;
        }
        println!(
            "fused {} clip(s) with {} (k={}, tau={}) into {}",
            clips.len(),
            self.strategy,
            self.k,
            self.tau,
            out.display()
        );
        Ok(())
    }
}
