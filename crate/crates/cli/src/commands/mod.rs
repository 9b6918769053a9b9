pub mod annotate;
pub mod attn_check;
pub mod eval;
pub mod fuse;
pub mod keyframes;
pub mod sweep;
pub mod synth;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vpoint::benchmark::ClipRef;
use vpoint::store::{self, StoredClip};

use crate::error::{Classify, CliResult};
use crate::manifest::absolute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorChoice {
    /// Copies the ground-truth mask of the same object.
    Exact,
    /// Shifts the ground-truth mask by seeded noise and drops some propagations.
    #[default]
    Noisy,
}

/// Absolute form of `out`, or of `default` when it is unset.
pub fn resolve_out(out: &mut Option<PathBuf>, default: PathBuf) -> CliResult<()> {
    *out = Some(absolute(out.as_deref().unwrap_or(&default))?);
    Ok(())
}

pub fn resolve_path(path: &mut PathBuf) -> CliResult<()> {
    *path = absolute(path)?;
    Ok(())
}

/// Every clip under `root`, in name order.
pub fn load_clips(root: &Path) -> CliResult<Vec<StoredClip>> {
    store::clip_dirs(root)
        .input()?
        .iter()
        .map(|d| {
            store::read_clip(d)
                .with_context(|| format!("reading clip {}", d.display()))
                .input()
        })
        .collect()
}

pub fn clip_ref(c: &StoredClip) -> ClipRef<'_> {
    ClipRef {
        name: &c.manifest.name,
        seed: c.manifest.seed.unwrap_or(0),
        gt: &c.clip,
        noise: c.manifest.noise.unwrap_or_default(),
    }
}

/// Reads a JSON config from disk.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    store::read_json(path)
        .with_context(|| format!("reading config {}", path.display()))
        .input()
}
