use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::fusion::{KeyframeSet, DEFAULT_K};
use vpoint::store;

use super::{load_clips, resolve_out, resolve_path};
use crate::error::{Classify, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KeyframesArgs {
    /// A clip directory, or a directory of clips.
    #[arg(long)]
    pub clips: PathBuf,
    /// Keyframe spacing.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Output directory [default: <out-root>/keyframes].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl KeyframesArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.clips)?;
        resolve_out(&mut self.out, default_out)
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let clips = load_clips(&self.clips)?;
        let sets = clips
            .iter()
            .map(|c| KeyframeSet::sample(&c.clip, self.k).input())
            .collect::<CliResult<Vec<_>>>()?;
        store::create_dir(out).processing()?;
        for (c, kf) in clips.iter().zip(&sets) {
            let m = &c.manifest;
            store::write_keyframes(&out.join(&m.name), &m.name, m.width, m.height, kf).processing()?;
        }
        println!("wrote keyframes for {} clip(s) to {}", clips.len(), out.display());
        Ok(())
    }
}
