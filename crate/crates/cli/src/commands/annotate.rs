use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::annotator::{annotate_clip, DEFAULT_CANDIDATES};
use vpoint::seed;
use vpoint::store;
use vpoint::synth::LabelOracle;

use super::{load_clips, resolve_out, resolve_path};
use crate::error::{Classify, CliError, CliResult, Failure};

pub const ANNOTATIONS: &str = "annotations.jsonl";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnnotateArgs {
    /// A clip directory, or a directory of clips.
    #[arg(long)]
    pub clips: PathBuf,
    /// Candidate points sampled per object and frame.
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: <out-root>/annotate].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl AnnotateArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.clips)?;
        resolve_out(&mut self.out, default_out)
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        if self.candidates == 0 {
            return Err(CliError::input("--candidates must be at least 1"));
        }
        let clips = load_clips(&self.clips)?;
        let mut annotations = Vec::new();
        let mut failed = 0;
        for (i, c) in clips.iter().enumerate() {
            let oracle = LabelOracle::new(&c.labels);
            let outcome = annotate_clip(
                &c.clip,
                &c.manifest.name,
                self.candidates,
                &oracle,
                seed::derive(self.seed, &[i as u64]),
            );
            for f in &outcome.failures {
                eprintln!(
                    "{}: frame {} object {}: {}",
                    c.manifest.name, f.frame, f.object, f.error
                );
            }
            failed += outcome.failures.len();
            annotations.extend(outcome.annotations);
        }
        if annotations.is_empty() && failed > 0 {
            return Err(CliError::new(
                Failure::Processing,
                anyhow::anyhow!("all {failed} annotation tasks failed"),
            ));
        }
        store::create_dir(out).processing()?;
        store::write_jsonl(&out.join(ANNOTATIONS), &annotations).processing()?;
        println!(
            "annotated {} object-frames in {} clip(s), {} failed",
            annotations.len(),
            clips.len(),
            failed
        );
        Ok(())
    }
}
