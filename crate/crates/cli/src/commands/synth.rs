use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::store::{self, CountRecord};
use vpoint::synth::{gen_scene, gen_suite, SceneConfig, SuiteSpec, SynthClip};

use super::{read_config, resolve_out, resolve_path};
use crate::error::{Classify, CliResult};

/// Contents of a `--config` file, selected by its `kind` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthConfig {
    Scene(SceneConfig),
    Suite(SuiteSpec),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// JSON config with `"kind": "scene"` or `"kind": "suite"`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: <out-root>/synth].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// The config as read when the run was first resolved.
    #[arg(skip)]
    #[serde(default)]
    pub resolved: Option<SynthConfig>,
}

impl SynthArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.config)?;
        resolve_out(&mut self.out, default_out)?;
        self.resolved = Some(read_config(&self.config)?);
        Ok(())
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let config = match &self.resolved {
            Some(c) => c.clone(),
            None => read_config(&self.config)?,
        };
        let clips: Vec<SynthClip> = match &config {
            SynthConfig::Scene(s) => vec![gen_scene(s, self.seed).input()?],
            SynthConfig::Suite(s) => gen_suite(s, self.seed).input()?,
        };
        store::create_dir(out).processing()?;
        for c in &clips {
            store::write_synth_clip(&out.join(&c.name), c).processing()?;
        }
        let counts: Vec<CountRecord> = clips
            .iter()
            .map(|c| CountRecord {
                video: c.name.clone(),
                count: c.count,
            })
            .collect();
        store::write_jsonl(&out.join("counts.jsonl"), &counts).processing()?;
        println!("wrote {} clip(s) to {}", clips.len(), out.display());
        Ok(())
    }
}
