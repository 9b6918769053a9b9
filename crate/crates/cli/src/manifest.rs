//! The `run.json` written beside every command's outputs.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::store;

use crate::error::{Classify, CliError, CliResult};
use crate::Command;

pub const RUN_MANIFEST: &str = "run.json";
const TOOL: &str = "vpoint";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// The resolved command: absolute paths, every default filled in and configs
    /// inlined.
    #[serde(flatten)]
    pub run: Command,
}

pub fn write(out: &Path, command: &Command) -> CliResult<()> {
    let manifest = RunManifest {
        tool: TOOL.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        run: command.clone(),
    };
    store::write_json(&out.join(RUN_MANIFEST), &manifest).processing()
}

pub fn read(path: &Path) -> CliResult<RunManifest> {
    let m: RunManifest = store::read_json(path).input()?;
    if m.tool != TOOL {
        return Err(CliError::input(format!("{} was not written by {TOOL}", path.display())));
    }
    Ok(m)
}

/// The manifest of the run that produced `dir`, if there is one.
pub fn read_optional(dir: &Path) -> CliResult<Option<RunManifest>> {
    let path = dir.join(RUN_MANIFEST);
    if path.is_file() {
        read(&path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::path::absolute(path)
        .with_context(|| format!("cannot resolve {}", path.display()))
        .input()
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// A `run.json` written by an earlier command.
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RerunArgs {
    pub fn load(&self) -> CliResult<Command> {
        let m = read(&self.manifest)?;
        if m.version != env!("CARGO_PKG_VERSION") {
            eprintln!(
                "warning: manifest written by version {}, running {}",
                m.version,
                env!("CARGO_PKG_VERSION")
            );
        }
        let mut command = m.run;
        if let Some(out) = &self.out {
            command.set_out(absolute(out)?);
        }
        Ok(command)
    }
}
