//! `vpoint`: generate synthetic clips, annotate them with points, fuse keyframe masks
//! into dense tracks, score the results and verify the temporal attention gradients.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use commands::{annotate, attn_check, eval, fuse, keyframes, sweep, synth};
use error::{CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "vpoint", version, about = "Point-supervised video mask tooling")]
struct Cli {
    /// Root under which commands place their output when `--out` is not given.
    #[arg(long, global = true, env = "VPOINT_OUT", default_value = "vpoint-out")]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Generate synthetic clips from a scene or suite config.
    Synth(synth::SynthArgs),
    /// Pick one point per object and frame using a segmentation oracle.
    Annotate(annotate::AnnotateArgs),
    /// Export ground-truth keyframe masks every k frames.
    Keyframes(keyframes::KeyframesArgs),
    /// Propagate keyframe masks through each clip and fuse the two directions.
    Fuse(fuse::FuseArgs),
    /// Score predicted clips against ground truth.
    Eval(eval::EvalArgs),
    /// Fuse and score a benchmark over a grid of settings.
    Sweep(sweep::SweepArgs),
    /// Check the temporal attention gradients against finite differences.
    AttnCheck(attn_check::AttnCheckArgs),
    /// Re-execute the command recorded in a run manifest.
    #[serde(skip)]
    Rerun(manifest::RerunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Annotate(_) => "annotate",
            Command::Keyframes(_) => "keyframes",
            Command::Fuse(_) => "fuse",
            Command::Eval(_) => "eval",
            Command::Sweep(_) => "sweep",
            Command::AttnCheck(_) => "attn-check",
            Command::Rerun(_) => "rerun",
        }
    }

    /// Makes paths absolute, fills in the output directory and reads any config
    /// files, so the manifest alone determines the run.
    fn resolve(&mut self, out_root: &std::path::Path) -> CliResult<()> {
        let default_out = out_root.join(self.name());
        match self {
            Command::Synth(a) => a.resolve(default_out),
            Command::Annotate(a) => a.resolve(default_out),
            Command::Keyframes(a) => a.resolve(default_out),
            Command::Fuse(a) => a.resolve(default_out),
            Command::Eval(a) => a.resolve(default_out),
            Command::Sweep(a) => a.resolve(default_out),
            Command::AttnCheck(a) => a.resolve(default_out),
            Command::Rerun(_) => Ok(()),
        }
    }

    fn out(&self) -> Option<&std::path::Path> {
        match self {
            Command::Synth(a) => a.out.as_deref(),
            Command::Annotate(a) => a.out.as_deref(),
            Command::Keyframes(a) => a.out.as_deref(),
            Command::Fuse(a) => a.out.as_deref(),
            Command::Eval(a) => a.out.as_deref(),
            Command::Sweep(a) => a.out.as_deref(),
            Command::AttnCheck(a) => a.out.as_deref(),
            Command::Rerun(_) => None,
        }
    }

    fn set_out(&mut self, out: PathBuf) {
        let slot = match self {
            Command::Synth(a) => &mut a.out,
            Command::Annotate(a) => &mut a.out,
            Command::Keyframes(a) => &mut a.out,
            Command::Fuse(a) => &mut a.out,
            Command::Eval(a) => &mut a.out,
            Command::Sweep(a) => &mut a.out,
            Command::AttnCheck(a) => &mut a.out,
            Command::Rerun(_) => return,
        };
        *slot = Some(out);
    }

    /// Runs a resolved command and writes its manifest next to the outputs.
    fn execute(&self) -> CliResult<()> {
        let out = self.out().expect("resolved commands have an output directory");
        let outcome = match self {
            Command::Synth(a) => a.run(out),
            Command::Annotate(a) => a.run(out),
            Command::Keyframes(a) => a.run(out),
            Command::Fuse(a) => a.run(out),
            Command::Eval(a) => a.run(out),
            Command::Sweep(a) => a.run(out),
            Command::AttnCheck(a) => a.run(out),
            Command::Rerun(_) => unreachable!("rerun is expanded before execution"),
        };
        // A verification failure still leaves a complete, reproducible run behind.
        match outcome {
            Err(e) if e.kind != Failure::Verification => Err(e),
            other => {
                manifest::write(out, self)?;
                other
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let command = match cli.command {
        Command::Rerun(r) => r.load()?,
        mut c => {
            c.resolve(&cli.out_root)?;
            c
        }
    };
    command.execute()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}
