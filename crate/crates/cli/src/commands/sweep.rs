use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::benchmark::{fuse_suite, score_suite, ClipRef, PropagatorKind};
use vpoint::fusion::{FusionConfig, Strategy, DEFAULT_K, DEFAULT_TAU};
use vpoint::report::{render_table, Report};
use vpoint::store::{self, StoredClip};
use vpoint::synth::{gen_suite, NoiseConfig, SuiteSpec, SynthClip};
use vpoint::temporal::DEFAULT_CONTEXT_LEN;

use super::{clip_ref, load_clips, read_config, resolve_out, resolve_path, PropagatorChoice};
use crate::error::{Classify, CliError, CliResult};

fn default_tau() -> Vec<f64> {
    vec![DEFAULT_TAU]
}

fn default_k() -> Vec<usize> {
    vec![DEFAULT_K]
}

fn default_l() -> Vec<usize> {
    vec![DEFAULT_CONTEXT_LEN]
}

fn default_strategy() -> Vec<Strategy> {
    vec![Strategy::Bidirectional]
}

/// Values to sweep. An axis left out holds its default alone. `l`, the temporal
/// context length, does not affect fusion and is only echoed into the reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_l")]
    pub l: Vec<usize>,
    #[serde(default = "default_strategy")]
    pub strategy: Vec<Strategy>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            k: default_k(),
            l: default_l(),
            strategy: default_strategy(),
        }
    }
}

/// A benchmark: either clips on disk or a suite generated from `seed`, plus the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub dataset: Option<String>,
    /// Clip directory; relative paths are taken from the config file's directory.
    #[serde(default)]
    pub clips: Option<PathBuf>,
    #[serde(default)]
    pub suite: Option<SuiteSpec>,
    /// Seeds suite generation and the noisy propagator.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub propagator: PropagatorChoice,
    /// Overrides the noise recorded with each clip.
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub strategy: Strategy,
    pub k: usize,
    pub tau: f64,
    pub l: usize,
}

impl SweepConfig {
    /// Grid points with strategy outermost, then k, tau and l.
    pub fn points(&self) -> CliResult<Vec<GridPoint>> {
        let g = &self.grid;
        for (axis, len) in [("tau", g.tau.len()), ("k", g.k.len()), ("l", g.l.len()), ("strategy", g.strategy.len())] {
            if len == 0 {
                return Err(CliError::input(format!("empty grid: no values for {axis}")));
            }
        }
        let mut points = Vec::new();
        for &strategy in &g.strategy {
            for &k in &g.k {
                for &tau in &g.tau {
                    for &l in &g.l {
                        FusionConfig { k, tau, strategy }.validate().input()?;
                        points.push(GridPoint { strategy, k, tau, l });
                    }
                }
            }
        }
        Ok(points)
    }

    fn kind(&self) -> CliResult<PropagatorKind> {
        if let Some(n) = &self.noise {
            n.validate().input()?;
        }
        Ok(match self.propagator {
            PropagatorChoice::Exact => PropagatorKind::Exact,
            PropagatorChoice::Noisy => PropagatorKind::Noisy {
                noise: self.noise,
                seed: self.seed,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reports: Vec<Report>,
    /// Indices into `reports` by descending J&F; ties keep grid order.
    pub ranking: Vec<usize>,
}

enum Clips {
    Stored(Vec<StoredClip>),
    Generated(Vec<SynthClip>),
}

impl Clips {
    fn refs(&self) -> Vec<ClipRef<'_>> {
        match self {
            Clips::Stored(c) => c.iter().map(clip_ref).collect(),
            Clips::Generated(c) => c.iter().map(SynthClip::as_ref).collect(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// JSON benchmark config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: <out-root>/sweep].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// The config as read when the run was first resolved, with paths made absolute.
    #[arg(skip)]
    #[serde(default)]
    pub resolved: Option<SweepConfig>,
}

pub fn run_sweep(cfg: &SweepConfig) -> CliResult<Summary> {
    let points = cfg.points()?;
    let kind = cfg.kind()?;
    let clips = match (&cfg.clips, &cfg.suite) {
        (Some(dir), None) => Clips::Stored(load_clips(dir)?),
        (None, Some(spec)) => Clips::Generated(gen_suite(spec, cfg.seed).input()?),
        _ => return Err(CliError::input("a sweep needs exactly one of `clips` and `suite`")),
    };
    let refs = clips.refs();
    let dataset = cfg.dataset.as_deref().unwrap_or("sweep");
    let mut reports: Vec<Report> = Vec::with_capacity(points.len());
    let mut last: Option<(GridPoint, Report)> = None;
    for p in &points {
        // Consecutive points differing only in l share a fusion run.
        let cached = last
            .as_ref()
            .filter(|(q, _)| (q.strategy, q.k, q.tau) == (p.strategy, p.k, p.tau))
            .map(|(_, r)| r.clone());
        let mut report = match cached {
            Some(r) => r,
            None => {
                let fusion = FusionConfig {
                    k: p.k,
                    tau: p.tau,
                    strategy: p.strategy,
                };
                let preds = fuse_suite(&refs, &fusion, kind).input()?;
                Report::new(dataset, score_suite(&refs, &preds).processing()?)
            }
        };
        report.strategy = Some(p.strategy);
        report.k = Some(p.k);
        report.tau = Some(p.tau);
        report.l = Some(p.l);
        last = Some((*p, report.clone()));
        reports.push(report);
    }
    let mut ranking: Vec<usize> = (0..reports.len()).collect();
    ranking.sort_by(|&a, &b| reports[b].jf.total_cmp(&reports[a].jf));
    Ok(Summary { reports, ranking })
}

impl SweepArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.config)?;
        resolve_out(&mut self.out, default_out)?;
        let mut cfg: SweepConfig = read_config(&self.config)?;
        if let Some(dir) = &mut cfg.clips {
            if dir.is_relative() {
                let base = self.config.parent().unwrap_or(Path::new("/"));
                *dir = base.join(&*dir);
            }
            resolve_path(dir)?;
        }
        self.resolved = Some(cfg);
        Ok(())
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let cfg = match &self.resolved {
            Some(c) => c.clone(),
            None => read_config(&self.config)?,
        };
        let summary = run_sweep(&cfg)?;
        let reports_dir = out.join("reports");
        store::create_dir(&reports_dir).processing()?;
        for (i, r) in summary.reports.iter().enumerate() {
            store::write_json(&reports_dir.join(format!("{i:03}.json")), r).processing()?;
        }
        store::write_json(&out.join("summary.json"), &summary).processing()?;
        print!("{}", render_table(&summary.reports));
        Ok(())
    }
}
