use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::annotator::{percent_to_pixel, PointAnnotation};
use vpoint::clip::MaskClip;
use vpoint::metrics::{counting, jf_pooled, point_tally, PointTally};
use vpoint::report::{render_table, Report};
use vpoint::store::{self, CountRecord, StoredClip};

use super::{load_clips, resolve_out, resolve_path};
use crate::error::{Classify, CliError, CliResult};
use crate::manifest;
use crate::Command;

pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Predicted clips, matched to ground truth by clip name.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth clips.
    #[arg(long)]
    pub gt: PathBuf,
    /// Point annotations (JSON lines) to score against the ground-truth masks.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Predicted counts (JSON lines of `{"video", "count"}`).
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Dataset name in the report [default: name of the ground-truth directory].
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory [default: <out-root>/eval].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Pairs every ground-truth clip with the prediction of the same name.
fn pair_up<'a>(preds: &'a [StoredClip], gts: &'a [StoredClip]) -> CliResult<Vec<(&'a MaskClip, &'a MaskClip)>> {
    let by_name: BTreeMap<&str, &StoredClip> = preds.iter().map(|p| (p.manifest.name.as_str(), p)).collect();
    if by_name.len() != preds.len() {
        return Err(CliError::input("predictions contain duplicate clip names"));
    }
    if preds.len() != gts.len() {
        return Err(CliError::input(format!(
            "{} predicted clips for {} ground-truth clips",
            preds.len(),
            gts.len()
        )));
    }
    gts.iter()
        .map(|g| {
            let name = g.manifest.name.as_str();
            let p = by_name
                .get(name)
                .ok_or_else(|| CliError::input(format!("no prediction for clip {name}")))?;
            p.clip
                .check_compatible(&g.clip)
                .with_context(|| format!("clip {name}"))
                .input()?;
            Ok((&p.clip, &g.clip))
        })
        .collect()
}

fn score_points(path: &Path, gts: &[StoredClip]) -> CliResult<PointTally> {
    let records: Vec<PointAnnotation> = store::read_jsonl(path).input()?;
    let mut by_video: BTreeMap<&str, Vec<&PointAnnotation>> = BTreeMap::new();
    for r in &records {
        by_video.entry(r.video.as_str()).or_default().push(r);
    }
    if let Some(v) = by_video.keys().find(|v| !gts.iter().any(|g| g.manifest.name == **v)) {
        return Err(CliError::input(format!("{} names unknown clip {v}", path.display())));
    }
    let mut tally = PointTally::default();
    for g in gts {
        let preds: Vec<_> = by_video
            .get(g.manifest.name.as_str())
            .into_iter()
            .flatten()
            .map(|r| (r.frame, percent_to_pixel(r.x, r.y, g.clip.width(), g.clip.height())))
            .collect();
        tally.add(
            point_tally(&preds, &g.clip)
                .with_context(|| format!("points for {}", g.manifest.name))
                .input()?,
        );
    }
    Ok(tally)
}

fn count_pairs(path: &Path, gts: &[StoredClip]) -> CliResult<(Vec<u32>, Vec<u32>)> {
    let records: Vec<CountRecord> = store::read_jsonl(path).input()?;
    let mut by_video = BTreeMap::new();
    for r in &records {
        if by_video.insert(r.video.as_str(), r.count).is_some() {
            return Err(CliError::input(format!("{} counts {} twice", path.display(), r.video)));
        }
    }
    if by_video.len() != gts.len() {
        return Err(CliError::input(format!(
            "{} has {} counts for {} clips",
            path.display(),
            by_video.len(),
            gts.len()
        )));
    }
    let mut preds = Vec::with_capacity(gts.len());
    for g in gts {
        let name = g.manifest.name.as_str();
        preds.push(
            *by_video
                .get(name)
                .ok_or_else(|| CliError::input(format!("{} has no count for {name}", path.display())))?,
        );
    }
    Ok((preds, gts.iter().map(|g| g.manifest.count).collect()))
}

impl EvalArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_path(&mut self.pred)?;
        resolve_path(&mut self.gt)?;
        for p in [&mut self.points, &mut self.counts].into_iter().flatten() {
            resolve_path(p)?;
        }
        if self.name.is_none() {
            self.name = Some(
                self.gt
                    .file_name()
                    .map_or_else(|| "dataset".to_owned(), |n| n.to_string_lossy().into_owned()),
            );
        }
        resolve_out(&mut self.out, default_out)
    }

    /// Scores without writing anything.
    pub fn report(&self) -> CliResult<Report> {
        let preds = load_clips(&self.pred)?;
        let gts = load_clips(&self.gt)?;
        let pairs = pair_up(&preds, &gts)?;
        let seg = jf_pooled(&pairs).input()?;
        let mut report = Report::new(self.name.as_deref().unwrap_or("dataset"), seg);
        if let Some(m) = manifest::read_optional(&self.pred)? {
            if let Command::Fuse(f) = m.run {
                report.strategy = Some(f.strategy);
                report.tau = Some(f.tau);
                report.k = Some(f.k);
            }
        }
        if let Some(p) = &self.points {
            report = report.with_points(score_points(p, &gts)?.score());
        }
        if let Some(c) = &self.counts {
            let (pred, gt) = count_pairs(c, &gts)?;
            report = report.with_counts(counting(&pred, &gt).input()?);
        }
        Ok(report)
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let report = self.report()?;
        store::create_dir(out).processing()?;
        store::write_json(&out.join(REPORT), &report).processing()?;
        print!("{}", render_table(std::slice::from_ref(&report)));
        Ok(())
    }
}
