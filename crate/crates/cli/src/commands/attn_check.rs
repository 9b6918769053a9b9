use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use vpoint::seed;
use vpoint::store;
use vpoint::temporal::{
    attention_weights, grad_check, pool_weights, temporal_enrich, Batch, ModelObjective, ScaledGradient,
    TemporalModel,
};

use super::resolve_out;
use crate::error::{Classify, CliError, CliResult, Failure};

/// Largest tolerated deviation of a softmax row sum from one.
pub const SOFTMAX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AttnCheckArgs {
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    /// Feature width; must be divisible by `--heads`.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    /// Windows in the random batch.
    #[arg(long, default_value_t = 6)]
    pub windows: usize,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Largest accepted relative gradient error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: <out-root>/attn-check].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorError {
    pub name: String,
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttnCheckReport {
    pub tensors: Vec<TensorError>,
    pub max_rel: f64,
    pub gradient_ok: bool,
    /// Error seen when the analytic gradient is deliberately doubled; must fail.
    pub negative_control_rel: f64,
    pub negative_control_ok: bool,
    /// Largest `|sum - 1|` over attention and pooling weight rows.
    pub softmax_residual: f64,
    pub softmax_ok: bool,
    /// Enrichment with a zero output projection returns its input exactly.
    pub residual_identity: bool,
    pub passed: bool,
}

fn row_residual<'a>(rows: impl Iterator<Item = f64> + 'a) -> f64 {
    rows.map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

impl AttnCheckArgs {
    pub fn resolve(&mut self, default_out: PathBuf) -> CliResult<()> {
        resolve_out(&mut self.out, default_out)
    }

    pub fn check(&self) -> CliResult<(AttnCheckReport, TemporalModel)> {
        if self.windows == 0 || self.classes == 0 {
            return Err(CliError::input("--windows and --classes must be at least 1"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(CliError::input("--tolerance must be positive"));
        }
        let model = TemporalModel::random(self.dim, self.heads, self.classes, seed::derive(self.seed, &[0])).input()?;
        let batch = Batch::random(self.windows, self.dim, self.classes, seed::derive(self.seed, &[1]));

        let objective = ModelObjective { model: &model, batch: &batch };
        let grad = grad_check(&objective, self.step).input()?;
        let control = grad_check(&ScaledGradient { inner: objective, factor: 2.0 }, self.step).input()?;

        let attn = attention_weights(&batch.query, &batch.context, &model.mhca).processing()?;
        let enriched = temporal_enrich(&batch.query, &batch.context, &model.mhca).processing()?;
        let pool = pool_weights(&enriched, &model.pool).processing()?;
        let attn_rows = attn.iter().flatten().flat_map(|a| a.rows().into_iter().map(|r| r.sum()).collect::<Vec<_>>());
        let softmax_residual = row_residual(attn_rows).max(row_residual(pool.rows().into_iter().map(|r| r.sum())));

        let identity = TemporalModel::init(self.dim, self.heads, self.classes, seed::derive(self.seed, &[2])).input()?;
        let residual_identity = temporal_enrich(&batch.query, &batch.context, &identity.mhca).processing()? == batch.query;

        let gradient_ok = grad.passes(self.tolerance);
        let negative_control_ok = !control.passes(self.tolerance);
        let softmax_ok = softmax_residual <= SOFTMAX_TOLERANCE;
        let report = AttnCheckReport {
            tensors: grad
                .tensors
                .iter()
                .map(|(name, max_rel)| TensorError {
                    name: name.clone(),
                    max_rel: *max_rel,
                })
                .collect(),
            max_rel: grad.max_rel,
            gradient_ok,
            negative_control_rel: control.max_rel,
            negative_control_ok,
            softmax_residual,
            softmax_ok,
            residual_identity,
            passed: gradient_ok && negative_control_ok && softmax_ok && residual_identity,
        };
        Ok((report, model))
    }

    pub fn run(&self, out: &Path) -> CliResult<()> {
        let (report, model) = self.check()?;
        store::create_dir(out).processing()?;
        store::write_json(&out.join("attn_check.json"), &report).processing()?;
        store::write_bytes(&out.join("params.tprm"), &model.to_snapshot()).processing()?;
        let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
        for t in &report.tensors {
            println!("{:<12} max rel err {:.3e}", t.name, t.max_rel);
        }
        println!(
            "gradient           max rel err {:.3e} (tolerance {:.0e})  {}",
            report.max_rel,
            self.tolerance,
            verdict(report.gradient_ok)
        );
        println!(
            "negative control   max rel err {:.3e} (must exceed tolerance)  {}",
            report.negative_control_rel,
            verdict(report.negative_control_ok)
        );
        println!(
            "softmax rows       max |sum - 1| {:.3e}  {}",
            report.softmax_residual,
            verdict(report.softmax_ok)
        );
        println!(
            "residual identity  {}",
            if report.residual_identity { "exact  ok" } else { "FAIL" }
        );
        if report.passed {
            Ok(())
        } else {
            Err(CliError::new(Failure::Verification, anyhow::anyhow!("attention check failed")))
        }
    }
}
