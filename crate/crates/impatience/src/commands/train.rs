use std::path::Path;

use impatience_core::actor_critic::ActorCritic;
use impatience_core::env::{loss_decreased, train as train_model, EpisodeLoss, TenantEnv};
use serde::Serialize;

use super::write_json;
use crate::checkpoint::Checkpoint;
use crate::csv_row;
use crate::error::{AppError, AppResult};
use crate::output::{self, write_table};
use crate::spec::ExperimentSpec;

/// Episodes averaged at each end of the loss trace by `--check`.
pub const CHECK_FIRST: usize = 10;
pub const CHECK_LAST: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub seed: u64,
    /// Episodes in the whole loss trace, including resumed ones.
    pub episodes: usize,
    pub episodes_this_run: usize,
    pub first_mean_loss: f64,
    pub last_mean_loss: f64,
    pub loss_decreased: bool,
    pub calibration_residual: f64,
    pub wait_samples: usize,
}

fn mean_combined(losses: &[EpisodeLoss]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    losses.iter().map(EpisodeLoss::combined).sum::<f64>() / losses.len() as f64
}

/// Trains the actor-critic, or continues `resume`, and writes `losses.csv`,
/// `checkpoint.json` and `summary.json`. With `check`, a loss trace that did
/// not decrease is an error.
pub fn train(spec: &ExperimentSpec, out: &Path, resume: Option<&Path>, check: bool) -> AppResult<TrainSummary> {
    spec.validate()?;
    let cfg = spec.trainer();
    let (mut model, mut losses) = match resume {
        Some(path) => {
            let cp = Checkpoint::load(path)?;
            (cp.model, cp.losses)
        }
        None => (ActorCritic::new(&cfg)?, Vec::new()),
    };
    let mut env = TenantEnv::new(spec.tenant_env())?;
    let report = train_model(&mut env, &mut model, &cfg)?;
    losses.extend_from_slice(&report.losses);

    let rows = losses.iter().map(|l| csv_row![l.episode, l.actor_loss, l.critic_loss]);
    write_table(&out.join("losses.csv"), output::LOSSES, rows)?;
    let cp = Checkpoint { model, losses };
    cp.save(&out.join("checkpoint.json"))?;

    let losses = &cp.losses;
    let first = &losses[..CHECK_FIRST.min(losses.len())];
    let last = &losses[losses.len() - CHECK_LAST.min(losses.len())..];
    let summary = TrainSummary {
        seed: spec.seed,
        episodes: losses.len(),
        episodes_this_run: report.losses.len(),
        first_mean_loss: mean_combined(first),
        last_mean_loss: mean_combined(last),
        loss_decreased: loss_decreased(losses, CHECK_FIRST, CHECK_LAST),
        calibration_residual: report.calibration_residual,
        wait_samples: report.wait_samples,
    };
    write_json(&out.join("summary.json"), &summary)?;
    if check && !summary.loss_decreased {
        return Err(AppError::CheckFailed(format!(
            "mean loss over the last {CHECK_LAST} episodes ({}) is not below the first {CHECK_FIRST} ({})",
            summary.last_mean_loss, summary.first_mean_loss
        )));
    }
    Ok(summary)
}
