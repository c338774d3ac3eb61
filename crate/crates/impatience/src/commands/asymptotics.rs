use std::path::Path;

use impatience_core::actor_critic::ActorCritic;
use impatience_core::asymptotics::{
    backlog_point, chernoff_check, check_sweep, decision_agreement, rate_function, sublinear_error_profile,
    AgreementConfig, AgreementPoint, BacklogSweep, ChernoffRow, ErrorProfile, ErrorProfileConfig, SweepConfig,
    TargetBacklog,
};
use impatience_core::config::{PatienceModel, SystemConfig};
use impatience_core::estimate::MarkovEstimator;
use impatience_core::stats::percentile_sorted;
use rayon::prelude::*;
use serde::Serialize;

use super::{load_model, write_json};
use crate::csv_row;
use crate::error::{AppError, AppResult};
use crate::feeds::{AnyEstimator, AnyFeed};
use crate::output::{self, write_table};
use crate::spec::{ExperimentSpec, FeedKind};

pub const RENEGE_TARGET: f64 = 0.99;
pub const JOCKEY_TARGET: f64 = 0.01;
pub const AGREEMENT_TARGET: f64 = 0.9;
pub const CHERNOFF_N: [u64; 3] = [10, 50, 200];
pub const CHERNOFF_X: [f64; 2] = [1.5, 2.0];
/// Standard errors of slack on each Chernoff bound.
pub const CHERNOFF_SLACK: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub feed: &'static str,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl AsymptoticsReport {
    pub fn into_result(self) -> AppResult<Self> {
        if self.passed {
            return Ok(self);
        }
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(AppError::CheckFailed(format!("{} ({} feed)", failed.join(", "), self.feed)))
    }
}

/// Tagged-request system of the backlog sweep: no background arrivals, so
/// the alternative queue holds exactly the configured `m`.
pub fn sweep_system(spec: &ExperimentSpec) -> AppResult<SystemConfig> {
    let a = &spec.asymptotics;
    Ok(SystemConfig::with_rates(0.0, 0.0, a.mu_1, a.mu_2)?
        .patience(PatienceModel::Constant(a.patience))
        .t_local(spec.system.t_local)
        .lambda_tar(spec.system.lambda_tar)
        .seed(spec.seed))
}

pub fn sweep_config(spec: &ExperimentSpec) -> SweepConfig {
    let a = &spec.asymptotics;
    SweepConfig {
        grid: a.grid.clone(),
        reps: a.reps,
        target: if a.stationary_m {
            TargetBacklog::Stationary
        } else {
            TargetBacklog::Fixed(a.m)
        },
        confidence: a.confidence,
    }
}

/// [`impatience_core::asymptotics::sweep_backlog`] with one task per grid
/// point.
pub fn backlog_sweep(
    spec: &ExperimentSpec,
    kind: FeedKind,
    model: Option<&ActorCritic>,
) -> AppResult<BacklogSweep> {
    let cfg = sweep_system(spec)?;
    let sweep = sweep_config(spec);
    check_sweep(&cfg, &sweep)?;
    let points = sweep
        .grid
        .par_iter()
        .map(|&n| {
            let mut feed = AnyFeed::new(kind, &spec.feed, model)?;
            Ok(backlog_point(&cfg, &mut feed, n, &sweep)?)
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(BacklogSweep::from_points(points, sweep.confidence)?)
}

pub fn error_profile(spec: &ExperimentSpec, kind: FeedKind, model: Option<&ActorCritic>) -> AppResult<ErrorProfile> {
    let a = &spec.asymptotics;
    let cfg = ErrorProfileConfig {
        k_j: a.m,
        mu_j: a.mu_2,
        patience: a.patience,
        seed: spec.seed,
        ..ErrorProfileConfig::new(a.grid.clone(), a.error_reps, a.mu_1)
    };
    Ok(sublinear_error_profile(&AnyEstimator::new(kind, model)?, &cfg)?)
}

/// Agreement of the feed's switch decisions with the Markov estimator's.
pub fn agreement(spec: &ExperimentSpec, kind: FeedKind, model: Option<&ActorCritic>) -> AppResult<Vec<AgreementPoint>> {
    let a = &spec.asymptotics;
    let cfg = AgreementConfig {
        grid: a.grid.clone(),
        reps: a.agreement_reps,
        m: a.m,
        mu_1: a.mu_1,
        mu_2: a.mu_2,
        patience: PatienceModel::Constant(a.patience),
        seed: spec.seed,
    };
    Ok(decision_agreement(&AnyEstimator::new(kind, model)?, &MarkovEstimator, &cfg)?)
}

pub fn chernoff(spec: &ExperimentSpec) -> AppResult<Vec<ChernoffRow>> {
    let a = &spec.asymptotics;
    Ok(chernoff_check(a.mu_1, &CHERNOFF_N, &CHERNOFF_X, a.chernoff_reps, spec.seed)?)
}

/// The successful-jockey curve is not required to be monotone: a request
/// near the head of its queue seldom moves, so the curve first rises.
pub fn sweep_passes(s: &BacklogSweep) -> bool {
    s.renege_trend_ok() && s.limits_reached(RENEGE_TARGET, JOCKEY_TARGET) && s.violations().total() == 0
}

pub fn chernoff_passes(rows: &[ChernoffRow]) -> bool {
    let exact = rate_function(1.0) == 0.0 && (rate_function(2.0) - (1.0 - std::f64::consts::LN_2)).abs() <= 1e-12;
    exact && rows.iter().all(|r| r.holds(CHERNOFF_SLACK))
}

fn half_width(band: (f64, f64)) -> f64 {
    0.5 * (band.1 - band.0)
}

/// Runs the four checks for one feed and writes one CSV per check and
/// `summary.json`.
pub fn asymptotics(spec: &ExperimentSpec, out: &Path, kind: FeedKind) -> AppResult<AsymptoticsReport> {
    spec.validate()?;
    let model = if kind == FeedKind::Learned {
        Some(load_model(spec)?)
    } else {
        None
    };
    let model = model.as_ref();
    let mut checks = Vec::new();

    let sweep = backlog_sweep(spec, kind, model)?;
    let (rfit, jfit) = (sweep.renege_fit(), sweep.jockey_fit());
    let rows = sweep.points.iter().enumerate().map(|(i, p)| {
        csv_row![
            p.n,
            p.renege,
            half_width(p.renege_band),
            rfit[i],
            p.successful_jockey,
            half_width(p.successful_jockey_band),
            jfit[i],
            p.reps,
            p.violations.total()
        ]
    });
    write_table(&out.join("backlog_sweep.csv"), output::BACKLOG_SWEEP, rows)?;
    let last = sweep.last();
    checks.push(CheckResult {
        name: "backlog_sweep",
        passed: sweep_passes(&sweep),
        detail: format!(
            "n={}: renege {} (target >= {RENEGE_TARGET}), successful jockey {} (target <= {JOCKEY_TARGET}), \
             renege trend ok {}, jockey non-increasing {}, path violations {}",
            last.n,
            last.renege,
            last.successful_jockey,
            sweep.renege_trend_ok(),
            sweep.jockey_trend_ok(),
            sweep.violations().total()
        ),
    });

    let profile = error_profile(spec, kind, model)?;
    let rows = profile.grid.iter().zip(&profile.ratios).zip(&profile.medians).map(|((n, r), m)| {
        csv_row![n, m, percentile_sorted(r, 10.0), percentile_sorted(r, 90.0)]
    });
    write_table(&out.join("sublinear_error.csv"), output::ERROR_PROFILE, rows)?;
    checks.push(CheckResult {
        name: "sublinear_error",
        passed: profile.is_sublinear(),
        detail: format!(
            "median error ratio {} at n={} and {} at n={}, slope {}",
            profile.medians[0],
            profile.grid[0],
            profile.medians[profile.medians.len() - 1],
            profile.grid[profile.grid.len() - 1],
            profile.slope
        ),
    });

    let points = agreement(spec, kind, model)?;
    let rows = points
        .iter()
        .map(|p| csv_row![p.n, p.between, p.a_vs_truth, p.b_vs_truth, p.mean_says_switch]);
    write_table(&out.join("decision_agreement.csv"), output::AGREEMENT, rows)?;
    let tail = points[points.len() - 1];
    checks.push(CheckResult {
        name: "decision_agreement",
        passed: tail.between >= AGREEMENT_TARGET,
        detail: format!("agreement {} at n={} (target >= {AGREEMENT_TARGET})", tail.between, tail.n),
    });

    let rows = chernoff(spec)?;
    write_table(
        &out.join("chernoff.csv"),
        output::CHERNOFF,
        rows.iter().map(|r| {
            csv_row![
                r.n,
                r.x,
                if r.upper { "upper" } else { "lower" },
                r.empirical,
                r.std_error,
                r.bound,
                r.holds(CHERNOFF_SLACK)
            ]
        }),
    )?;
    let held = rows.iter().filter(|r| r.holds(CHERNOFF_SLACK)).count();
    checks.push(CheckResult {
        name: "chernoff",
        passed: chernoff_passes(&rows),
        detail: format!("{held}/{} tails within exp(-n I) + {CHERNOFF_SLACK} standard errors", rows.len()),
    });

    let report = AsymptoticsReport {
        feed: kind.as_str(),
        seed: spec.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    write_json(&out.join("summary.json"), &report)?;
    Ok(report)
}
