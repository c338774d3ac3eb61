use std::path::Path;

use impatience_core::actor_critic::ActorCritic;
use impatience_core::asymptotics::{profile_point, replication_stream, BacklogProfile, ProfileConfig, ShapeReport, TargetBacklog};
use impatience_core::rng::SimRng;
use impatience_core::sim::{run, RunOptions, SimMetrics};
use rayon::prelude::*;
use serde::Serialize;

use super::{load_model, write_json};
use crate::csv_row;
use crate::error::AppResult;
use crate::feeds::AnyFeed;
use crate::output::{self, write_table, write_trace};
use crate::spec::{ExperimentSpec, FeedKind};

/// Salt of the replication streams of `simulate`.
const SALT: u8 = 6;

/// Jockey decay and final renege ratio the profile shape must reach.
pub const SHAPE_MIN_DECAY: f64 = 0.8;
pub const SHAPE_MIN_RENEGE_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
struct Job {
    feed: FeedKind,
    lambda_index: usize,
    lambda: f64,
    rep: u64,
}

struct JobResult {
    job: Job,
    delta: f64,
    mu: [f64; 2],
    metrics: SimMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub replications: u64,
    pub mean_sojourn: f64,
    pub renege_fraction: f64,
    pub jockey_fraction: f64,
    pub successful_jockey_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeSummary {
    pub peak_queue_size: u64,
    pub peak_jockey_rate: f64,
    pub midpoint_queue_size: u64,
    pub jockey_decay: f64,
    pub renege_final_ratio: f64,
    pub passed: bool,
}

impl From<ShapeReport> for ShapeSummary {
    fn from(s: ShapeReport) -> Self {
        Self {
            peak_queue_size: s.peak_n,
            peak_jockey_rate: s.peak_rate,
            midpoint_queue_size: s.midpoint_n,
            jockey_decay: s.jockey_decay,
            renege_final_ratio: s.renege_final_ratio,
            passed: s.passes(SHAPE_MIN_DECAY, SHAPE_MIN_RENEGE_RATIO),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedSummary {
    pub feed: &'static str,
    pub by_lambda: Vec<LambdaSummary>,
    pub profile: Option<ShapeSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub name: String,
    pub seed: u64,
    pub runs: usize,
    pub feeds: Vec<FeedSummary>,
}

/// The backlog profile configuration implied by a spec.
pub fn profile_config(spec: &ExperimentSpec) -> ProfileConfig {
    ProfileConfig {
        grid: spec.simulate.profile_grid.clone(),
        reps: spec.simulate.profile_reps,
        lambda_set: spec.system.lambda_set.clone(),
        delta_fraction: spec.system.delta_fraction,
        patience: spec.system.patience.model(),
        t_local: spec.system.t_local,
        target: TargetBacklog::Fixed(spec.asymptotics.m),
        seed: spec.seed,
    }
}

/// Jockey and renege rates against the tagged request's backlog, one grid
/// point per task.
pub fn backlog_profile(
    spec: &ExperimentSpec,
    kind: FeedKind,
    model: Option<&ActorCritic>,
) -> AppResult<BacklogProfile> {
    let cfg = profile_config(spec);
    cfg.validate()?;
    let points = cfg
        .grid
        .par_iter()
        .map(|&n| {
            let mut feed = AnyFeed::new(kind, &spec.feed, model)?;
            Ok(profile_point(&cfg, &mut feed, n)?)
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(BacklogProfile::from_points(points)?)
}

fn run_job(spec: &ExperimentSpec, job: Job, model: Option<&ActorCritic>, traces: Option<&Path>) -> AppResult<JobResult> {
    let stream = replication_stream(SALT, job.lambda_index as u64, job.rep);
    let half = job.lambda / 2.0;
    let delta = match spec.system.delta {
        Some(d) => d,
        None => {
            let bound = spec.system.delta_fraction * half;
            SimRng::new(spec.seed, stream | 1 << 63).uniform_in(-bound, bound)
        }
    };
    let cfg = spec.system.system(job.lambda, delta, spec.seed)?;
    let s = &spec.simulate;
    let opts = RunOptions {
        horizon: s.horizon,
        warmup: s.warmup_fraction * s.horizon,
        sample_interval: if s.samples == 0 { 0.0 } else { s.horizon / s.samples as f64 },
        stream,
        record_trace: traces.is_some(),
    };
    let mut feed = AnyFeed::new(job.feed, &spec.feed, model)?;
    let out = run(&cfg, &mut feed, &opts)?;
    if let Some(dir) = traces {
        let name = format!("{}_lambda{}_rep{}.csv", job.feed.as_str(), job.lambda, job.rep);
        write_trace(&dir.join(name), &out.trace)?;
    }
    Ok(JobResult {
        job,
        delta,
        mu: [cfg.mu_i, cfg.mu_j],
        metrics: out.metrics,
    })
}

fn metrics_row(r: &JobResult) -> Vec<String> {
    let m = &r.metrics;
    let [q0, q1] = &m.queues;
    csv_row![
        r.job.feed.as_str(),
        r.job.lambda,
        r.job.rep,
        r.delta,
        r.mu[0],
        r.mu[1],
        m.admitted,
        m.completed,
        m.reneged,
        m.jockeying_requests,
        m.served_after_jockey,
        m.successful_jockey_fraction,
        m.mean_sojourn,
        m.p50_sojourn,
        m.p90_sojourn,
        m.p99_sojourn,
        q0.mean_length,
        q1.mean_length,
        q0.renege_rate_per_arrival,
        q1.renege_rate_per_arrival,
        q0.jockey_rate_per_arrival,
        q1.jockey_rate_per_arrival,
    ]
}

fn summarize(results: &[JobResult], feed: FeedKind, lambda: f64) -> LambdaSummary {
    let rs: Vec<&JobResult> = results
        .iter()
        .filter(|r| r.job.feed == feed && r.job.lambda == lambda)
        .collect();
    let sum = |f: &dyn Fn(&SimMetrics) -> f64| rs.iter().map(|r| f(&r.metrics)).sum::<f64>();
    let admitted = sum(&|m| m.admitted as f64);
    let frac = |num: f64| if admitted > 0.0 { num / admitted } else { 0.0 };
    let jockeying = sum(&|m| m.jockeying_requests as f64);
    LambdaSummary {
        lambda,
        replications: rs.len() as u64,
        mean_sojourn: frac(sum(&|m| m.mean_sojourn * m.admitted as f64)),
        renege_fraction: frac(sum(&|m| m.reneged as f64)),
        jockey_fraction: frac(jockeying),
        successful_jockey_fraction: if jockeying > 0.0 {
            sum(&|m| m.served_after_jockey as f64) / jockeying
        } else {
            0.0
        },
    }
}

/// Runs every feed over the arrival-rate set and writes `metrics.csv`,
/// `series.csv`, `profile_<feed>.csv`, optional traces and `summary.json`.
pub fn simulate(spec: &ExperimentSpec, out: &Path) -> AppResult<SimulateSummary> {
    spec.validate()?;
    let model = if spec.simulate.feeds.contains(&FeedKind::Learned) {
        Some(load_model(spec)?)
    } else {
        None
    };
    let model = model.as_ref();
    let traces = spec.simulate.trace.then(|| out.join("traces"));

    let mut jobs = Vec::new();
    for &feed in &spec.simulate.feeds {
        for (lambda_index, &lambda) in spec.system.lambda_set.iter().enumerate() {
            for rep in 0..spec.simulate.replications {
                jobs.push(Job {
                    feed,
                    lambda_index,
                    lambda,
                    rep,
                });
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&job| run_job(spec, job, model, traces.as_deref()))
        .collect::<AppResult<Vec<_>>>()?;

    write_table(&out.join("metrics.csv"), output::METRICS, results.iter().map(metrics_row))?;
    let series = results.iter().flat_map(|r| {
        r.metrics.series.iter().map(move |p| {
            csv_row![r.job.feed.as_str(), r.job.lambda, r.job.rep, p.time, p.len[0], p.len[1], p.reneges, p.jockeys]
        })
    });
    write_table(&out.join("series.csv"), output::SERIES, series)?;

    let mut feeds = Vec::new();
    for &feed in &spec.simulate.feeds {
        let profile = if spec.simulate.profile_reps > 0 {
            let p = backlog_profile(spec, feed, model)?;
            let rows = p.points.iter().map(|q| {
                csv_row![
                    q.n,
                    q.renege_rate,
                    q.jockey_rate,
                    q.successful_jockeys as f64 / q.reps as f64,
                    q.reps
                ]
            });
            write_table(&out.join(format!("profile_{}.csv", feed.as_str())), output::PROFILE, rows)?;
            Some(p.shape().into())
        } else {
            None
        };
        feeds.push(FeedSummary {
            feed: feed.as_str(),
            by_lambda: spec
                .system
                .lambda_set
                .iter()
                .map(|&l| summarize(&results, feed, l))
                .collect(),
            profile,
        });
    }
    let summary = SimulateSummary {
        name: spec.name.clone(),
        seed: spec.seed,
        runs: results.len(),
        feeds,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
