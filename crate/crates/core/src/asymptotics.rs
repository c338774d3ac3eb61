//! Desk-scale statistical checks of the large-backlog limits.
//!
//! The limit statements (abandonment probability tending to one, successful
//! jockeying tending to zero, robustness of decisions to sublinear estimator
//! error, exponential tails of service-time means) cannot be tested
//! literally. Each check here evaluates the finite-sample analogue on a
//! backlog grid, with Wilson intervals for proportions and an isotonic fit
//! for trends.
//!
//! Every replication owns its RNG stream, derived from the grid point and
//! replication index, so points can be computed in any order or in parallel
//! and combined with [`BacklogSweep::from_points`] or
//! [`BacklogProfile::from_points`].

use alloc::vec::Vec;

use libm::log;

use crate::actor_critic::PolicyState;
use crate::config::{sample_patience, PatienceModel, SystemConfig, LAMBDA_SET};
use crate::error::{invalid, Error, Result};
use crate::estimate::WaitEstimator;
use crate::rng::SimRng;
use crate::sim::feed::InformationFeed;
use crate::sim::metrics::Outcome;
use crate::sim::{run_tagged, TaggedResult, TaggedStart};
use crate::stats::{isotonic_decreasing, isotonic_increasing, least_squares_slope, median, wilson_interval};

/// Cramér rate function of unit-mean exponential sample means.
pub fn rate_function(x: f64) -> f64 {
    if x > 0.0 {
        x - 1.0 - log(x)
    } else {
        f64::INFINITY
    }
}

/// Stream id of replication `rep` at backlog `n`; `salt` separates checks.
pub fn replication_stream(salt: u8, n: u64, rep: u64) -> u64 {
    ((salt as u64) << 56) | ((n & 0xFF_FFFF) << 32) | (rep & 0xFFFF_FFFF)
}

fn validate_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid", "need a non-empty, strictly increasing backlog grid"));
    }
    Ok(())
}

fn validate_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid("confidence", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Length of the alternative queue when the tagged request arrives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetBacklog {
    Fixed(u64),
    /// Drawn from the stationary M/M/1 law of the alternative queue; needs
    /// `lambda_j < mu_j`.
    Stationary,
}

impl TargetBacklog {
    fn draw(&self, cfg: &SystemConfig, rng: &mut SimRng) -> Result<u64> {
        match *self {
            TargetBacklog::Fixed(m) => Ok(m),
            TargetBacklog::Stationary => {
                let rho = cfg.lambda_j / cfg.mu_j;
                if !(rho < 1.0) {
                    return Err(Error::Unstable(rho));
                }
                // Geometric number of failures with success probability 1 - rho.
                let mut m = 0;
                while rng.uniform() < rho {
                    m += 1;
                }
                Ok(m)
            }
        }
    }
}

/// Per-replication path checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathViolations {
    /// Served after a jockey but the wait exceeded the patience budget.
    pub jockey_over_budget: u64,
    /// Stayed and was served, but the wait differs from the work ahead.
    pub stay_wait_mismatch: u64,
}

impl PathViolations {
    pub fn total(&self) -> u64 {
        self.jockey_over_budget + self.stay_wait_mismatch
    }

    fn record(&mut self, r: &TaggedResult) {
        match r.outcome {
            Outcome::ServedAfterJockey if r.wait > r.patience => self.jockey_over_budget += 1,
            Outcome::Served => {
                if let Some(work) = r.ahead_work {
                    if (r.wait - work).abs() > 1e-9 * work.max(1.0) {
                        self.stay_wait_mismatch += 1;
                    }
                }
            }
            _ => {}
        }
    }

    fn merge(&mut self, other: &PathViolations) {
        self.jockey_over_budget += other.jockey_over_budget;
        self.stay_wait_mismatch += other.stay_wait_mismatch;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub grid: Vec<u64>,
    pub reps: u64,
    pub target: TargetBacklog,
    pub confidence: f64,
}

impl SweepConfig {
    /// Powers of two from 1 to 256, 2000 replications, `m = 3`.
    pub fn new() -> Self {
        Self {
            grid: (0..=8).map(|e| 1u64 << e).collect(),
            reps: 2000,
            target: TargetBacklog::Fixed(3),
            confidence: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.grid)?;
        if self.reps == 0 {
            return Err(invalid("reps", "need at least one replication"));
        }
        validate_confidence(self.confidence)
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacklogPoint {
    pub n: u64,
    pub reps: u64,
    pub reneges: u64,
    pub successful_jockeys: u64,
    pub renege: f64,
    pub renege_band: (f64, f64),
    pub successful_jockey: f64,
    pub successful_jockey_band: (f64, f64),
    pub violations: PathViolations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacklogSweep {
    pub points: Vec<BacklogPoint>,
    pub confidence: f64,
}

/// Estimates both probabilities at one backlog: the tagged request arrives
/// behind `n` requests with the alternative queue at the configured target.
pub fn backlog_point<F: InformationFeed + ?Sized>(
    cfg: &SystemConfig,
    feed: &mut F,
    n: u64,
    sweep: &SweepConfig,
) -> Result<BacklogPoint> {
    let mut reneges = 0;
    let mut successes = 0;
    let mut violations = PathViolations::default();
    for rep in 0..sweep.reps {
        let stream = replication_stream(1, n, rep);
        let mut draw = SimRng::new(cfg.seed, stream | 1 << 63);
        let other = sweep.target.draw(cfg, &mut draw)?;
        let r = run_tagged(cfg, feed, TaggedStart { ahead: n, other }, stream)?;
        violations.record(&r);
        match r.outcome {
            Outcome::Reneged => reneges += 1,
            Outcome::ServedAfterJockey => successes += 1,
            Outcome::Served => {}
        }
    }
    let reps = sweep.reps;
    Ok(BacklogPoint {
        n,
        reps,
        reneges,
        successful_jockeys: successes,
        renege: reneges as f64 / reps as f64,
        renege_band: wilson_interval(reneges, reps, sweep.confidence),
        successful_jockey: successes as f64 / reps as f64,
        successful_jockey_band: wilson_interval(successes, reps, sweep.confidence),
        violations,
    })
}

/// Runs [`backlog_point`] over the whole grid. Requires `mu_i != mu_j`.
pub fn sweep_backlog<F: InformationFeed + ?Sized>(
    cfg: &SystemConfig,
    feed: &mut F,
    sweep: &SweepConfig,
) -> Result<BacklogSweep> {
    check_sweep(cfg, sweep)?;
    let points = sweep
        .grid
        .iter()
        .map(|&n| backlog_point(cfg, feed, n, sweep))
        .collect::<Result<Vec<_>>>()?;
    BacklogSweep::from_points(points, sweep.confidence)
}

/// Preconditions of [`sweep_backlog`], for callers that evaluate points
/// themselves.
pub fn check_sweep(cfg: &SystemConfig, sweep: &SweepConfig) -> Result<()> {
    sweep.validate()?;
    cfg.validate()?;
    if cfg.mu_i == cfg.mu_j {
        return Err(invalid("mu", "the sweep needs distinct service rates"));
    }
    if !is_finite_patience(&cfg.patience) {
        return Err(invalid("patience", "the sweep needs a finite patience budget"));
    }
    Ok(())
}

fn is_finite_patience(model: &PatienceModel) -> bool {
    match *model {
        PatienceModel::Constant(t) => t.is_finite(),
        PatienceModel::Exponential { .. } => true,
    }
}

/// Whether every raw estimate lies inside its band around the monotone fit.
fn within_bands(fit: &[f64], bands: impl Iterator<Item = (f64, f64)>) -> bool {
    fit.iter().zip(bands).all(|(f, (lo, hi))| *f >= lo - 1e-12 && *f <= hi + 1e-12)
}

impl BacklogSweep {
    pub fn from_points(mut points: Vec<BacklogPoint>, confidence: f64) -> Result<Self> {
        points.sort_by_key(|p| p.n);
        if points.is_empty() || points.windows(2).any(|w| w[0].n == w[1].n) {
            return Err(invalid("grid", "need distinct backlog points"));
        }
        Ok(Self { points, confidence })
    }

    fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.reps as f64).collect()
    }

    /// Non-decreasing fit of the renege estimates.
    pub fn renege_fit(&self) -> Vec<f64> {
        let v: Vec<f64> = self.points.iter().map(|p| p.renege).collect();
        isotonic_increasing(&v, &self.weights())
    }

    /// Non-increasing fit of the successful-jockey estimates.
    pub fn jockey_fit(&self) -> Vec<f64> {
        let v: Vec<f64> = self.points.iter().map(|p| p.successful_jockey).collect();
        isotonic_decreasing(&v, &self.weights())
    }

    /// The renege curve is non-decreasing up to its confidence bands.
    pub fn renege_trend_ok(&self) -> bool {
        within_bands(&self.renege_fit(), self.points.iter().map(|p| p.renege_band))
    }

    /// The successful-jockey curve is non-increasing up to its bands.
    pub fn jockey_trend_ok(&self) -> bool {
        within_bands(&self.jockey_fit(), self.points.iter().map(|p| p.successful_jockey_band))
    }

    pub fn last(&self) -> &BacklogPoint {
        self.points.last().expect("non-empty sweep")
    }

    pub fn violations(&self) -> PathViolations {
        let mut v = PathViolations::default();
        for p in &self.points {
            v.merge(&p.violations);
        }
        v
    }

    /// Renege estimate at the largest backlog reaches `renege_target` and the
    /// successful-jockey estimate there stays at or below `jockey_target`.
    pub fn limits_reached(&self, renege_target: f64, jockey_target: f64) -> bool {
        let p = self.last();
        p.renege >= renege_target && p.successful_jockey <= jockey_target
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfileConfig {
    pub grid: Vec<u64>,
    pub reps: u64,
    /// Service rate of the tagged queue.
    pub mu: f64,
    /// State of the alternative queue and the patience shown to the
    /// estimator; they do not enter the true wait.
    pub k_j: u64,
    pub mu_j: f64,
    pub patience: f64,
    pub seed: u64,
}

impl ErrorProfileConfig {
    pub fn new(grid: Vec<u64>, reps: u64, mu: f64) -> Self {
        Self {
            grid,
            reps,
            mu,
            k_j: 3,
            mu_j: 2.0 * mu,
            patience: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    pub grid: Vec<u64>,
    /// Per grid point, the sorted ratios `|W_hat(n) - W(n)| / n`.
    pub ratios: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// Least-squares slope of the median ratio against `ln n`.
    pub slope: f64,
}

impl ErrorProfile {
    pub fn median_at(&self, n: u64) -> Option<f64> {
        self.grid.iter().position(|&g| g == n).map(|i| self.medians[i])
    }

    /// The median ratio falls along the grid and at least halves from the
    /// first to the last point.
    pub fn is_sublinear(&self) -> bool {
        let (first, last) = (self.medians[0], self.medians[self.medians.len() - 1]);
        self.slope < 0.0 && last <= 0.5 * first
    }
}

/// Realized relative errors of `estimator` against Erlang(n, mu) waits.
pub fn sublinear_error_profile<E: WaitEstimator + ?Sized>(
    estimator: &E,
    cfg: &ErrorProfileConfig,
) -> Result<ErrorProfile> {
    validate_grid(&cfg.grid)?;
    if cfg.grid[0] == 0 || cfg.grid.len() < 2 {
        return Err(invalid("grid", "need at least two positive backlogs"));
    }
    if cfg.reps == 0 {
        return Err(invalid("reps", "need at least one replication"));
    }
    let mut ratios = Vec::with_capacity(cfg.grid.len());
    for &n in &cfg.grid {
        let state = PolicyState::new(n, cfg.k_j, cfg.mu, cfg.mu_j, cfg.patience);
        let w_hat = estimator.estimate_wait(&state)?.value;
        let mut rng = SimRng::new(cfg.seed, replication_stream(2, n, 0));
        let mut r: Vec<f64> = (0..cfg.reps)
            .map(|_| (w_hat - rng.erlang(n, cfg.mu)).abs() / n as f64)
            .collect();
        r.sort_by(f64::total_cmp);
        ratios.push(r);
    }
    let medians: Vec<f64> = ratios.iter().map(|r| median(r)).collect();
    let logs: Vec<f64> = cfg.grid.iter().map(|&n| log(n as f64)).collect();
    Ok(ErrorProfile {
        grid: cfg.grid.clone(),
        slope: least_squares_slope(&logs, &medians),
        ratios,
        medians,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementConfig {
    pub grid: Vec<u64>,
    pub reps: u64,
    /// Backlog of queue 2.
    pub m: u64,
    pub mu_1: f64,
    pub mu_2: f64,
    /// Patience shown to the estimators, drawn once per replication.
    pub patience: PatienceModel,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementPoint {
    pub n: u64,
    /// Fraction of replications where both feeds rank the queues alike.
    pub between: f64,
    /// Fraction where each feed's ranking matches the realized waits.
    pub a_vs_truth: f64,
    pub b_vs_truth: f64,
    /// Ranking by the true means `n / mu_1` against `m / mu_2`.
    pub mean_says_switch: bool,
}

/// Compares the sign of `W_hat_1(n) - W_hat_2(m)` between two estimators and
/// against realized waits.
///
/// Queue 1 is described by `(n, m, mu_1, mu_2, T)` and queue 2 by the swapped
/// state `(m, n, mu_2, mu_1, T)`.
pub fn decision_agreement<A: WaitEstimator + ?Sized, B: WaitEstimator + ?Sized>(
    a: &A,
    b: &B,
    cfg: &AgreementConfig,
) -> Result<Vec<AgreementPoint>> {
    validate_grid(&cfg.grid)?;
    if cfg.reps == 0 {
        return Err(invalid("reps", "need at least one replication"));
    }
    let mut out = Vec::with_capacity(cfg.grid.len());
    for &n in &cfg.grid {
        let mut rng = SimRng::new(cfg.seed, replication_stream(3, n, 0));
        let (mut between, mut a_ok, mut b_ok) = (0u64, 0u64, 0u64);
        for _ in 0..cfg.reps {
            let t = sample_patience(&cfg.patience, &mut rng)?;
            let s1 = PolicyState::new(n, cfg.m, cfg.mu_1, cfg.mu_2, t);
            let s2 = s1.swapped();
            let sa = a.estimate_wait(&s1)?.value > a.estimate_wait(&s2)?.value;
            let sb = b.estimate_wait(&s1)?.value > b.estimate_wait(&s2)?.value;
            let truth = rng.erlang(n, cfg.mu_1) > rng.erlang(cfg.m, cfg.mu_2);
            between += (sa == sb) as u64;
            a_ok += (sa == truth) as u64;
            b_ok += (sb == truth) as u64;
        }
        let reps = cfg.reps as f64;
        out.push(AgreementPoint {
            n,
            between: between as f64 / reps,
            a_vs_truth: a_ok as f64 / reps,
            b_vs_truth: b_ok as f64 / reps,
            mean_says_switch: n as f64 / cfg.mu_1 > cfg.m as f64 / cfg.mu_2,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffRow {
    pub n: u64,
    pub x: f64,
    /// Upper tail `Pr{S_n/n >= x}` when `x` exceeds the mean, lower tail
    /// `Pr{S_n/n <= x}` otherwise.
    pub upper: bool,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl ChernoffRow {
    /// Empirical tail within the bound plus `k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        self.empirical <= self.bound + k * self.std_error
    }
}

/// Empirical tails of means of `n` Exp(mu) draws against
/// `exp(-n I(x mu))`.
pub fn chernoff_check(mu: f64, n_grid: &[u64], x_grid: &[f64], reps: u64, seed: u64) -> Result<Vec<ChernoffRow>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("mu", "must be positive"));
    }
    if reps == 0 || n_grid.contains(&0) || x_grid.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("grid", "need positive n, positive x and at least one replication"));
    }
    let mut rows = Vec::with_capacity(n_grid.len() * x_grid.len());
    for &n in n_grid {
        let mut rng = SimRng::new(seed, replication_stream(4, n, 0));
        let means: Vec<f64> = (0..reps).map(|_| rng.erlang(n, mu) / n as f64).collect();
        for &x in x_grid {
            let upper = x * mu >= 1.0;
            let hits = means.iter().filter(|&&s| if upper { s >= x } else { s <= x }).count();
            let p = hits as f64 / reps as f64;
            rows.push(ChernoffRow {
                n,
                x,
                upper,
                empirical: p,
                std_error: libm::sqrt(p * (1.0 - p) / reps as f64),
                bound: libm::exp(-(n as f64) * rate_function(x * mu)),
            });
        }
    }
    Ok(rows)
}

/// Checks `I >= 0`, `I(1) = 0` and midpoint convexity on a grid over
/// `(0, x_max]`.
pub fn rate_function_is_convex(x_max: f64, points: usize) -> bool {
    let xs: Vec<f64> = (1..=points).map(|i| x_max * i as f64 / points as f64).collect();
    let nonneg = xs.iter().all(|&x| rate_function(x) >= 0.0);
    let convex = xs.windows(2).all(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        rate_function(mid) <= 0.5 * (rate_function(w[0]) + rate_function(w[1])) + 1e-15
    });
    nonneg && convex && rate_function(1.0) == 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub grid: Vec<u64>,
    pub reps: u64,
    /// Total arrival rate is drawn from this set per replication.
    pub lambda_set: Vec<f64>,
    /// `delta_lambda` is uniform on `+-delta_fraction * lambda/2`.
    pub delta_fraction: f64,
    pub patience: PatienceModel,
    pub t_local: f64,
    pub target: TargetBacklog,
    pub seed: u64,
}

impl ProfileConfig {
    pub fn new(grid: Vec<u64>, reps: u64) -> Self {
        Self {
            grid,
            reps,
            lambda_set: LAMBDA_SET.to_vec(),
            delta_fraction: 0.8,
            patience: PatienceModel::Constant(2.0),
            t_local: 1.0,
            target: TargetBacklog::Fixed(3),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.grid)?;
        if self.reps == 0 {
            return Err(invalid("reps", "need at least one replication"));
        }
        if self.lambda_set.is_empty() || self.lambda_set.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(invalid("lambda_set", "need positive arrival rates"));
        }
        if !(0.0..1.0).contains(&self.delta_fraction) {
            return Err(invalid("delta_fraction", "must lie in [0, 1)"));
        }
        self.patience.validate()
    }

    /// System of replication `rep` at backlog `n`.
    pub fn system(&self, n: u64, rep: u64) -> Result<(SystemConfig, u64)> {
        let mut rng = SimRng::new(self.seed, replication_stream(5, n, rep) | 1 << 63);
        let lambda = self.lambda_set[rng.below(self.lambda_set.len())];
        let half = lambda / 2.0;
        let delta = rng.uniform_in(-self.delta_fraction * half, self.delta_fraction * half);
        let cfg = SystemConfig::derived(half, half, delta)?
            .patience(self.patience)
            .t_local(self.t_local)
            .seed(self.seed);
        let other = self.target.draw(&cfg, &mut rng)?;
        Ok((cfg, other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub n: u64,
    pub reps: u64,
    pub jockeys: u64,
    pub reneges: u64,
    pub successful_jockeys: u64,
    /// Fraction of replications that jockeyed at least once.
    pub jockey_rate: f64,
    pub renege_rate: f64,
}

/// Jockeying and reneging rates against the initial backlog, pooled over
/// randomly drawn systems.
#[derive(Debug, Clone, PartialEq)]
pub struct BacklogProfile {
    pub points: Vec<ProfilePoint>,
}

pub fn profile_point<F: InformationFeed + ?Sized>(cfg: &ProfileConfig, feed: &mut F, n: u64) -> Result<ProfilePoint> {
    let (mut jockeys, mut reneges, mut successes) = (0, 0, 0);
    for rep in 0..cfg.reps {
        let (sys, other) = cfg.system(n, rep)?;
        let r = run_tagged(&sys, feed, TaggedStart { ahead: n, other }, replication_stream(5, n, rep))?;
        jockeys += (r.jockeys > 0) as u64;
        match r.outcome {
            Outcome::Reneged => reneges += 1,
            Outcome::ServedAfterJockey => successes += 1,
            Outcome::Served => {}
        }
    }
    Ok(ProfilePoint {
        n,
        reps: cfg.reps,
        jockeys,
        reneges,
        successful_jockeys: successes,
        jockey_rate: jockeys as f64 / cfg.reps as f64,
        renege_rate: reneges as f64 / cfg.reps as f64,
    })
}

pub fn backlog_profile<F: InformationFeed + ?Sized>(cfg: &ProfileConfig, feed: &mut F) -> Result<BacklogProfile> {
    cfg.validate()?;
    let points = cfg
        .grid
        .iter()
        .map(|&n| profile_point(cfg, feed, n))
        .collect::<Result<Vec<_>>>()?;
    BacklogProfile::from_points(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub peak_n: u64,
    pub peak_rate: f64,
    /// Grid value at index `len / 2`.
    pub midpoint_n: u64,
    /// `1 - last / peak` for the jockeying rate.
    pub jockey_decay: f64,
    /// Renege rate at the largest backlog over its running maximum.
    pub renege_final_ratio: f64,
}

impl ShapeReport {
    /// Jockeying peaks below the grid midpoint and decays by `min_decay`;
    /// reneging at the largest backlog stays within `min_renege_ratio` of its
    /// running maximum.
    pub fn passes(&self, min_decay: f64, min_renege_ratio: f64) -> bool {
        self.peak_rate > 0.0
            && self.peak_n < self.midpoint_n
            && self.jockey_decay >= min_decay
            && self.renege_final_ratio >= min_renege_ratio
    }
}

impl BacklogProfile {
    pub fn from_points(mut points: Vec<ProfilePoint>) -> Result<Self> {
        points.sort_by_key(|p| p.n);
        if points.is_empty() || points.windows(2).any(|w| w[0].n == w[1].n) {
            return Err(invalid("grid", "need distinct backlog points"));
        }
        Ok(Self { points })
    }

    pub fn shape(&self) -> ShapeReport {
        let pts = &self.points;
        // First index attaining the maximum.
        let peak = pts
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.jockey_rate > pts[best].jockey_rate { i } else { best });
        let last = pts[pts.len() - 1];
        let peak_rate = pts[peak].jockey_rate;
        let renege_max = pts.iter().map(|p| p.renege_rate).fold(0.0, f64::max);
        ShapeReport {
            peak_n: pts[peak].n,
            peak_rate,
            midpoint_n: pts[pts.len() / 2].n,
            jockey_decay: if peak_rate > 0.0 { 1.0 - last.jockey_rate / peak_rate } else { 0.0 },
            renege_final_ratio: if renege_max > 0.0 { last.renege_rate / renege_max } else { 0.0 },
        }
    }
}
