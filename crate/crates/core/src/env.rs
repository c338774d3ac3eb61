//! Training environment for the actor-critic and the online training loop.
//!
//! [`TenantEnv`] follows one tagged request through a dual-queue system with
//! Poisson arrivals and exponential services. One environment step is one
//! decision review: the request reneges or jockeys, then the system advances
//! to the next event. A request that reaches service, reneges or runs out of
//! patience ends its transition chain and a fresh tagged request joins.
//! Background requests never abandon.

use alloc::vec::Vec;

use crate::actor_critic::{reward, Action, ActorCritic, Losses, PolicyState, TrainerConfig, Transition, WaitSample};
use crate::config::{derive_service_rates, sample_patience, PatienceModel, LAMBDA_SET};
use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

/// How the tagged request's chain ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TenantOutcome {
    Served,
    ServedAfterJockey,
    Reneged,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// State after the step. For terminal steps this is the first state of
    /// the next tagged request.
    pub next: PolicyState,
    pub terminal: bool,
    pub outcome: Option<TenantOutcome>,
}

pub trait Environment {
    /// Starts a new episode and returns the first observation.
    fn reset(&mut self, rng: &mut SimRng) -> Result<PolicyState>;

    fn step(&mut self, action: Action, rng: &mut SimRng) -> Result<Step>;

    /// The wait the current tagged request would experience if it stayed,
    /// drawn from the queue's service process.
    fn observe_wait(&mut self, rng: &mut SimRng) -> Result<WaitSample>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TenantEnvConfig {
    /// Total arrival rate is drawn from this set at each reset, split evenly.
    pub lambda_set: Vec<f64>,
    /// `delta_lambda` is uniform on `+-delta_fraction * lambda/2`.
    pub delta_fraction: f64,
    pub patience: PatienceModel,
    /// Initial queue lengths are uniform on `0..=max_initial_backlog`.
    pub max_initial_backlog: usize,
}

impl Default for TenantEnvConfig {
    fn default() -> Self {
        Self {
            lambda_set: LAMBDA_SET.to_vec(),
            delta_fraction: 0.8,
            patience: PatienceModel::Constant(2.0),
            max_initial_backlog: 30,
        }
    }
}

impl TenantEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_set.is_empty() || self.lambda_set.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(invalid("lambda_set", "need at least one positive arrival rate"));
        }
        if !(0.0..1.0).contains(&self.delta_fraction) {
            return Err(invalid("delta_fraction", "must lie in [0, 1)"));
        }
        self.patience.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TenantEnv {
    cfg: TenantEnvConfig,
    lambda: [f64; 2],
    mu: [f64; 2],
    /// Requests in each queue, counting the tagged one and any in service.
    len: [u64; 2],
    cur: usize,
    /// Requests ahead of the tagged one, including the one in service.
    ahead: u64,
    remaining: f64,
    jockeyed: bool,
}

impl TenantEnv {
    pub fn new(cfg: TenantEnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            lambda: [0.0; 2],
            mu: [1.0; 2],
            len: [0; 2],
            cur: 0,
            ahead: 0,
            remaining: 0.0,
            jockeyed: false,
        })
    }

    pub fn rates(&self) -> ([f64; 2], [f64; 2]) {
        (self.lambda, self.mu)
    }

    pub fn state(&self) -> PolicyState {
        let other = 1 - self.cur;
        PolicyState::new(self.ahead, self.len[other], self.mu[self.cur], self.mu[other], self.remaining)
    }

    /// A new tagged request joins a uniformly chosen queue. Requests that
    /// find an idle server are served without a decision; the system then
    /// advances one event and another request is tried.
    fn spawn(&mut self, rng: &mut SimRng) -> Result<()> {
        loop {
            let q = rng.below(2);
            if self.len[q] > 0 {
                self.cur = q;
                self.ahead = self.len[q];
                self.len[q] += 1;
                self.remaining = sample_patience(&self.cfg.patience, rng)?;
                self.jockeyed = false;
                return Ok(());
            }
            self.len[q] += 1;
            self.background_event(rng, false);
        }
    }

    /// Advances the background by one event and returns its duration. With a
    /// tagged request present, returns whether that request reached service.
    fn background_event(&mut self, rng: &mut SimRng, tagged: bool) -> (f64, bool) {
        let rates = [
            self.lambda[0],
            self.lambda[1],
            if self.len[0] > 0 { self.mu[0] } else { 0.0 },
            if self.len[1] > 0 { self.mu[1] } else { 0.0 },
        ];
        let total: f64 = rates.iter().sum();
        let dt = rng.exponential(total);
        let mut u = rng.uniform() * total;
        let mut event = 3;
        for (i, r) in rates.iter().enumerate() {
            if u < *r {
                event = i;
                break;
            }
            u -= r;
        }
        let mut reached = false;
        match event {
            0 | 1 => self.len[event] += 1,
            q => {
                let q = q - 2;
                self.len[q] -= 1;
                if tagged && q == self.cur {
                    self.ahead -= 1;
                    reached = self.ahead == 0;
                }
            }
        }
        (dt, reached)
    }

    fn finish(&mut self, outcome: TenantOutcome, rng: &mut SimRng) -> Result<Step> {
        self.spawn(rng)?;
        Ok(Step {
            next: self.state(),
            terminal: true,
            outcome: Some(outcome),
        })
    }
}

impl Environment for TenantEnv {
    fn reset(&mut self, rng: &mut SimRng) -> Result<PolicyState> {
        let set = &self.cfg.lambda_set;
        let lambda = set[rng.below(set.len())];
        let half = lambda / 2.0;
        let delta = rng.uniform_in(-self.cfg.delta_fraction * half, self.cfg.delta_fraction * half);
        let (mu_i, mu_j) = derive_service_rates(half, half, delta)?;
        self.lambda = [half, half];
        self.mu = [mu_i, mu_j];
        let k = self.cfg.max_initial_backlog;
        self.len = [rng.below(k + 1) as u64, rng.below(k + 1) as u64];
        self.spawn(rng)?;
        Ok(self.state())
    }

    fn step(&mut self, action: Action, rng: &mut SimRng) -> Result<Step> {
        if self.ahead == 0 {
            return Err(Error::Environment("step called before reset".into()));
        }
        match action {
            Action::Renege => {
                self.len[self.cur] -= 1;
                return self.finish(TenantOutcome::Reneged, rng);
            }
            Action::Jockey => {
                self.len[self.cur] -= 1;
                self.cur = 1 - self.cur;
                self.ahead = self.len[self.cur];
                self.len[self.cur] += 1;
                self.jockeyed = true;
                if self.ahead == 0 {
                    return self.finish(TenantOutcome::ServedAfterJockey, rng);
                }
            }
        }
        let (dt, reached) = self.background_event(rng, true);
        self.remaining -= dt;
        if self.remaining <= 0.0 {
            self.remaining = 0.0;
            self.len[self.cur] -= 1;
            return self.finish(TenantOutcome::Expired, rng);
        }
        if reached {
            let outcome = if self.jockeyed {
                TenantOutcome::ServedAfterJockey
            } else {
                TenantOutcome::Served
            };
            return self.finish(outcome, rng);
        }
        Ok(Step {
            next: self.state(),
            terminal: false,
            outcome: None,
        })
    }

    fn observe_wait(&mut self, rng: &mut SimRng) -> Result<WaitSample> {
        let state = self.state();
        Ok(WaitSample {
            state,
            wait: rng.erlang(state.k_i, state.mu_i),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLoss {
    /// Zero-based, continuing across resumed runs.
    pub episode: usize,
    pub actor_loss: f64,
    pub critic_loss: f64,
}

impl EpisodeLoss {
    pub fn combined(&self) -> f64 {
        self.actor_loss + self.critic_loss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<EpisodeLoss>,
    /// Calibration residual (RMS wait error) after the final fit.
    pub calibration_residual: f64,
    pub wait_samples: usize,
}

/// Mean combined loss over the last `last` episodes is below the mean over the
/// first `first`.
pub fn loss_decreased(losses: &[EpisodeLoss], first: usize, last: usize) -> bool {
    if losses.len() < first.max(last) || first == 0 || last == 0 {
        return false;
    }
    let mean = |xs: &[EpisodeLoss]| xs.iter().map(EpisodeLoss::combined).sum::<f64>() / xs.len() as f64;
    mean(&losses[losses.len() - last..]) < mean(&losses[..first])
}

/// Trains `model` for `cfg.episodes` further episodes.
///
/// Episode `e` (counted from the model's first episode) draws from RNG stream
/// `e` of `cfg.seed`, so a run resumed from a checkpoint reproduces the
/// uninterrupted run. The wait calibration is refit on the samples of this
/// call.
pub fn train<E: Environment>(env: &mut E, model: &mut ActorCritic, cfg: &TrainerConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if cfg.episodes == 0 || cfg.epochs_per_episode == 0 {
        return Err(invalid("episodes", "need at least one episode and one epoch"));
    }
    let mut losses = Vec::with_capacity(cfg.episodes);
    let mut samples = Vec::with_capacity(cfg.episodes * cfg.epochs_per_episode);
    for _ in 0..cfg.episodes {
        let episode = model.episodes_done;
        let mut rng = SimRng::new(cfg.seed, episode as u64);
        let mut state = env.reset(&mut rng)?;
        let mut total = Losses::default();
        for _ in 0..cfg.epochs_per_episode {
            samples.push(env.observe_wait(&mut rng)?);
            let (action, pi) = model.act(&state, &mut rng)?;
            let r = reward(&state, action, pi, cfg.tau)?;
            let step = env.step(action, &mut rng)?;
            let t = Transition {
                state,
                action,
                reward: r,
                next_state: step.next,
                terminal: step.terminal,
            };
            let l = model.td_update(&t, cfg.gamma).map_err(|e| match e {
                Error::Divergence(msg) => Error::Divergence(alloc::format!("episode {episode}: {msg}")),
                other => other,
            })?;
            total.actor += l.actor;
            total.critic += l.critic;
            state = step.next;
        }
        let n = cfg.epochs_per_episode as f64;
        losses.push(EpisodeLoss {
            episode,
            actor_loss: total.actor / n,
            critic_loss: total.critic / n,
        });
        model.episodes_done += 1;
    }
    let calibration_residual = model.calibrate(&samples)?;
    Ok(TrainReport {
        losses,
        calibration_residual,
        wait_samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_cfg(seed: u64) -> TrainerConfig {
        TrainerConfig {
            hidden: vec![16, 16],
            episodes: 5,
            epochs_per_episode: 40,
            seed,
            ..TrainerConfig::default()
        }
    }

    #[test]
    fn episode_states_are_valid() {
        let mut env = TenantEnv::new(TenantEnvConfig::default()).unwrap();
        let mut rng = SimRng::new(3, 0);
        let mut s = env.reset(&mut rng).unwrap();
        let mut terminals = 0;
        for i in 0..2000 {
            s.validate().unwrap();
            assert!(s.k_i >= 1 && s.patience > 0.0);
            let a = if i % 3 == 0 { Action::Jockey } else { Action::Renege };
            let step = env.step(a, &mut rng).unwrap();
            terminals += step.terminal as usize;
            s = step.next;
        }
        assert!(terminals > 0);
    }

    #[test]
    fn jockey_moves_to_other_queue() {
        let mut env = TenantEnv::new(TenantEnvConfig::default()).unwrap();
        let mut rng = SimRng::new(8, 0);
        env.reset(&mut rng).unwrap();
        env.len = [10, 3];
        env.cur = 0;
        env.ahead = 6;
        env.remaining = 1e9;
        let before = env.len[0] + env.len[1];
        let step = env.step(Action::Jockey, &mut rng).unwrap();
        assert!(!step.terminal);
        assert_eq!(env.cur, 1);
        // One background event happened after the switch.
        let after = env.len[0] + env.len[1];
        assert!(after == before + 1 || after + 1 == before);
    }

    #[test]
    fn training_is_reproducible() {
        let run = || {
            let cfg = small_cfg(4);
            let mut env = TenantEnv::new(TenantEnvConfig::default()).unwrap();
            let mut model = ActorCritic::new(&cfg).unwrap();
            (train(&mut env, &mut model, &cfg).unwrap(), model)
        };
        let (a, ma) = run();
        let (b, mb) = run();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        assert_eq!(a.losses.len(), 5);
    }

    #[test]
    fn resumed_training_matches_uninterrupted() {
        let full_cfg = small_cfg(6);
        let mut env = TenantEnv::new(TenantEnvConfig::default()).unwrap();
        let mut full = ActorCritic::new(&full_cfg).unwrap();
        let full_report = train(&mut env, &mut full, &full_cfg).unwrap();

        let half_cfg = TrainerConfig {
            episodes: 2,
            ..full_cfg.clone()
        };
        let rest_cfg = TrainerConfig {
            episodes: 3,
            ..full_cfg.clone()
        };
        let mut resumed = ActorCritic::new(&half_cfg).unwrap();
        let first = train(&mut env, &mut resumed, &half_cfg).unwrap();
        let second = train(&mut env, &mut resumed, &rest_cfg).unwrap();
        let episodes: Vec<usize> = first.losses.iter().chain(&second.losses).map(|l| l.episode).collect();
        assert_eq!(episodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(resumed.actor, full.actor);
        assert_eq!(resumed.critic, full.critic);
        assert_eq!(&full_report.losses[2..], &second.losses[..]);
    }

    #[test]
    fn loss_decrease_helper() {
        let mk = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, x)| EpisodeLoss {
                    episode: i,
                    actor_loss: 0.0,
                    critic_loss: *x,
                })
                .collect::<Vec<_>>()
        };
        assert!(loss_decreased(&mk(&[3.0, 2.0, 1.0]), 1, 1));
        assert!(!loss_decreased(&mk(&[1.0, 2.0, 3.0]), 1, 1));
        assert!(!loss_decreased(&mk(&[1.0]), 2, 2));
    }
}
