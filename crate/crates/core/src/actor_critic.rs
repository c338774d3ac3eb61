//! The "experience" feed: a two-network actor-critic.
//!
//! The actor maps a [`PolicyState`] to a softmax over {renege, jockey}; the
//! critic maps it to a scalar value. Both are updated online from one-step
//! temporal-difference targets.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::estimate::{Provenance, WaitEstimate, WaitEstimator};
use crate::math::{log, sigmoid};
use crate::nn::{softmax, Adam, AdamConfig, Mlp};
use crate::rng::SimRng;

/// RNG streams used to initialize the two networks.
const ACTOR_INIT_STREAM: u64 = 0xA0;
const CRITIC_INIT_STREAM: u64 = 0xC0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Renege = 0,
    Jockey = 1,
}

impl Action {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Action::Renege
        } else {
            Action::Jockey
        }
    }
}

/// `s = (k_i, k_j, mu_i, mu_j, T)` with `T` the remaining patience budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    pub k_i: u64,
    pub k_j: u64,
    pub mu_i: f64,
    pub mu_j: f64,
    pub patience: f64,
}

impl PolicyState {
    pub fn new(k_i: u64, k_j: u64, mu_i: f64, mu_j: f64, patience: f64) -> Self {
        Self {
            k_i,
            k_j,
            mu_i,
            mu_j,
            patience,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("mu_i", self.mu_i)?;
        ensure_finite("mu_j", self.mu_j)?;
        ensure_finite("patience", self.patience)?;
        if self.mu_i <= 0.0 || self.mu_j <= 0.0 {
            return Err(invalid("mu", "service rates must be positive"));
        }
        Ok(())
    }

    /// The same state seen from the other queue.
    pub fn swapped(&self) -> Self {
        Self::new(self.k_j, self.k_i, self.mu_j, self.mu_i, self.patience)
    }
}

/// Fixed input scaling `(k/k_ref, k/k_ref, mu/rate_ref, mu/rate_ref, T/t_ref)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    pub k_ref: f64,
    pub rate_ref: f64,
    pub t_ref: f64,
}

impl Default for FeatureScale {
    fn default() -> Self {
        Self {
            k_ref: 100.0,
            rate_ref: 15.0,
            t_ref: 10.0,
        }
    }
}

impl FeatureScale {
    pub const DIM: usize = 5;

    pub fn features(&self, s: &PolicyState) -> [f64; 5] {
        [
            s.k_i as f64 / self.k_ref,
            s.k_j as f64 / self.k_ref,
            s.mu_i / self.rate_ref,
            s.mu_j / self.rate_ref,
            s.patience / self.t_ref,
        ]
    }

    /// Inverse of [`FeatureScale::features`] (queue counts are rounded).
    pub fn state(&self, x: &[f64; 5]) -> PolicyState {
        PolicyState::new(
            libm::round(x[0] * self.k_ref) as u64,
            libm::round(x[1] * self.k_ref) as u64,
            x[2] * self.rate_ref,
            x[3] * self.rate_ref,
            x[4] * self.t_ref,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_ref", self.k_ref), ("rate_ref", self.rate_ref), ("t_ref", self.t_ref)] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(invalid(name, "scale must be positive"));
            }
        }
        Ok(())
    }
}

/// Behavioral reward: `pi * sigmoid(tau (k_i/mu_i - T))` for a renege and
/// `pi * sigmoid(tau (k_i/mu_i - k_j/mu_j))` for a jockey.
pub fn reward(s: &PolicyState, action: Action, pi: f64, tau: f64) -> Result<f64> {
    if s.mu_i == 0.0 || s.mu_j == 0.0 {
        return Err(invalid("mu", "service rates must be non-zero"));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(invalid("pi", "action probability must lie in [0, 1]"));
    }
    let own = s.k_i as f64 / s.mu_i;
    let gap = match action {
        Action::Renege => own - s.patience,
        Action::Jockey => own - s.k_j as f64 / s.mu_j,
    };
    Ok(pi * sigmoid(tau * gap))
}

/// `sum_k gamma^k r_k`, accumulated backward.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Argmax over the two action values; ties go to renege.
pub fn greedy_action(q0: f64, q1: f64) -> Action {
    if q1 > q0 {
        Action::Jockey
    } else {
        Action::Renege
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub epochs_per_episode: usize,
    /// Multiplies the sigmoid argument of the reward.
    pub tau: f64,
    /// Accepted for completeness; no reward term uses it.
    pub delta: f64,
    pub hidden: Vec<usize>,
    pub features: FeatureScale,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            gamma: 0.99,
            episodes: 100,
            epochs_per_episode: 100,
            tau: 1.0,
            delta: 1.0,
            hidden: vec![128, 128],
            features: FeatureScale::default(),
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", "discount must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(invalid("beta", "Adam decay rates must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(invalid("adam_eps", "must be positive"));
        }
        if self.tau < 0.0 || self.delta < 0.0 {
            return Err(invalid("tau", "reward scaling factors must be non-negative"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(invalid("hidden", "layer widths must be positive"));
        }
        self.features.validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    fn layer_sizes(&self, outputs: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(FeatureScale::DIM);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(outputs);
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: PolicyState,
    pub action: Action,
    pub reward: f64,
    pub next_state: PolicyState,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Losses {
    pub actor: f64,
    pub critic: f64,
}

/// Loss values and parameter gradients of one transition.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub losses: Losses,
    pub advantage: f64,
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

/// Affine map from critic value to the per-request wait, so that
/// `W_hat = k_i * max(0, a + b V(s) + c / mu_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub intercept: f64,
    pub value_slope: f64,
    pub rate_slope: f64,
    /// Pairs the fit used.
    pub samples: usize,
}

impl Calibration {
    pub fn per_request(&self, value: f64, mu_i: f64) -> f64 {
        (self.intercept + self.value_slope * value + self.rate_slope / mu_i).max(0.0)
    }
}

/// A state and the wait its request actually went on to experience in its
/// current queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitSample {
    pub state: PolicyState,
    pub wait: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub features: FeatureScale,
    pub calibration: Option<Calibration>,
    /// Episodes trained so far, so resumed runs keep counting.
    pub episodes_done: usize,
}

impl ActorCritic {
    pub fn new(cfg: &TrainerConfig) -> Result<Self> {
        cfg.validate()?;
        let actor = Mlp::new(&cfg.layer_sizes(2), &mut SimRng::new(cfg.seed, ACTOR_INIT_STREAM));
        let critic = Mlp::new(&cfg.layer_sizes(1), &mut SimRng::new(cfg.seed, CRITIC_INIT_STREAM));
        Ok(Self {
            actor_opt: Adam::new(actor.n_params(), cfg.adam()),
            critic_opt: Adam::new(critic.n_params(), cfg.adam()),
            actor,
            critic,
            features: cfg.features,
            calibration: None,
            episodes_done: 0,
        })
    }

    /// `(pi(renege|s), pi(jockey|s))`.
    pub fn policy(&self, s: &PolicyState) -> Result<[f64; 2]> {
        let logits = self.actor.forward(&self.features.features(s));
        let p = softmax(&logits);
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence(alloc::format!("actor output {logits:?}")));
        }
        Ok([p[0], p[1]])
    }

    pub fn value(&self, s: &PolicyState) -> Result<f64> {
        let v = self.critic.forward(&self.features.features(s))[0];
        if !v.is_finite() {
            return Err(Error::Divergence(alloc::format!("critic output {v}")));
        }
        Ok(v)
    }

    /// Samples an action from the policy and returns it with its probability.
    pub fn act(&self, s: &PolicyState, rng: &mut SimRng) -> Result<(Action, f64)> {
        Ok(sample_action(self.policy(s)?, rng))
    }

    /// Losses and gradients for one transition, without updating anything.
    ///
    /// The TD target `r + gamma V(s')` is held fixed, and the reward is
    /// treated as a constant with respect to the actor parameters.
    pub fn gradients(&self, t: &Transition, gamma: f64) -> Result<Gradients> {
        let x = self.features.features(&t.state);
        let critic_acts = self.critic.forward_cached(&x);
        let v = critic_acts.output()[0];
        let next_v = if t.terminal { 0.0 } else { self.value(&t.next_state)? };
        let target = t.reward + gamma * next_v;
        let advantage = target - v;
        let critic_loss = advantage * advantage;

        let actor_acts = self.actor.forward_cached(&x);
        let probs = softmax(actor_acts.output());
        let a = t.action.index();
        let log_pi = log(probs[a]);
        let actor_loss = -log_pi * advantage;

        if !(critic_loss.is_finite() && actor_loss.is_finite()) {
            return Err(Error::Divergence(alloc::format!(
                "non-finite loss: actor={actor_loss}, critic={critic_loss}"
            )));
        }

        let mut critic_grad = vec![0.0; self.critic.n_params()];
        self.critic.backward(&critic_acts, &[-2.0 * advantage], &mut critic_grad);

        // d(-log pi_a)/dz = pi - onehot(a)
        let upstream: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| (p - if i == a { 1.0 } else { 0.0 }) * advantage)
            .collect();
        let mut actor_grad = vec![0.0; self.actor.n_params()];
        self.actor.backward(&actor_acts, &upstream, &mut actor_grad);

        if actor_grad.iter().chain(&critic_grad).any(|g| !g.is_finite()) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        Ok(Gradients {
            losses: Losses {
                actor: actor_loss,
                critic: critic_loss,
            },
            advantage,
            actor: actor_grad,
            critic: critic_grad,
        })
    }

    /// One Adam step on each network from a single transition.
    pub fn td_update(&mut self, t: &Transition, gamma: f64) -> Result<Losses> {
        let g = self.gradients(t, gamma)?;
        self.critic_opt.step(self.critic.params_mut(), &g.critic);
        self.actor_opt.step(self.actor.params_mut(), &g.actor);
        if !(self.actor.is_finite() && self.critic.is_finite()) {
            return Err(Error::Divergence("parameters became non-finite".into()));
        }
        Ok(g.losses)
    }

    /// Fits the critic-to-wait map by weighted least squares on per-request
    /// waits `wait / k_i` (weight `k_i`). Returns the weighted RMS residual
    /// of the total wait.
    pub fn calibrate(&mut self, samples: &[WaitSample]) -> Result<f64> {
        let mut rows = Vec::with_capacity(samples.len());
        for s in samples.iter().filter(|s| s.state.k_i > 0) {
            let k = s.state.k_i as f64;
            rows.push(([1.0, self.value(&s.state)?, 1.0 / s.state.mu_i], s.wait / k, k));
        }
        if rows.len() < 3 {
            return Err(invalid("samples", "need at least three non-empty states to calibrate"));
        }
        let coef = weighted_least_squares(&rows)?;
        let cal = Calibration {
            intercept: coef[0],
            value_slope: coef[1],
            rate_slope: coef[2],
            samples: rows.len(),
        };
        self.calibration = Some(cal);
        self.calibration_residual(samples)
    }

    /// RMS error of `estimate_wait` against observed waits.
    pub fn calibration_residual(&self, samples: &[WaitSample]) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut sse = 0.0;
        for s in samples {
            let e = self.estimate_wait(&s.state)?.value - s.wait;
            sse += e * e;
        }
        Ok(crate::math::sqrt(sse / samples.len() as f64))
    }
}

impl WaitEstimator for ActorCritic {
    fn estimate_wait(&self, state: &PolicyState) -> Result<WaitEstimate> {
        state.validate()?;
        let cal = self.calibration.ok_or(Error::Uncalibrated)?;
        let value = if state.k_i == 0 {
            0.0
        } else {
            state.k_i as f64 * cal.per_request(self.value(state)?, state.mu_i)
        };
        Ok(WaitEstimate {
            value,
            provenance: Provenance::Learned,
        })
    }
}

/// Draws an action from `(pi_renege, pi_jockey)`.
pub fn sample_action(probs: [f64; 2], rng: &mut SimRng) -> (Action, f64) {
    if rng.uniform() < probs[1] {
        (Action::Jockey, probs[1])
    } else {
        (Action::Renege, probs[0])
    }
}

/// Solves the 3x3 weighted normal equations with a tiny ridge term.
fn weighted_least_squares(rows: &[([f64; 3], f64, f64)]) -> Result<[f64; 3]> {
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (x, y, w) in rows {
        for i in 0..3 {
            b[i] += w * x[i] * y;
            for j in 0..3 {
                a[i][j] += w * x[i] * x[j];
            }
        }
    }
    let ridge = 1e-9 * (a[0][0] + a[1][1] + a[2][2]);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += ridge;
    }
    solve3(a, b).ok_or_else(|| invalid("samples", "calibration system is singular"))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
