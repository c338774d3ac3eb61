//! Information feeds: what a waiting request consults at each review.

use crate::actor_critic::{greedy_action, Action, ActorCritic, PolicyState};
use crate::error::{Error, Result};
use crate::estimate::{Provenance, WaitEstimate, WaitEstimator};
use crate::markov::{
    jockey_benefit_probability, renege_fail_probability, renege_probability, switch_outcome_probabilities,
    TransientPmf,
};

/// What a waiting request sees at a review.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Queue the request waits in (0 or 1).
    pub queue: usize,
    /// Requests ahead of it, including the one in service.
    pub k_i: u64,
    /// Requests in the other queue.
    pub k_j: u64,
    pub mu_i: f64,
    pub mu_j: f64,
    /// Remaining patience `T - t0`.
    pub remaining: f64,
    /// Time since entry.
    pub t0: f64,
    pub lambda_tar: f64,
    pub t_local: f64,
}

impl Observation {
    pub fn policy_state(&self) -> PolicyState {
        PolicyState::new(self.k_i, self.k_j, self.mu_i, self.mu_j, self.remaining)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Stay,
    Renege,
    Jockey,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedDecision {
    pub decision: Decision,
    pub estimate: WaitEstimate,
}

/// Decision source for waiting requests.
///
/// Calls must not have side effects, except that online-learning feeds may
/// update their own state.
pub trait InformationFeed {
    fn name(&self) -> &str;

    fn decide(&mut self, obs: &Observation) -> Result<FeedDecision>;
}

impl<F: InformationFeed + ?Sized> InformationFeed for &mut F {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, obs: &Observation) -> Result<FeedDecision> {
        (**self).decide(obs)
    }
}

/// Closed-form feed.
///
/// The target queue is a single server at `mu_j`; it is described to the
/// two-server jockey model with per-server rate `mu_j / 2` (same aggregate
/// death rate) and landing position `k_j + 1`, so the jockey waits
/// `Erlang(k_j, mu_j - lambda_tar)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovFeed {
    /// Renege when `Pr{W_i > remaining}` exceeds this (and the expected wait
    /// exceeds local processing time).
    pub renege_threshold: f64,
    /// Jockey when the benefit probability exceeds this (and switching is
    /// likelier to finish in time than staying).
    pub jockey_threshold: f64,
}

impl Default for MarkovFeed {
    fn default() -> Self {
        Self {
            renege_threshold: 0.5,
            jockey_threshold: 0.5,
        }
    }
}

impl MarkovFeed {
    pub fn new(renege_threshold: f64, jockey_threshold: f64) -> Self {
        Self {
            renege_threshold,
            jockey_threshold,
        }
    }

    fn jockey_wins(&self, obs: &Observation) -> Result<bool> {
        let mu_pool = obs.mu_j / 2.0;
        if obs.lambda_tar >= 2.0 * mu_pool {
            // The target queue outgrows its server: no finite jockey wait.
            return Ok(false);
        }
        let landing = TransientPmf::point_mass(obs.k_j as usize + 1);
        let benefit = jockey_benefit_probability(obs.k_i, obs.mu_i, &landing, mu_pool, obs.lambda_tar)?;
        // Equal queues give exactly 1/2; rounding must not tip that into a move.
        if benefit <= self.jockey_threshold + 1e-9 {
            return Ok(false);
        }
        if !obs.remaining.is_finite() {
            // Both options finish in time with certainty.
            return Ok(false);
        }
        let switch = switch_outcome_probabilities(&landing, mu_pool, obs.lambda_tar, obs.remaining, 0.0)?;
        let stay = renege_fail_probability(obs.k_i, obs.mu_i, obs.remaining, 0.0)?;
        Ok(switch.success > stay)
    }
}

impl InformationFeed for MarkovFeed {
    fn name(&self) -> &str {
        "markov"
    }

    fn decide(&mut self, obs: &Observation) -> Result<FeedDecision> {
        let estimate = WaitEstimate {
            value: obs.k_i as f64 / obs.mu_i,
            provenance: Provenance::Markov,
        };
        let decision = if obs.remaining <= 0.0 {
            Decision::Renege
        } else if obs.remaining.is_finite()
            && renege_probability(obs.k_i, obs.mu_i, obs.remaining)? > self.renege_threshold
            && estimate.value > obs.t_local
        {
            Decision::Renege
        } else if self.jockey_wins(obs)? {
            Decision::Jockey
        } else {
            Decision::Stay
        };
        Ok(FeedDecision { decision, estimate })
    }
}

/// Never reneges or jockeys; requests leave only when patience runs out.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverAct;

impl InformationFeed for NeverAct {
    fn name(&self) -> &str {
        "baseline"
    }

    fn decide(&mut self, obs: &Observation) -> Result<FeedDecision> {
        Ok(FeedDecision {
            decision: Decision::Stay,
            estimate: WaitEstimate {
                value: obs.k_i as f64 / obs.mu_i,
                provenance: Provenance::Baseline,
            },
        })
    }
}

/// Always estimates a zero wait and therefore never acts.
#[derive(Debug, Clone, Copy, Default)]
pub struct DebugZero;

impl InformationFeed for DebugZero {
    fn name(&self) -> &str {
        "debug-zero"
    }

    fn decide(&mut self, _obs: &Observation) -> Result<FeedDecision> {
        Ok(FeedDecision {
            decision: Decision::Stay,
            estimate: WaitEstimate {
                value: 0.0,
                provenance: Provenance::Baseline,
            },
        })
    }
}

/// Feed driven by a trained, calibrated actor-critic.
///
/// The calibrated critic decides whether to move at all: renege when the
/// estimated wait exceeds both the remaining patience and the local
/// processing time. Otherwise the actor's greedy action may pick a jockey,
/// which is taken only if the other queue is estimated to be faster and to
/// finish within the remaining patience.
#[derive(Debug, Clone, Copy)]
pub struct LearnedFeed<'a> {
    model: &'a ActorCritic,
}

impl<'a> LearnedFeed<'a> {
    pub fn new(model: &'a ActorCritic) -> Result<Self> {
        if model.calibration.is_none() {
            return Err(Error::Uncalibrated);
        }
        Ok(Self { model })
    }
}

impl InformationFeed for LearnedFeed<'_> {
    fn name(&self) -> &str {
        "learned"
    }

    fn decide(&mut self, obs: &Observation) -> Result<FeedDecision> {
        let s = obs.policy_state();
        let estimate = self.model.estimate_wait(&s)?;
        if obs.remaining <= 0.0 || (estimate.value > obs.remaining && estimate.value > obs.t_local) {
            return Ok(FeedDecision {
                decision: Decision::Renege,
                estimate,
            });
        }
        let [p_renege, p_jockey] = self.model.policy(&s)?;
        let mut decision = Decision::Stay;
        if greedy_action(p_renege, p_jockey) == Action::Jockey {
            let alt = self.model.estimate_wait(&s.swapped())?.value;
            if alt < estimate.value && alt <= obs.remaining {
                decision = Decision::Jockey;
            }
        }
        Ok(FeedDecision { decision, estimate })
    }
}
