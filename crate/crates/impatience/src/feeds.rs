//! Runtime choice of information feed and wait estimator.

use impatience_core::actor_critic::{ActorCritic, PolicyState};
use impatience_core::estimate::{MarkovEstimator, WaitEstimate, WaitEstimator, ZeroEstimator};
use impatience_core::sim::{DebugZero, FeedDecision, InformationFeed, LearnedFeed, MarkovFeed, NeverAct, Observation};

use crate::error::{AppError, AppResult};
use crate::spec::{FeedKind, FeedSpec};

pub enum AnyFeed<'a> {
    Markov(MarkovFeed),
    Learned(LearnedFeed<'a>),
    Baseline(NeverAct),
    DebugZero(DebugZero),
}

impl<'a> AnyFeed<'a> {
    pub fn new(kind: FeedKind, spec: &FeedSpec, model: Option<&'a ActorCritic>) -> AppResult<Self> {
        Ok(match kind {
            FeedKind::Markov => AnyFeed::Markov(spec.markov()),
            FeedKind::Learned => AnyFeed::Learned(LearnedFeed::new(require_model(model)?)?),
            FeedKind::Baseline => AnyFeed::Baseline(NeverAct),
            FeedKind::DebugZero => AnyFeed::DebugZero(DebugZero),
        })
    }
}

impl InformationFeed for AnyFeed<'_> {
    fn name(&self) -> &str {
        match self {
            AnyFeed::Markov(f) => f.name(),
            AnyFeed::Learned(f) => f.name(),
            AnyFeed::Baseline(f) => f.name(),
            AnyFeed::DebugZero(f) => f.name(),
        }
    }

    fn decide(&mut self, obs: &Observation) -> impatience_core::Result<FeedDecision> {
        match self {
            AnyFeed::Markov(f) => f.decide(obs),
            AnyFeed::Learned(f) => f.decide(obs),
            AnyFeed::Baseline(f) => f.decide(obs),
            AnyFeed::DebugZero(f) => f.decide(obs),
        }
    }
}

/// The wait estimate behind each feed. The baseline and the debug feed both
/// report zero.
pub enum AnyEstimator<'a> {
    Markov(MarkovEstimator),
    Learned(&'a ActorCritic),
    Zero(ZeroEstimator),
}

impl<'a> AnyEstimator<'a> {
    pub fn new(kind: FeedKind, model: Option<&'a ActorCritic>) -> AppResult<Self> {
        Ok(match kind {
            FeedKind::Markov => AnyEstimator::Markov(MarkovEstimator),
            FeedKind::Learned => {
                let m = require_model(model)?;
                if m.calibration.is_none() {
                    return Err(impatience_core::Error::Uncalibrated.into());
                }
                AnyEstimator::Learned(m)
            }
            FeedKind::Baseline | FeedKind::DebugZero => AnyEstimator::Zero(ZeroEstimator),
        })
    }
}

impl WaitEstimator for AnyEstimator<'_> {
    fn estimate_wait(&self, state: &PolicyState) -> impatience_core::Result<WaitEstimate> {
        match self {
            AnyEstimator::Markov(e) => e.estimate_wait(state),
            AnyEstimator::Learned(e) => e.estimate_wait(state),
            AnyEstimator::Zero(e) => e.estimate_wait(state),
        }
    }
}

fn require_model(model: Option<&ActorCritic>) -> AppResult<&ActorCritic> {
    model.ok_or_else(|| AppError::Usage("the learned feed needs a trained checkpoint (--checkpoint)".into()))
}
