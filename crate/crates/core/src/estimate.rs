//! Remaining-wait estimates shared by every information feed.

use crate::actor_critic::PolicyState;
use crate::error::Result;

/// Which feed produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Markov,
    Learned,
    Baseline,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Markov => "markov",
            Provenance::Learned => "learned",
            Provenance::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitEstimate {
    /// Estimated time until the request reaches service.
    pub value: f64,
    pub provenance: Provenance,
}

/// Anything that can estimate the remaining wait `W_i(k_i)` of a state.
pub trait WaitEstimator {
    fn estimate_wait(&self, state: &PolicyState) -> Result<WaitEstimate>;
}

/// The exact Erlang mean `k_i / mu_i`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarkovEstimator;

impl WaitEstimator for MarkovEstimator {
    fn estimate_wait(&self, state: &PolicyState) -> Result<WaitEstimate> {
        state.validate()?;
        Ok(WaitEstimate {
            value: state.k_i as f64 / state.mu_i,
            provenance: Provenance::Markov,
        })
    }
}

/// Always estimates zero. A deliberate counterexample for the sublinear
/// error check.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroEstimator;

impl WaitEstimator for ZeroEstimator {
    fn estimate_wait(&self, _state: &PolicyState) -> Result<WaitEstimate> {
        Ok(WaitEstimate {
            value: 0.0,
            provenance: Provenance::Baseline,
        })
    }
}

impl<E: WaitEstimator + ?Sized> WaitEstimator for &E {
    fn estimate_wait(&self, state: &PolicyState) -> Result<WaitEstimate> {
        (**self).estimate_wait(state)
    }
}
