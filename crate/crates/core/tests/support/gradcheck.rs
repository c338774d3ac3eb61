//! Central finite differences against the analytic actor-critic gradients.

use impatience_core::actor_critic::{Action, ActorCritic, PolicyState, TrainerConfig, Transition};

const H: f64 = 1e-6;

/// Worst relative error over all actor and critic parameters of a network
/// with one hidden layer of `hidden` units, for a terminal and a
/// bootstrapped transition.
pub fn max_relative_error(hidden: usize, seed: u64) -> f64 {
    let cfg = TrainerConfig {
        hidden: vec![hidden],
        seed,
        ..TrainerConfig::default()
    };
    let model = ActorCritic::new(&cfg).unwrap();
    let s = PolicyState::new(12, 4, 1.5, 2.5, 3.0);
    let next = PolicyState::new(11, 4, 1.5, 2.5, 2.6);
    let mut worst: f64 = 0.0;
    for (action, terminal) in [(Action::Renege, true), (Action::Jockey, false)] {
        let t = Transition {
            state: s,
            action,
            reward: 0.7,
            next_state: next,
            terminal,
        };
        let g = model.gradients(&t, cfg.gamma).unwrap();
        // The TD target and the advantage are held fixed in the update.
        let target = t.reward + if terminal { 0.0 } else { cfg.gamma * model.value(&next).unwrap() };
        let advantage = g.advantage;

        let critic_loss = |m: &ActorCritic| {
            let v = m.value(&s).unwrap();
            (target - v) * (target - v)
        };
        let actor_loss = |m: &ActorCritic| {
            let p = m.policy(&s).unwrap();
            -p[action.index()].ln() * advantage
        };
        for i in 0..model.critic.n_params() {
            let numeric = central(&model, |m| &mut m.critic.params_mut()[i], &critic_loss);
            worst = worst.max(relative(g.critic[i], numeric));
        }
        for i in 0..model.actor.n_params() {
            let numeric = central(&model, |m| &mut m.actor.params_mut()[i], &actor_loss);
            worst = worst.max(relative(g.actor[i], numeric));
        }
    }
    worst
}

fn central(
    model: &ActorCritic,
    param: impl Fn(&mut ActorCritic) -> &mut f64,
    loss: &impl Fn(&ActorCritic) -> f64,
) -> f64 {
    let mut plus = model.clone();
    *param(&mut plus) += H;
    let mut minus = model.clone();
    *param(&mut minus) -= H;
    (loss(&plus) - loss(&minus)) / (2.0 * H)
}

fn relative(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}
