//! Actor-critic checkpoints.
//!
//! A checkpoint is one JSON document:
//!
//! ```json
//! {
//!   "format": "impatience-checkpoint",
//!   "version": 1,
//!   "episodes_done": 100,
//!   "features": { "k_ref": 100.0, "rate_ref": 15.0, "t_ref": 10.0 },
//!   "calibration": { "intercept": 0.0, "value_slope": 0.0, "rate_slope": 1.0, "samples": 10000 },
//!   "actor":  { "sizes": [5, 128, 128, 2], "params": [...], "adam": { "t": 0, "m": [...], "v": [...], ... } },
//!   "critic": { "sizes": [5, 128, 128, 1], "params": [...], "adam": { ... } },
//!   "losses": [ { "episode": 0, "actor_loss": 0.1, "critic_loss": 0.2 } ]
//! }
//! ```
//!
//! `params` holds each layer's row-major weight matrix followed by its bias,
//! layer after layer. `calibration` is `null` before the first fit.

use std::path::Path;

use impatience_core::actor_critic::{ActorCritic, Calibration, FeatureScale};
use impatience_core::env::EpisodeLoss;
use impatience_core::nn::{Adam, AdamConfig, Mlp};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

const FORMAT: &str = "impatience-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdamState {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Network {
    sizes: Vec<usize>,
    params: Vec<f64>,
    adam: AdamState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Features {
    k_ref: f64,
    rate_ref: f64,
    t_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CalibrationState {
    intercept: f64,
    value_slope: f64,
    rate_slope: f64,
    samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Loss {
    episode: usize,
    actor_loss: f64,
    critic_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    episodes_done: usize,
    features: Features,
    calibration: Option<CalibrationState>,
    actor: Network,
    critic: Network,
    losses: Vec<Loss>,
}

/// A model and the loss history that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ActorCritic,
    pub losses: Vec<EpisodeLoss>,
}

fn network(mlp: &Mlp, opt: &Adam) -> Network {
    Network {
        sizes: mlp.sizes().to_vec(),
        params: mlp.params().to_vec(),
        adam: AdamState {
            learning_rate: opt.config.learning_rate,
            beta1: opt.config.beta1,
            beta2: opt.config.beta2,
            eps: opt.config.eps,
            t: opt.t,
            m: opt.m.clone(),
            v: opt.v.clone(),
        },
    }
}

fn restore(net: Network, path: &Path) -> AppResult<(Mlp, Adam)> {
    let mlp = Mlp::from_parts(net.sizes, net.params).map_err(|e| AppError::format(path, e))?;
    let a = net.adam;
    if a.m.len() != mlp.n_params() || a.v.len() != mlp.n_params() {
        return Err(AppError::format(path, "optimizer state does not match the network"));
    }
    let opt = Adam {
        config: AdamConfig {
            learning_rate: a.learning_rate,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
        },
        t: a.t,
        m: a.m,
        v: a.v,
    };
    Ok((mlp, opt))
}

impl Checkpoint {
    pub fn to_json(&self) -> AppResult<String> {
        let m = &self.model;
        if !m.actor.is_finite() || !m.critic.is_finite() {
            return Err(impatience_core::Error::Divergence("non-finite weights in checkpoint".into()).into());
        }
        let doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            episodes_done: m.episodes_done,
            features: Features {
                k_ref: m.features.k_ref,
                rate_ref: m.features.rate_ref,
                t_ref: m.features.t_ref,
            },
            calibration: m.calibration.map(|c| CalibrationState {
                intercept: c.intercept,
                value_slope: c.value_slope,
                rate_slope: c.rate_slope,
                samples: c.samples,
            }),
            actor: network(&m.actor, &m.actor_opt),
            critic: network(&m.critic, &m.critic_opt),
            losses: self
                .losses
                .iter()
                .map(|l| Loss {
                    episode: l.episode,
                    actor_loss: l.actor_loss,
                    critic_loss: l.critic_loss,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc).expect("checkpoint serializes"))
    }

    pub fn from_json(text: &str, path: &Path) -> AppResult<Self> {
        let doc: Document = serde_json::from_str(text).map_err(|e| AppError::format(path, e))?;
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(AppError::format(
                path,
                format!("unsupported checkpoint {} v{}", doc.format, doc.version),
            ));
        }
        let (actor, actor_opt) = restore(doc.actor, path)?;
        let (critic, critic_opt) = restore(doc.critic, path)?;
        if actor.input_size() != FeatureScale::DIM || actor.output_size() != 2 || critic.output_size() != 1 {
            return Err(AppError::format(path, "network shapes do not fit the actor-critic"));
        }
        let features = FeatureScale {
            k_ref: doc.features.k_ref,
            rate_ref: doc.features.rate_ref,
            t_ref: doc.features.t_ref,
        };
        features.validate().map_err(|e| AppError::format(path, e))?;
        let model = ActorCritic {
            actor,
            critic,
            actor_opt,
            critic_opt,
            features,
            calibration: doc.calibration.map(|c| Calibration {
                intercept: c.intercept,
                value_slope: c.value_slope,
                rate_slope: c.rate_slope,
                samples: c.samples,
            }),
            episodes_done: doc.episodes_done,
        };
        let losses = doc
            .losses
            .into_iter()
            .map(|l| EpisodeLoss {
                episode: l.episode,
                actor_loss: l.actor_loss,
                critic_loss: l.critic_loss,
            })
            .collect();
        Ok(Self { model, losses })
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, path)
    }
}
