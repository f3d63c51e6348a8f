//! System policies: the handcrafted rule policy and two learned policies over
//! a fixed action inventory, plus the reward contract.

mod actions;
mod checkpoint;
mod features;
pub mod qlearning;
pub mod reinforce;
mod reward;
mod rule;

pub use actions::{ActionInventory, ActionKind, ActionTemplate};
pub use checkpoint::Checkpoint;
pub use features::{FeatureSpace, FeatureVector};
pub use qlearning::{act_epsilon_greedy, epsilon_schedule, q_update, QParams, Transition};
pub use reinforce::{reinforce_update, ReinforceParams, Step};
pub use reward::{reward, TurnOutcome};
pub use rule::{booking_reference, decide_rule};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialog::{BeliefState, DialogActSet};
use crate::domain::{DomainSchemaSet, EntityDatabase};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    QLearning,
    Reinforce,
}

/// Hyperparameters of a learned policy, as read from a config's `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub algorithm: Algorithm,
    /// Learning rate; unset means 0.01 for Q-learning and 0.001 for REINFORCE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the training episodes over which epsilon decays.
    pub epsilon_decay: f64,
    pub baseline_rate: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            algorithm: Algorithm::QLearning,
            alpha: None,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.5,
            baseline_rate: 0.05,
        }
    }
}

impl RlConfig {
    pub fn learning_rate(&self) -> f64 {
        self.alpha.unwrap_or(match self.algorithm {
            Algorithm::QLearning => 0.01,
            Algorithm::Reinforce => 0.001,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !(prob(self.gamma) && prob(self.epsilon_start) && prob(self.epsilon_end) && prob(self.epsilon_decay)) {
            return Err(Error::validation("policy.params", "gamma and epsilon settings must lie in [0, 1]"));
        }
        let alpha = self.learning_rate();
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::validation("policy.params.alpha", "learning rate must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RlParams {
    QLearning(QParams),
    Reinforce(ReinforceParams),
}

impl RlParams {
    pub fn weights(&self) -> &[Vec<f64>] {
        match self {
            RlParams::QLearning(p) => &p.weights,
            RlParams::Reinforce(p) => &p.weights,
        }
    }

    fn weights_mut(&mut self) -> &mut Vec<Vec<f64>> {
        match self {
            RlParams::QLearning(p) => &mut p.weights,
            RlParams::Reinforce(p) => &mut p.weights,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    features: FeatureVector,
    action: usize,
    reward: Option<f64>,
}

/// A learned policy bound to one schema set, trainable online one episode at a time.
#[derive(Debug, Clone)]
pub struct RlPolicy {
    config: RlConfig,
    inventory: ActionInventory,
    space: FeatureSpace,
    params: RlParams,
    rng: ChaCha8Rng,
    training: bool,
    pending: Option<Pending>,
    trajectory: Vec<Step>,
}

impl RlPolicy {
    pub fn new(schemas: &DomainSchemaSet, config: RlConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let inventory = ActionInventory::new(schemas);
        let space = FeatureSpace::new(schemas);
        let (n, d) = (inventory.len(), space.dim());
        let params = match config.algorithm {
            Algorithm::QLearning => {
                let mut p = QParams::zeros(n, d, config.learning_rate(), config.gamma);
                p.epsilon = config.epsilon_start;
                RlParams::QLearning(p)
            }
            Algorithm::Reinforce => {
                let mut p = ReinforceParams::zeros(n, d, config.learning_rate(), config.gamma);
                p.baseline_rate = config.baseline_rate;
                RlParams::Reinforce(p)
            }
        };
        Ok(RlPolicy {
            config,
            inventory,
            space,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            training: true,
            pending: None,
            trajectory: Vec::new(),
        })
    }

    pub fn config(&self) -> &RlConfig {
        &self.config
    }

    pub fn inventory(&self) -> &ActionInventory {
        &self.inventory
    }

    pub fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn params(&self) -> &RlParams {
        &self.params
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    /// Training explores and updates; evaluation acts greedily and never updates.
    pub fn set_training(&mut self, training: bool) {
        self.training = training;
        self.pending = None;
        self.trajectory.clear();
    }

    /// Sets the exploration rate for episode `index` of `total`.
    pub fn begin_episode(&mut self, index: usize, total: usize) {
        self.pending = None;
        self.trajectory.clear();
        if let RlParams::QLearning(p) = &mut self.params {
            let c = &self.config;
            p.epsilon = epsilon_schedule(index, total, c.epsilon_start, c.epsilon_end, c.epsilon_decay);
        }
    }

    /// Index of the action chosen for `state`; completes the previous Q-learning transition.
    pub fn choose(&mut self, schemas: &DomainSchemaSet, state: &BeliefState, db: &EntityDatabase) -> Result<usize> {
        let x = self.space.featurize(schemas, state, db);
        if !self.training {
            let scores = match &self.params {
                RlParams::QLearning(p) => p.q_values(&x),
                RlParams::Reinforce(p) => reinforce::softmax_policy(&p.weights, &x),
            };
            return Ok(qlearning::argmax(&scores));
        }
        match &mut self.params {
            RlParams::QLearning(p) => {
                if let Some(Pending { features, action, reward: Some(r) }) = self.pending.take() {
                    q_update(p, &Transition { features: &features, action, reward: r, next: Some(&x) })?;
                }
                let a = act_epsilon_greedy(p, &x, &mut self.rng);
                self.pending = Some(Pending { features: x, action: a, reward: None });
                Ok(a)
            }
            RlParams::Reinforce(p) => {
                let a = reinforce::sample_action(p, &x, &mut self.rng);
                self.trajectory.push(Step { features: x, action: a, reward: 0.0 });
                Ok(a)
            }
        }
    }

    pub fn act(&mut self, schemas: &DomainSchemaSet, state: &BeliefState, db: &EntityDatabase) -> Result<DialogActSet> {
        let a = self.choose(schemas, state, db)?;
        Ok(self.inventory.expand(a, schemas, state, db))
    }

    /// Reward for the last chosen action; `done` closes the episode and applies
    /// any outstanding update.
    pub fn observe(&mut self, reward: f64, done: bool) -> Result<()> {
        if !self.training {
            return Ok(());
        }
        match &mut self.params {
            RlParams::QLearning(p) => {
                if let Some(pending) = &mut self.pending {
                    pending.reward = Some(reward);
                }
                if done {
                    if let Some(Pending { features, action, .. }) = self.pending.take() {
                        q_update(p, &Transition { features: &features, action, reward, next: None })?;
                    }
                }
            }
            RlParams::Reinforce(p) => {
                if let Some(last) = self.trajectory.last_mut() {
                    last.reward = reward;
                }
                if done {
                    let steps = std::mem::take(&mut self.trajectory);
                    reinforce_update(p, &steps)?;
                }
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self, schemas: &DomainSchemaSet) -> Checkpoint {
        let mut hyper = serde_json::to_value(&self.config).expect("config serializes");
        if let RlParams::Reinforce(p) = &self.params {
            hyper["baseline"] = serde_json::json!(p.baseline);
        }
        Checkpoint {
            schema_hash: schemas.schema_hash(),
            action_inventory: self.inventory.names(),
            weights: self.params.weights().to_vec(),
            hyperparameters: hyper,
        }
    }

    /// Replaces the weights with a checkpoint's; the schema hash and inventory must match.
    pub fn restore(&mut self, schemas: &DomainSchemaSet, ckpt: &Checkpoint) -> Result<()> {
        ckpt.check_schema(schemas)?;
        if ckpt.action_inventory != self.inventory.names() {
            return Err(Error::validation("checkpoint.action_inventory", "does not match the policy's actions"));
        }
        if ckpt.weights.iter().any(|r| r.len() != self.space.dim()) {
            return Err(Error::validation("checkpoint.weights", "row width does not match the feature dimension"));
        }
        *self.params.weights_mut() = ckpt.weights.clone();
        if let (RlParams::Reinforce(p), Some(b)) = (&mut self.params, ckpt.hyperparameters.get("baseline")) {
            p.baseline = b.as_f64().unwrap_or(0.0);
        }
        Ok(())
    }
}
