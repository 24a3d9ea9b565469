//! The three learners — tabular Q-learning, DQN, and actor-critic — plus
//! the shared state encoding, action mapping, epsilon-greedy policy,
//! replay buffer, and a minimal one-hidden-layer network with analytic
//! gradients.

mod actor_critic;
mod dqn;
mod mlp;
mod model_io;
mod qtable;
mod replay;

pub use actor_critic::AcAgent;
pub use dqn::DqnAgent;
pub use mlp::{softmax, ForwardCache, Gradients, Mlp};
pub use model_io::{load_model, parse_model, save_model, serialize_model, ModelError, SavedModel};
pub use qtable::{q_update, TabularQ};
pub use replay::ReplayBuffer;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{CategoryProfile, RlHyperparams, ServiceCategory};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("action {0} outside 1..={max}", max = Action::MAX)]
    InvalidAction(u8),
    #[error("non-finite input to network")]
    NonFiniteInput,
    #[error("non-finite temporal-difference error (reward {reward}, state value {value})")]
    NonFiniteTd { reward: f64, value: f64 },
    #[error("non-finite loss or weights in DQN update")]
    NonFiniteLoss,
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
}

/// The agent's observation at a decision epoch: sojourn level, total
/// active vehicles at the RSU, the vehicle's category, and the active
/// count within that category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateObs {
    /// Discrete remaining-coverage level, 0..=4.
    pub sojourn_level: u8,
    /// Vehicles actively transmitting at the RSU.
    pub total_vehicles: u32,
    pub category: ServiceCategory,
    /// Actively transmitting vehicles of `category` at the RSU.
    pub category_vehicles: u32,
}

/// Tabular discretization of [`StateObs`]: 5 sojourn levels x 4 total
/// buckets x 4 categories x 4 per-category buckets = 320 states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteState {
    pub sojourn_level: u8,
    pub tv_bucket: u8,
    pub category_index: u8,
    pub tcv_bucket: u8,
}

impl DiscreteState {
    /// Size of the discrete state space.
    pub const COUNT: usize = 5 * 4 * 4 * 4;

    /// Row index into a `[state][action]` table.
    pub fn index(&self) -> usize {
        let idx = ((self.sojourn_level as usize * 4 + self.tv_bucket as usize) * 4
            + self.category_index as usize)
            * 4
            + self.tcv_bucket as usize;
        debug_assert!(idx < Self::COUNT);
        idx
    }
}

/// Bucket index of `value`: the count of edges strictly less than it.
pub fn bucketize(value: u32, edges: &[u32]) -> u8 {
    edges.iter().filter(|&&e| e < value).count() as u8
}

/// Discretizes an observation with the given bucket edges (sorted).
pub fn discretize(obs: &StateObs, tv_edges: &[u32], tcv_edges: &[u32]) -> DiscreteState {
    DiscreteState {
        sojourn_level: obs.sojourn_level.min(4),
        tv_bucket: bucketize(obs.total_vehicles, tv_edges).min(3),
        category_index: obs.category.index() as u8,
        tcv_bucket: bucketize(obs.category_vehicles, tcv_edges).min(3),
    }
}

/// Length of the encoded observation vector.
pub const ENCODED_LEN: usize = 11;

/// Global gradient-norm cap for the network learners. Generous enough to
/// leave well-scaled updates untouched; it only bounds the steps driven
/// by saturated-regime TD errors, which would otherwise drive the plain
/// alpha = 0.1 updates to non-finite weights.
pub const GRAD_NORM_CLIP: f64 = 10.0;

/// Counts are clamped at this many vehicles before normalization.
pub const COUNT_CLAMP: f64 = 40.0;

/// Encodes an observation as a fixed 11-slot vector, every component in
/// [0, 1]:
///
/// | slot | meaning                                   |
/// |------|-------------------------------------------|
/// | 0    | sojourn_level / 4                         |
/// | 1    | min(total_vehicles, 40) / 40              |
/// | 2    | min(category_vehicles, 40) / 40           |
/// | 3-6  | category one-hot (VO, VI, HDMAP, BE)      |
/// | 7    | tv_bucket / 3                             |
/// | 8    | tcv_bucket / 3                            |
/// | 9    | category_vehicles / max(total_vehicles,1) |
/// | 10   | constant 1 bias input                     |
pub fn encode(obs: &StateObs, tv_edges: &[u32], tcv_edges: &[u32]) -> [f64; ENCODED_LEN] {
    let d = discretize(obs, tv_edges, tcv_edges);
    let mut x = [0.0; ENCODED_LEN];
    x[0] = obs.sojourn_level.min(4) as f64 / 4.0;
    x[1] = (obs.total_vehicles as f64).min(COUNT_CLAMP) / COUNT_CLAMP;
    x[2] = (obs.category_vehicles as f64).min(COUNT_CLAMP) / COUNT_CLAMP;
    x[3 + obs.category.index()] = 1.0;
    x[7] = d.tv_bucket as f64 / 3.0;
    x[8] = d.tcv_bucket as f64 / 3.0;
    x[9] = obs.category_vehicles as f64 / (obs.total_vehicles.max(1) as f64);
    x[10] = 1.0;
    x
}

/// A waiting-time action. Indices run 1..=8 so the mapped wait is never
/// zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action(u8);

impl Action {
    pub const MAX: u8 = 8;

    pub fn new(number: u8) -> Result<Action, AgentError> {
        if (1..=Self::MAX).contains(&number) {
            Ok(Action(number))
        } else {
            Err(AgentError::InvalidAction(number))
        }
    }

    /// The 1-based action number.
    pub fn number(self) -> u8 {
        self.0
    }

    /// 0-based index into value arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

/// Maps a discrete action to a waiting time: `a * w_max(c) / |A|`, which
/// always lands in (0, w_max].
pub fn map_action(action: Action, profile: &CategoryProfile, action_count: u32) -> f64 {
    action.number() as f64 * profile.w_max_s / action_count as f64
}

/// Epsilon-greedy selection over per-action values: with probability
/// `epsilon` a uniform random action, otherwise the argmax with ties
/// broken toward the lowest index. Actions are numbered 1..=len.
pub fn select_epsilon_greedy(values: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> Action {
    debug_assert!(!values.is_empty() && values.len() <= Action::MAX as usize);
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let number = rng.gen_range(1..=values.len() as u8);
        return Action::new(number).expect("in range");
    }
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Action::new(best as u8 + 1).expect("in range")
}

/// One experience record, consumed by all three learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateObs,
    pub action: Action,
    pub reward: f64,
    pub next_state: StateObs,
    /// Set only at vehicle departure or episode end.
    pub terminal: bool,
}

/// Which learner drives the RSU agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    TabularQ,
    Dqn,
    ActorCritic,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::TabularQ => "q",
            LearnerKind::Dqn => "dqn",
            LearnerKind::ActorCritic => "ac",
        }
    }

    pub fn parse(name: &str) -> Option<LearnerKind> {
        match name {
            "q" => Some(LearnerKind::TabularQ),
            "dqn" => Some(LearnerKind::Dqn),
            "ac" => Some(LearnerKind::ActorCritic),
            _ => None,
        }
    }
}

/// An RSU's learner. One instance is owned by one RSU (or shared across
/// RSUs in single-agent mode) and mutated only between simulation ticks.
#[derive(Debug, Clone)]
pub enum Learner {
    Tabular(TabularQ),
    Dqn(DqnAgent),
    ActorCritic(AcAgent),
}

impl Learner {
    pub fn new(kind: LearnerKind, hyper: &RlHyperparams, init_rng: &mut ChaCha8Rng) -> Learner {
        match kind {
            LearnerKind::TabularQ => Learner::Tabular(TabularQ::new(hyper.clone())),
            LearnerKind::Dqn => Learner::Dqn(DqnAgent::new(hyper.clone(), init_rng)),
            LearnerKind::ActorCritic => Learner::ActorCritic(AcAgent::new(hyper.clone(), init_rng)),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Tabular(_) => LearnerKind::TabularQ,
            Learner::Dqn(_) => LearnerKind::Dqn,
            Learner::ActorCritic(_) => LearnerKind::ActorCritic,
        }
    }

    /// Picks an action for `obs`. Tabular and DQN agents use
    /// epsilon-greedy over their values; the actor-critic samples its
    /// softmax policy, except at `epsilon == 0` (evaluation) where it
    /// takes the argmax.
    pub fn select_action(&self, obs: &StateObs, epsilon: f64, rng: &mut ChaCha8Rng) -> Action {
        match self {
            Learner::Tabular(q) => select_epsilon_greedy(q.values(obs), epsilon, rng),
            Learner::Dqn(d) => select_epsilon_greedy(&d.q_values(obs), epsilon, rng),
            Learner::ActorCritic(ac) => {
                if epsilon == 0.0 {
                    ac.greedy_action(obs)
                } else {
                    ac.sample_action(obs, rng)
                }
            }
        }
    }

    /// Feeds one transition. DQN additionally draws a minibatch from its
    /// replay buffer using `rng`.
    pub fn learn(&mut self, t: &Transition, rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        match self {
            Learner::Tabular(q) => {
                q.update(t);
                Ok(())
            }
            Learner::Dqn(d) => d.observe(t, rng).map(|_| ()),
            Learner::ActorCritic(ac) => ac.train_step(t).map(|_| ()),
        }
    }

    pub fn to_saved(&self, seed: u64) -> SavedModel {
        match self {
            Learner::Tabular(q) => q.to_saved(seed),
            Learner::Dqn(d) => d.to_saved(seed),
            Learner::ActorCritic(ac) => ac.to_saved(seed),
        }
    }

    /// Rebuilds a learner from a saved model, validating dimensions
    /// against the hyperparameters.
    pub fn from_saved(saved: &SavedModel, hyper: &RlHyperparams) -> Result<Learner, ModelError> {
        match saved {
            SavedModel::QTable { .. } => Ok(Learner::Tabular(TabularQ::from_saved(saved, hyper)?)),
            SavedModel::Dqn { .. } => Ok(Learner::Dqn(DqnAgent::from_saved(saved, hyper)?)),
            SavedModel::ActorCritic { .. } => {
                Ok(Learner::ActorCritic(AcAgent::from_saved(saved, hyper)?))
            }
        }
    }

    pub fn save_file(&self, path: &std::path::Path, seed: u64) -> Result<(), ModelError> {
        save_model(&self.to_saved(seed), path)
    }

    pub fn load_file(path: &std::path::Path, hyper: &RlHyperparams) -> Result<Learner, ModelError> {
        Self::from_saved(&load_model(path)?, hyper)
    }
}
