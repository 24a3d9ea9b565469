//! Online actor-critic: a softmax policy network and a scalar value
//! network, both one hidden layer, updated per transition.
//!
//! delta = r + gamma * V(s') * (1 - terminal) - V(s)
//! actor ascends  grad log pi(a|s) * delta
//! critic descends the squared TD error (semi-gradient).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::RlHyperparams;

use super::{
    encode, softmax, Action, AgentError, Mlp, ModelError, SavedModel, StateObs, Transition,
    ENCODED_LEN,
};

#[derive(Debug, Clone)]
pub struct AcAgent {
    hyper: RlHyperparams,
    pub actor: Mlp,
    pub critic: Mlp,
}

impl AcAgent {
    pub fn new(hyper: RlHyperparams, init_rng: &mut ChaCha8Rng) -> AcAgent {
        let actor = Mlp::new(
            ENCODED_LEN,
            hyper.hidden_neurons,
            hyper.action_count as usize,
            init_rng,
        );
        let critic = Mlp::new(ENCODED_LEN, hyper.hidden_neurons, 1, init_rng);
        AcAgent {
            hyper,
            actor,
            critic,
        }
    }

    fn encode_obs(&self, obs: &StateObs) -> [f64; ENCODED_LEN] {
        encode(
            obs,
            &self.hyper.tv_bucket_edges,
            &self.hyper.tcv_bucket_edges,
        )
    }

    /// Action probabilities pi(.|s).
    pub fn policy(&self, obs: &StateObs) -> Vec<f64> {
        let cache = self
            .actor
            .forward(&self.encode_obs(obs))
            .expect("encoded observations are finite");
        softmax(&cache.output)
    }

    /// Critic's state-value estimate V(s).
    pub fn state_value(&self, obs: &StateObs) -> f64 {
        self.critic
            .forward(&self.encode_obs(obs))
            .expect("encoded observations are finite")
            .output[0]
    }

    /// Samples an action from the softmax policy.
    pub fn sample_action(&self, obs: &StateObs, rng: &mut ChaCha8Rng) -> Action {
        let pi = self.policy(obs);
        let draw: f64 = rng.gen();
        let mut cumulative = 0.0;
        for (i, p) in pi.iter().enumerate() {
            cumulative += p;
            if draw < cumulative {
                return Action::new(i as u8 + 1).expect("in range");
            }
        }
        Action::new(pi.len() as u8).expect("in range")
    }

    /// Most probable action; used for evaluation.
    pub fn greedy_action(&self, obs: &StateObs) -> Action {
        let pi = self.policy(obs);
        let mut best = 0usize;
        for (i, &p) in pi.iter().enumerate().skip(1) {
            if p > pi[best] {
                best = i;
            }
        }
        Action::new(best as u8 + 1).expect("in range")
    }

    /// One online update from a single transition. Returns the TD error;
    /// a non-finite TD error aborts with a diagnostic.
    pub fn train_step(&mut self, t: &Transition) -> Result<f64, AgentError> {
        let x = self.encode_obs(&t.state);
        let critic_cache = self.critic.forward(&x)?;
        let v_s = critic_cache.output[0];
        let v_next = if t.terminal {
            0.0
        } else {
            self.critic.forward(&self.encode_obs(&t.next_state))?.output[0]
        };
        let delta = t.reward + self.hyper.gamma * v_next - v_s;
        if !delta.is_finite() {
            return Err(AgentError::NonFiniteTd {
                reward: t.reward,
                value: v_s,
            });
        }

        // Actor: d(log pi(a|s))/d(logit_j) = [j == a] - pi_j, scaled by the
        // TD error; ascend.
        let actor_cache = self.actor.forward(&x)?;
        let pi = softmax(&actor_cache.output);
        let mut upstream: Vec<f64> = pi.iter().map(|p| -p * delta).collect();
        upstream[t.action.index()] += delta;
        let mut actor_grads = self.actor.backward(&actor_cache, &upstream);
        actor_grads.clip_global_norm(super::GRAD_NORM_CLIP);
        self.actor.apply(&actor_grads, self.hyper.alpha);

        // Critic: descend d(delta^2)/dV(s) = -2 delta (semi-gradient).
        let mut critic_grads = self.critic.backward(&critic_cache, &[-2.0 * delta]);
        critic_grads.clip_global_norm(super::GRAD_NORM_CLIP);
        self.critic.apply(&critic_grads, -self.hyper.alpha);

        if !self.actor.is_finite() || !self.critic.is_finite() {
            return Err(AgentError::NonFiniteLoss);
        }
        Ok(delta)
    }

    pub fn to_saved(&self, seed: u64) -> SavedModel {
        SavedModel::ActorCritic {
            input: self.actor.input_dim,
            hidden: self.actor.hidden_dim,
            actions: self.actor.output_dim,
            seed,
            actor: self.actor.params_flat(),
            critic: self.critic.params_flat(),
        }
    }

    pub fn from_saved(saved: &SavedModel, hyper: &RlHyperparams) -> Result<AcAgent, ModelError> {
        let SavedModel::ActorCritic {
            input,
            hidden,
            actions,
            actor,
            critic,
            ..
        } = saved
        else {
            return Err(ModelError::WrongKind {
                expected: "actor-critic".into(),
                found: saved.kind_name().into(),
            });
        };
        if *input != ENCODED_LEN
            || *hidden != hyper.hidden_neurons
            || *actions != hyper.action_count as usize
        {
            return Err(ModelError::DimensionMismatch {
                found: format!("{input}x{hidden}x{actions}"),
                expected: format!(
                    "{}x{}x{}",
                    ENCODED_LEN, hyper.hidden_neurons, hyper.action_count
                ),
            });
        }
        let actor_net = Mlp::from_flat(*input, *hidden, *actions, actor)
            .ok_or_else(|| ModelError::Malformed("actor parameter count mismatch".into()))?;
        let critic_net = Mlp::from_flat(*input, *hidden, 1, critic)
            .ok_or_else(|| ModelError::Malformed("critic parameter count mismatch".into()))?;
        Ok(AcAgent {
            hyper: hyper.clone(),
            actor: actor_net,
            critic: critic_net,
        })
    }
}
