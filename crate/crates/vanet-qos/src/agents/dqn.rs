//! Deep Q-network: main and target networks, replay buffer, minibatch
//! squared-error updates by plain gradient descent.

use rand_chacha::ChaCha8Rng;

use crate::domain::RlHyperparams;

use super::{
    encode, AgentError, Gradients, Mlp, ModelError, ReplayBuffer, SavedModel, StateObs, Transition,
    ENCODED_LEN,
};

#[derive(Debug, Clone)]
pub struct DqnAgent {
    hyper: RlHyperparams,
    pub main: Mlp,
    pub target: Mlp,
    pub buffer: ReplayBuffer,
    steps: u64,
}

impl DqnAgent {
    pub fn new(hyper: RlHyperparams, init_rng: &mut ChaCha8Rng) -> DqnAgent {
        let main = Mlp::new(
            ENCODED_LEN,
            hyper.hidden_neurons,
            hyper.action_count as usize,
            init_rng,
        );
        let target = main.clone();
        let buffer = ReplayBuffer::new(hyper.buffer_capacity);
        DqnAgent {
            hyper,
            main,
            target,
            buffer,
            steps: 0,
        }
    }

    fn encode_obs(&self, obs: &StateObs) -> [f64; ENCODED_LEN] {
        encode(
            obs,
            &self.hyper.tv_bucket_edges,
            &self.hyper.tcv_bucket_edges,
        )
    }

    /// Main-network Q-values for an observation.
    pub fn q_values(&self, obs: &StateObs) -> Vec<f64> {
        self.main
            .forward(&self.encode_obs(obs))
            .expect("encoded observations are finite")
            .output
    }

    /// Stores the transition and, once the buffer holds a full batch,
    /// runs one training step on a uniform sample. Returns the loss, or
    /// `None` when the buffer is still smaller than the batch size.
    pub fn observe(
        &mut self,
        t: &Transition,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<f64>, AgentError> {
        self.buffer.push(*t);
        if self.buffer.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.hyper.batch_size, rng)?;
        self.train_step(&batch).map(Some)
    }

    /// One minibatch update:
    ///
    /// `y_i = r_i + gamma * max_a' Q_target(s'_i, a') * (1 - terminal_i)`
    /// `loss = 1/K * sum_i (y_i - Q_main(s_i, a_i))^2`
    /// `theta -= alpha * grad(loss)`
    ///
    /// The target network changes only on its periodic sync.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<f64, AgentError> {
        let k = batch.len() as f64;
        let mut grads = Gradients::zeros(&self.main);
        let mut loss = 0.0;

        for t in batch {
            let x = self.encode_obs(&t.state);
            let cache = self.main.forward(&x)?;
            let q_sa = cache.output[t.action.index()];

            let next_max = if t.terminal {
                0.0
            } else {
                let x_next = self.encode_obs(&t.next_state);
                self.target
                    .forward(&x_next)?
                    .output
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let y = t.reward + self.hyper.gamma * next_max;

            let err = q_sa - y;
            loss += err * err / k;

            let mut upstream = vec![0.0; self.main.output_dim];
            upstream[t.action.index()] = 2.0 * err / k;
            grads.add(&self.main.backward(&cache, &upstream));
        }

        grads.clip_global_norm(super::GRAD_NORM_CLIP);
        self.main.apply(&grads, -self.hyper.alpha);
        if !loss.is_finite() || !self.main.is_finite() {
            return Err(AgentError::NonFiniteLoss);
        }

        self.steps += 1;
        if self.steps.is_multiple_of(self.hyper.target_sync_period) {
            self.sync_target();
        }
        Ok(loss)
    }

    /// Copies the main network into the target network.
    pub fn sync_target(&mut self) {
        self.target = self.main.clone();
    }

    pub fn train_steps(&self) -> u64 {
        self.steps
    }

    pub fn to_saved(&self, seed: u64) -> SavedModel {
        SavedModel::Dqn {
            input: self.main.input_dim,
            hidden: self.main.hidden_dim,
            actions: self.main.output_dim,
            seed,
            main: self.main.params_flat(),
            target: self.target.params_flat(),
        }
    }

    /// Rebuilds the agent from a saved model. The replay buffer starts
    /// empty and the step counter at zero; only weights persist.
    pub fn from_saved(saved: &SavedModel, hyper: &RlHyperparams) -> Result<DqnAgent, ModelError> {
        let SavedModel::Dqn {
            input,
            hidden,
            actions,
            main,
            target,
            ..
        } = saved
        else {
            return Err(ModelError::WrongKind {
                expected: "dqn".into(),
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
        let main_net = Mlp::from_flat(*input, *hidden, *actions, main)
            .ok_or_else(|| ModelError::Malformed("main parameter count mismatch".into()))?;
        let target_net = Mlp::from_flat(*input, *hidden, *actions, target)
            .ok_or_else(|| ModelError::Malformed("target parameter count mismatch".into()))?;
        Ok(DqnAgent {
            hyper: hyper.clone(),
            main: main_net,
            target: target_net,
            buffer: ReplayBuffer::new(hyper.buffer_capacity),
            steps: 0,
        })
    }
}
