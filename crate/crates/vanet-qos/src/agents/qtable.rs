//! Tabular Q-learning over the 320-state discretization.

use crate::domain::RlHyperparams;

use super::{discretize, Action, DiscreteState, ModelError, SavedModel, StateObs, Transition};

/// One temporal-difference update on a `[state][action]` table:
///
/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * (1 - terminal) - Q(s,a))`
///
/// Exactly one cell changes.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    table: &mut [f64],
    action_count: usize,
    state: usize,
    action: Action,
    reward: f64,
    next_state: usize,
    terminal: bool,
    alpha: f64,
    gamma: f64,
) {
    let next_max = if terminal {
        0.0
    } else {
        table[next_state * action_count..(next_state + 1) * action_count]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let cell = &mut table[state * action_count + action.index()];
    *cell += alpha * (reward + gamma * next_max - *cell);
}

/// Tabular learner; the table starts at zero.
#[derive(Debug, Clone)]
pub struct TabularQ {
    hyper: RlHyperparams,
    table: Vec<f64>,
}

impl TabularQ {
    pub fn new(hyper: RlHyperparams) -> TabularQ {
        let table = vec![0.0; DiscreteState::COUNT * hyper.action_count as usize];
        TabularQ { hyper, table }
    }

    fn state_index(&self, obs: &StateObs) -> usize {
        discretize(
            obs,
            &self.hyper.tv_bucket_edges,
            &self.hyper.tcv_bucket_edges,
        )
        .index()
    }

    /// Q-values of the discretized observation.
    pub fn values(&self, obs: &StateObs) -> &[f64] {
        let k = self.hyper.action_count as usize;
        let s = self.state_index(obs);
        &self.table[s * k..(s + 1) * k]
    }

    pub fn update(&mut self, t: &Transition) {
        let s = self.state_index(&t.state);
        let s_next = self.state_index(&t.next_state);
        q_update(
            &mut self.table,
            self.hyper.action_count as usize,
            s,
            t.action,
            t.reward,
            s_next,
            t.terminal,
            self.hyper.alpha,
            self.hyper.gamma,
        );
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn to_saved(&self, seed: u64) -> SavedModel {
        SavedModel::QTable {
            states: DiscreteState::COUNT,
            actions: self.hyper.action_count as usize,
            seed,
            values: self.table.clone(),
        }
    }

    pub fn from_saved(saved: &SavedModel, hyper: &RlHyperparams) -> Result<TabularQ, ModelError> {
        let SavedModel::QTable {
            states,
            actions,
            values,
            ..
        } = saved
        else {
            return Err(ModelError::WrongKind {
                expected: "qtable".into(),
                found: saved.kind_name().into(),
            });
        };
        if *states != DiscreteState::COUNT || *actions != hyper.action_count as usize {
            return Err(ModelError::DimensionMismatch {
                found: format!("{states} states x {actions} actions"),
                expected: format!(
                    "{} states x {} actions",
                    DiscreteState::COUNT,
                    hyper.action_count
                ),
            });
        }
        Ok(TabularQ {
            hyper: hyper.clone(),
            table: values.clone(),
        })
    }
}
