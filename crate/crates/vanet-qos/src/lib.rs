//! Desk-scale vehicular-network QoS simulator.
//!
//! Roadside units (RSUs) act as reinforcement-learning agents that assign
//! application-layer waiting times to vehicles streaming voice, video,
//! HD-map, and best-effort data. Waiting keeps a vehicle off the shared
//! channel, so the learned policy trades its own latency against everyone
//! else's contention. Three learners are provided over the same state,
//! action, and reward design: tabular Q-learning, a from-scratch DQN, and
//! a from-scratch actor-critic.
//!
//! Module map:
//! - [`domain`] — service categories, per-category profiles, configuration.
//! - [`traffic`] — vehicle arrivals, corridor mobility, RSU association,
//!   sojourn-time discretization.
//! - [`channel`] — abstract shared-medium model: contention-degraded
//!   capacity, max-min fluid allocation, per-tick latency accounting.
//! - [`reward`] — latency/throughput utility with constraint penalties
//!   and bonuses.
//! - [`agents`] — the three learners plus state encoding, action mapping,
//!   replay buffer, minimal MLP with analytic gradients, model files.
//! - [`metrics`] — KPI ledger, Jain fairness, CSV emission.
//! - [`harness`] — episode orchestration, scenarios, baselines, CLI.

pub mod agents;
pub mod channel;
pub mod domain;
pub mod harness;
pub mod metrics;
pub mod reward;
pub mod rng;
pub mod traffic;

pub use domain::{CategoryProfile, ProfileSet, ServiceCategory, SimConfig};
pub use harness::{AgentMode, Scenario};
