//! Episode orchestration, decision-epoch scheduling, scenario definitions
//! (single-RSU and 7-RSU corridor), baselines, and reproducibility.
//!
//! A decision epoch for a vehicle fires when it first associates with an
//! RSU (or hands off to another), when its wait expires and the ACTIVE
//! cycle ends (queue drained empty or the cycle cap elapsed), or when it
//! departs (terminal). At each epoch the agent observes the RSU state,
//! assigns a waiting time, and the interval since the previous epoch is
//! scored into the reward of the previous transition.

pub mod cli;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agents::{
    map_action, Action, AgentError, Learner, LearnerKind, ModelError, SavedModel, StateObs,
    Transition,
};
use crate::channel::{AllocationMode, RsuChannel};
use crate::domain::{validate_config, ConfigError, ProfileSet, ProfileSetKind, SimConfig};
use crate::metrics::{
    write_csv, write_timeseries_csv, EpisodeSummary, MetricsError, MetricsLedger, TimeseriesRow,
};
use crate::reward::{reward_for_transition, IntervalMeasurement};
use crate::rng::{stream, StreamPurpose};
use crate::traffic::{associate_rsu, mobility_step, sojourn, Phase, Spawner, Vehicle};

/// Cap on one ACTIVE transmission cycle so decision epochs recur even
/// under saturation. Kept below the smallest per-category maximum wait so
/// the assigned wait, not the cap, dominates a saturated vehicle's duty
/// cycle.
pub const T_ACTIVE_MAX_S: f64 = 0.3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("agent failure at t={now}s on rsu {rsu}: {source}")]
    Agent {
        now: f64,
        rsu: usize,
        #[source]
        source: AgentError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Who decides waiting times, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentMode {
    /// One learner shared by every RSU.
    SingleAgent,
    /// One independent learner per RSU; no exchange between them.
    MultiAgent,
    /// Vehicles transmit permanently; no learner is ever invoked.
    BaselineNoWait,
    /// Permanently transmitting over statically weighted channel shares,
    /// the simplified with-QoS comparator.
    BaselineStaticPriority,
    /// The degenerate policy that always assigns the maximum wait.
    FixedWait,
}

impl AgentMode {
    pub fn name(self) -> &'static str {
        match self {
            AgentMode::SingleAgent => "single-agent",
            AgentMode::MultiAgent => "multi-agent",
            AgentMode::BaselineNoWait => "baseline-no-wait",
            AgentMode::BaselineStaticPriority => "baseline-static-priority",
            AgentMode::FixedWait => "fixed-wait",
        }
    }

    fn uses_decisions(self) -> bool {
        matches!(
            self,
            AgentMode::SingleAgent | AgentMode::MultiAgent | AgentMode::FixedWait
        )
    }

    fn uses_learner(self) -> bool {
        matches!(self, AgentMode::SingleAgent | AgentMode::MultiAgent)
    }

    fn allocation_mode(self) -> AllocationMode {
        match self {
            AgentMode::BaselineStaticPriority => AllocationMode::StaticPriority,
            _ => AllocationMode::EqualShare,
        }
    }
}

/// A named experiment cell: geometry, agent mode, learner, traffic
/// profile variant, episode count, and optional pretrained model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub rsu_positions: Vec<f64>,
    pub corridor_length: f64,
    pub agent_mode: AgentMode,
    pub learner: LearnerKind,
    pub profile_set: ProfileSetKind,
    /// Training episodes; `None` takes the configured default, 0 runs a
    /// single evaluation episode with exploration and learning disabled.
    pub episodes: Option<u32>,
    pub pretrained: Option<PathBuf>,
}

/// Geometry preset names accepted by [`Scenario::with_geometry`].
pub const SCENARIO_NAMES: [&str; 3] = ["single-rsu", "multi-rsu", "config"];

impl Scenario {
    /// Builds a scenario from a geometry preset name: `single-rsu` (one
    /// RSU at 300 m on a 900 m corridor), `multi-rsu` (7 RSUs at 300 m
    /// spacing on a 2400 m corridor), or `config` (geometry taken from
    /// the configuration).
    pub fn with_geometry(name: &str, cfg: &SimConfig) -> Option<Scenario> {
        let (rsu_positions, corridor_length) = match name {
            "single-rsu" => (vec![300.0], 900.0),
            "multi-rsu" => ((1..=7).map(|k| 300.0 * k as f64).collect(), 2400.0),
            "config" => (cfg.rsu_positions.clone(), cfg.corridor_length),
            _ => return None,
        };
        Some(Scenario {
            name: name.to_string(),
            rsu_positions,
            corridor_length,
            agent_mode: AgentMode::SingleAgent,
            learner: LearnerKind::TabularQ,
            profile_set: cfg.profile_set,
            episodes: None,
            pretrained: None,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rsu_positions.is_empty() {
            return Err(HarnessError::Scenario("scenario has no RSUs".into()));
        }
        if self.agent_mode == AgentMode::MultiAgent && self.rsu_positions.len() < 2 {
            return Err(HarnessError::Scenario(
                "multi-agent mode requires at least 2 RSUs".into(),
            ));
        }
        Ok(())
    }

    /// The configuration with this scenario's geometry and profile
    /// variant applied, validated.
    pub fn effective_config(&self, cfg: &SimConfig) -> Result<SimConfig, HarnessError> {
        let mut out = cfg.clone();
        out.rsu_positions = self.rsu_positions.clone();
        out.corridor_length = self.corridor_length;
        if out.profile_set != self.profile_set {
            out.profile_set = self.profile_set;
            out.profiles = ProfileSet::from_kind(self.profile_set);
        }
        Ok(validate_config(out)?)
    }
}

/// An open decision interval: the action taken at the last epoch plus the
/// KPI accumulation since.
#[derive(Debug, Clone)]
struct PendingEpoch {
    rsu: usize,
    category: crate::domain::ServiceCategory,
    state: StateObs,
    action: Action,
    wait_s: f64,
    start: f64,
    delay_sum: f64,
    delay_ticks: u64,
    drained_bits: f64,
}

struct Episode<'a> {
    cfg: &'a SimConfig,
    mode: AgentMode,
    learn: bool,
    epsilon: f64,
    now: f64,
    vehicles: Vec<Vehicle>,
    pending: BTreeMap<u64, PendingEpoch>,
    channels: Vec<RsuChannel>,
    spawner: Spawner,
    ledger: MetricsLedger,
    rng_categories: ChaCha8Rng,
    rng_explore: ChaCha8Rng,
}

impl<'a> Episode<'a> {
    fn new(cfg: &'a SimConfig, mode: AgentMode, learn: bool, epsilon: f64, episode: u32) -> Self {
        let channels = cfg
            .rsu_positions
            .iter()
            .map(|_| RsuChannel::new(cfg.channel.clone(), mode.allocation_mode()))
            .collect();
        Episode {
            cfg,
            mode,
            learn,
            epsilon,
            now: 0.0,
            vehicles: Vec::new(),
            pending: BTreeMap::new(),
            channels,
            spawner: Spawner::new(),
            ledger: MetricsLedger::new(cfg.episode_duration),
            // Episodes replay the same traffic trace; only exploration
            // (and the learner state) varies across episodes.
            rng_categories: stream(cfg.seed, StreamPurpose::Categories, 0),
            rng_explore: stream(cfg.seed, StreamPurpose::Exploration, episode),
        }
    }

    /// The observation for vehicle `index` at `rsu`: sojourn level plus
    /// the currently transmitting totals (overall and within the
    /// vehicle's category).
    fn observe(&self, index: usize, rsu: usize) -> StateObs {
        let v = &self.vehicles[index];
        let mut total = 0u32;
        let mut same_category = 0u32;
        for u in &self.vehicles {
            if u.assoc_rsu == Some(rsu) && u.phase == Phase::Active {
                total += 1;
                if u.category == v.category {
                    same_category += 1;
                }
            }
        }
        StateObs {
            sojourn_level: sojourn(v, self.cfg.rsu_positions[rsu], self.cfg).level,
            total_vehicles: total,
            category: v.category,
            category_vehicles: same_category,
        }
    }

    /// Scores a finished decision interval, feeds the transition to the
    /// owning learner, and records the reward.
    fn complete(
        &mut self,
        learners: &mut [Learner],
        p: PendingEpoch,
        next_state: StateObs,
        terminal: bool,
    ) -> Result<(), HarnessError> {
        let duration = (self.now - p.start).max(self.cfg.tick);
        let mean_latency_s = if p.delay_ticks > 0 {
            p.delay_sum / p.delay_ticks as f64
        } else {
            0.0
        };
        let measurement = IntervalMeasurement {
            category: p.category,
            mean_latency_s,
            throughput_bps: p.drained_bits / duration,
            duration_s: duration,
        };
        let profile = self.cfg.profiles.get(p.category);
        let reward = reward_for_transition(&measurement, profile, &self.cfg.reward, p.wait_s);
        self.ledger.record_reward(p.rsu, p.category, reward);

        if self.learn && self.mode.uses_learner() {
            let transition = Transition {
                state: p.state,
                action: p.action,
                reward,
                next_state,
                terminal,
            };
            let learner = match self.mode {
                AgentMode::SingleAgent => &mut learners[0],
                AgentMode::MultiAgent => &mut learners[p.rsu],
                _ => unreachable!("only agent modes learn"),
            };
            learner
                .learn(&transition, &mut self.rng_explore)
                .map_err(|source| HarnessError::Agent {
                    now: self.now,
                    rsu: p.rsu,
                    source,
                })?;
            self.ledger.record_learner_update();
        }
        Ok(())
    }

    /// Picks and applies a waiting time for vehicle `index` at `rsu`,
    /// opening a new decision interval (except under the fixed-wait
    /// baseline, which assigns the maximum wait and records nothing).
    fn decide(
        &mut self,
        learners: &mut [Learner],
        index: usize,
        rsu: usize,
        obs: StateObs,
    ) -> Result<(), HarnessError> {
        let action = match self.mode {
            AgentMode::FixedWait => Action::new(Action::MAX).expect("in range"),
            AgentMode::SingleAgent => {
                learners[0].select_action(&obs, self.epsilon, &mut self.rng_explore)
            }
            AgentMode::MultiAgent => {
                learners[rsu].select_action(&obs, self.epsilon, &mut self.rng_explore)
            }
            _ => unreachable!("baselines never reach decisions"),
        };
        let v = &mut self.vehicles[index];
        let profile = self.cfg.profiles.get(v.category);
        let wait_s = map_action(action, profile, self.cfg.rl.action_count);
        self.ledger.record_wait_assignment(wait_s, profile.w_max_s);
        debug_assert!(wait_s > 0.0 && wait_s <= profile.w_max_s);
        v.wait_until = self.now + wait_s;
        v.phase = Phase::Waiting;

        if self.mode != AgentMode::FixedWait {
            self.pending.insert(
                v.id,
                PendingEpoch {
                    rsu,
                    category: v.category,
                    state: obs,
                    action,
                    wait_s,
                    start: self.now,
                    delay_sum: 0.0,
                    delay_ticks: 0,
                    drained_bits: 0.0,
                },
            );
        }
        Ok(())
    }

    fn run(&mut self, learners: &mut [Learner]) -> Result<(), HarnessError> {
        let baseline_always_active = !self.mode.uses_decisions();
        let n_ticks = (self.cfg.episode_duration / self.cfg.tick).round() as u64;

        for step in 0..n_ticks {
            self.now = (step + 1) as f64 * self.cfg.tick;
            let now = self.now;

            // Arrivals.
            for mut v in self
                .spawner
                .spawn_step(now, &mut self.rng_categories, self.cfg)
            {
                if baseline_always_active {
                    v.phase = Phase::Active;
                    v.wait_until = 0.0;
                    v.active_since = v.spawn_time;
                }
                self.vehicles.push(v);
            }

            // Mobility, then departures (terminal epochs).
            let mut departed: Vec<u64> = Vec::new();
            for v in self.vehicles.iter_mut() {
                mobility_step(v, self.cfg.tick, self.cfg);
            }
            let corridor_length = self.cfg.corridor_length;
            self.vehicles.retain(|v| {
                if v.position > corridor_length {
                    departed.push(v.id);
                    false
                } else {
                    true
                }
            });
            for id in departed {
                if let Some(p) = self.pending.remove(&id) {
                    let frozen = p.state;
                    self.complete(learners, p, frozen, true)?;
                }
            }

            // Association; handoffs and first contacts trigger epochs.
            let mut newly_associated: Vec<usize> = Vec::new();
            for (i, v) in self.vehicles.iter_mut().enumerate() {
                let assoc = associate_rsu(
                    v.position,
                    &self.cfg.rsu_positions,
                    self.cfg.coverage_radius,
                );
                if assoc != v.assoc_rsu {
                    v.assoc_rsu = assoc;
                    if assoc.is_some() && self.mode.uses_decisions() {
                        newly_associated.push(i);
                    }
                }
            }

            // Wait expiry: WAITING -> ACTIVE. Vehicles outside coverage
            // flip too (keeping phase consistent with wait_until) but
            // cannot drain until they associate.
            if self.mode.uses_decisions() {
                for v in self.vehicles.iter_mut() {
                    if v.phase == Phase::Waiting && v.wait_until.is_finite() && now >= v.wait_until
                    {
                        v.phase = Phase::Active;
                        v.active_since = now;
                        v.bytes_sent_this_cycle = 0.0;
                    }
                }
            }

            // Epochs on association: close the open interval (the reward
            // goes to the learner that acted), decide at the new RSU.
            for i in newly_associated {
                let id = self.vehicles[i].id;
                let rsu = self.vehicles[i].assoc_rsu.expect("just associated");
                let obs = self.observe(i, rsu);
                if let Some(p) = self.pending.remove(&id) {
                    self.complete(learners, p, obs, false)?;
                }
                self.decide(learners, i, rsu, obs)?;
            }

            // Out-of-coverage vehicles keep generating but cannot drain.
            for v in self.vehicles.iter_mut() {
                if v.assoc_rsu.is_none() {
                    v.queue_bytes +=
                        self.cfg.profiles.get(v.category).app_rate_bps * self.cfg.tick / 8.0;
                }
            }

            // Channel ticks per RSU; accumulate open intervals and KPIs.
            for rsu in 0..self.cfg.rsu_positions.len() {
                let outcome = self.channels[rsu].tick(
                    rsu,
                    &mut self.vehicles,
                    self.cfg.tick,
                    &self.cfg.profiles,
                );
                for vt in &outcome.per_vehicle {
                    if let Some(p) = self.pending.get_mut(&vt.vehicle_id) {
                        p.delay_sum += vt.queue_delay_s;
                        p.delay_ticks += 1;
                        p.drained_bits += vt.drained_bits;
                    }
                }
                self.ledger.record_tick(rsu, &outcome, now);
            }

            // Cycle-end epochs: queue drained empty or cycle cap reached.
            if self.mode.uses_decisions() {
                for i in 0..self.vehicles.len() {
                    let v = &self.vehicles[i];
                    if v.phase != Phase::Active {
                        continue;
                    }
                    let Some(rsu) = v.assoc_rsu else { continue };
                    let cycle_over = v.queue_bytes <= 0.0 || now - v.active_since >= T_ACTIVE_MAX_S;
                    if !cycle_over {
                        continue;
                    }
                    let id = v.id;
                    let obs = self.observe(i, rsu);
                    if let Some(p) = self.pending.remove(&id) {
                        self.complete(learners, p, obs, false)?;
                    }
                    self.decide(learners, i, rsu, obs)?;
                }
            }
        }

        // Episode end: every open interval closes as terminal.
        let ids: Vec<u64> = self.pending.keys().copied().collect();
        for id in ids {
            let p = self.pending.remove(&id).expect("key listed");
            let frozen = p.state;
            self.complete(learners, p, frozen, true)?;
        }
        Ok(())
    }
}

/// Runs one episode. Deterministic given (config, mode, episode index):
/// per tick it spawns, moves, associates, fires decision epochs, ticks
/// every RSU channel, records KPIs, and feeds learners.
pub fn run_episode(
    cfg: &SimConfig,
    mode: AgentMode,
    learners: &mut [Learner],
    episode: u32,
    learn: bool,
    epsilon: f64,
) -> Result<MetricsLedger, HarnessError> {
    let mut ep = Episode::new(cfg, mode, learn, epsilon, episode);
    ep.run(learners)?;
    Ok(ep.ledger)
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub summaries: Vec<EpisodeSummary>,
    pub timeseries: Vec<TimeseriesRow>,
    pub episode_rewards: Vec<f64>,
    pub model_paths: Vec<PathBuf>,
    pub wait_assignments: u64,
    pub wait_violations: u64,
    pub learner_updates: u64,
}

/// Runs a scenario end to end: sequential episodes with persistent
/// learner state, per-episode summaries, and (with `out_dir`) metrics
/// CSVs, model files, and a run manifest.
///
/// `evaluate` (or zero episodes) disables exploration and learning and
/// runs a single scoring episode.
pub fn run_scenario(
    base_cfg: &SimConfig,
    scenario: &Scenario,
    out_dir: Option<&Path>,
    evaluate: bool,
) -> Result<RunOutcome, HarnessError> {
    scenario.validate()?;
    let cfg = scenario.effective_config(base_cfg)?;

    let mut learners = build_learners(&cfg, scenario)?;
    let requested_episodes = scenario.episodes.unwrap_or(cfg.episodes);
    let evaluate = evaluate || requested_episodes == 0;
    let (episodes, learn, epsilon) = if evaluate {
        (requested_episodes.max(1), false, 0.0)
    } else {
        (requested_episodes, true, cfg.rl.epsilon)
    };

    let mut summaries = Vec::new();
    let mut timeseries = Vec::new();
    let mut episode_rewards = Vec::new();
    let mut wait_assignments = 0;
    let mut wait_violations = 0;
    let mut learner_updates = 0;

    for episode in 0..episodes {
        let ledger = run_episode(
            &cfg,
            scenario.agent_mode,
            &mut learners,
            episode,
            learn,
            epsilon,
        )?;
        episode_rewards.push(ledger.episode_reward());
        wait_assignments += ledger.wait_assignments();
        wait_violations += ledger.wait_violations();
        learner_updates += ledger.learner_updates();
        timeseries.extend(ledger.timeseries_rows(episode));
        summaries.push(ledger.episode_summary(episode));
    }

    let mut model_paths = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_csv(&summaries, &dir.join("metrics.csv"))?;
        write_timeseries_csv(&timeseries, &dir.join("timeseries.csv"))?;
        if learners.len() == 1 {
            let path = dir.join("model.txt");
            learners[0].save_file(&path, cfg.seed)?;
            model_paths.push(path);
        } else {
            for (i, learner) in learners.iter().enumerate() {
                let path = dir.join(format!("model_rsu{i}.txt"));
                learner.save_file(&path, cfg.seed)?;
                model_paths.push(path);
            }
        }
        let manifest = run_manifest(&cfg, scenario, episodes, evaluate);
        let manifest_path = dir.join("manifest.txt");
        std::fs::write(&manifest_path, manifest).map_err(|source| HarnessError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
    }

    Ok(RunOutcome {
        summaries,
        timeseries,
        episode_rewards,
        model_paths,
        wait_assignments,
        wait_violations,
        learner_updates,
    })
}

/// Builds the learner bank: none for baselines, one shared learner for
/// single-agent mode, one per RSU for multi-agent mode. A pretrained
/// model file seeds every learner with an independent copy.
fn build_learners(cfg: &SimConfig, scenario: &Scenario) -> Result<Vec<Learner>, HarnessError> {
    if !scenario.agent_mode.uses_learner() {
        return Ok(Vec::new());
    }
    let count = match scenario.agent_mode {
        AgentMode::MultiAgent => scenario.rsu_positions.len(),
        _ => 1,
    };

    if let Some(path) = &scenario.pretrained {
        let saved = crate::agents::load_model(path)?;
        let file_kind = match saved {
            SavedModel::QTable { .. } => LearnerKind::TabularQ,
            SavedModel::Dqn { .. } => LearnerKind::Dqn,
            SavedModel::ActorCritic { .. } => LearnerKind::ActorCritic,
        };
        if file_kind != scenario.learner {
            return Err(HarnessError::Scenario(format!(
                "learner `{}` does not match model file kind `{}`",
                scenario.learner.name(),
                file_kind.name()
            )));
        }
        return (0..count)
            .map(|_| Learner::from_saved(&saved, &cfg.rl).map_err(HarnessError::from))
            .collect();
    }

    let mut init_rng = stream(cfg.seed, StreamPurpose::Init, 0);
    Ok((0..count)
        .map(|_| Learner::new(scenario.learner, &cfg.rl, &mut init_rng))
        .collect())
}

/// 64-bit FNV-1a, used to fingerprint the effective configuration.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn run_manifest(cfg: &SimConfig, scenario: &Scenario, episodes: u32, evaluate: bool) -> String {
    let config_text = crate::domain::serialize_config(cfg);
    format!(
        "scenario = {}\nmode = {}\nlearner = {}\nprofile_set = {}\nepisodes = {}\nevaluate = {}\nseed = {}\nconfig_hash = {:#018x}\n",
        scenario.name,
        scenario.agent_mode.name(),
        scenario.learner.name(),
        scenario.profile_set.name(),
        episodes,
        evaluate,
        cfg.seed,
        fnv1a64(config_text.as_bytes()),
    )
}
