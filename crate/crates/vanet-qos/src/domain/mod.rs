//! Shared domain types: service categories, per-category traffic profiles,
//! and the full simulation/learning configuration.

mod config_text;

pub use config_text::{parse_config, serialize_config};

use thiserror::Error;

use crate::channel::ChannelParams;
use crate::reward::RewardConfig;

/// The four application service categories a vehicle can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServiceCategory {
    /// Voice (VO).
    Voice,
    /// Video (VI).
    Video,
    /// HD-map sensor offload (HDMAP).
    HdMap,
    /// Best-effort (BE).
    BestEffort,
}

impl ServiceCategory {
    pub const ALL: [ServiceCategory; 4] = [
        ServiceCategory::Voice,
        ServiceCategory::Video,
        ServiceCategory::HdMap,
        ServiceCategory::BestEffort,
    ];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            ServiceCategory::Voice => 0,
            ServiceCategory::Video => 1,
            ServiceCategory::HdMap => 2,
            ServiceCategory::BestEffort => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<ServiceCategory> {
        Self::ALL.get(index).copied()
    }

    /// Short lowercase key used in config files (`category.<key>.*`).
    pub fn key(self) -> &'static str {
        match self {
            ServiceCategory::Voice => "vo",
            ServiceCategory::Video => "vi",
            ServiceCategory::HdMap => "hdmap",
            ServiceCategory::BestEffort => "be",
        }
    }

    /// Uppercase label used in CSV output and summaries.
    pub fn label(self) -> &'static str {
        match self {
            ServiceCategory::Voice => "VO",
            ServiceCategory::Video => "VI",
            ServiceCategory::HdMap => "HDMAP",
            ServiceCategory::BestEffort => "BE",
        }
    }

    pub fn parse_key(key: &str) -> Option<ServiceCategory> {
        Self::ALL.iter().copied().find(|c| c.key() == key)
    }
}

impl std::fmt::Display for ServiceCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-category traffic characteristics and QoS thresholds.
///
/// `r_threshold_bps` serves both as the normalizer of the utility's
/// throughput term and as the minimum-rate constraint; `l_threshold_s` is
/// the maximum tolerated latency; `w_max_s` bounds the assignable waiting
/// time.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryProfile {
    pub category: ServiceCategory,
    /// Application generation rate in bits per second.
    pub app_rate_bps: f64,
    /// Nominal packet size in bytes.
    pub packet_size_bytes: f64,
    /// Nominal packet sending interval in seconds.
    pub send_interval_s: f64,
    /// Throughput threshold in bits per second.
    pub r_threshold_bps: f64,
    /// Latency threshold in seconds.
    pub l_threshold_s: f64,
    /// Maximum assignable waiting time in seconds.
    pub w_max_s: f64,
}

/// Which packet schedule the profiles follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSetKind {
    /// Per-category packet sizes (125 B voice, 600 B video, 600 B HD map,
    /// 900 B best-effort) at category-specific intervals. Default.
    PerCategorySizes,
    /// Uniform 900 B packets with intervals stretched to preserve each
    /// category's application rate.
    Uniform900B,
}

impl ProfileSetKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileSetKind::PerCategorySizes => "per-category",
            ProfileSetKind::Uniform900B => "uniform-900b",
        }
    }

    pub fn parse(name: &str) -> Option<ProfileSetKind> {
        match name {
            "per-category" => Some(ProfileSetKind::PerCategorySizes),
            "uniform-900b" => Some(ProfileSetKind::Uniform900B),
            _ => None,
        }
    }
}

/// The four category profiles, indexed by [`ServiceCategory`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: [CategoryProfile; 4],
}

impl ProfileSet {
    pub fn from_kind(kind: ProfileSetKind) -> ProfileSet {
        match kind {
            ProfileSetKind::PerCategorySizes => Self::per_category_sizes(),
            ProfileSetKind::Uniform900B => Self::uniform_900b(),
        }
    }

    /// Default profile set: per-category packet sizes and intervals.
    pub fn per_category_sizes() -> ProfileSet {
        ProfileSet {
            profiles: [
                CategoryProfile {
                    category: ServiceCategory::Voice,
                    app_rate_bps: 100_000.0,
                    packet_size_bytes: 125.0,
                    send_interval_s: 0.010,
                    r_threshold_bps: 100_000.0,
                    l_threshold_s: 0.150,
                    w_max_s: 0.92,
                },
                CategoryProfile {
                    category: ServiceCategory::Video,
                    app_rate_bps: 5_000_000.0,
                    packet_size_bytes: 600.0,
                    send_interval_s: 0.001,
                    r_threshold_bps: 1_250_000.0,
                    l_threshold_s: 0.100,
                    w_max_s: 2.0,
                },
                CategoryProfile {
                    category: ServiceCategory::HdMap,
                    app_rate_bps: 4_000_000.0,
                    packet_size_bytes: 600.0,
                    send_interval_s: 0.0012,
                    r_threshold_bps: 1_250_000.0,
                    l_threshold_s: 0.100,
                    w_max_s: 2.0,
                },
                CategoryProfile {
                    category: ServiceCategory::BestEffort,
                    app_rate_bps: 28_000_000.0,
                    packet_size_bytes: 900.0,
                    send_interval_s: 0.000_25,
                    r_threshold_bps: 1_000_000.0,
                    l_threshold_s: 1.0,
                    w_max_s: 8.0,
                },
            ],
        }
    }

    /// Variant with uniform 900 B packets; intervals are recomputed so
    /// every category keeps its application rate.
    pub fn uniform_900b() -> ProfileSet {
        let mut set = Self::per_category_sizes();
        for p in set.profiles.iter_mut() {
            p.packet_size_bytes = 900.0;
            p.send_interval_s = 900.0 * 8.0 / p.app_rate_bps;
        }
        set
    }

    pub fn get(&self, category: ServiceCategory) -> &CategoryProfile {
        &self.profiles[category.index()]
    }

    pub fn get_mut(&mut self, category: ServiceCategory) -> &mut CategoryProfile {
        &mut self.profiles[category.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategoryProfile> {
        self.profiles.iter()
    }
}

/// Returns the four default per-category profiles. Stable across calls.
pub fn default_profiles() -> ProfileSet {
    ProfileSet::per_category_sizes()
}

/// Hyperparameters shared by all three learners.
#[derive(Debug, Clone, PartialEq)]
pub struct RlHyperparams {
    /// Exploration probability for epsilon-greedy selection.
    pub epsilon: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Learning rate.
    pub alpha: f64,
    /// Number of discrete actions; fixed at 8.
    pub action_count: u32,
    /// Hidden-layer width of the DQN/actor-critic networks.
    pub hidden_neurons: usize,
    /// Replay buffer capacity.
    pub buffer_capacity: usize,
    /// Minibatch size for DQN updates.
    pub batch_size: usize,
    /// Target-network synchronization period in train steps.
    pub target_sync_period: u64,
    /// Bucket edges for discretizing the total active-vehicle count.
    pub tv_bucket_edges: Vec<u32>,
    /// Bucket edges for discretizing the per-category active count.
    pub tcv_bucket_edges: Vec<u32>,
}

impl Default for RlHyperparams {
    fn default() -> Self {
        RlHyperparams {
            epsilon: 0.2,
            gamma: 0.99,
            alpha: 0.1,
            action_count: 8,
            hidden_neurons: 32,
            buffer_capacity: 500,
            batch_size: 32,
            target_sync_period: 100,
            tv_bucket_edges: vec![5, 10, 20],
            tcv_bucket_edges: vec![2, 5, 10],
        }
    }
}

/// Full simulation configuration. Immutable after [`validate_config`];
/// safe to share read-only across concurrent workers.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulation tick in seconds.
    pub tick: f64,
    /// Episode duration in seconds.
    pub episode_duration: f64,
    /// Number of training episodes.
    pub episodes: u32,
    /// Vehicle entry interval in seconds.
    pub entry_interval: f64,
    /// RSU coverage radius in meters.
    pub coverage_radius: f64,
    /// Vehicle maximum speed in m/s.
    pub max_speed: f64,
    /// Vehicle acceleration in m/s².
    pub accel: f64,
    /// Vehicle deceleration in m/s² (carried in config; the straight
    /// corridor has no stop events).
    pub decel: f64,
    /// RSU positions along the corridor in meters, strictly increasing.
    pub rsu_positions: Vec<f64>,
    /// Corridor length in meters; vehicles depart beyond it.
    pub corridor_length: f64,
    /// Which packet schedule the category profiles follow.
    pub profile_set: ProfileSetKind,
    /// The four category profiles (preset plus any per-key overrides).
    pub profiles: ProfileSet,
    pub channel: ChannelParams,
    pub reward: RewardConfig,
    pub rl: RlHyperparams,
    /// Master seed; all random streams derive from it.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tick: 0.1,
            episode_duration: 250.0,
            episodes: 50,
            entry_interval: 0.66,
            coverage_radius: 200.0,
            max_speed: 17.0,
            accel: 2.6,
            decel: 4.5,
            rsu_positions: vec![300.0],
            corridor_length: 900.0,
            profile_set: ProfileSetKind::PerCategorySizes,
            profiles: ProfileSet::per_category_sizes(),
            channel: ChannelParams::default(),
            reward: RewardConfig::default(),
            rl: RlHyperparams::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration:\n  {}", violations.join("\n  "))]
    Invalid { violations: Vec<String> },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Checks every configuration invariant, returning the config unchanged on
/// success or the full list of violations.
pub fn validate_config(cfg: SimConfig) -> Result<SimConfig, ConfigError> {
    let mut violations = Vec::new();
    let mut check = |ok: bool, msg: &str| {
        if !ok {
            violations.push(msg.to_string());
        }
    };

    check(cfg.tick > 0.0, "tick must be > 0");
    check(
        cfg.episode_duration >= cfg.tick,
        "episode_duration must be >= tick",
    );
    check(cfg.entry_interval > 0.0, "entry_interval must be > 0");
    check(cfg.coverage_radius > 0.0, "coverage_radius must be > 0");
    check(cfg.max_speed > 0.0, "max_speed must be > 0");
    check(cfg.accel > 0.0, "accel must be > 0");
    check(cfg.decel >= 0.0, "decel must be >= 0");

    check(
        !cfg.rsu_positions.is_empty(),
        "rsu_positions must not be empty",
    );
    check(
        cfg.rsu_positions.windows(2).all(|w| w[0] < w[1]),
        "rsu_positions not strictly increasing",
    );
    if let Some(&last) = cfg.rsu_positions.last() {
        check(
            cfg.corridor_length > last,
            "corridor_length must exceed the last RSU position",
        );
    }

    check(
        cfg.channel.phy_rate_bps > 0.0,
        "channel.phy_rate must be > 0",
    );
    check(
        cfg.channel.contention_coeff >= 0.0,
        "channel.contention_coeff must be >= 0",
    );

    check(
        (cfg.reward.alpha1 + cfg.reward.alpha2 - 1.0).abs() <= 1e-9,
        "reward.alpha1 + reward.alpha2 must equal 1",
    );
    check(cfg.reward.penalty <= 0.0, "reward.penalty must be <= 0");
    check(cfg.reward.bonus >= 0.0, "reward.bonus must be >= 0");

    let rl = &cfg.rl;
    check(
        (0.0..=1.0).contains(&rl.epsilon),
        "rl.epsilon must be in [0, 1]",
    );
    check(
        rl.gamma >= 0.0 && rl.gamma < 1.0,
        "rl.gamma must be in [0, 1)",
    );
    check(rl.alpha > 0.0, "rl.alpha must be > 0");
    check(rl.action_count == 8, "rl.action_count must be 8");
    check(rl.hidden_neurons >= 1, "rl.hidden_neurons must be >= 1");
    check(rl.batch_size >= 1, "rl.batch_size must be >= 1");
    check(
        rl.buffer_capacity >= rl.batch_size,
        "rl.buffer_capacity must be >= rl.batch_size",
    );
    check(
        rl.target_sync_period >= 1,
        "rl.target_sync_period must be >= 1",
    );
    for (name, edges) in [
        ("rl.tv_bucket_edges", &rl.tv_bucket_edges),
        ("rl.tcv_bucket_edges", &rl.tcv_bucket_edges),
    ] {
        check(
            edges.len() == 3,
            &format!("{name} must have exactly 3 edges"),
        );
        check(
            edges.windows(2).all(|w| w[0] < w[1]),
            &format!("{name} must be strictly increasing"),
        );
    }

    for p in cfg.profiles.iter() {
        let key = p.category.key();
        check(
            p.app_rate_bps > 0.0,
            &format!("category.{key}.app_rate must be > 0"),
        );
        check(
            p.packet_size_bytes > 0.0,
            &format!("category.{key}.packet_size must be > 0"),
        );
        check(
            p.send_interval_s > 0.0,
            &format!("category.{key}.send_interval must be > 0"),
        );
        check(
            p.r_threshold_bps > 0.0,
            &format!("category.{key}.r_threshold must be > 0"),
        );
        check(
            p.l_threshold_s > 0.0,
            &format!("category.{key}.l_threshold must be > 0"),
        );
        check(
            p.w_max_s > 0.0,
            &format!("category.{key}.w_max must be > 0"),
        );
        if p.app_rate_bps > 0.0 && p.send_interval_s > 0.0 {
            let schedule_rate = p.packet_size_bytes * 8.0 / p.send_interval_s;
            let rel = (schedule_rate - p.app_rate_bps).abs() / p.app_rate_bps;
            check(
                rel <= 0.05,
                &format!("category.{key}: app_rate and packet schedule disagree by more than 5%"),
            );
        }
    }

    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid { violations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profiles_match_thresholds() {
        let p = default_profiles();
        assert_eq!(p.get(ServiceCategory::Voice).w_max_s, 0.92);
        assert_eq!(p.get(ServiceCategory::BestEffort).l_threshold_s, 1.0);
        assert_eq!(p.get(ServiceCategory::HdMap).r_threshold_bps, 1_250_000.0);
        assert_eq!(p.get(ServiceCategory::Video).app_rate_bps, 5_000_000.0);
        assert_eq!(
            p.get(ServiceCategory::BestEffort).app_rate_bps,
            28_000_000.0
        );
    }

    #[test]
    fn default_profiles_stable_across_calls() {
        assert_eq!(default_profiles(), default_profiles());
    }

    #[test]
    fn profile_schedule_consistent_with_rates() {
        for set in [ProfileSet::per_category_sizes(), ProfileSet::uniform_900b()] {
            for p in set.iter() {
                let schedule_rate = p.packet_size_bytes * 8.0 / p.send_interval_s;
                let rel = (schedule_rate - p.app_rate_bps).abs() / p.app_rate_bps;
                assert!(
                    rel <= 0.05,
                    "{}: schedule {schedule_rate} vs rate {}",
                    p.category,
                    p.app_rate_bps
                );
            }
        }
        // VO default: 125 B every 10 ms is exactly 100 kbps.
        let vo = default_profiles().get(ServiceCategory::Voice).clone();
        assert_eq!(vo.packet_size_bytes * 8.0 / vo.send_interval_s, 100_000.0);
    }

    #[test]
    fn default_config_validates() {
        assert!(validate_config(SimConfig::default()).is_ok());
    }

    #[test]
    fn zero_tick_names_tick() {
        let cfg = SimConfig {
            tick: 0.0,
            ..SimConfig::default()
        };
        let err = validate_config(cfg).unwrap_err();
        match err {
            ConfigError::Invalid { violations } => {
                assert!(violations.iter().any(|v| v.contains("tick")));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn non_increasing_rsus_rejected() {
        let cfg = SimConfig {
            rsu_positions: vec![300.0, 300.0],
            ..SimConfig::default()
        };
        let err = validate_config(cfg).unwrap_err();
        assert!(err
            .to_string()
            .contains("rsu_positions not strictly increasing"));
    }

    #[test]
    fn category_index_roundtrip() {
        for c in ServiceCategory::ALL {
            assert_eq!(ServiceCategory::from_index(c.index()), Some(c));
            assert_eq!(ServiceCategory::parse_key(c.key()), Some(c));
        }
        assert_eq!(ServiceCategory::from_index(4), None);
    }
}
