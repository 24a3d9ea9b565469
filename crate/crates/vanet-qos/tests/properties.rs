//! Property tests for the library-wide invariants: reward monotonicity,
//! fairness bounds, allocation correctness, sojourn monotonicity, spawn
//! totals, and the round-trip guarantees of the two text formats.

use proptest::prelude::*;

use vanet_qos::agents::{
    discretize, encode, parse_model, q_update, select_epsilon_greedy, serialize_model, Action,
    DiscreteState, ReplayBuffer, SavedModel, StateObs, Transition, ENCODED_LEN,
};
use vanet_qos::channel::{
    effective_capacity, max_min_allocate, AllocationMode, ChannelParams, RsuChannel,
};
use vanet_qos::domain::{
    default_profiles, parse_config, serialize_config, ProfileSetKind, ServiceCategory, SimConfig,
};
use vanet_qos::metrics::jain_index;
use vanet_qos::reward::{utility, IntervalMeasurement, RewardConfig};
use vanet_qos::rng::{stream, StreamPurpose};
use vanet_qos::traffic::{associate_rsu, sojourn, Phase, Spawner, Vehicle};

fn category() -> impl Strategy<Value = ServiceCategory> {
    (0usize..4).prop_map(|i| ServiceCategory::from_index(i).unwrap())
}

fn measurement() -> impl Strategy<Value = IntervalMeasurement> {
    (
        category(),
        0.0..50.0f64,
        0.0..40_000_000.0f64,
        0.01..10.0f64,
    )
        .prop_map(|(category, lat, thr, dur)| IntervalMeasurement {
            category,
            mean_latency_s: lat,
            throughput_bps: thr,
            duration_s: dur,
        })
}

proptest! {
    #[test]
    fn utility_monotone_in_latency_and_throughput(
        m in measurement(),
        d_lat in 0.0..20.0f64,
        d_thr in 0.0..10_000_000.0f64,
    ) {
        let profiles = default_profiles();
        let p = profiles.get(m.category);
        let rc = RewardConfig::default();
        let base = utility(&m, p, &rc);

        let mut worse_lat = m.clone();
        worse_lat.mean_latency_s += d_lat;
        prop_assert!(utility(&worse_lat, p, &rc) <= base + 1e-12);

        let mut better_thr = m.clone();
        better_thr.throughput_bps += d_thr;
        prop_assert!(utility(&better_thr, p, &rc) >= base - 1e-12);
    }

    #[test]
    fn utility_bounded_above_by_alpha1_plus_bonus(m in measurement()) {
        let profiles = default_profiles();
        let p = profiles.get(m.category);
        let rc = RewardConfig::default();
        prop_assert!(utility(&m, p, &rc) <= rc.alpha1 + rc.bonus + 1e-12);
    }

    #[test]
    fn penalty_and_bonus_never_both(m in measurement()) {
        let profiles = default_profiles();
        let p = profiles.get(m.category);
        let neutral = RewardConfig { penalty: 0.0, bonus: 0.0, ..RewardConfig::default() };
        let rc = RewardConfig::default();
        let delta = utility(&m, p, &rc) - utility(&m, p, &neutral);
        let is_penalty = (delta - rc.penalty).abs() < 1e-9;
        let is_bonus = (delta - rc.bonus).abs() < 1e-9;
        let is_neither = delta.abs() < 1e-9;
        prop_assert!(is_penalty || is_bonus || is_neither);
    }

    #[test]
    fn jain_bounds_and_scale_invariance(
        values in prop::collection::vec(0.0..1_000_000.0f64, 1..32),
        scale in 0.001..1000.0f64,
    ) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let j = jain_index(&values).unwrap();
        let n = values.len() as f64;
        prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0 + 1e-12);

        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let js = jain_index(&scaled).unwrap();
        prop_assert!((j - js).abs() < 1e-9);
    }

    #[test]
    fn max_min_respects_demands_and_capacity(
        demands in prop::collection::vec(0.0..2_000_000.0f64, 1..12),
        capacity in 0.0..5_000_000.0f64,
    ) {
        let weights = vec![1.0; demands.len()];
        let alloc = max_min_allocate(&demands, &weights, capacity);
        let total: f64 = alloc.iter().sum();
        prop_assert!(total <= capacity + 1e-6);
        for (a, d) in alloc.iter().zip(&demands) {
            prop_assert!(*a >= 0.0 && *a <= d + 1e-9);
        }
        // No unmet flow receives less than any met flow.
        for i in 0..demands.len() {
            if alloc[i] + 1e-6 < demands[i] {
                for j in 0..demands.len() {
                    if (alloc[j] - demands[j]).abs() <= 1e-9 {
                        prop_assert!(alloc[i] >= alloc[j] - 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn adding_transmitter_never_helps_others(
        demands in prop::collection::vec(1_000.0..2_000_000.0f64, 1..8),
        extra in 1_000.0..2_000_000.0f64,
    ) {
        let params = ChannelParams::default();
        let n = demands.len();
        let before = max_min_allocate(&demands, &vec![1.0; n], effective_capacity(n, &params) * 0.1);
        let mut extended = demands.clone();
        extended.push(extra);
        let after = max_min_allocate(&extended, &vec![1.0; n + 1], effective_capacity(n + 1, &params) * 0.1);
        for i in 0..n {
            prop_assert!(after[i] <= before[i] + 1e-9);
        }
    }

    #[test]
    fn sojourn_level_monotone_at_constant_speed(speed in 0.5..17.0f64) {
        let cfg = SimConfig::default();
        let mut v = Vehicle::new(0, ServiceCategory::Video, 0.0);
        v.speed = speed;
        let mut last = 4u8;
        let mut pos = 300.0 - cfg.coverage_radius;
        while pos <= 300.0 + cfg.coverage_radius {
            v.position = pos;
            let level = sojourn(&v, 300.0, &cfg).level;
            prop_assert!(level <= last);
            last = level;
            pos += 0.5;
        }
    }

    #[test]
    fn association_finds_nearest_in_range(
        offsets in prop::collection::vec(1.0..500.0f64, 1..8),
        position in 0.0..4000.0f64,
        radius in 10.0..400.0f64,
    ) {
        // Build a strictly increasing RSU layout from positive offsets.
        let mut rsus = Vec::with_capacity(offsets.len());
        let mut x = 0.0;
        for o in &offsets {
            x += o;
            rsus.push(x);
        }
        let got = associate_rsu(position, &rsus, radius);
        let nearest = rsus
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (position - a.1).abs();
                let db = (position - b.1).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        match got {
            None => prop_assert!(rsus.iter().all(|r| (position - r).abs() > radius)),
            Some(i) => {
                prop_assert!((position - rsus[i]).abs() <= radius);
                prop_assert!(((position - rsus[i]).abs() - (position - nearest.1).abs()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spawn_total_matches_enumeration(
        interval_tenths in 2u32..40,
        horizon_tenths in 10u32..2000,
        seed in 0u64..1000,
    ) {
        let cfg = SimConfig {
            entry_interval: interval_tenths as f64 / 10.0,
            ..SimConfig::default()
        };
        let horizon = horizon_tenths as f64 / 10.0;
        let mut spawner = Spawner::new();
        let mut rng = stream(seed, StreamPurpose::Categories, 0);
        let ticks = (horizon / cfg.tick).round() as u64;
        let mut total = 0u64;
        for i in 0..ticks {
            let now = (i + 1) as f64 * cfg.tick;
            total += spawner.spawn_step(now, &mut rng, &cfg).len() as u64;
        }
        // Independent enumeration of entry boundaries inside the horizon.
        let mut expected = 0u64;
        let mut k = 1u64;
        while k as f64 * cfg.entry_interval <= ticks as f64 * cfg.tick {
            expected += 1;
            k += 1;
        }
        prop_assert_eq!(total, expected);
    }

    #[test]
    fn config_roundtrip_is_byte_identical(
        tick in 0.01..1.0f64,
        duration in 1.0..500.0f64,
        episodes in 0u32..100,
        seed in proptest::num::u64::ANY,
        phy in 1.0e6..50.0e6f64,
        epsilon in 0.0..1.0f64,
        uniform in proptest::bool::ANY,
        w_max in 0.1..10.0f64,
    ) {
        let mut cfg = SimConfig {
            tick,
            episode_duration: duration,
            episodes,
            seed,
            ..SimConfig::default()
        };
        cfg.channel.phy_rate_bps = phy;
        cfg.rl.epsilon = epsilon;
        if uniform {
            cfg.profile_set = ProfileSetKind::Uniform900B;
        }
        cfg.profiles.get_mut(ServiceCategory::Voice).w_max_s = w_max;
        let text = serialize_config(&cfg);
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(serialize_config(&parsed), text);
    }

    #[test]
    fn qtable_model_roundtrip_is_byte_identical(
        values in prop::collection::vec(-1.0e6..1.0e6f64, 16),
        seed in proptest::num::u64::ANY,
    ) {
        let model = SavedModel::QTable { states: 4, actions: 4, seed, values };
        let text = serialize_model(&model);
        let parsed = parse_model(&text).unwrap();
        prop_assert_eq!(&parsed, &model);
        prop_assert_eq!(serialize_model(&parsed), text);
    }

    #[test]
    fn encode_components_in_unit_interval(
        sojourn_level in 0u8..5,
        tv in 0u32..200,
        cat in category(),
        tcv in 0u32..200,
    ) {
        let obs = StateObs {
            sojourn_level,
            total_vehicles: tv,
            category: cat,
            category_vehicles: tcv.min(tv),
        };
        let x = encode(&obs, &[5, 10, 20], &[2, 5, 10]);
        prop_assert_eq!(x.len(), ENCODED_LEN);
        for v in x {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let d = discretize(&obs, &[5, 10, 20], &[2, 5, 10]);
        prop_assert!(d.index() < DiscreteState::COUNT);
    }

    #[test]
    fn argmax_invariant_under_constant_shift(
        values in prop::collection::vec(-100.0..100.0f64, 8),
        shift in -1000.0..1000.0f64,
    ) {
        let mut rng = stream(1, StreamPurpose::Exploration, 0);
        let base = select_epsilon_greedy(&values, 0.0, &mut rng);
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let moved = select_epsilon_greedy(&shifted, 0.0, &mut rng);
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn q_update_touches_one_cell(
        s in 0usize..320,
        s_next in 0usize..320,
        a in 1u8..=8,
        reward in -100.0..10.0f64,
        terminal in proptest::bool::ANY,
    ) {
        let mut table = vec![0.25; 320 * 8];
        let before = table.clone();
        q_update(&mut table, 8, s, Action::new(a).unwrap(), reward, s_next, terminal, 0.1, 0.99);
        let changed = before.iter().zip(&table).filter(|(b, t)| b != t).count();
        prop_assert!(changed <= 1);
        prop_assert!(table.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn replay_buffer_eviction_strictly_fifo(extra in 1usize..40) {
        let capacity = 50;
        let mut buf = ReplayBuffer::new(capacity);
        let s = StateObs {
            sojourn_level: 0,
            total_vehicles: 0,
            category: ServiceCategory::Voice,
            category_vehicles: 0,
        };
        for i in 0..capacity + extra {
            buf.push(Transition {
                state: s,
                action: Action::new(1).unwrap(),
                reward: i as f64,
                next_state: s,
                terminal: false,
            });
        }
        prop_assert_eq!(buf.len(), capacity);
        let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        for i in 0..extra {
            prop_assert!(!rewards.contains(&(i as f64)));
        }
        prop_assert!(rewards.contains(&((capacity + extra - 1) as f64)));
    }
}

/// Deterministic load-response check: with one BE vehicle per contender
/// count, the average ACTIVE queue delay never drops as contenders join.
#[test]
fn latency_non_decreasing_in_active_contenders() {
    let profiles = default_profiles();
    let mut means = Vec::new();
    for n in 1..=10usize {
        let mut channel = RsuChannel::new(ChannelParams::default(), AllocationMode::EqualShare);
        let mut vehicles: Vec<Vehicle> = (0..n)
            .map(|i| {
                let mut v = Vehicle::new(i as u64, ServiceCategory::BestEffort, 0.0);
                v.assoc_rsu = Some(0);
                v.phase = Phase::Active;
                v.wait_until = 0.0;
                v
            })
            .collect();
        let mut sum = 0.0;
        let mut count = 0u32;
        for _ in 0..20 {
            let outcome = channel.tick(0, &mut vehicles, 0.1, &profiles);
            for vt in outcome.per_vehicle.iter().filter(|vt| vt.active) {
                sum += vt.queue_delay_s;
                count += 1;
            }
        }
        means.push(sum / count as f64);
    }
    for pair in means.windows(2) {
        assert!(
            pair[1] >= pair[0] - 1e-9,
            "mean delay dropped when load rose: {means:?}"
        );
    }
}
