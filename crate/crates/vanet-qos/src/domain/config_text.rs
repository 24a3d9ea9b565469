//! Plain-text configuration format: one `key = value` per line, keys
//! prefixed by section (`sim.`, `channel.`, `reward.`, `rl.`,
//! `category.<name>.`). Blank lines and `#` comments are ignored. Every
//! key is optional; missing keys keep their defaults.
//!
//! [`serialize_config`] emits every key in a fixed canonical order, so
//! serialize → parse → serialize is byte-identical.

use super::{ConfigError, ProfileSet, ProfileSetKind, ServiceCategory, SimConfig};

/// Parses configuration text over the defaults. Never panics on malformed
/// input; the first offending line is reported.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        pairs.push((line_no, key.trim().to_string(), value.trim().to_string()));
    }

    let mut cfg = SimConfig::default();

    // The profile preset must be applied before per-category overrides,
    // wherever it appears in the file.
    for (line, key, value) in &pairs {
        if key == "sim.profile_set" {
            let kind = ProfileSetKind::parse(value).ok_or_else(|| ConfigError::Parse {
                line: *line,
                msg: format!(
                    "unknown profile set `{value}` (expected per-category or uniform-900b)"
                ),
            })?;
            cfg.profile_set = kind;
            cfg.profiles = ProfileSet::from_kind(kind);
        }
    }

    for (line, key, value) in &pairs {
        if key == "sim.profile_set" {
            continue;
        }
        apply_key(&mut cfg, *line, key, value)?;
    }

    Ok(cfg)
}

fn apply_key(cfg: &mut SimConfig, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    let err = |msg: String| ConfigError::Parse { line, msg };

    if let Some(rest) = key.strip_prefix("category.") {
        let Some((cat_key, field)) = rest.split_once('.') else {
            return Err(err(format!(
                "expected category.<name>.<field>, got `{key}`"
            )));
        };
        let Some(category) = ServiceCategory::parse_key(cat_key) else {
            return Err(err(format!(
                "unknown category `{cat_key}` (expected vo, vi, hdmap, or be)"
            )));
        };
        let v = parse_f64(line, key, value)?;
        let p = cfg.profiles.get_mut(category);
        match field {
            "app_rate" => p.app_rate_bps = v,
            "packet_size" => p.packet_size_bytes = v,
            "send_interval" => p.send_interval_s = v,
            "r_threshold" => p.r_threshold_bps = v,
            "l_threshold" => p.l_threshold_s = v,
            "w_max" => p.w_max_s = v,
            other => return Err(err(format!("unknown category field `{other}`"))),
        }
        return Ok(());
    }

    match key {
        "sim.tick" => cfg.tick = parse_f64(line, key, value)?,
        "sim.episode_duration" => cfg.episode_duration = parse_f64(line, key, value)?,
        "sim.episodes" => cfg.episodes = parse_int(line, key, value)?,
        "sim.entry_interval" => cfg.entry_interval = parse_f64(line, key, value)?,
        "sim.coverage_radius" => cfg.coverage_radius = parse_f64(line, key, value)?,
        "sim.max_speed" => cfg.max_speed = parse_f64(line, key, value)?,
        "sim.accel" => cfg.accel = parse_f64(line, key, value)?,
        "sim.decel" => cfg.decel = parse_f64(line, key, value)?,
        "sim.rsu_positions" => cfg.rsu_positions = parse_f64_list(line, key, value)?,
        "sim.corridor_length" => cfg.corridor_length = parse_f64(line, key, value)?,
        "sim.seed" => cfg.seed = parse_int(line, key, value)?,
        "channel.phy_rate" => cfg.channel.phy_rate_bps = parse_f64(line, key, value)?,
        "channel.contention_coeff" => cfg.channel.contention_coeff = parse_f64(line, key, value)?,
        "reward.alpha1" => cfg.reward.alpha1 = parse_f64(line, key, value)?,
        "reward.alpha2" => cfg.reward.alpha2 = parse_f64(line, key, value)?,
        "reward.penalty" => cfg.reward.penalty = parse_f64(line, key, value)?,
        "reward.bonus" => cfg.reward.bonus = parse_f64(line, key, value)?,
        "rl.epsilon" => cfg.rl.epsilon = parse_f64(line, key, value)?,
        "rl.gamma" => cfg.rl.gamma = parse_f64(line, key, value)?,
        "rl.alpha" => cfg.rl.alpha = parse_f64(line, key, value)?,
        "rl.action_count" => cfg.rl.action_count = parse_int(line, key, value)?,
        "rl.hidden_neurons" => cfg.rl.hidden_neurons = parse_int(line, key, value)?,
        "rl.buffer_capacity" => cfg.rl.buffer_capacity = parse_int(line, key, value)?,
        "rl.batch_size" => cfg.rl.batch_size = parse_int(line, key, value)?,
        "rl.target_sync_period" => cfg.rl.target_sync_period = parse_int(line, key, value)?,
        "rl.tv_bucket_edges" => cfg.rl.tv_bucket_edges = parse_int_list(line, key, value)?,
        "rl.tcv_bucket_edges" => cfg.rl.tcv_bucket_edges = parse_int_list(line, key, value)?,
        other => return Err(err(format!("unknown key `{other}`"))),
    }
    Ok(())
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("{key}: `{value}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::Parse {
            line,
            msg: format!("{key}: `{value}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("{key}: `{value}` is not a valid integer"),
    })
}

fn parse_f64_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_f64(line, key, s.trim()))
        .collect()
}

fn parse_int_list<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_int(line, key, s.trim()))
        .collect()
}

/// Serializes the full configuration in canonical key order.
pub fn serialize_config(cfg: &SimConfig) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };

    kv("sim.tick", fmt_f64(cfg.tick));
    kv("sim.episode_duration", fmt_f64(cfg.episode_duration));
    kv("sim.episodes", cfg.episodes.to_string());
    kv("sim.entry_interval", fmt_f64(cfg.entry_interval));
    kv("sim.coverage_radius", fmt_f64(cfg.coverage_radius));
    kv("sim.max_speed", fmt_f64(cfg.max_speed));
    kv("sim.accel", fmt_f64(cfg.accel));
    kv("sim.decel", fmt_f64(cfg.decel));
    kv("sim.rsu_positions", fmt_f64_list(&cfg.rsu_positions));
    kv("sim.corridor_length", fmt_f64(cfg.corridor_length));
    kv("sim.profile_set", cfg.profile_set.name().to_string());
    kv("sim.seed", cfg.seed.to_string());
    kv("channel.phy_rate", fmt_f64(cfg.channel.phy_rate_bps));
    kv(
        "channel.contention_coeff",
        fmt_f64(cfg.channel.contention_coeff),
    );
    kv("reward.alpha1", fmt_f64(cfg.reward.alpha1));
    kv("reward.alpha2", fmt_f64(cfg.reward.alpha2));
    kv("reward.penalty", fmt_f64(cfg.reward.penalty));
    kv("reward.bonus", fmt_f64(cfg.reward.bonus));
    kv("rl.epsilon", fmt_f64(cfg.rl.epsilon));
    kv("rl.gamma", fmt_f64(cfg.rl.gamma));
    kv("rl.alpha", fmt_f64(cfg.rl.alpha));
    kv("rl.action_count", cfg.rl.action_count.to_string());
    kv("rl.hidden_neurons", cfg.rl.hidden_neurons.to_string());
    kv("rl.buffer_capacity", cfg.rl.buffer_capacity.to_string());
    kv("rl.batch_size", cfg.rl.batch_size.to_string());
    kv(
        "rl.target_sync_period",
        cfg.rl.target_sync_period.to_string(),
    );
    kv("rl.tv_bucket_edges", fmt_int_list(&cfg.rl.tv_bucket_edges));
    kv(
        "rl.tcv_bucket_edges",
        fmt_int_list(&cfg.rl.tcv_bucket_edges),
    );

    for category in ServiceCategory::ALL {
        let p = cfg.profiles.get(category);
        let k = category.key();
        kv(&format!("category.{k}.app_rate"), fmt_f64(p.app_rate_bps));
        kv(
            &format!("category.{k}.packet_size"),
            fmt_f64(p.packet_size_bytes),
        );
        kv(
            &format!("category.{k}.send_interval"),
            fmt_f64(p.send_interval_s),
        );
        kv(
            &format!("category.{k}.r_threshold"),
            fmt_f64(p.r_threshold_bps),
        );
        kv(
            &format!("category.{k}.l_threshold"),
            fmt_f64(p.l_threshold_s),
        );
        kv(&format!("category.{k}.w_max"), fmt_f64(p.w_max_s));
    }

    out
}

fn fmt_f64(v: f64) -> String {
    // `{}` prints the shortest decimal that round-trips the exact f64.
    format!("{v}")
}

fn fmt_f64_list(vs: &[f64]) -> String {
    vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn fmt_int_list(vs: &[u32]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
