//! Vehicle arrivals, 1-D corridor mobility, nearest-RSU association, and
//! sojourn-time computation/discretization.

use rand::Rng;

use crate::domain::{ServiceCategory, SimConfig};

/// Floor on the speed used in the sojourn estimate, guarding the
/// stationary case (m/s).
pub const MIN_SOJOURN_SPEED: f64 = 0.1;

/// Transmission phase of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Holding off transmission until `wait_until`.
    Waiting,
    /// Transmitting; contends for the shared channel.
    Active,
}

/// One vehicle on the corridor.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: u64,
    pub category: ServiceCategory,
    /// Position along the corridor in meters.
    pub position: f64,
    /// Current speed in m/s.
    pub speed: f64,
    pub spawn_time: f64,
    /// Application backlog in bytes. Never negative.
    pub queue_bytes: f64,
    /// Absolute simulation time at which the current wait expires.
    pub wait_until: f64,
    pub phase: Phase,
    /// Time the current ACTIVE cycle started.
    pub active_since: f64,
    pub bytes_sent_this_cycle: f64,
    /// Index into the RSU position list, when in coverage.
    pub assoc_rsu: Option<usize>,
}

impl Vehicle {
    pub fn new(id: u64, category: ServiceCategory, spawn_time: f64) -> Vehicle {
        Vehicle {
            id,
            category,
            position: 0.0,
            speed: 0.0,
            spawn_time,
            queue_bytes: 0.0,
            wait_until: f64::INFINITY,
            phase: Phase::Waiting,
            active_since: 0.0,
            bytes_sent_this_cycle: 0.0,
            assoc_rsu: None,
        }
    }

    /// True when the vehicle contends for its RSU's channel (the binary
    /// transmit indicator: ACTIVE and associated).
    pub fn is_transmitting(&self) -> bool {
        self.phase == Phase::Active && self.assoc_rsu.is_some()
    }
}

/// Remaining coverage time of a vehicle, with its discrete level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournState {
    pub seconds_remaining: f64,
    /// Discrete level in 0..=4; 4 means a full coverage pass remains.
    pub level: u8,
}

/// Emits vehicles on fixed entry-interval boundaries.
#[derive(Debug, Clone)]
pub struct Spawner {
    next_id: u64,
    emitted: u64,
}

impl Spawner {
    pub fn new() -> Spawner {
        Spawner {
            next_id: 0,
            emitted: 0,
        }
    }

    /// Spawns one vehicle per entry-interval boundary elapsed up to `now`.
    /// Categories are drawn uniformly at random. `now` must advance
    /// monotonically across calls.
    pub fn spawn_step(&mut self, now: f64, rng: &mut impl Rng, cfg: &SimConfig) -> Vec<Vehicle> {
        let mut spawned = Vec::new();
        loop {
            let boundary = (self.emitted + 1) as f64 * cfg.entry_interval;
            if boundary > now {
                break;
            }
            let category = ServiceCategory::from_index(rng.gen_range(0..ServiceCategory::COUNT))
                .expect("index in range");
            spawned.push(Vehicle::new(self.next_id, category, boundary));
            self.next_id += 1;
            self.emitted += 1;
        }
        spawned
    }

    pub fn total_spawned(&self) -> u64 {
        self.emitted
    }
}

impl Default for Spawner {
    fn default() -> Self {
        Self::new()
    }
}

/// Advances speed (capped at `max_speed`) and position by one tick.
/// The caller removes the vehicle once `position` exceeds the corridor end.
pub fn mobility_step(v: &mut Vehicle, dt: f64, cfg: &SimConfig) {
    v.speed = (v.speed + cfg.accel * dt).min(cfg.max_speed);
    v.position += v.speed * dt;
}

/// Index of the nearest RSU within coverage, ties broken toward the lower
/// index; `None` when no RSU is within `coverage_radius`.
pub fn associate_rsu(position: f64, rsu_positions: &[f64], coverage_radius: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &rsu) in rsu_positions.iter().enumerate() {
        let dist = (position - rsu).abs();
        match best {
            Some((_, d)) if dist >= d => {}
            _ => best = Some((i, dist)),
        }
    }
    match best {
        Some((i, d)) if d <= coverage_radius => Some(i),
        _ => None,
    }
}

/// Remaining-coverage estimate for a vehicle associated with the RSU at
/// `rsu_position`, discretized to fifths of the full-coverage traversal
/// time and clamped to levels 0..=4.
pub fn sojourn(v: &Vehicle, rsu_position: f64, cfg: &SimConfig) -> SojournState {
    let remaining_m = (rsu_position + cfg.coverage_radius - v.position).max(0.0);
    let seconds_remaining = remaining_m / v.speed.max(MIN_SOJOURN_SPEED);
    let t_full = 2.0 * cfg.coverage_radius / cfg.max_speed;
    let level = (5.0 * seconds_remaining / t_full).floor().clamp(0.0, 4.0) as u8;
    SojournState {
        seconds_remaining,
        level,
    }
}
