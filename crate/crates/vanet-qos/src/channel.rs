//! Abstract shared-medium model per RSU, replacing a full PHY/MAC stack:
//! fluid queues, contention-degraded capacity, max-min capacity sharing,
//! and per-tick latency/throughput accounting.
//!
//! Latency is the fluid analogue of per-packet delay: backlog divided by
//! drain rate for transmitting vehicles, age of the oldest queued bit for
//! waiting ones.

use crate::domain::{ProfileSet, ServiceCategory};
use crate::traffic::{Phase, Vehicle};

/// Drain-rate floor used when converting backlog to delay (bits/s).
pub const MIN_DRAIN_RATE: f64 = 1.0;

/// Shared-medium parameters for one RSU.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Base medium rate with a single transmitter, in bits per second.
    pub phy_rate_bps: f64,
    /// Capacity degradation per additional simultaneous transmitter.
    pub contention_coeff: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            phy_rate_bps: 9_000_000.0,
            contention_coeff: 0.1,
        }
    }
}

/// How capacity is shared among transmitting vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMode {
    /// Equal max-min shares: the plain standard channel without QoS.
    EqualShare,
    /// Statically weighted max-min shares (VO 4, VI 2, HDMAP 2, BE 1):
    /// a simplified stand-in for EDCA-style priorities.
    StaticPriority,
}

impl AllocationMode {
    pub fn weight(self, category: ServiceCategory) -> f64 {
        match self {
            AllocationMode::EqualShare => 1.0,
            AllocationMode::StaticPriority => match category {
                ServiceCategory::Voice => 4.0,
                ServiceCategory::Video => 2.0,
                ServiceCategory::HdMap => 2.0,
                ServiceCategory::BestEffort => 1.0,
            },
        }
    }
}

/// Medium rate available when `active` vehicles transmit simultaneously.
/// Equals the base rate for zero or one transmitter and strictly decreases
/// as transmitters are added.
pub fn effective_capacity(active: usize, p: &ChannelParams) -> f64 {
    p.phy_rate_bps / (1.0 + p.contention_coeff * active.saturating_sub(1) as f64)
}

/// Weighted max-min (water-filling) allocation of `capacity` among flows
/// with the given `demands`. Every allocation is bounded by its demand,
/// the total never exceeds `capacity`, and no flow with unmet demand
/// receives less per unit weight than any satisfied flow.
pub fn max_min_allocate(demands: &[f64], weights: &[f64], capacity: f64) -> Vec<f64> {
    assert_eq!(demands.len(), weights.len());
    let n = demands.len();
    let mut alloc = vec![0.0; n];
    let mut remaining = capacity.max(0.0);
    let mut unsat: Vec<usize> = (0..n)
        .filter(|&i| demands[i] > 0.0 && weights[i] > 0.0)
        .collect();

    while !unsat.is_empty() && remaining > 0.0 {
        let weight_sum: f64 = unsat.iter().map(|&i| weights[i]).sum();
        let fill = remaining / weight_sum;
        let satisfied: Vec<usize> = unsat
            .iter()
            .copied()
            .filter(|&i| demands[i] - alloc[i] <= fill * weights[i])
            .collect();
        if satisfied.is_empty() {
            // Nobody can be satisfied: split everything that is left.
            for &i in &unsat {
                let give = (fill * weights[i]).min(remaining);
                alloc[i] += give;
                remaining -= give;
            }
            break;
        }
        for &i in &satisfied {
            let give = (demands[i] - alloc[i]).min(remaining);
            alloc[i] += give;
            remaining -= give;
        }
        unsat.retain(|i| !satisfied.contains(i));
    }
    alloc
}

/// Per-vehicle result of one channel tick.
#[derive(Debug, Clone)]
pub struct VehicleTick {
    pub vehicle_id: u64,
    pub category: ServiceCategory,
    /// True when the vehicle transmitted this tick.
    pub active: bool,
    pub drained_bits: f64,
    pub queue_delay_s: f64,
}

/// Outcome of one tick on one RSU's channel.
#[derive(Debug, Clone)]
pub struct TickOutcome {
    pub per_vehicle: Vec<VehicleTick>,
    /// Number of simultaneous transmitters this tick.
    pub active_count: usize,
    /// Capacity offered this tick, in bits.
    pub capacity_bits: f64,
}

/// Fluid channel of one RSU, with episode-level conservation accounting.
#[derive(Debug, Clone)]
pub struct RsuChannel {
    pub params: ChannelParams,
    pub mode: AllocationMode,
    total_drained_bits: f64,
    total_capacity_bits: f64,
}

impl RsuChannel {
    pub fn new(params: ChannelParams, mode: AllocationMode) -> RsuChannel {
        RsuChannel {
            params,
            mode,
            total_drained_bits: 0.0,
            total_capacity_bits: 0.0,
        }
    }

    /// Zeroes all accounting. Idempotent; called at episode start.
    pub fn reset(&mut self) {
        self.total_drained_bits = 0.0;
        self.total_capacity_bits = 0.0;
    }

    pub fn total_drained_bits(&self) -> f64 {
        self.total_drained_bits
    }

    pub fn total_capacity_bits(&self) -> f64 {
        self.total_capacity_bits
    }

    /// Advances this RSU's channel by `dt`, operating on the vehicles
    /// associated with `rsu_index`:
    ///
    /// 1. every associated vehicle generates `app_rate * dt` bits of
    ///    backlog regardless of phase;
    /// 2. the contention-degraded capacity is shared max-min among ACTIVE
    ///    vehicles with nonzero queues;
    /// 3. queues drain by their allocation;
    /// 4. each vehicle gets a queue-delay figure: backlog over drain rate
    ///    when ACTIVE, age of the oldest bit when WAITING.
    pub fn tick(
        &mut self,
        rsu_index: usize,
        vehicles: &mut [Vehicle],
        dt: f64,
        profiles: &ProfileSet,
    ) -> TickOutcome {
        let member_idx: Vec<usize> = (0..vehicles.len())
            .filter(|&i| vehicles[i].assoc_rsu == Some(rsu_index))
            .collect();

        for &i in &member_idx {
            let v = &mut vehicles[i];
            v.queue_bytes += profiles.get(v.category).app_rate_bps * dt / 8.0;
        }

        let active_idx: Vec<usize> = member_idx
            .iter()
            .copied()
            .filter(|&i| vehicles[i].phase == Phase::Active && vehicles[i].queue_bytes > 0.0)
            .collect();
        let active_count = active_idx.len();
        let capacity_bits = effective_capacity(active_count, &self.params) * dt;

        let demands: Vec<f64> = active_idx
            .iter()
            .map(|&i| vehicles[i].queue_bytes * 8.0)
            .collect();
        let weights: Vec<f64> = active_idx
            .iter()
            .map(|&i| self.mode.weight(vehicles[i].category))
            .collect();
        let allocs = max_min_allocate(&demands, &weights, capacity_bits);

        let mut per_vehicle = Vec::with_capacity(member_idx.len());
        let mut drained_total = 0.0;
        for (slot, &i) in active_idx.iter().enumerate() {
            let v = &mut vehicles[i];
            let drained = allocs[slot];
            v.queue_bytes = (v.queue_bytes - drained / 8.0).max(0.0);
            v.bytes_sent_this_cycle += drained / 8.0;
            drained_total += drained;
            let rate = (drained / dt).max(MIN_DRAIN_RATE);
            per_vehicle.push(VehicleTick {
                vehicle_id: v.id,
                category: v.category,
                active: true,
                drained_bits: drained,
                queue_delay_s: v.queue_bytes * 8.0 / rate,
            });
        }
        for &i in &member_idx {
            let v = &vehicles[i];
            if v.phase == Phase::Waiting {
                // Age of the oldest queued bit: for a FIFO queue fed at the
                // application rate this equals backlog divided by that rate.
                let app_rate = profiles.get(v.category).app_rate_bps;
                per_vehicle.push(VehicleTick {
                    vehicle_id: v.id,
                    category: v.category,
                    active: false,
                    drained_bits: 0.0,
                    queue_delay_s: v.queue_bytes * 8.0 / app_rate,
                });
            }
        }

        self.total_drained_bits += drained_total;
        self.total_capacity_bits += capacity_bits;

        TickOutcome {
            per_vehicle,
            active_count,
            capacity_bits,
        }
    }
}
