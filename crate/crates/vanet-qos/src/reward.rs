//! Latency/throughput utility with constraint penalties and bonuses; the
//! scalar reward fed to every learner.

use crate::domain::CategoryProfile;
use crate::domain::ServiceCategory;

/// Utility weights and constraint incentives.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig {
    /// Weight of the throughput term.
    pub alpha1: f64,
    /// Weight of the latency term. `alpha1 + alpha2` must equal 1.
    pub alpha2: f64,
    /// Added when the latency constraint is violated. Non-positive.
    pub penalty: f64,
    /// Added when both the latency and rate constraints hold. Non-negative.
    pub bonus: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha1: 0.3,
            alpha2: 0.7,
            penalty: -0.5,
            bonus: 0.5,
        }
    }
}

/// Latency and throughput measured over one decision interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMeasurement {
    pub category: ServiceCategory,
    pub mean_latency_s: f64,
    pub throughput_bps: f64,
    pub duration_s: f64,
}

/// Outcome of the per-category QoS constraint checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintCheck {
    /// Mean latency within the category threshold (inclusive).
    pub latency_ok: bool,
    /// Throughput at or above the category threshold.
    pub rate_ok: bool,
    /// Assigned wait in (0, w_max].
    pub wait_ok: bool,
}

/// The per-interval utility:
///
/// `alpha1 * min(R / R_max, 1) - alpha2 * (L / L_max) + penalty * [L > L_max]
///  + bonus * [L <= L_max and R >= R_min]`
///
/// The throughput ratio is clamped at 1; the latency ratio is not, so
/// gross violations hurt proportionally.
pub fn utility(m: &IntervalMeasurement, profile: &CategoryProfile, rc: &RewardConfig) -> f64 {
    debug_assert_eq!(m.category, profile.category);
    let rate_ratio = (m.throughput_bps / profile.r_threshold_bps).min(1.0);
    let latency_ratio = m.mean_latency_s / profile.l_threshold_s;
    let latency_ok = m.mean_latency_s <= profile.l_threshold_s;
    let rate_ok = m.throughput_bps >= profile.r_threshold_bps;

    let mut u = rc.alpha1 * rate_ratio - rc.alpha2 * latency_ratio;
    if !latency_ok {
        u += rc.penalty;
    }
    if latency_ok && rate_ok {
        u += rc.bonus;
    }
    u
}

/// Checks the latency, rate, and waiting-time constraints for one
/// measurement and assigned wait.
pub fn check_constraints(
    m: &IntervalMeasurement,
    profile: &CategoryProfile,
    w_assigned: f64,
) -> ConstraintCheck {
    ConstraintCheck {
        latency_ok: m.mean_latency_s <= profile.l_threshold_s,
        rate_ok: m.throughput_bps >= profile.r_threshold_bps,
        wait_ok: w_assigned > 0.0 && w_assigned <= profile.w_max_s,
    }
}

/// The reward for a transition is the utility, exactly; no shaping beyond
/// the penalty/bonus terms inside it.
pub fn reward_for_transition(
    m: &IntervalMeasurement,
    profile: &CategoryProfile,
    rc: &RewardConfig,
    w_assigned: f64,
) -> f64 {
    debug_assert!(
        w_assigned > 0.0 && w_assigned <= profile.w_max_s,
        "assigned wait {w_assigned} outside (0, {}]",
        profile.w_max_s
    );
    utility(m, profile, rc)
}
