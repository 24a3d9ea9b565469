//! KPI accounting: per-category latency and throughput, Jain's fairness
//! index, per-episode aggregation, and CSV emission.
//!
//! Latency samples are tick-weighted (one sample per ACTIVE tick per
//! vehicle); fairness is computed over per-vehicle throughputs within a
//! category. All output is a pure, deterministically ordered function of
//! the ledger.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::channel::TickOutcome;
use crate::domain::ServiceCategory;

/// Width of the optional latency/throughput time series windows.
pub const WINDOW_S: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("jain index undefined for empty input")]
    Empty,
    #[error("jain index undefined when every value is zero")]
    AllZero,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`, in [1/n, 1].
pub fn jain_index(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Err(MetricsError::AllZero);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

#[derive(Debug, Clone, Default)]
struct WindowStats {
    delay_sum: f64,
    delay_count: u64,
    bytes: f64,
}

#[derive(Debug, Clone, Default)]
struct CatStats {
    delay_sum: f64,
    delay_count: u64,
    bytes: f64,
    vehicle_bytes: BTreeMap<u64, f64>,
    reward_sum: f64,
    windows: BTreeMap<u64, WindowStats>,
}

/// Per-(RSU, category) KPI accumulator for one episode.
#[derive(Debug, Clone)]
pub struct MetricsLedger {
    episode_duration: f64,
    stats: BTreeMap<(usize, ServiceCategory), CatStats>,
    episode_reward: f64,
    transitions: u64,
    total_drained_bits: f64,
    total_capacity_bits: f64,
    wait_assignments: u64,
    wait_violations: u64,
    learner_updates: u64,
}

impl MetricsLedger {
    pub fn new(episode_duration: f64) -> MetricsLedger {
        MetricsLedger {
            episode_duration,
            stats: BTreeMap::new(),
            episode_reward: 0.0,
            transitions: 0,
            total_drained_bits: 0.0,
            total_capacity_bits: 0.0,
            wait_assignments: 0,
            wait_violations: 0,
            learner_updates: 0,
        }
    }

    /// Records one RSU tick: a latency sample per ACTIVE vehicle and the
    /// drained bytes per category and per vehicle.
    pub fn record_tick(&mut self, rsu: usize, outcome: &TickOutcome, now: f64) {
        self.total_capacity_bits += outcome.capacity_bits;
        let window = (now / WINDOW_S) as u64;
        for vt in &outcome.per_vehicle {
            if !vt.active {
                continue;
            }
            let stats = self.stats.entry((rsu, vt.category)).or_default();
            stats.delay_sum += vt.queue_delay_s;
            stats.delay_count += 1;
            let bytes = vt.drained_bits / 8.0;
            stats.bytes += bytes;
            *stats.vehicle_bytes.entry(vt.vehicle_id).or_insert(0.0) += bytes;
            let w = stats.windows.entry(window).or_default();
            w.delay_sum += vt.queue_delay_s;
            w.delay_count += 1;
            w.bytes += bytes;
            self.total_drained_bits += vt.drained_bits;
        }
    }

    /// Adds one transition's reward, attributed to its RSU and category.
    pub fn record_reward(&mut self, rsu: usize, category: ServiceCategory, reward: f64) {
        self.stats.entry((rsu, category)).or_default().reward_sum += reward;
        self.episode_reward += reward;
        self.transitions += 1;
    }

    /// Audits one assigned waiting time against `0 < w <= w_max`.
    pub fn record_wait_assignment(&mut self, w: f64, w_max: f64) {
        self.wait_assignments += 1;
        if !(w > 0.0 && w <= w_max) {
            self.wait_violations += 1;
        }
    }

    pub fn record_learner_update(&mut self) {
        self.learner_updates += 1;
    }

    pub fn episode_reward(&self) -> f64 {
        self.episode_reward
    }

    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    pub fn total_drained_bits(&self) -> f64 {
        self.total_drained_bits
    }

    /// Total capacity offered across all recorded ticks, in bits.
    pub fn total_capacity_bits(&self) -> f64 {
        self.total_capacity_bits
    }

    pub fn wait_assignments(&self) -> u64 {
        self.wait_assignments
    }

    pub fn wait_violations(&self) -> u64 {
        self.wait_violations
    }

    pub fn learner_updates(&self) -> u64 {
        self.learner_updates
    }

    /// Per-(RSU, category) summary plus the episode totals. Categories
    /// with no activity are absent, not zero.
    pub fn episode_summary(&self, episode: u32) -> EpisodeSummary {
        let mut rows = Vec::new();
        for ((rsu, category), stats) in &self.stats {
            if stats.delay_count == 0 && stats.bytes == 0.0 {
                continue;
            }
            let mean_latency_s = if stats.delay_count > 0 {
                stats.delay_sum / stats.delay_count as f64
            } else {
                0.0
            };
            let throughputs: Vec<f64> = stats.vehicle_bytes.values().copied().collect();
            let jain = jain_index(&throughputs).ok();
            rows.push(CategorySummary {
                rsu: *rsu,
                category: *category,
                mean_latency_s,
                throughput_bps: stats.bytes * 8.0 / self.episode_duration,
                jain,
                reward_sum: stats.reward_sum,
                vehicles: stats.vehicle_bytes.len() as u64,
            });
        }
        EpisodeSummary {
            episode,
            rows,
            episode_reward: self.episode_reward,
            transitions: self.transitions,
        }
    }

    /// 5-second windowed latency/throughput rows for this episode.
    pub fn timeseries_rows(&self, episode: u32) -> Vec<TimeseriesRow> {
        let mut rows = Vec::new();
        for ((rsu, category), stats) in &self.stats {
            for (window, w) in &stats.windows {
                rows.push(TimeseriesRow {
                    episode,
                    rsu: *rsu,
                    category: *category,
                    window_start_s: *window as f64 * WINDOW_S,
                    mean_latency_s: if w.delay_count > 0 {
                        w.delay_sum / w.delay_count as f64
                    } else {
                        0.0
                    },
                    throughput_bps: w.bytes * 8.0 / WINDOW_S,
                });
            }
        }
        rows
    }
}

/// One (RSU, category) row of an episode summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CategorySummary {
    pub rsu: usize,
    pub category: ServiceCategory,
    pub mean_latency_s: f64,
    pub throughput_bps: f64,
    /// Jain index over per-vehicle throughputs; absent when undefined.
    pub jain: Option<f64>,
    pub reward_sum: f64,
    pub vehicles: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub episode: u32,
    pub rows: Vec<CategorySummary>,
    pub episode_reward: f64,
    pub transitions: u64,
}

impl EpisodeSummary {
    /// Mean latency across this episode's rows for one category, weighted
    /// equally per (rsu, category) row; `None` when the category is absent.
    pub fn category_mean_latency(&self, category: ServiceCategory) -> Option<f64> {
        let rows: Vec<&CategorySummary> = self
            .rows
            .iter()
            .filter(|r| r.category == category)
            .collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().map(|r| r.mean_latency_s).sum::<f64>() / rows.len() as f64)
    }

    /// Total throughput across RSUs for one category.
    pub fn category_throughput(&self, category: ServiceCategory) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.throughput_bps)
            .sum()
    }

    /// Mean latency over every row of the episode.
    pub fn overall_mean_latency(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        Some(self.rows.iter().map(|r| r.mean_latency_s).sum::<f64>() / self.rows.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesRow {
    pub episode: u32,
    pub rsu: usize,
    pub category: ServiceCategory,
    pub window_start_s: f64,
    pub mean_latency_s: f64,
    pub throughput_bps: f64,
}

/// Nine-significant-digit decimal formatting used in every CSV cell.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes episode summaries as CSV with a fixed header and deterministic
/// (episode, rsu, category) ordering.
pub fn write_csv(summaries: &[EpisodeSummary], path: &Path) -> Result<(), MetricsError> {
    let io_err = |source: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let io_err = |source: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    writeln!(
        out,
        "episode,rsu,category,mean_latency_s,throughput_bps,jain,reward_sum,vehicles"
    )
    .map_err(io_err)?;
    for summary in summaries {
        for row in &summary.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                summary.episode,
                row.rsu,
                row.category,
                fmt_sig(row.mean_latency_s),
                fmt_sig(row.throughput_bps),
                row.jain.map(fmt_sig).unwrap_or_default(),
                fmt_sig(row.reward_sum),
                row.vehicles
            )
            .map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Writes the windowed time series CSV.
pub fn write_timeseries_csv(rows: &[TimeseriesRow], path: &Path) -> Result<(), MetricsError> {
    let io_err = |source: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let io_err = |source: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    writeln!(
        out,
        "episode,rsu,category,window_start_s,mean_latency_s,throughput_bps"
    )
    .map_err(io_err)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.episode,
            r.rsu,
            r.category,
            fmt_sig(r.window_start_s),
            fmt_sig(r.mean_latency_s),
            fmt_sig(r.throughput_bps)
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::VehicleTick;

    fn outcome(ticks: Vec<VehicleTick>) -> TickOutcome {
        let active_count = ticks.iter().filter(|t| t.active).count();
        TickOutcome {
            per_vehicle: ticks,
            active_count,
            capacity_bits: 600_000.0,
        }
    }

    fn active_tick(id: u64, category: ServiceCategory, delay: f64, bits: f64) -> VehicleTick {
        VehicleTick {
            vehicle_id: id,
            category,
            active: true,
            drained_bits: bits,
            queue_delay_s: delay,
        }
    }

    #[test]
    fn jain_examples() {
        assert!((jain_index(&[1.0, 1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!((jain_index(&[4.0, 2.0]).unwrap() - 0.9).abs() < 1e-12);
        assert!(jain_index(&[]).is_err());
        assert!(jain_index(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn record_tick_samples_only_active() {
        let mut ledger = MetricsLedger::new(10.0);
        ledger.record_tick(0, &outcome(vec![]), 0.1);
        let waiting = VehicleTick {
            vehicle_id: 1,
            category: ServiceCategory::Voice,
            active: false,
            drained_bits: 0.0,
            queue_delay_s: 0.5,
        };
        ledger.record_tick(0, &outcome(vec![waiting]), 0.2);
        assert!(ledger.episode_summary(0).rows.is_empty());

        ledger.record_tick(
            0,
            &outcome(vec![active_tick(1, ServiceCategory::Voice, 0.05, 800.0)]),
            0.3,
        );
        ledger.record_tick(
            0,
            &outcome(vec![active_tick(1, ServiceCategory::Voice, 0.15, 800.0)]),
            0.4,
        );
        let summary = ledger.episode_summary(0);
        assert_eq!(summary.rows.len(), 1);
        let row = &summary.rows[0];
        assert!((row.mean_latency_s - 0.10).abs() < 1e-12);
        // 1600 bits over 10 s.
        assert!((row.throughput_bps - 160.0).abs() < 1e-12);
        assert_eq!(row.vehicles, 1);
    }

    #[test]
    fn single_vehicle_throughput_example() {
        // 1.25 Mb delivered over a 1 s episode: 1.25 Mbps.
        let mut ledger = MetricsLedger::new(1.0);
        ledger.record_tick(
            0,
            &outcome(vec![active_tick(
                3,
                ServiceCategory::HdMap,
                0.0,
                1_250_000.0,
            )]),
            0.5,
        );
        let summary = ledger.episode_summary(0);
        assert!((summary.rows[0].throughput_bps - 1_250_000.0).abs() < 1e-9);
        assert_eq!(summary.rows[0].jain, Some(1.0));
    }

    #[test]
    fn equal_vehicles_equal_jain() {
        let mut ledger = MetricsLedger::new(1.0);
        for id in [1, 2] {
            ledger.record_tick(
                0,
                &outcome(vec![active_tick(id, ServiceCategory::Video, 0.0, 5_000.0)]),
                0.1,
            );
        }
        let summary = ledger.episode_summary(0);
        assert_eq!(summary.rows[0].jain, Some(1.0));
    }

    #[test]
    fn csv_rows_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");

        // Empty run: header only.
        write_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "episode,rsu,category,mean_latency_s,throughput_bps,jain,reward_sum,vehicles\n"
        );

        // 2 episodes x 1 RSU x 4 categories -> 8 data rows.
        let mut summaries = Vec::new();
        for episode in 0..2 {
            let mut ledger = MetricsLedger::new(5.0);
            for (i, category) in ServiceCategory::ALL.into_iter().enumerate() {
                ledger.record_tick(
                    0,
                    &outcome(vec![active_tick(i as u64, category, 0.01, 100.0)]),
                    1.0,
                );
            }
            summaries.push(ledger.episode_summary(episode));
        }
        write_csv(&summaries, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 9);
        // Category enum order within an episode.
        let second = text.lines().nth(1).unwrap();
        assert!(second.starts_with("0,0,VO,"));

        // Determinism: writing the same summaries twice is byte-identical.
        let again = dir.path().join("metrics2.csv");
        write_csv(&summaries, &again).unwrap();
        assert_eq!(std::fs::read_to_string(&again).unwrap(), text);
    }

    #[test]
    fn wait_audit_counts_violations() {
        let mut ledger = MetricsLedger::new(1.0);
        ledger.record_wait_assignment(0.5, 2.0);
        ledger.record_wait_assignment(0.0, 2.0);
        ledger.record_wait_assignment(2.5, 2.0);
        assert_eq!(ledger.wait_assignments(), 3);
        assert_eq!(ledger.wait_violations(), 2);
    }
}
