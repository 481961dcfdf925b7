//! Experiment conditions and the condition x density x scheme matrix.

mod config;
mod csv;

pub use config::{
    parse_config, AnnounceScript, AnnounceTrigger, Condition, HaltScript, ScenarioConfig, KEYS,
};
pub use csv::{
    emit_csv, write_aggregate, write_summary, write_vehicles, write_verdicts, OutputPaths,
};

use std::thread;

use crate::comms::{EntityId, MessageCounts, MessageKind};
use crate::engine;
use crate::error::SimError;
use crate::mobility::VehicleId;
use crate::road::Route;
use crate::trust::{Outcome, Scheme, SchemeConfig};

pub const DENSITIES: [u32; 3] = [10, 30, 50];
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    pub id: VehicleId,
    pub inserted_at: Option<f64>,
    pub finished_at: Option<f64>,
    pub route: Route,
    pub latency: Option<f64>,
}

impl VehicleRecord {
    pub fn travel_time(&self) -> Option<f64> {
        Some(self.finished_at? - self.inserted_at?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRecord {
    pub event_id: u64,
    pub accused: EntityId,
    pub decided_at: f64,
    pub outcome: Outcome,
    pub confidence: f64,
    pub reports: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub condition: Condition,
    pub n_vehicles: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub vehicles: Vec<VehicleRecord>,
    pub counts: MessageCounts,
    pub suppressed: u64,
    pub verdicts: Vec<VerdictRecord>,
    /// Vehicles that got a corrective before reaching the junction.
    pub corrective_prejunction: u64,
    /// Smallest gap to a leader seen during the run.
    pub min_gap: f64,
    pub incomplete: bool,
}

impl MetricsReport {
    pub fn average_travel_time(&self) -> Result<f64, SimError> {
        average_travel_time(self)
    }

    pub fn trust_messages(&self) -> u64 {
        self.counts.trust_messages()
    }

    /// Mean decision latency over vehicles that decided.
    pub fn mean_latency(&self) -> Option<f64> {
        let l: Vec<f64> = self.vehicles.iter().filter_map(|v| v.latency).collect();
        (!l.is_empty()).then(|| l.iter().sum::<f64>() / l.len() as f64)
    }

    pub fn rerouted(&self) -> usize {
        self.vehicles
            .iter()
            .filter(|v| v.route == Route::Alternate)
            .count()
    }
}

/// Mean of `finished_at - inserted_at` over finished vehicles.
pub fn average_travel_time(report: &MetricsReport) -> Result<f64, SimError> {
    let times: Vec<f64> = report
        .vehicles
        .iter()
        .filter_map(VehicleRecord::travel_time)
        .collect();
    if times.is_empty() {
        return Err(SimError::NoFinishedVehicles);
    }
    Ok(times.iter().sum::<f64>() / times.len() as f64)
}

pub fn make_condition(
    condition: Condition,
    n_vehicles: u32,
    scheme: Scheme,
    seed: u64,
) -> ScenarioConfig {
    ScenarioConfig {
        condition,
        n_vehicles,
        scheme: SchemeConfig::with_scheme(scheme),
        seed,
        ..ScenarioConfig::default()
    }
}

pub fn run_condition(cfg: &ScenarioConfig) -> Result<MetricsReport, SimError> {
    engine::run(cfg)
}

/// One row of the experiment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub condition: Condition,
    pub n_vehicles: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Runs every (condition, density, scheme, seed) cell from `base`.
///
/// Cells run on worker threads; rows come back sorted by
/// (condition, n, scheme, seed).
pub fn run_matrix(
    base: &ScenarioConfig,
    conditions: &[Condition],
    densities: &[u32],
    schemes: &[Scheme],
    seeds: &[u64],
) -> Result<Vec<MatrixRow>, SimError> {
    let mut cells = Vec::new();
    for &condition in conditions {
        for &n in densities {
            for &scheme in schemes {
                for &seed in seeds {
                    let mut cfg = base.clone();
                    cfg.condition = condition;
                    cfg.n_vehicles = n;
                    cfg.scheme.scheme = scheme;
                    cfg.seed = seed;
                    cells.push(cfg);
                }
            }
        }
    }
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cells.len().max(1));
    let chunk = cells.len().div_ceil(workers).max(1);
    let results: Vec<Result<MetricsReport, SimError>> = thread::scope(|s| {
        let handles: Vec<_> = cells
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(run_condition).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("matrix worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (cfg, r) in cells.iter().zip(results) {
        rows.push(MatrixRow {
            condition: cfg.condition,
            n_vehicles: cfg.n_vehicles,
            scheme: cfg.scheme.scheme,
            seed: cfg.seed,
            report: r?,
        });
    }
    rows.sort_by(|a, b| {
        (a.condition, a.n_vehicles, a.scheme, a.seed).cmp(&(
            b.condition,
            b.n_vehicles,
            b.scheme,
            b.seed,
        ))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub trust_messages: u64,
    pub total_messages: u64,
    pub mean_latency: Option<f64>,
    pub average_travel_time: f64,
}

/// Same scenario under receiver-side and sender-side trust.
pub fn compare_schemes(base: &ScenarioConfig) -> Result<[SchemeSummary; 2], SimError> {
    let summarize = |scheme| -> Result<SchemeSummary, SimError> {
        let mut cfg = base.clone();
        cfg.scheme.scheme = scheme;
        let r = run_condition(&cfg)?;
        Ok(SchemeSummary {
            scheme,
            trust_messages: r.trust_messages(),
            total_messages: r.counts.total() - r.counts.get(MessageKind::Beacon),
            mean_latency: r.mean_latency(),
            average_travel_time: r.average_travel_time()?,
        })
    };
    Ok([
        summarize(Scheme::ReceiverSide)?,
        summarize(Scheme::SenderSide)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: VehicleId, inserted: f64, finished: Option<f64>) -> VehicleRecord {
        VehicleRecord {
            id,
            inserted_at: Some(inserted),
            finished_at: finished,
            route: Route::Primary,
            latency: None,
        }
    }

    fn report(vehicles: Vec<VehicleRecord>) -> MetricsReport {
        MetricsReport {
            condition: Condition::NoEvent,
            n_vehicles: vehicles.len() as u32,
            scheme: Scheme::None,
            seed: 1,
            vehicles,
            counts: MessageCounts::default(),
            suppressed: 0,
            verdicts: vec![],
            corrective_prejunction: 0,
            min_gap: f64::INFINITY,
            incomplete: false,
        }
    }

    #[test]
    fn average_examples() {
        assert_eq!(
            average_travel_time(&report(vec![record(0, 0.0, Some(72.0))])).unwrap(),
            72.0
        );
        let r = report(vec![
            record(0, 0.0, Some(72.0)),
            record(1, 1.0, Some(75.0)),
            record(2, 2.0, None),
        ]);
        assert_eq!(average_travel_time(&r).unwrap(), 73.0);
        assert!(matches!(
            average_travel_time(&report(vec![])),
            Err(SimError::NoFinishedVehicles)
        ));
    }

    #[test]
    fn condition_mapping() {
        let c = make_condition(Condition::NoEvent, 10, Scheme::None, 42);
        assert!(c.halt().is_none());
        let c = make_condition(
            Condition::TrustworthyAnnouncement,
            30,
            Scheme::SenderSide,
            7,
        );
        assert_eq!(c.halt().unwrap().duration, 120.0);
        assert!(c.announcement().unwrap().truthful);
        assert_eq!(c.scheme.scheme, Scheme::SenderSide);
        let c = make_condition(Condition::UnannouncedEvent, 50, Scheme::None, 7);
        assert!(c.halt().is_some() && c.announcement().is_none());
    }

    #[test]
    fn matrix_cardinality_and_order() {
        let base = ScenarioConfig {
            duration: 5.0,
            ..ScenarioConfig::default()
        };
        let rows = run_matrix(&base, &Condition::ALL, &DENSITIES, &[Scheme::None], &[1]).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<_> = rows.iter().map(|r| (r.condition, r.n_vehicles)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
