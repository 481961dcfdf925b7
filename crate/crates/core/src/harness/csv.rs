//! Fixed-precision CSV output. Identical rows always render to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::MatrixRow;
use crate::comms::{EntityId, MessageKind};
use crate::error::SimError;

fn num(x: f64) -> String {
    format!("{x:.3}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn key(r: &MatrixRow) -> String {
    format!(
        "{},{},{},{}",
        r.condition.as_str(),
        r.n_vehicles,
        r.scheme.as_str(),
        r.seed
    )
}

pub fn write_vehicles(rows: &[MatrixRow]) -> String {
    let mut out = String::from(
        "condition,n,scheme,seed,id,inserted_at,finished_at,travel_time,route,latency\n",
    );
    for r in rows {
        for v in &r.report.vehicles {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                key(r),
                v.id,
                opt(v.inserted_at),
                opt(v.finished_at),
                opt(v.travel_time()),
                v.route,
                opt(v.latency)
            );
        }
    }
    out
}

fn aggregate_header() -> String {
    let mut h = String::from("condition,n,scheme,seed,avg_travel_time,finished,rerouted");
    for k in MessageKind::ALL {
        h.push_str(",msg_");
        h.push_str(k.as_str());
    }
    h.push_str(",trust_messages,suppressed,mean_latency,verdicts,min_gap,incomplete\n");
    h
}

pub fn write_aggregate(rows: &[MatrixRow]) -> String {
    let mut out = aggregate_header();
    for r in rows {
        let rep = &r.report;
        let finished = rep
            .vehicles
            .iter()
            .filter(|v| v.finished_at.is_some())
            .count();
        let _ = write!(
            out,
            "{},{},{},{}",
            key(r),
            opt(rep.average_travel_time().ok()),
            finished,
            rep.rerouted()
        );
        for k in MessageKind::ALL {
            let _ = write!(out, ",{}", rep.counts.get(k));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{}",
            rep.trust_messages(),
            rep.suppressed,
            opt(rep.mean_latency()),
            rep.verdicts.len(),
            opt(rep.min_gap.is_finite().then_some(rep.min_gap)),
            u8::from(rep.incomplete)
        );
    }
    out
}

/// Per-(condition, n, scheme) means across seeds.
pub fn write_summary(rows: &[MatrixRow]) -> String {
    let mut out = String::from(
        "condition,n,scheme,seeds,mean_avg_travel_time,mean_rerouted,mean_trust_messages,mean_latency\n",
    );
    let mut i = 0;
    while i < rows.len() {
        let head = &rows[i];
        let group: Vec<&MatrixRow> = rows[i..]
            .iter()
            .take_while(|r| {
                (r.condition, r.n_vehicles, r.scheme)
                    == (head.condition, head.n_vehicles, head.scheme)
            })
            .collect();
        i += group.len();
        let mean =
            |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            head.condition.as_str(),
            head.n_vehicles,
            head.scheme.as_str(),
            group.len(),
            opt(mean(
                group
                    .iter()
                    .filter_map(|r| r.report.average_travel_time().ok())
                    .collect()
            )),
            opt(mean(
                group.iter().map(|r| r.report.rerouted() as f64).collect()
            )),
            opt(mean(
                group
                    .iter()
                    .map(|r| r.report.trust_messages() as f64)
                    .collect()
            )),
            opt(mean(
                group
                    .iter()
                    .filter_map(|r| r.report.mean_latency())
                    .collect()
            )),
        );
    }
    out
}

fn entity(e: EntityId) -> String {
    e.to_string()
}

pub fn write_verdicts(rows: &[MatrixRow]) -> String {
    let mut out = String::from(
        "condition,n,scheme,seed,event_id,accused,decided_at,outcome,confidence,reports\n",
    );
    for r in rows {
        for v in &r.report.verdicts {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                key(r),
                v.event_id,
                entity(v.accused),
                num(v.decided_at),
                v.outcome.as_str(),
                num(v.confidence),
                v.reports
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub vehicles: PathBuf,
    pub aggregate: PathBuf,
    pub summary: PathBuf,
    pub verdicts: PathBuf,
}

/// Writes `vehicles.csv`, `aggregate.csv`, `summary.csv` and `verdicts.csv` into `dir`.
pub fn emit_csv(rows: &[MatrixRow], dir: &Path) -> Result<OutputPaths, SimError> {
    fs::create_dir_all(dir).map_err(|source| SimError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths = OutputPaths {
        vehicles: dir.join("vehicles.csv"),
        aggregate: dir.join("aggregate.csv"),
        summary: dir.join("summary.csv"),
        verdicts: dir.join("verdicts.csv"),
    };
    for (path, body) in [
        (&paths.vehicles, write_vehicles(rows)),
        (&paths.aggregate, write_aggregate(rows)),
        (&paths.summary, write_summary(rows)),
        (&paths.verdicts, write_verdicts(rows)),
    ] {
        fs::write(path, body).map_err(|source| SimError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(paths)
}
