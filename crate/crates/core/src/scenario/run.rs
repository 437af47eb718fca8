use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::Placement;
use crate::simulator::{Counters, SimMetrics, Simulation};

use super::{Algorithm, Scenario};

pub const CSV_HEADER: [&str; 13] = [
    "scenario_id",
    "algorithm",
    "capacity",
    "day",
    "content_type",
    "requests",
    "exact_hits",
    "transcode_hits",
    "misses",
    "empirical_hit_ratio",
    "predicted_hit_ratio",
    "backhaul_units",
    "mean_startup_delay_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: String,
    pub algorithm: String,
    pub capacity: u64,
    pub day: u32,
    /// A catalog type name, or `ALL`.
    pub content_type: String,
    pub requests: u64,
    pub exact_hits: u64,
    pub transcode_hits: u64,
    pub misses: u64,
    pub empirical_hit_ratio: f64,
    pub predicted_hit_ratio: Option<f64>,
    pub backhaul_units: u64,
    pub mean_startup_delay_ms: f64,
}

impl ResultRow {
    fn new(
        scenario_id: &str,
        algorithm: &str,
        capacity: u64,
        day: u32,
        content_type: &str,
        c: &Counters,
        predicted: Option<f64>,
    ) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            algorithm: algorithm.to_string(),
            capacity,
            day,
            content_type: content_type.to_string(),
            requests: c.requests,
            exact_hits: c.exact_hits,
            transcode_hits: c.transcode_hits,
            misses: c.misses,
            empirical_hit_ratio: c.hit_ratio(),
            predicted_hit_ratio: predicted,
            backhaul_units: c.backhaul_units,
            mean_startup_delay_ms: c.mean_delay_ms(),
        }
    }

    pub fn hits(&self) -> u64 {
        self.exact_hits + self.transcode_hits
    }

    pub fn to_record(&self) -> [String; 13] {
        [
            self.scenario_id.clone(),
            self.algorithm.clone(),
            self.capacity.to_string(),
            self.day.to_string(),
            self.content_type.clone(),
            self.requests.to_string(),
            self.exact_hits.to_string(),
            self.transcode_hits.to_string(),
            self.misses.to_string(),
            format!("{:.6}", self.empirical_hit_ratio),
            self.predicted_hit_ratio
                .map(|p| format!("{p:.6}"))
                .unwrap_or_default(),
            self.backhaul_units.to_string(),
            format!("{:.3}", self.mean_startup_delay_ms),
        ]
    }
}

/// One solved static placement, as written to `placement.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub scenario_id: String,
    pub capacity: u64,
    pub day: u32,
    pub predicted_hit_ratio: f64,
    pub capacity_used: u64,
    pub x: Vec<Vec<u8>>,
    pub y: Vec<Vec<u8>>,
}

/// Everything one scenario run produced, in canonical order.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub rows: Vec<ResultRow>,
    pub placements: Vec<PlacementRecord>,
    /// Per (algorithm, capacity) cell, in row order.
    pub cells: Vec<(Algorithm, u64, SimMetrics)>,
}

impl ScenarioRun {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(CSV_HEADER).map_err(|e| csv_io(path, e))?;
        for row in &self.rows {
            w.write_record(row.to_record())
                .map_err(|e| csv_io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_placements(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        for p in &self.placements {
            serde_json::to_writer(&mut buf, p)?;
            buf.push(b'\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    /// Writes `results.csv` and `placement.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("results.csv");
        let jsonl_path = dir.join("placement.jsonl");
        self.write_csv(&csv_path)?;
        self.write_placements(&jsonl_path)?;
        Ok((csv_path, jsonl_path))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    }
}

/// Runs every (algorithm, capacity) cell of a scenario on `jobs` worker
/// threads (0 = one per core). Output order does not depend on `jobs`.
pub fn run_scenario(scenario: &Scenario, jobs: usize) -> Result<ScenarioRun> {
    scenario.validate()?;
    let (catalog, users) = scenario.build_world()?;
    let sim = Simulation::prepare(catalog, &users, scenario.sim.clone())?;
    let cells: Vec<(Algorithm, u64)> = scenario
        .algorithms
        .iter()
        .flat_map(|&a| scenario.sim.capacities.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<(SimMetrics, Option<Vec<Placement>>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(alg, cap)| match scenario.policy(alg) {
                None => sim.run_proposed(cap).map(|(m, p)| (m, Some(p))),
                Some(policy) => Ok((sim.run_baseline(policy, cap), None)),
            })
            .collect::<Result<_>>()
    })?;

    let types = scenario.types();
    let mut rows = Vec::new();
    let mut placements = Vec::new();
    let mut out_cells = Vec::with_capacity(cells.len());
    for ((alg, cap), (metrics, solved)) in cells.into_iter().zip(results) {
        for d in &metrics.days {
            let (pred, pred_types) = match &d.predicted {
                Some((p, t)) => (Some(*p), Some(t)),
                None => (None, None),
            };
            rows.push(ResultRow::new(
                &scenario.id,
                alg.label(),
                cap,
                d.day,
                "ALL",
                &d.metrics.all,
                pred,
            ));
            for (t, name) in types.iter().enumerate() {
                rows.push(ResultRow::new(
                    &scenario.id,
                    alg.label(),
                    cap,
                    d.day,
                    name,
                    &d.metrics.per_type[t],
                    pred_types.map(|p| p[t]),
                ));
            }
        }
        if let Some(solved) = solved {
            for (day, p) in solved.into_iter().enumerate() {
                placements.push(PlacementRecord {
                    scenario_id: scenario.id.clone(),
                    capacity: cap,
                    day: day as u32,
                    predicted_hit_ratio: p.predicted_hit_ratio,
                    capacity_used: p.capacity_used,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        out_cells.push((alg, cap, metrics));
    }
    Ok(ScenarioRun {
        rows,
        placements,
        cells: out_cells,
    })
}
