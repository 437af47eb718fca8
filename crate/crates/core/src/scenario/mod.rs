//! Scenario definition, execution and reporting.

mod file;
mod oracle;
mod run;
mod summary;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{CostModel, PolicyKind, WgdsfParams};
use crate::demand::{CatalogParams, PopulationParams, UserPopulation, Video, VideoCatalog};
use crate::error::{Error, Result};
use crate::placement::DEFAULT_ORACLE_BOUND;
use crate::rng::{substream, Stream};
use crate::simulator::SimulationConfig;

pub use file::{load_scenario, parse_scenario, write_scenario};
pub use oracle::{oracle_check, oracle_instance, OracleInstance, OracleMismatch, OracleReport};
pub use run::{run_scenario, PlacementRecord, ResultRow, ScenarioRun, CSV_HEADER};
pub use summary::{summarize, summarize_rows, Figure, Summary, Table, FIG2A_CAPACITY, SPORTS_TYPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Proposed,
    Lru,
    Lfu,
    Wgdsf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Proposed,
        Algorithm::Lru,
        Algorithm::Lfu,
        Algorithm::Wgdsf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Proposed => "PROPOSED",
            Algorithm::Lru => "LRU",
            Algorithm::Lfu => "LFU",
            Algorithm::Wgdsf => "WGDSF*",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PROPOSED" => Some(Algorithm::Proposed),
            "LRU" => Some(Algorithm::Lru),
            "LFU" => Some(Algorithm::Lfu),
            "WGDSF" | "WGDSF*" => Some(Algorithm::Wgdsf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CatalogSpec {
    Generated(CatalogParams),
    Explicit {
        gamma: f64,
        types: Vec<String>,
        videos: Vec<Video>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub num_users: usize,
    /// One weight per catalog type, in catalog type order.
    pub type_shares: Vec<f64>,
    pub alpha_shares: Vec<(f64, f64)>,
    pub base_stations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WgdsfSpec {
    pub half_life_days: f64,
    /// One weight per catalog type, in catalog type order.
    pub type_weights: Vec<f64>,
    pub cost_model: CostModel,
}

/// Random-instance sweep for the DP-versus-exhaustive-search check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub instances: u32,
    pub max_videos: usize,
    pub max_size: u32,
    pub max_capacity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub catalog: CatalogSpec,
    pub population: PopulationSpec,
    pub sim: SimulationConfig,
    pub algorithms: Vec<Algorithm>,
    pub wgdsf: WgdsfSpec,
    pub output_dir: PathBuf,
    pub oracle: OracleSpec,
}

impl Scenario {
    pub fn types(&self) -> &[String] {
        match &self.catalog {
            CatalogSpec::Generated(p) => &p.types,
            CatalogSpec::Explicit { types, .. } => types,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(',') {
            return Err(Error::validation(
                "scenario.id",
                "must be non-empty and contain no commas",
            ));
        }
        let types = self.types();
        if types
            .iter()
            .any(|t| t.is_empty() || t == "ALL" || t.contains([',', ':']))
        {
            return Err(Error::validation(
                "catalog.types",
                "type names must be non-empty, not `ALL`, and free of `,` and `:`",
            ));
        }
        for (i, t) in types.iter().enumerate() {
            if types[..i].contains(t) {
                return Err(Error::validation(
                    "catalog.types",
                    format!("type `{t}` listed twice"),
                ));
            }
        }
        match &self.catalog {
            CatalogSpec::Generated(p) => p.validate()?,
            CatalogSpec::Explicit {
                gamma,
                types,
                videos,
            } => {
                VideoCatalog::new(videos.clone(), *gamma, types.clone())
                    .map_err(|e| Error::validation("catalog.videos", e.to_string()))?;
            }
        }
        self.population_params().validate(types.len())?;
        self.sim.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::validation(
                "sweep.algorithms",
                "must list at least one algorithm",
            ));
        }
        self.wgdsf_params().validate()?;
        if self.oracle.max_videos == 0 || self.oracle.max_videos > DEFAULT_ORACLE_BOUND {
            return Err(Error::validation(
                "oracle.max_videos",
                format!("must lie in 1..={DEFAULT_ORACLE_BOUND}"),
            ));
        }
        if self.oracle.max_size == 0 {
            return Err(Error::validation("oracle.max_size", "must be >= 1"));
        }
        Ok(())
    }

    pub fn population_params(&self) -> PopulationParams {
        PopulationParams {
            num_users: self.population.num_users,
            type_shares: self.population.type_shares.clone(),
            alpha_shares: self.population.alpha_shares.clone(),
            base_stations: self.population.base_stations,
        }
    }

    pub fn wgdsf_params(&self) -> WgdsfParams {
        WgdsfParams {
            half_life: self.wgdsf.half_life_days * self.sim.day_length(),
            type_weights: self.wgdsf.type_weights.clone(),
            cost_model: self.wgdsf.cost_model,
        }
    }

    pub fn policy(&self, algorithm: Algorithm) -> Option<PolicyKind> {
        match algorithm {
            Algorithm::Proposed => None,
            Algorithm::Lru => Some(PolicyKind::Lru),
            Algorithm::Lfu => Some(PolicyKind::Lfu),
            Algorithm::Wgdsf => Some(PolicyKind::Wgdsf(self.wgdsf_params())),
        }
    }

    /// Builds the initial catalog and the population from the scenario seed.
    pub fn build_world(&self) -> Result<(VideoCatalog, UserPopulation)> {
        let seed = self.sim.seed;
        let catalog = match &self.catalog {
            CatalogSpec::Generated(p) => {
                VideoCatalog::generate(p, &mut substream(seed, Stream::Catalog, 0))?
            }
            CatalogSpec::Explicit {
                gamma,
                types,
                videos,
            } => VideoCatalog::new(videos.clone(), *gamma, types.clone())?,
        };
        let users = UserPopulation::generate(
            &self.population_params(),
            catalog.num_types(),
            &mut substream(seed, Stream::Population, 0),
        )?;
        Ok((catalog, users))
    }
}
