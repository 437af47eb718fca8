//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # comment
//! catalog.k = 21
//! population.alpha_shares = 0.2:1/3, 0.5:1/3, 0.8:1/3
//! sweep.capacities = 50, 150, 250
//! ```
//!
//! Lists are comma-separated, `name:weight` pairs accept `a/b` fractions,
//! unknown or repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::baselines::CostModel;
use crate::demand::{CatalogParams, Video};
use crate::error::{Error, Result};
use crate::placement::DEFAULT_ORACLE_BOUND;
use crate::simulator::{DelayModel, SimulationConfig};

use super::{Algorithm, CatalogSpec, OracleSpec, PopulationSpec, Scenario, WgdsfSpec};

const KEYS: &[&str] = &[
    "scenario.id",
    "catalog.k",
    "catalog.gamma",
    "catalog.types",
    "catalog.sd_size_min",
    "catalog.sd_size_max",
    "catalog.hd_multiplier",
    "catalog.size_min",
    "catalog.size_max",
    "catalog.videos",
    "population.n",
    "population.type_shares",
    "population.alpha_shares",
    "population.base_stations",
    "sim.lambda",
    "sim.requests_per_day",
    "sim.days",
    "sim.seed",
    "sim.refresh_rho",
    "sim.transcode_serve",
    "sim.delay.hit_ms",
    "sim.delay.transcode_ms",
    "sim.delay.miss_ms",
    "sweep.algorithms",
    "sweep.capacities",
    "wgdsf.half_life_days",
    "wgdsf.type_weights",
    "wgdsf.cost_model",
    "output.dir",
    "oracle.instances",
    "oracle.max_videos",
    "oracle.max_size",
    "oracle.max_capacity",
];

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let default_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    parse_scenario(&text, path, &default_id)
}

/// Parses scenario text; `origin` is used only in error messages.
pub fn parse_scenario(text: &str, origin: &Path, default_id: &str) -> Result<Scenario> {
    let raw = tokenize(text, origin)?;
    let doc = Doc { raw };
    let scenario = doc.resolve(default_id)?;
    scenario.validate()?;
    Ok(scenario)
}

fn tokenize(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut raw = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            reason,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(parse_err(format!("unknown key `{key}`")));
        }
        if raw
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(parse_err(format!("duplicate key `{key}`")));
        }
    }
    Ok(raw)
}

struct Doc {
    raw: BTreeMap<String, String>,
}

impl Doc {
    fn get(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(key, format!("cannot parse `{v}`"))),
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(split_list)
    }

    fn num_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.list(key)
            .map(|items| {
                items
                    .iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::validation(key, format!("cannot parse `{s}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn pairs(&self, key: &str) -> Result<Option<Vec<(String, f64)>>> {
        self.list(key)
            .map(|items| {
                items
                    .iter()
                    .map(|item| {
                        let (name, weight) = item.split_once(':').ok_or_else(|| {
                            Error::validation(key, format!("expected `name:weight`, got `{item}`"))
                        })?;
                        Ok((name.trim().to_string(), parse_weight(key, weight.trim())?))
                    })
                    .collect()
            })
            .transpose()
    }

    fn resolve(&self, default_id: &str) -> Result<Scenario> {
        let defaults = CatalogParams::default();
        let types = self.list("catalog.types").unwrap_or(defaults.types.clone());
        let gamma = self.num("catalog.gamma", defaults.gamma)?;
        let catalog = match self.get("catalog.videos") {
            Some(v) => CatalogSpec::Explicit {
                gamma,
                types: types.clone(),
                videos: parse_videos(v, &types)?,
            },
            None => CatalogSpec::Generated(CatalogParams {
                num_videos: self.num("catalog.k", defaults.num_videos)?,
                gamma,
                types: types.clone(),
                sd_size_min: self.num("catalog.sd_size_min", defaults.sd_size_min)?,
                sd_size_max: self.num("catalog.sd_size_max", defaults.sd_size_max)?,
                hd_multiplier: self.num("catalog.hd_multiplier", defaults.hd_multiplier)?,
                size_min: self.num("catalog.size_min", defaults.size_min)?,
                size_max: self.num("catalog.size_max", defaults.size_max)?,
            }),
        };

        let type_shares = resolve_named(
            "population.type_shares",
            self.pairs("population.type_shares")?,
            &types,
            1.0,
            0.0,
        )?;
        let alpha_shares = match self.pairs("population.alpha_shares")? {
            None => vec![(0.2, 1.0 / 3.0), (0.5, 1.0 / 3.0), (0.8, 1.0 / 3.0)],
            Some(pairs) => pairs
                .into_iter()
                .map(|(a, w)| {
                    let alpha = a.parse::<f64>().map_err(|_| {
                        Error::validation(
                            "population.alpha_shares",
                            format!("cannot parse alpha `{a}`"),
                        )
                    })?;
                    Ok((alpha, w))
                })
                .collect::<Result<_>>()?,
        };
        let population = PopulationSpec {
            num_users: self.num("population.n", 900)?,
            type_shares,
            alpha_shares,
            base_stations: self.num("population.base_stations", 4)?,
        };

        let sim_defaults = SimulationConfig::default();
        let delay_defaults = DelayModel::default();
        let sim = SimulationConfig {
            lambda: self.num("sim.lambda", sim_defaults.lambda)?,
            requests_per_day: self.num("sim.requests_per_day", sim_defaults.requests_per_day)?,
            days: self.num("sim.days", sim_defaults.days)?,
            capacities: self
                .num_list("sweep.capacities")?
                .unwrap_or(sim_defaults.capacities),
            seed: self.num("sim.seed", sim_defaults.seed)?,
            delay: DelayModel {
                hit_ms: self.num("sim.delay.hit_ms", delay_defaults.hit_ms)?,
                transcode_ms: self.num("sim.delay.transcode_ms", delay_defaults.transcode_ms)?,
                miss_ms: self.num("sim.delay.miss_ms", delay_defaults.miss_ms)?,
            },
            refresh_rho: self.num("sim.refresh_rho", sim_defaults.refresh_rho)?,
            base_stations: population.base_stations,
            transcode_serve: self.num("sim.transcode_serve", sim_defaults.transcode_serve)?,
        };

        let algorithms = match self.list("sweep.algorithms") {
            None => Algorithm::ALL.to_vec(),
            Some(items) => items
                .iter()
                .map(|s| {
                    Algorithm::parse(s).ok_or_else(|| {
                        Error::validation("sweep.algorithms", format!("unknown algorithm `{s}`"))
                    })
                })
                .collect::<Result<_>>()?,
        };

        let cost_model = match self.get("wgdsf.cost_model").unwrap_or("size") {
            "size" => CostModel::Size,
            "unit" => CostModel::Unit,
            other => {
                return Err(Error::validation(
                    "wgdsf.cost_model",
                    format!("expected `size` or `unit`, got `{other}`"),
                ))
            }
        };
        let wgdsf = WgdsfSpec {
            half_life_days: self.num("wgdsf.half_life_days", 1.0)?,
            type_weights: resolve_named(
                "wgdsf.type_weights",
                self.pairs("wgdsf.type_weights")?,
                &types,
                1.0,
                1.0,
            )?,
            cost_model,
        };

        let oracle_defaults = OracleSpec::default();
        let oracle = OracleSpec {
            instances: self.num("oracle.instances", oracle_defaults.instances)?,
            max_videos: self.num("oracle.max_videos", oracle_defaults.max_videos)?,
            max_size: self.num("oracle.max_size", oracle_defaults.max_size)?,
            max_capacity: self.num("oracle.max_capacity", oracle_defaults.max_capacity)?,
        };

        Ok(Scenario {
            id: self.get("scenario.id").unwrap_or(default_id).to_string(),
            catalog,
            population,
            sim,
            algorithms,
            wgdsf,
            output_dir: PathBuf::from(self.get("output.dir").unwrap_or("out")),
            oracle,
        })
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn parse_weight(key: &str, s: &str) -> Result<f64> {
    let bad = || Error::validation(key, format!("cannot parse weight `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Expands `name:weight` pairs into one weight per catalog type. Types not
/// mentioned get `missing`; with no pairs at all every type gets `absent`.
fn resolve_named(
    key: &str,
    pairs: Option<Vec<(String, f64)>>,
    types: &[String],
    absent: f64,
    missing: f64,
) -> Result<Vec<f64>> {
    let Some(pairs) = pairs else {
        return Ok(vec![absent; types.len()]);
    };
    let mut out = vec![missing; types.len()];
    let mut seen = vec![false; types.len()];
    for (name, w) in pairs {
        let i = types.iter().position(|t| *t == name).ok_or_else(|| {
            Error::validation(key, format!("type `{name}` is not in catalog.types"))
        })?;
        if seen[i] {
            return Err(Error::validation(
                key,
                format!("type `{name}` listed twice"),
            ));
        }
        seen[i] = true;
        out[i] = w;
    }
    Ok(out)
}

/// `rank:type:hd:sd` entries in video id order.
fn parse_videos(v: &str, types: &[String]) -> Result<Vec<Video>> {
    const KEY: &str = "catalog.videos";
    split_list(v)
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let [rank, ty, hd, sd] = parts[..] else {
                return Err(Error::validation(
                    KEY,
                    format!("expected `rank:type:hd:sd`, got `{item}`"),
                ));
            };
            let num = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| Error::validation(KEY, format!("cannot parse `{s}` in `{item}`")))
            };
            let content_type = types.iter().position(|t| t == ty).ok_or_else(|| {
                Error::validation(KEY, format!("type `{ty}` is not in catalog.types"))
            })?;
            Ok(Video {
                id: i + 1,
                rank: num(rank)? as usize,
                content_type,
                size_hd: num(hd)?,
                size_sd: num(sd)?,
            })
        })
        .collect()
}

/// Serializes a scenario with every key spelled out, so that loading the
/// result yields an equal scenario.
pub fn write_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    let join = |items: Vec<String>| items.join(", ");
    kv("scenario.id", s.id.clone());
    let types = s.types();
    kv("catalog.types", join(types.to_vec()));
    match &s.catalog {
        CatalogSpec::Generated(p) => {
            kv("catalog.k", p.num_videos.to_string());
            kv("catalog.gamma", p.gamma.to_string());
            kv("catalog.sd_size_min", p.sd_size_min.to_string());
            kv("catalog.sd_size_max", p.sd_size_max.to_string());
            kv("catalog.hd_multiplier", p.hd_multiplier.to_string());
            kv("catalog.size_min", p.size_min.to_string());
            kv("catalog.size_max", p.size_max.to_string());
        }
        CatalogSpec::Explicit { gamma, videos, .. } => {
            kv("catalog.gamma", gamma.to_string());
            kv(
                "catalog.videos",
                join(
                    videos
                        .iter()
                        .map(|v| {
                            format!(
                                "{}:{}:{}:{}",
                                v.rank, types[v.content_type], v.size_hd, v.size_sd
                            )
                        })
                        .collect(),
                ),
            );
        }
    }
    let named = |w: &[f64]| {
        join(
            types
                .iter()
                .zip(w)
                .map(|(t, w)| format!("{t}:{w}"))
                .collect(),
        )
    };
    kv("population.n", s.population.num_users.to_string());
    kv("population.type_shares", named(&s.population.type_shares));
    kv(
        "population.alpha_shares",
        join(
            s.population
                .alpha_shares
                .iter()
                .map(|(a, w)| format!("{a}:{w}"))
                .collect(),
        ),
    );
    kv(
        "population.base_stations",
        s.population.base_stations.to_string(),
    );
    kv("sim.lambda", s.sim.lambda.to_string());
    kv("sim.requests_per_day", s.sim.requests_per_day.to_string());
    kv("sim.days", s.sim.days.to_string());
    kv("sim.seed", s.sim.seed.to_string());
    kv("sim.refresh_rho", s.sim.refresh_rho.to_string());
    kv("sim.transcode_serve", s.sim.transcode_serve.to_string());
    kv("sim.delay.hit_ms", s.sim.delay.hit_ms.to_string());
    kv(
        "sim.delay.transcode_ms",
        s.sim.delay.transcode_ms.to_string(),
    );
    kv("sim.delay.miss_ms", s.sim.delay.miss_ms.to_string());
    kv(
        "sweep.algorithms",
        join(s.algorithms.iter().map(|a| a.label().to_string()).collect()),
    );
    kv(
        "sweep.capacities",
        join(s.sim.capacities.iter().map(u64::to_string).collect()),
    );
    kv("wgdsf.half_life_days", s.wgdsf.half_life_days.to_string());
    kv("wgdsf.type_weights", named(&s.wgdsf.type_weights));
    kv(
        "wgdsf.cost_model",
        match s.wgdsf.cost_model {
            CostModel::Size => "size".into(),
            CostModel::Unit => "unit".into(),
        },
    );
    kv("output.dir", s.output_dir.display().to_string());
    kv("oracle.instances", s.oracle.instances.to_string());
    kv("oracle.max_videos", s.oracle.max_videos.to_string());
    kv("oracle.max_size", s.oracle.max_size.to_string());
    kv("oracle.max_capacity", s.oracle.max_capacity.to_string());
    out
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            instances: 1000,
            max_videos: DEFAULT_ORACLE_BOUND,
            max_size: 65,
            max_capacity: 200,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario(text, Path::new("test.scenario"), "test")
    }

    #[test]
    fn defaults_resolve() {
        let s = parse("# nothing but defaults\n").unwrap();
        assert_eq!(s.id, "test");
        assert_eq!(s.sim.requests_per_day, 900);
        assert_eq!(s.sim.delay, DelayModel::default());
        assert_eq!(s.population.type_shares, vec![1.0; 5]);
        assert_eq!(s.algorithms, Algorithm::ALL.to_vec());
    }

    #[test]
    fn alpha_out_of_range_names_key() {
        let err = parse("population.alpha_shares = 1.5:1\n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("population.alpha_shares"), "{err}");
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let err = parse("catalog.kk = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("sim.days = 2\nsim.days = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse("just words\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn bad_values_name_key() {
        for (text, key) in [
            ("sim.lambda = fast\n", "sim.lambda"),
            ("sim.lambda = 0\n", "sim.lambda"),
            ("sweep.capacities = \n", "sweep.capacities"),
            ("sweep.algorithms = LRU, FIFO\n", "sweep.algorithms"),
            (
                "population.type_shares = cooking:1\n",
                "population.type_shares",
            ),
            ("sim.delay.miss_ms = 1\n", "sim.delay"),
            ("catalog.videos = 1:news:3\n", "catalog.videos"),
        ] {
            let err = parse(text).unwrap_err();
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn fractions_and_explicit_videos() {
        let s = parse(
            "catalog.types = a, b\ncatalog.videos = 2:a:10:5, 1:b:8:8\npopulation.alpha_shares = 0.5:2/3, 0.2:1/3\n",
        )
        .unwrap();
        assert_eq!(
            s.population.alpha_shares,
            vec![(0.5, 2.0 / 3.0), (0.2, 1.0 / 3.0)]
        );
        let CatalogSpec::Explicit { videos, .. } = &s.catalog else {
            panic!("expected explicit catalog");
        };
        assert_eq!(videos[1].rank, 1);
        assert_eq!(videos[1].content_type, 1);
        assert!(parse("catalog.types = a\ncatalog.videos = 1:a:3:5\n").is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let s = parse(
            "scenario.id = rt\ncatalog.gamma = 0.73\npopulation.type_shares = sport:0.4, news:0.1\nwgdsf.type_weights = sport:2.5\nsim.refresh_rho = 0.3\nsweep.algorithms = LFU, PROPOSED\n",
        )
        .unwrap();
        let again = parse(&write_scenario(&s)).unwrap();
        assert_eq!(again, s);
    }
}
