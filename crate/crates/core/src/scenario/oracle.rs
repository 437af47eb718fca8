use rand::Rng;

use crate::demand::NUM_REPRESENTATIONS;
use crate::error::Result;
use crate::placement::{brute_force_placement, solve_placement, value_table};
use crate::rng::{substream, Stream};

use super::OracleSpec;

/// One random placement instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    /// Per-video request probabilities, one entry per representation.
    pub req: Vec<Vec<f64>>,
    pub sizes: Vec<Vec<u32>>,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMismatch {
    pub instance: u32,
    pub dp_value: f64,
    pub brute_value: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleReport {
    pub instances: u32,
    pub mismatches: Vec<OracleMismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Draws instance `index`. Index `i` of seed `s` is always the same instance.
pub fn oracle_instance(spec: &OracleSpec, seed: u64, index: u32) -> OracleInstance {
    let mut rng = substream(seed, Stream::Oracle, index);
    let k = rng.random_range(1..=spec.max_videos);
    let mut req: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..NUM_REPRESENTATIONS)
                .map(|_| rng.random::<f64>())
                .collect()
        })
        .collect();
    let total: f64 = req.iter().flatten().sum();
    if total > 0.0 {
        req.iter_mut().flatten().for_each(|p| *p /= total);
    }
    let sizes = (0..k)
        .map(|_| {
            let sd = rng.random_range(1..=spec.max_size);
            let hd = rng.random_range(sd..=spec.max_size);
            vec![hd, sd]
        })
        .collect();
    let capacity = rng.random_range(0..=spec.max_capacity);
    OracleInstance {
        req,
        sizes,
        capacity,
    }
}

/// Solves every instance by DP and by exhaustive search and records any
/// value disagreement or infeasible DP placement.
pub fn oracle_check(spec: &OracleSpec, seed: u64) -> Result<OracleReport> {
    let mut report = OracleReport {
        instances: spec.instances,
        mismatches: Vec::new(),
    };
    for i in 0..spec.instances {
        let inst = oracle_instance(spec, seed, i);
        let values = value_table(&inst.req);
        let dp = solve_placement(&values, &inst.sizes, inst.capacity)?;
        let brute = brute_force_placement(&values, &inst.sizes, inst.capacity)?;
        let mismatch = |reason: String| OracleMismatch {
            instance: i,
            dp_value: dp.predicted_hit_ratio,
            brute_value: brute.predicted_hit_ratio,
            reason,
        };
        if let Err(e) = dp.check_feasible(&inst.sizes) {
            report
                .mismatches
                .push(mismatch(format!("DP placement infeasible: {e}")));
        } else if dp.predicted_hit_ratio != brute.predicted_hit_ratio {
            report
                .mismatches
                .push(mismatch("DP value differs from exhaustive search".into()));
        }
    }
    Ok(report)
}
