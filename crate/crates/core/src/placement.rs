//! Hit-ratio-maximizing cache placement.
//!
//! Each video is a group of representations ordered from highest to lowest
//! quality. Caching representation `l` serves its own requests directly and
//! every lower-quality representation of the same video by transcoding, so
//! its value is the request mass of representations `l..L`. At most one
//! representation per video is cached, which makes placement a grouped
//! (multiple-choice) knapsack solved exactly by dynamic programming over
//! integer capacity.
//!
//! Tie-breaking is fixed: among equal-value choices for a group the solver
//! prefers caching nothing, then the smaller object, then the
//! higher-quality representation. [`brute_force_placement`] applies the same
//! rule so the two can be compared placement-for-placement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group count [`brute_force_placement`] accepts by default.
pub const DEFAULT_ORACLE_BOUND: usize = 12;

/// Per-(video, representation) value of caching that representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    rows: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let l = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != l || r.is_empty()) {
            return Err(Error::invalid(
                "value rows must be non-empty and equally long",
            ));
        }
        if rows.iter().flatten().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("values must be finite and non-negative"));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_groups(&self) -> usize {
        self.rows.len()
    }

    pub fn num_reps(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, video: usize, rep: usize) -> f64 {
        self.rows[video][rep]
    }
}

/// Covered request mass per representation: `p[v][l] = sum_{m >= l} req[v][m]`.
pub fn value_table<R: AsRef<[f64]>>(req: &[R]) -> ValueTable {
    let rows = req
        .iter()
        .map(|row| {
            let row = row.as_ref();
            let mut p = vec![0.0; row.len()];
            let mut acc = 0.0;
            for (slot, &r) in p.iter_mut().zip(row).rev() {
                acc += r;
                *slot = acc;
            }
            p
        })
        .collect();
    ValueTable { rows }
}

/// Cache decision `x`, its transcode set `y`, and the objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x: Vec<Vec<u8>>,
    pub y: Vec<Vec<u8>>,
    pub predicted_hit_ratio: f64,
    pub capacity_used: u64,
    pub capacity: u64,
}

impl Placement {
    fn from_selection(
        selection: &[Option<usize>],
        values: &ValueTable,
        sizes: &[Vec<u32>],
        capacity: u64,
        value: f64,
    ) -> Self {
        let l = values.num_reps();
        let mut x = vec![vec![0u8; l]; selection.len()];
        let mut used = 0u64;
        for (v, sel) in selection.iter().enumerate() {
            if let Some(rep) = *sel {
                x[v][rep] = 1;
                used += u64::from(sizes[v][rep]);
            }
        }
        let y = derive_transcode(&x).expect("selection satisfies one-per-group");
        Self {
            x,
            y,
            predicted_hit_ratio: value,
            capacity_used: used,
            capacity,
        }
    }

    pub fn num_videos(&self) -> usize {
        self.x.len()
    }

    /// The cached representation of `video`, if any.
    pub fn selected(&self, video: usize) -> Option<usize> {
        self.x[video].iter().position(|&b| b == 1)
    }

    /// Whether a request for `(video, rep)` is served at the edge.
    pub fn covers(&self, video: usize, rep: usize) -> bool {
        self.x[video][rep] == 1 || self.y[video][rep] == 1
    }

    pub fn is_empty(&self) -> bool {
        self.x.iter().flatten().all(|&b| b == 0)
    }

    /// Checks the one-per-group, capacity and transcode-derivation constraints.
    pub fn check_feasible<S: AsRef<[u32]>>(&self, sizes: &[S]) -> Result<()> {
        let y = derive_transcode(&self.x)?;
        if y != self.y {
            return Err(Error::invalid(
                "transcode set does not match cache decision",
            ));
        }
        let used: u64 = self
            .x
            .iter()
            .zip(sizes)
            .flat_map(|(xr, sr)| {
                xr.iter()
                    .zip(sr.as_ref())
                    .map(|(&b, &s)| u64::from(b) * u64::from(s))
            })
            .sum();
        if used != self.capacity_used {
            return Err(Error::invalid("recorded capacity use is stale"));
        }
        if used > self.capacity {
            return Err(Error::invalid(format!(
                "placement uses {used} units but capacity is {}",
                self.capacity
            )));
        }
        for (xr, yr) in self.x.iter().zip(&self.y) {
            if xr.iter().zip(yr).any(|(a, b)| a + b > 1) {
                return Err(Error::invalid("representation both cached and transcoded"));
            }
        }
        Ok(())
    }
}

/// Transcode set implied by a cache decision: a representation is
/// transcode-served when some strictly higher-quality one is cached.
pub fn derive_transcode<X: AsRef<[u8]>>(x: &[X]) -> Result<Vec<Vec<u8>>> {
    x.iter()
        .enumerate()
        .map(|(v, row)| {
            let row = row.as_ref();
            if row.iter().any(|&b| b > 1) {
                return Err(Error::invalid(format!(
                    "video {v}: cache flags must be 0 or 1"
                )));
            }
            if row.iter().filter(|&&b| b == 1).count() > 1 {
                return Err(Error::invalid(format!(
                    "video {v}: more than one representation cached"
                )));
            }
            let mut above = false;
            Ok(row
                .iter()
                .map(|&b| {
                    let y = u8::from(above);
                    above |= b == 1;
                    y
                })
                .collect())
        })
        .collect()
}

/// `sum_{v,l} (x + y) * req`, summed in video-major order.
pub fn predicted_hit_ratio<X: AsRef<[u8]>, R: AsRef<[f64]>>(x: &[X], y: &[X], req: &[R]) -> f64 {
    let mut total = 0.0;
    for ((xr, yr), rr) in x.iter().zip(y).zip(req) {
        for ((&a, &b), &r) in xr.as_ref().iter().zip(yr.as_ref()).zip(rr.as_ref()) {
            if a + b > 0 {
                total += f64::from(a + b) * r;
            }
        }
    }
    total
}

/// Forward-pass tables of the grouped-knapsack DP.
///
/// `trans[v][w]` is the best value using the first `v` groups within
/// capacity `w`; `choice[v][w]` is the representation group `v` takes in that
/// optimum (`None` = not cached).
#[derive(Debug, Clone)]
pub struct DpState {
    capacity: usize,
    trans: Vec<f64>,
    choice: Vec<Option<usize>>,
}

impl DpState {
    fn idx(&self, v: usize, w: usize) -> usize {
        v * (self.capacity + 1) + w
    }

    pub fn num_groups(&self) -> usize {
        self.trans.len() / (self.capacity + 1) - 1
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn value(&self, groups: usize, w: usize) -> f64 {
        self.trans[self.idx(groups, w)]
    }

    pub fn choice(&self, groups: usize, w: usize) -> Option<usize> {
        self.choice[self.idx(groups, w)]
    }

    /// Walks the choice matrix back from the last group at full capacity.
    pub fn traceback(&self, sizes: &[Vec<u32>]) -> Vec<Option<usize>> {
        let k = self.num_groups();
        let mut selection = vec![None; k];
        let mut w = self.capacity;
        for v in (1..=k).rev() {
            if let Some(rep) = self.choice(v, w) {
                selection[v - 1] = Some(rep);
                w -= sizes[v - 1][rep] as usize;
            }
        }
        selection
    }
}

fn checked_sizes<S: AsRef<[u32]>>(values: &ValueTable, sizes: &[S]) -> Result<Vec<Vec<u32>>> {
    if sizes.len() != values.num_groups() {
        return Err(Error::invalid(
            "size and value tables differ in video count",
        ));
    }
    sizes
        .iter()
        .map(|row| {
            let row = row.as_ref();
            if row.len() != values.num_reps() {
                return Err(Error::invalid("size and value rows differ in length"));
            }
            if row.contains(&0) {
                return Err(Error::invalid("representation sizes must be positive"));
            }
            Ok(row.to_vec())
        })
        .collect()
}

/// Representation indices of one group in tie-break preference order.
fn preference_order(sizes: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&l| (sizes[l], l));
    order
}

/// Runs the forward DP pass.
pub fn solve_dp<S: AsRef<[u32]>>(
    values: &ValueTable,
    sizes: &[S],
    capacity: u64,
) -> Result<DpState> {
    let sizes = checked_sizes(values, sizes)?;
    let cap = usize::try_from(capacity).map_err(|_| Error::invalid("capacity too large"))?;
    Ok(forward(values, &sizes, cap))
}

fn forward(values: &ValueTable, sizes: &[Vec<u32>], cap: usize) -> DpState {
    let k = values.num_groups();
    let width = cap + 1;
    let mut trans = vec![0.0; (k + 1) * width];
    let mut choice = vec![None; (k + 1) * width];
    for v in 1..=k {
        let group_sizes = &sizes[v - 1];
        let order = preference_order(group_sizes);
        let (prev, cur) = trans.split_at_mut(v * width);
        let prev = &prev[(v - 1) * width..];
        let cur = &mut cur[..width];
        let cur_choice = &mut choice[v * width..(v + 1) * width];
        for w in 0..width {
            let mut best = prev[w];
            let mut pick = None;
            for &l in &order {
                let s = group_sizes[l] as usize;
                if s > w {
                    continue;
                }
                let cand = prev[w - s] + values.get(v - 1, l);
                if cand > best {
                    best = cand;
                    pick = Some(l);
                }
            }
            cur[w] = best;
            cur_choice[w] = pick;
        }
    }
    DpState {
        capacity: cap,
        trans,
        choice,
    }
}

/// Optimal placement by grouped-knapsack DP with traceback.
pub fn solve_placement<S: AsRef<[u32]>>(
    values: &ValueTable,
    sizes: &[S],
    capacity: u64,
) -> Result<Placement> {
    let sizes = checked_sizes(values, sizes)?;
    let cap = usize::try_from(capacity).map_err(|_| Error::invalid("capacity too large"))?;
    let dp = forward(values, &sizes, cap);
    let selection = dp.traceback(&sizes);
    let value = dp.value(values.num_groups(), cap);
    Ok(Placement::from_selection(
        &selection, values, &sizes, capacity, value,
    ))
}

/// Exhaustive-search placement with the default group bound.
pub fn brute_force_placement<S: AsRef<[u32]>>(
    values: &ValueTable,
    sizes: &[S],
    capacity: u64,
) -> Result<Placement> {
    brute_force_placement_bounded(values, sizes, capacity, DEFAULT_ORACLE_BOUND)
}

/// Enumerates every one-per-group selection, keeps the feasible ones and
/// returns the best, breaking ties like [`solve_placement`]: compare groups
/// from last to first and prefer no cache, then smaller size, then lower
/// representation index.
pub fn brute_force_placement_bounded<S: AsRef<[u32]>>(
    values: &ValueTable,
    sizes: &[S],
    capacity: u64,
    bound: usize,
) -> Result<Placement> {
    let k = values.num_groups();
    if k > bound {
        return Err(Error::OracleBound { groups: k, bound });
    }
    let sizes = checked_sizes(values, sizes)?;
    let mut search = Search {
        values,
        sizes: &sizes,
        capacity,
        current: vec![None; k],
        best: vec![None; k],
        best_value: f64::NEG_INFINITY,
    };
    search.descend(0, 0, 0.0);
    let best = search.best;
    let value = search.best_value;
    Ok(Placement::from_selection(
        &best, values, &sizes, capacity, value,
    ))
}

struct Search<'a> {
    values: &'a ValueTable,
    sizes: &'a [Vec<u32>],
    capacity: u64,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_value: f64,
}

impl Search<'_> {
    fn descend(&mut self, v: usize, used: u64, value: f64) {
        if v == self.current.len() {
            if value > self.best_value || (value == self.best_value && self.prefers_current()) {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return;
        }
        self.current[v] = None;
        self.descend(v + 1, used, value);
        for l in 0..self.values.num_reps() {
            let s = u64::from(self.sizes[v][l]);
            if used + s <= self.capacity {
                self.current[v] = Some(l);
                self.descend(v + 1, used + s, value + self.values.get(v, l));
            }
        }
        self.current[v] = None;
    }

    fn prefers_current(&self) -> bool {
        let key = |v: usize, sel: Option<usize>| match sel {
            None => (0, 0, 0),
            Some(l) => (1, self.sizes[v][l], l),
        };
        for v in (0..self.current.len()).rev() {
            let a = key(v, self.current[v]);
            let b = key(v, self.best[v]);
            if a != b {
                return a < b;
            }
        }
        false
    }
}
