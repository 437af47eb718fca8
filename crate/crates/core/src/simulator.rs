//! Trace generation and replay.
//!
//! A run is a sequence of daily popularity periods. Each period has its own
//! catalog ranking, demand table and request trace; the static placement is
//! re-solved at every period start while online caches carry their contents
//! across days.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::baselines::{CacheState, Outcome, PolicyKind};
use crate::demand::{build_demand, DemandTable, Representation, UserPopulation, VideoCatalog};
use crate::error::{Error, Result};
use crate::placement::{solve_placement, value_table, Placement};
use crate::rng::{substream, Stream};

/// Startup delay per serve outcome, in milliseconds. The transcode delay is
/// added on top of the hit delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub hit_ms: f64,
    pub transcode_ms: f64,
    pub miss_ms: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            hit_ms: 10.0,
            transcode_ms: 5.0,
            miss_ms: 100.0,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.hit_ms, self.transcode_ms, self.miss_ms]
            .iter()
            .all(|d| d.is_finite() && *d >= 0.0);
        if !finite {
            return Err(Error::validation(
                "sim.delay",
                "delays must be finite and >= 0",
            ));
        }
        if self.hit_ms + self.transcode_ms > self.miss_ms {
            return Err(Error::validation(
                "sim.delay",
                "require hit_ms <= hit_ms + transcode_ms <= miss_ms",
            ));
        }
        Ok(())
    }

    pub fn delay(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Hit => self.hit_ms,
            Outcome::TranscodeHit => self.hit_ms + self.transcode_ms,
            Outcome::Miss => self.miss_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Poisson arrival rate per trace time unit.
    pub lambda: f64,
    pub requests_per_day: usize,
    pub days: u32,
    pub capacities: Vec<u64>,
    pub seed: u64,
    pub delay: DelayModel,
    /// Fraction of ranks perturbed at each daily refresh, in `[0, 1]`.
    pub refresh_rho: f64,
    /// Recorded only.
    pub base_stations: usize,
    /// Whether online caches may serve lower representations by transcoding.
    pub transcode_serve: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            lambda: 0.9,
            requests_per_day: 900,
            days: 7,
            capacities: vec![50, 150, 250, 350, 450, 500],
            seed: 42,
            delay: DelayModel::default(),
            refresh_rho: 0.0,
            base_stations: 4,
            transcode_serve: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::validation("sim.lambda", "must be > 0"));
        }
        if self.requests_per_day == 0 {
            return Err(Error::validation("sim.requests_per_day", "must be >= 1"));
        }
        if self.days == 0 {
            return Err(Error::validation("sim.days", "must be >= 1"));
        }
        if self.capacities.is_empty() {
            return Err(Error::validation(
                "sweep.capacities",
                "must list at least one capacity",
            ));
        }
        if !(0.0..=1.0).contains(&self.refresh_rho) {
            return Err(Error::validation("sim.refresh_rho", "must lie in [0, 1]"));
        }
        self.delay.validate()
    }

    /// Length of one simulated day in trace time units.
    pub fn day_length(&self) -> f64 {
        self.requests_per_day as f64 / self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub timestamp: f64,
    /// 0-based user index.
    pub user: usize,
    /// 0-based video index.
    pub video: usize,
    pub rep: Representation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestTrace {
    pub day: u32,
    pub requests: Vec<Request>,
}

impl RequestTrace {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn end_time(&self) -> Option<f64> {
        self.requests.last().map(|r| r.timestamp)
    }
}

/// Draws one day of requests: exponential gaps with mean `1/lambda` starting
/// after `start_time`, a uniform user per request, then a `(video,
/// representation)` pair from that user's table. The random stream depends
/// only on `(config.seed, day)`.
pub fn generate_trace(
    demand: &DemandTable,
    config: &SimulationConfig,
    day: u32,
    start_time: f64,
) -> Result<RequestTrace> {
    let mut rng = substream(config.seed, Stream::Trace, day);
    let gaps = Exp::new(config.lambda).map_err(|e| Error::invalid(e.to_string()))?;
    let samplers = demand
        .per_user
        .iter()
        .map(|table| WeightedIndex::new(table.iter().flatten().copied()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::invalid(format!("user demand table: {e}")))?;
    if samplers.is_empty() {
        return Err(Error::invalid("demand table has no users"));
    }
    let reps = Representation::ALL.len();
    let mut t = start_time;
    let mut requests = Vec::with_capacity(config.requests_per_day);
    for _ in 0..config.requests_per_day {
        let mut gap: f64 = gaps.sample(&mut rng);
        // keeps timestamps strictly increasing when a gap underflows
        if t + gap <= t {
            gap = f64::EPSILON * t.abs().max(1.0);
        }
        t += gap;
        let user = rng.random_range(0..samplers.len());
        let cell = samplers[user].sample(&mut rng);
        requests.push(Request {
            timestamp: t,
            user,
            video: cell / reps,
            rep: Representation::ALL[cell % reps],
        });
    }
    Ok(RequestTrace { day, requests })
}

/// Swaps the ranks of `ceil(rho * K / 2)` disjoint, uniformly chosen video
/// pairs.
pub fn refresh_popularity<R: Rng + ?Sized>(
    catalog: &VideoCatalog,
    rng: &mut R,
    rho: f64,
) -> Result<VideoCatalog> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!(
            "rank perturbation {rho} outside [0, 1]"
        )));
    }
    let k = catalog.len();
    let pairs = ((rho * k as f64 / 2.0).ceil() as usize).min(k / 2);
    let mut ranks = catalog.ranks();
    if pairs == 0 {
        return Ok(catalog.clone());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(rng);
    for pair in idx[..2 * pairs].chunks_exact(2) {
        ranks.swap(pair[0], pair[1]);
    }
    catalog.with_ranks(&ranks)
}

/// Request, hit and cost counters for one slice of a trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub requests: u64,
    pub exact_hits: u64,
    pub transcode_hits: u64,
    pub misses: u64,
    pub backhaul_units: u64,
    pub delay_ms_total: f64,
}

impl Counters {
    pub fn record(&mut self, outcome: Outcome, size: u32, delay: &DelayModel) {
        self.requests += 1;
        match outcome {
            Outcome::Hit => self.exact_hits += 1,
            Outcome::TranscodeHit => self.transcode_hits += 1,
            Outcome::Miss => {
                self.misses += 1;
                self.backhaul_units += u64::from(size);
            }
        }
        self.delay_ms_total += delay.delay(outcome);
    }

    pub fn hits(&self) -> u64 {
        self.exact_hits + self.transcode_hits
    }

    pub fn hit_ratio(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.hits() as f64 / self.requests as f64
        }
    }

    pub fn mean_delay_ms(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.delay_ms_total / self.requests as f64
        }
    }

    pub fn merge(&mut self, other: &Counters) {
        self.requests += other.requests;
        self.exact_hits += other.exact_hits;
        self.transcode_hits += other.transcode_hits;
        self.misses += other.misses;
        self.backhaul_units += other.backhaul_units;
        self.delay_ms_total += other.delay_ms_total;
    }
}

/// Mean startup delay and backhaul volume of an outcome stream, where each
/// item pairs the outcome with the requested object's size.
pub fn delay_and_backhaul(outcomes: &[(Outcome, u32)], delay: &DelayModel) -> Result<(f64, u64)> {
    delay.validate()?;
    let mut c = Counters::default();
    for &(o, size) in outcomes {
        c.record(o, size, delay);
    }
    Ok((c.mean_delay_ms(), c.backhaul_units))
}

/// Counters for one replayed trace, overall and per content type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetrics {
    pub all: Counters,
    pub per_type: Vec<Counters>,
}

impl TraceMetrics {
    fn new(num_types: usize) -> Self {
        Self {
            all: Counters::default(),
            per_type: vec![Counters::default(); num_types],
        }
    }

    fn record(
        &mut self,
        catalog: &VideoCatalog,
        req: &Request,
        outcome: Outcome,
        delay: &DelayModel,
    ) {
        let video = &catalog.videos()[req.video];
        let size = video.size(req.rep);
        self.all.record(outcome, size, delay);
        self.per_type[video.content_type].record(outcome, size, delay);
    }
}

/// Metrics of one algorithm at one capacity for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayMetrics {
    pub day: u32,
    pub metrics: TraceMetrics,
    /// Model hit ratio of the static placement (overall, per type).
    pub predicted: Option<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub days: Vec<DayMetrics>,
}

impl SimMetrics {
    pub fn total(&self) -> Counters {
        let mut c = Counters::default();
        for d in &self.days {
            c.merge(&d.metrics.all);
        }
        c
    }

    pub fn total_for_type(&self, content_type: usize) -> Counters {
        let mut c = Counters::default();
        for d in &self.days {
            c.merge(&d.metrics.per_type[content_type]);
        }
        c
    }
}

/// Replays a trace against a static placement.
pub fn run_offline(
    placement: &Placement,
    trace: &RequestTrace,
    catalog: &VideoCatalog,
    delay: &DelayModel,
) -> TraceMetrics {
    let mut m = TraceMetrics::new(catalog.num_types());
    for req in &trace.requests {
        let l = req.rep.index();
        let outcome = if placement.x[req.video][l] == 1 {
            Outcome::Hit
        } else if placement.y[req.video][l] == 1 {
            Outcome::TranscodeHit
        } else {
            Outcome::Miss
        };
        m.record(catalog, req, outcome, delay);
    }
    m
}

/// Replays a trace through an online cache, mutating its state.
pub fn replay_online(
    cache: &mut CacheState,
    trace: &RequestTrace,
    catalog: &VideoCatalog,
    delay: &DelayModel,
) -> TraceMetrics {
    let mut m = TraceMetrics::new(catalog.num_types());
    for req in &trace.requests {
        let outcome = cache.serve(catalog, req);
        m.record(catalog, req, outcome, delay);
    }
    m
}

/// Replays a trace through a fresh online cache.
pub fn run_online(
    policy: PolicyKind,
    capacity: u64,
    trace: &RequestTrace,
    catalog: &VideoCatalog,
    delay: &DelayModel,
    transcode_serve: bool,
) -> TraceMetrics {
    let mut cache = CacheState::new(policy, capacity, transcode_serve);
    replay_online(&mut cache, trace, catalog, delay)
}

/// Model hit ratio of a placement, overall and per content type
/// (conditional on the request being for that type).
pub fn predicted_by_type(
    placement: &Placement,
    demand: &DemandTable,
    catalog: &VideoCatalog,
) -> Vec<f64> {
    let mut covered = vec![0.0; catalog.num_types()];
    let mut mass = vec![0.0; catalog.num_types()];
    for (v, video) in catalog.videos().iter().enumerate() {
        for rep in Representation::ALL {
            let p = demand.aggregate_prob(v, rep);
            mass[video.content_type] += p;
            if placement.covers(v, rep.index()) {
                covered[video.content_type] += p;
            }
        }
    }
    covered
        .into_iter()
        .zip(mass)
        .map(|(c, m)| if m > 0.0 { c / m } else { 0.0 })
        .collect()
}

/// One popularity period: the day's ranking, demand and trace.
#[derive(Debug, Clone)]
pub struct Period {
    pub day: u32,
    pub catalog: VideoCatalog,
    pub demand: DemandTable,
    pub trace: RequestTrace,
}

/// Pre-generated periods shared by every (algorithm, capacity) cell.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    periods: Vec<Period>,
}

impl Simulation {
    pub fn prepare(
        catalog: VideoCatalog,
        users: &UserPopulation,
        config: SimulationConfig,
    ) -> Result<Self> {
        config.validate()?;
        let mut periods: Vec<Period> = Vec::with_capacity(config.days as usize);
        let mut current = catalog;
        let mut start = 0.0;
        for day in 0..config.days {
            if day > 0 {
                let mut rng = substream(config.seed, Stream::Refresh, day);
                current = refresh_popularity(&current, &mut rng, config.refresh_rho)?;
            }
            let demand = build_demand(&current, users)?;
            let trace = generate_trace(&demand, &config, day, start)?;
            start = trace.end_time().unwrap_or(start);
            periods.push(Period {
                day,
                catalog: current.clone(),
                demand,
                trace,
            });
        }
        Ok(Self { config, periods })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    /// Solves the static placement for every period at `capacity`.
    pub fn placements(&self, capacity: u64) -> Result<Vec<Placement>> {
        self.periods
            .iter()
            .map(|p| {
                let values = value_table(&p.demand.aggregate);
                solve_placement(&values, &p.catalog.size_matrix(), capacity)
            })
            .collect()
    }

    /// Replays every period against its freshly solved placement.
    pub fn run_proposed(&self, capacity: u64) -> Result<(SimMetrics, Vec<Placement>)> {
        let placements = self.placements(capacity)?;
        let days = self
            .periods
            .iter()
            .zip(&placements)
            .map(|(p, pl)| DayMetrics {
                day: p.day,
                metrics: run_offline(pl, &p.trace, &p.catalog, &self.config.delay),
                predicted: Some((
                    pl.predicted_hit_ratio,
                    predicted_by_type(pl, &p.demand, &p.catalog),
                )),
            })
            .collect();
        Ok((SimMetrics { days }, placements))
    }

    /// Replays all periods through one online cache that persists across
    /// days; policy counters reset at each period boundary.
    pub fn run_baseline(&self, policy: PolicyKind, capacity: u64) -> SimMetrics {
        let mut cache = CacheState::new(policy, capacity, self.config.transcode_serve);
        let days = self
            .periods
            .iter()
            .map(|p| {
                if p.day > 0 {
                    cache.on_refresh();
                }
                DayMetrics {
                    day: p.day,
                    metrics: replay_online(&mut cache, &p.trace, &p.catalog, &self.config.delay),
                    predicted: None,
                }
            })
            .collect();
        SimMetrics { days }
    }
}
