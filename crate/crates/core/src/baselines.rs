//! Online replacement policies: LRU, LFU and WGDSF*.
//!
//! All policies share the serving rule of the placement model: an exact
//! copy is a hit, a cached higher-quality copy of the same video is a
//! transcode hit, anything else is a miss that fetches and admits the
//! requested object. At most one representation per video is resident.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::demand::{Representation, VideoCatalog};
use crate::error::{Error, Result};
use crate::simulator::Request;

/// How WGDSF* weighs retrieval cost against object size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    /// cost = size, so the size term cancels.
    Size,
    /// cost = 1, the classic GDSF preference for small objects.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WgdsfParams {
    /// Half-life of the request-count decay, in trace time units.
    pub half_life: f64,
    /// Priority weight per content type, indexed like the catalog types.
    pub type_weights: Vec<f64>,
    pub cost_model: CostModel,
}

impl WgdsfParams {
    pub fn uniform(half_life: f64, num_types: usize) -> Self {
        Self {
            half_life,
            type_weights: vec![1.0; num_types],
            cost_model: CostModel::Size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_life.is_finite() && self.half_life > 0.0) {
            return Err(Error::validation("wgdsf.half_life_days", "must be > 0"));
        }
        if self
            .type_weights
            .iter()
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::validation(
                "wgdsf.type_weights",
                "weights must be > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    Lru,
    Lfu,
    Wgdsf(WgdsfParams),
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Lru => "LRU",
            PolicyKind::Lfu => "LFU",
            PolicyKind::Wgdsf(_) => "WGDSF*",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Hit,
    TranscodeHit,
    Miss,
}

impl Outcome {
    pub fn is_hit(self) -> bool {
        !matches!(self, Outcome::Miss)
    }
}

/// A cached object: one representation of one video (0-based index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectKey {
    pub video: usize,
    pub rep: Representation,
}

#[derive(Debug, Clone)]
struct Entry {
    size: u32,
    content_type: usize,
    last_access: u64,
    freq: f64,
    last_time: f64,
    priority: f64,
}

/// Contents and policy metadata of one online cache.
#[derive(Debug, Clone)]
pub struct CacheState {
    capacity: u64,
    used: u64,
    policy: PolicyKind,
    transcode_serve: bool,
    resident: BTreeMap<ObjectKey, Entry>,
    tick: u64,
    counts: HashMap<ObjectKey, u64>,
    clock: f64,
}

impl CacheState {
    pub fn new(policy: PolicyKind, capacity: u64, transcode_serve: bool) -> Self {
        Self {
            capacity,
            used: 0,
            policy,
            transcode_serve,
            resident: BTreeMap::new(),
            tick: 0,
            counts: HashMap::new(),
            clock: 0.0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn policy(&self) -> &PolicyKind {
        &self.policy
    }

    /// WGDSF* aging clock.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn contains(&self, key: ObjectKey) -> bool {
        self.resident.contains_key(&key)
    }

    pub fn residents(&self) -> Vec<ObjectKey> {
        self.resident.keys().copied().collect()
    }

    /// Popularity refresh boundary: LFU counts restart, contents stay.
    pub fn on_refresh(&mut self) {
        self.counts.clear();
    }

    /// Serves one request and updates contents and metadata.
    pub fn serve(&mut self, catalog: &VideoCatalog, request: &Request) -> Outcome {
        let key = ObjectKey {
            video: request.video,
            rep: request.rep,
        };
        if self.resident.contains_key(&key) {
            self.touch(key, request.timestamp);
            return Outcome::Hit;
        }
        if self.transcode_serve {
            let higher = Representation::ALL[..request.rep.index()]
                .iter()
                .map(|&rep| ObjectKey {
                    video: request.video,
                    rep,
                })
                .find(|k| self.resident.contains_key(k));
            if let Some(source) = higher {
                self.touch(source, request.timestamp);
                return Outcome::TranscodeHit;
            }
        }
        let video = &catalog.videos()[request.video];
        self.admit(
            key,
            video.size(request.rep),
            video.content_type,
            request.timestamp,
        );
        Outcome::Miss
    }

    fn touch(&mut self, key: ObjectKey, now: f64) {
        self.tick += 1;
        *self.counts.entry(key).or_insert(0) += 1;
        let clock = self.clock;
        let params = match &self.policy {
            PolicyKind::Wgdsf(p) => Some(p.clone()),
            _ => None,
        };
        let entry = self
            .resident
            .get_mut(&key)
            .expect("touched object is resident");
        entry.last_access = self.tick;
        if let Some(p) = params {
            let decay = 0.5f64.powf((now - entry.last_time).max(0.0) / p.half_life);
            entry.freq = entry.freq * decay + 1.0;
            entry.last_time = now;
            entry.priority = clock + wgdsf_value(&p, entry);
        }
    }

    fn admit(&mut self, key: ObjectKey, size: u32, content_type: usize, now: f64) {
        self.tick += 1;
        *self.counts.entry(key).or_insert(0) += 1;
        if u64::from(size) > self.capacity {
            return;
        }
        let siblings: Vec<ObjectKey> = self
            .resident
            .keys()
            .filter(|k| k.video == key.video)
            .copied()
            .collect();
        for s in siblings {
            self.remove(s);
        }
        while self.used + u64::from(size) > self.capacity {
            let victim = self.victim().expect("non-empty cache while over capacity");
            if let Some(e) = self.resident.get(&victim) {
                if matches!(self.policy, PolicyKind::Wgdsf(_)) {
                    self.clock = e.priority;
                }
            }
            self.remove(victim);
        }
        let mut entry = Entry {
            size,
            content_type,
            last_access: self.tick,
            freq: 1.0,
            last_time: now,
            priority: 0.0,
        };
        if let PolicyKind::Wgdsf(p) = &self.policy {
            entry.priority = self.clock + wgdsf_value(p, &entry);
        }
        self.used += u64::from(size);
        self.resident.insert(key, entry);
    }

    fn remove(&mut self, key: ObjectKey) {
        if let Some(e) = self.resident.remove(&key) {
            self.used -= u64::from(e.size);
        }
    }

    fn victim(&self) -> Option<ObjectKey> {
        self.resident
            .iter()
            .min_by(|a, b| self.compare(a, b))
            .map(|(k, _)| *k)
    }

    fn compare(&self, a: &(&ObjectKey, &Entry), b: &(&ObjectKey, &Entry)) -> std::cmp::Ordering {
        let (ka, ea) = a;
        let (kb, eb) = b;
        let primary = match self.policy {
            PolicyKind::Lru => std::cmp::Ordering::Equal,
            PolicyKind::Lfu => self.count(**ka).cmp(&self.count(**kb)),
            PolicyKind::Wgdsf(_) => ea.priority.total_cmp(&eb.priority),
        };
        primary.then(ea.last_access.cmp(&eb.last_access))
    }

    fn count(&self, key: ObjectKey) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Resident objects from first to last to be evicted.
    pub fn eviction_order(&self) -> Vec<ObjectKey> {
        let mut entries: Vec<(&ObjectKey, &Entry)> = self.resident.iter().collect();
        entries.sort_by(|a, b| self.compare(a, b));
        entries.into_iter().map(|(k, _)| *k).collect()
    }
}

fn wgdsf_value(p: &WgdsfParams, e: &Entry) -> f64 {
    let weight = p.type_weights.get(e.content_type).copied().unwrap_or(1.0);
    let cost_per_size = match p.cost_model {
        CostModel::Size => 1.0,
        CostModel::Unit => 1.0 / f64::from(e.size),
    };
    weight * e.freq * cost_per_size
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Video;
    use proptest::prelude::*;

    fn catalog(sizes: &[(u32, u32)]) -> VideoCatalog {
        let videos = sizes
            .iter()
            .enumerate()
            .map(|(i, &(hd, sd))| Video {
                id: i + 1,
                rank: i + 1,
                content_type: 0,
                size_hd: hd,
                size_sd: sd,
            })
            .collect();
        VideoCatalog::new(videos, 0.6, vec!["t".into()]).unwrap()
    }

    fn req(t: f64, video: usize, rep: Representation) -> Request {
        Request {
            timestamp: t,
            user: 0,
            video,
            rep,
        }
    }

    fn sd(video: usize) -> ObjectKey {
        ObjectKey {
            video,
            rep: Representation::Sd,
        }
    }

    use Representation::{Hd, Sd};

    #[test]
    fn cold_miss_admits() {
        let cat = catalog(&[(4, 2)]);
        let mut c = CacheState::new(PolicyKind::Lru, 5, true);
        assert_eq!(c.serve(&cat, &req(0.0, 0, Hd)), Outcome::Miss);
        assert_eq!(c.used(), 4);
        assert_eq!(c.serve(&cat, &req(1.0, 0, Hd)), Outcome::Hit);
    }

    #[test]
    fn oversized_objects_bypass() {
        let cat = catalog(&[(9, 2)]);
        let mut c = CacheState::new(PolicyKind::Lfu, 5, true);
        assert_eq!(c.serve(&cat, &req(0.0, 0, Hd)), Outcome::Miss);
        assert_eq!(c.used(), 0);
        assert_eq!(c.serve(&cat, &req(0.0, 0, Hd)), Outcome::Miss);
    }

    #[test]
    fn zero_capacity_never_hits() {
        let cat = catalog(&[(4, 2)]);
        let mut c = CacheState::new(PolicyKind::Lru, 0, true);
        for i in 0..5 {
            assert_eq!(c.serve(&cat, &req(i as f64, 0, Sd)), Outcome::Miss);
        }
    }

    #[test]
    fn hd_resident_serves_sd_by_transcoding() {
        let cat = catalog(&[(4, 2)]);
        let mut c = CacheState::new(PolicyKind::Lru, 10, true);
        c.serve(&cat, &req(0.0, 0, Hd));
        assert_eq!(c.serve(&cat, &req(1.0, 0, Sd)), Outcome::TranscodeHit);
        assert_eq!(c.residents().len(), 1);

        let mut off = CacheState::new(PolicyKind::Lru, 10, false);
        off.serve(&cat, &req(0.0, 0, Hd));
        assert_eq!(off.serve(&cat, &req(1.0, 0, Sd)), Outcome::Miss);
        assert_eq!(off.residents(), vec![sd(0)]);
    }

    #[test]
    fn one_representation_per_video() {
        let cat = catalog(&[(4, 2)]);
        let mut c = CacheState::new(PolicyKind::Lru, 10, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        assert_eq!(c.serve(&cat, &req(1.0, 0, Hd)), Outcome::Miss);
        assert_eq!(c.residents(), vec![ObjectKey { video: 0, rep: Hd }]);
        assert_eq!(c.used(), 4);
    }

    #[test]
    fn lru_three_step_trace() {
        let cat = catalog(&[(4, 2), (6, 3), (4, 2)]);
        let mut c = CacheState::new(PolicyKind::Lru, 5, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        c.serve(&cat, &req(1.0, 1, Sd));
        assert_eq!(c.serve(&cat, &req(2.0, 2, Sd)), Outcome::Miss);
        assert_eq!(c.residents(), vec![sd(1), sd(2)]);
    }

    #[test]
    fn lru_order_follows_recency() {
        let cat = catalog(&[(2, 1), (2, 1)]);
        let mut c = CacheState::new(PolicyKind::Lru, 10, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        c.serve(&cat, &req(1.0, 1, Sd));
        c.serve(&cat, &req(2.0, 0, Sd));
        assert_eq!(c.eviction_order(), vec![sd(1), sd(0)]);
    }

    #[test]
    fn lfu_order_follows_counts() {
        let cat = catalog(&[(2, 1), (2, 1), (2, 1)]);
        let mut c = CacheState::new(PolicyKind::Lfu, 10, true);
        let mut t = 0.0;
        for (v, n) in [(0usize, 3), (1, 1), (2, 2)] {
            for _ in 0..n {
                c.serve(&cat, &req(t, v, Sd));
                t += 1.0;
            }
        }
        assert_eq!(c.eviction_order(), vec![sd(1), sd(2), sd(0)]);
        c.on_refresh();
        // counts reset, ties fall back to recency
        assert_eq!(c.eviction_order(), vec![sd(0), sd(1), sd(2)]);
    }

    #[test]
    fn lfu_counts_survive_eviction() {
        let cat = catalog(&[(2, 1), (2, 1)]);
        let mut c = CacheState::new(PolicyKind::Lfu, 1, true);
        for t in 0..3 {
            c.serve(&cat, &req(t as f64, 0, Sd));
        }
        c.serve(&cat, &req(3.0, 1, Sd));
        assert_eq!(c.residents(), vec![sd(1)]);
        c.serve(&cat, &req(4.0, 0, Sd));
        assert_eq!(c.count(sd(0)), 4);
    }

    #[test]
    fn wgdsf_evicts_low_frequency_first() {
        let cat = catalog(&[(2, 1), (2, 1)]);
        let params = WgdsfParams::uniform(1000.0, 1);
        let mut c = CacheState::new(PolicyKind::Wgdsf(params), 10, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        for t in 1..=4 {
            c.serve(&cat, &req(t as f64, 1, Sd));
        }
        c.serve(&cat, &req(5.0, 0, Sd));
        // video 0 accessed twice, video 1 four times, and video 0 is most recent
        assert_eq!(c.eviction_order(), vec![sd(0), sd(1)]);
    }

    #[test]
    fn wgdsf_clock_advances_on_eviction() {
        let cat = catalog(&[(2, 1), (2, 1), (2, 1)]);
        let params = WgdsfParams::uniform(1e9, 1);
        let mut c = CacheState::new(PolicyKind::Wgdsf(params), 2, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        c.serve(&cat, &req(1.0, 0, Sd));
        c.serve(&cat, &req(2.0, 1, Sd));
        assert_eq!(c.clock(), 0.0);
        c.serve(&cat, &req(3.0, 2, Sd));
        // victim is video 1 with H = 0 + 1
        assert_eq!(c.residents(), vec![sd(0), sd(2)]);
        assert_eq!(c.clock(), 1.0);
    }

    #[test]
    fn wgdsf_type_weight_protects_type() {
        let videos = vec![
            Video {
                id: 1,
                rank: 1,
                content_type: 0,
                size_hd: 2,
                size_sd: 1,
            },
            Video {
                id: 2,
                rank: 2,
                content_type: 1,
                size_hd: 2,
                size_sd: 1,
            },
        ];
        let cat = VideoCatalog::new(videos, 0.6, vec!["a".into(), "b".into()]).unwrap();
        let params = WgdsfParams {
            half_life: 1e9,
            type_weights: vec![5.0, 1.0],
            cost_model: CostModel::Size,
        };
        let mut c = CacheState::new(PolicyKind::Wgdsf(params), 10, true);
        c.serve(&cat, &req(0.0, 0, Sd));
        c.serve(&cat, &req(1.0, 1, Sd));
        c.serve(&cat, &req(2.0, 1, Sd));
        assert_eq!(c.eviction_order(), vec![sd(1), sd(0)]);
    }

    fn arb_trace() -> impl Strategy<Value = Vec<(usize, bool)>> {
        prop::collection::vec((0usize..8, any::<bool>()), 1..200)
    }

    fn policies() -> Vec<PolicyKind> {
        vec![
            PolicyKind::Lru,
            PolicyKind::Lfu,
            PolicyKind::Wgdsf(WgdsfParams::uniform(50.0, 1)),
        ]
    }

    proptest! {
        #[test]
        fn capacity_never_exceeded(trace in arb_trace(), cap in 0u64..40, ts in any::<bool>()) {
            let cat = catalog(&[(9, 4), (6, 3), (12, 5), (3, 3), (20, 9), (8, 8), (5, 2), (30, 15)]);
            for policy in policies() {
                let mut c = CacheState::new(policy, cap, ts);
                for (t, &(v, hd)) in trace.iter().enumerate() {
                    let rep = if hd { Hd } else { Sd };
                    c.serve(&cat, &req(t as f64, v, rep));
                    prop_assert!(c.used() <= cap);
                    let res = c.residents();
                    let used: u64 = res.iter().map(|k| u64::from(cat.videos()[k.video].size(k.rep))).sum();
                    prop_assert_eq!(used, c.used());
                    let mut vids: Vec<usize> = res.iter().map(|k| k.video).collect();
                    vids.dedup();
                    prop_assert_eq!(vids.len(), res.len());
                }
            }
        }

        #[test]
        fn replay_is_deterministic(trace in arb_trace(), cap in 0u64..40) {
            let cat = catalog(&[(9, 4), (6, 3), (12, 5), (3, 3), (20, 9), (8, 8), (5, 2), (30, 15)]);
            for policy in policies() {
                let run = |p: PolicyKind| {
                    let mut c = CacheState::new(p, cap, true);
                    trace
                        .iter()
                        .enumerate()
                        .map(|(t, &(v, hd))| c.serve(&cat, &req(t as f64, v, if hd { Hd } else { Sd })))
                        .collect::<Vec<_>>()
                };
                prop_assert_eq!(run(policy.clone()), run(policy));
            }
        }

        #[test]
        fn lru_inclusion_single_representation(trace in prop::collection::vec(0usize..8, 1..200), cap in 15u64..40) {
            // with one representation in play and every object fitting,
            // variable-size LRU keeps the largest fitting prefix of the
            // recency stack, so hits are monotone in capacity
            let cat = catalog(&[(9, 4), (6, 3), (12, 5), (3, 3), (20, 9), (8, 8), (5, 2), (30, 15)]);
            let hits = |cap: u64| {
                let mut c = CacheState::new(PolicyKind::Lru, cap, false);
                trace.iter().enumerate()
                    .filter(|(t, &v)| c.serve(&cat, &req(*t as f64, v, Sd)).is_hit())
                    .count()
            };
            prop_assert!(hits(cap + 5) >= hits(cap));
        }
    }
}
