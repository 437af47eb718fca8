//! Request-probability model.
//!
//! Turns catalog popularity ranks, per-user content preferences and the
//! rank-driven HD/SD demand split into per-user request tables and the
//! population-wide aggregate that drives cache placement.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of representations per video in the default model.
pub const NUM_REPRESENTATIONS: usize = 2;

/// Encoding tier of a video. Variants are ordered from highest to lowest
/// quality, so a representation can transcode-serve every later one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Representation {
    Hd,
    Sd,
}

impl Representation {
    pub const ALL: [Representation; NUM_REPRESENTATIONS] = [Representation::Hd, Representation::Sd];

    pub fn index(self) -> usize {
        match self {
            Representation::Hd => 0,
            Representation::Sd => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Representation::Hd => "HD",
            Representation::Sd => "SD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Video {
    /// 1-based video id.
    pub id: usize,
    /// Popularity rank, 1 = most popular.
    pub rank: usize,
    /// Index into the catalog's content type list.
    pub content_type: usize,
    pub size_hd: u32,
    pub size_sd: u32,
}

impl Video {
    pub fn size(&self, rep: Representation) -> u32 {
        match rep {
            Representation::Hd => self.size_hd,
            Representation::Sd => self.size_sd,
        }
    }

    pub fn sizes(&self) -> [u32; NUM_REPRESENTATIONS] {
        [self.size_hd, self.size_sd]
    }
}

/// A validated set of videos with their Zipf exponent and content types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoCatalog {
    videos: Vec<Video>,
    gamma: f64,
    types: Vec<String>,
}

impl VideoCatalog {
    /// Validates and builds a catalog. Videos must carry ids `1..=K` in
    /// order, ranks forming a permutation of `1..=K`, sizes with
    /// `size_hd >= size_sd >= 1`, and a content type from `types`.
    pub fn new(videos: Vec<Video>, gamma: f64, types: Vec<String>) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::invalid("catalog must contain at least one video"));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid(format!(
                "zipf exponent must be >= 0, got {gamma}"
            )));
        }
        if types.is_empty() {
            return Err(Error::invalid("catalog needs at least one content type"));
        }
        let k = videos.len();
        let mut seen = vec![false; k];
        for (i, v) in videos.iter().enumerate() {
            if v.id != i + 1 {
                return Err(Error::invalid(format!(
                    "video at position {} has id {}",
                    i + 1,
                    v.id
                )));
            }
            if v.rank == 0 || v.rank > k || seen[v.rank - 1] {
                return Err(Error::invalid(format!(
                    "video {} rank {} is not part of a permutation of 1..={k}",
                    v.id, v.rank
                )));
            }
            seen[v.rank - 1] = true;
            if v.size_sd == 0 || v.size_hd < v.size_sd {
                return Err(Error::invalid(format!(
                    "video {} sizes must satisfy hd >= sd >= 1 (hd {}, sd {})",
                    v.id, v.size_hd, v.size_sd
                )));
            }
            if v.content_type >= types.len() {
                return Err(Error::invalid(format!(
                    "video {} content type index {} out of range",
                    v.id, v.content_type
                )));
            }
        }
        Ok(Self {
            videos,
            gamma,
            types,
        })
    }

    /// Draws a catalog: video `v` gets rank `v`; content types are dealt
    /// round-robin and then shuffled; SD sizes are uniform in the configured
    /// range and HD sizes are `ceil(sd * multiplier)`, both clamped to the
    /// global size bounds.
    pub fn generate<R: Rng + ?Sized>(params: &CatalogParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let k = params.num_videos;
        let mut type_of: Vec<usize> = (0..k).map(|i| i % params.types.len()).collect();
        type_of.shuffle(rng);
        let videos = (0..k)
            .map(|i| {
                let sd = rng
                    .random_range(params.sd_size_min..=params.sd_size_max)
                    .clamp(params.size_min, params.size_max);
                let hd = ((f64::from(sd) * params.hd_multiplier).ceil() as u32)
                    .clamp(params.size_min, params.size_max)
                    .max(sd);
                Video {
                    id: i + 1,
                    rank: i + 1,
                    content_type: type_of[i],
                    size_hd: hd,
                    size_sd: sd,
                }
            })
            .collect();
        Self::new(videos, params.gamma, params.types.clone())
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.videos.iter().map(|v| v.rank).collect()
    }

    /// Per-video size rows, HD first.
    pub fn size_matrix(&self) -> Vec<[u32; NUM_REPRESENTATIONS]> {
        self.videos.iter().map(Video::sizes).collect()
    }

    pub fn total_hd_size(&self) -> u64 {
        self.videos.iter().map(|v| u64::from(v.size_hd)).sum()
    }

    /// Same catalog with the popularity ranks replaced.
    pub fn with_ranks(&self, ranks: &[usize]) -> Result<Self> {
        if ranks.len() != self.videos.len() {
            return Err(Error::invalid(
                "rank vector length differs from catalog size",
            ));
        }
        let videos = self
            .videos
            .iter()
            .zip(ranks)
            .map(|(v, &rank)| Video { rank, ..v.clone() })
            .collect();
        Self::new(videos, self.gamma, self.types.clone())
    }
}

/// Parameters for [`VideoCatalog::generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogParams {
    pub num_videos: usize,
    pub gamma: f64,
    pub types: Vec<String>,
    pub sd_size_min: u32,
    pub sd_size_max: u32,
    pub hd_multiplier: f64,
    pub size_min: u32,
    pub size_max: u32,
}

impl Default for CatalogParams {
    fn default() -> Self {
        Self {
            num_videos: 21,
            gamma: 0.6,
            types: ["news", "scene", "sport", "traffic", "person"]
                .into_iter()
                .map(String::from)
                .collect(),
            sd_size_min: 3,
            sd_size_max: 32,
            hd_multiplier: 2.0,
            size_min: 3,
            size_max: 65,
        }
    }
}

impl CatalogParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_videos == 0 {
            return Err(Error::validation("catalog.k", "must be >= 1"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::validation(
                "catalog.gamma",
                "must be a finite value >= 0",
            ));
        }
        if self.types.is_empty() {
            return Err(Error::validation(
                "catalog.types",
                "needs at least one type",
            ));
        }
        if self.size_min == 0 || self.size_min > self.size_max {
            return Err(Error::validation(
                "catalog.size_min",
                "must satisfy 1 <= size_min <= size_max",
            ));
        }
        if self.sd_size_min == 0 || self.sd_size_min > self.sd_size_max {
            return Err(Error::validation(
                "catalog.sd_size_min",
                "must satisfy 1 <= sd_size_min <= sd_size_max",
            ));
        }
        if !(self.hd_multiplier.is_finite() && self.hd_multiplier >= 1.0) {
            return Err(Error::validation("catalog.hd_multiplier", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    /// 1-based user id.
    pub id: usize,
    /// Index into the catalog's content type list.
    pub preferred_type: usize,
    /// Preference factor in `[0, 1)`.
    pub alpha: f64,
    /// 1-based base station index. Recorded only; the demand model ignores it.
    pub base_station: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPopulation {
    users: Vec<UserProfile>,
}

impl UserPopulation {
    pub fn new(users: Vec<UserProfile>) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::invalid("population must contain at least one user"));
        }
        for u in &users {
            validate_alpha(u.alpha)?;
        }
        Ok(Self { users })
    }

    /// Draws a population whose preferred-type and alpha counts follow the
    /// given shares exactly (largest-remainder rounding); the two attributes
    /// are shuffled independently so they are uncorrelated.
    pub fn generate<R: Rng + ?Sized>(
        params: &PopulationParams,
        num_types: usize,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate(num_types)?;
        let n = params.num_users;
        let mut types: Vec<usize> = apportion(&params.type_shares, n)
            .into_iter()
            .enumerate()
            .flat_map(|(t, c)| std::iter::repeat_n(t, c))
            .collect();
        let alpha_weights: Vec<f64> = params.alpha_shares.iter().map(|&(_, w)| w).collect();
        let mut alphas: Vec<f64> = apportion(&alpha_weights, n)
            .into_iter()
            .enumerate()
            .flat_map(|(i, c)| std::iter::repeat_n(params.alpha_shares[i].0, c))
            .collect();
        types.shuffle(rng);
        alphas.shuffle(rng);
        let m = params.base_stations.max(1);
        let users = types
            .into_iter()
            .zip(alphas)
            .enumerate()
            .map(|(i, (preferred_type, alpha))| UserProfile {
                id: i + 1,
                preferred_type,
                alpha,
                base_station: i % m + 1,
            })
            .collect();
        Self::new(users)
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Parameters for [`UserPopulation::generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationParams {
    pub num_users: usize,
    /// One weight per catalog content type.
    pub type_shares: Vec<f64>,
    /// `(alpha, weight)` pairs.
    pub alpha_shares: Vec<(f64, f64)>,
    pub base_stations: usize,
}

impl PopulationParams {
    pub fn validate(&self, num_types: usize) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::validation("population.n", "must be >= 1"));
        }
        if self.type_shares.len() != num_types {
            return Err(Error::validation(
                "population.type_shares",
                format!(
                    "expected {num_types} shares, got {}",
                    self.type_shares.len()
                ),
            ));
        }
        check_weights("population.type_shares", &self.type_shares)?;
        if self.alpha_shares.is_empty() {
            return Err(Error::validation(
                "population.alpha_shares",
                "needs at least one entry",
            ));
        }
        for &(alpha, _) in &self.alpha_shares {
            validate_alpha(alpha).map_err(|_| {
                Error::validation(
                    "population.alpha_shares",
                    format!("alpha {alpha} outside [0, 1)"),
                )
            })?;
        }
        let w: Vec<f64> = self.alpha_shares.iter().map(|&(_, w)| w).collect();
        check_weights("population.alpha_shares", &w)?;
        if self.base_stations == 0 {
            return Err(Error::validation(
                "population.base_stations",
                "must be >= 1",
            ));
        }
        Ok(())
    }
}

fn check_weights(key: &str, weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::validation(key, "weights must be finite and >= 0"));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::validation(key, "weights must not all be zero"));
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
        return Err(Error::invalid(format!(
            "preference factor {alpha} outside [0, 1)"
        )));
    }
    Ok(())
}

/// Splits `n` into integer counts proportional to `weights` using the
/// largest-remainder method (ties go to the lower index).
pub fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Zipf request probabilities: `r_v = f_v^-gamma / sum_w f_w^-gamma`.
pub fn zipf_popularity(ranks: &[usize], gamma: f64) -> Result<Vec<f64>> {
    if ranks.is_empty() {
        return Err(Error::invalid("empty catalog"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "zipf exponent must be >= 0, got {gamma}"
        )));
    }
    if ranks.contains(&0) {
        return Err(Error::invalid("ranks are 1-based"));
    }
    let weights: Vec<f64> = ranks.iter().map(|&f| (f as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Applies a user's preference boost/penalty to the popularity vector and
/// renormalizes.
pub fn user_request_distribution(
    popularity: &[f64],
    user: &UserProfile,
    catalog: &VideoCatalog,
) -> Result<Vec<f64>> {
    validate_alpha(user.alpha)?;
    if popularity.len() != catalog.len() {
        return Err(Error::invalid(
            "popularity vector length differs from catalog size",
        ));
    }
    let weighted: Vec<f64> = popularity
        .iter()
        .zip(catalog.videos())
        .map(|(&r, v)| {
            if v.content_type == user.preferred_type {
                r * (1.0 + user.alpha)
            } else {
                r * (1.0 - user.alpha)
            }
        })
        .collect();
    let total: f64 = weighted.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("user request weights sum to zero"));
    }
    Ok(weighted.into_iter().map(|w| w / total).collect())
}

/// Splits a video's request probability into `(hd, sd)` shares using
/// `g = (rank - 1) / (K - 1)` as the SD weight. A one-video catalog is all HD.
pub fn representation_split(prob: f64, rank: usize, num_videos: usize) -> (f64, f64) {
    let g = if num_videos <= 1 {
        0.0
    } else {
        (rank as f64 - 1.0) / (num_videos as f64 - 1.0)
    };
    let sd = prob * g;
    (prob - sd, sd)
}

/// Per-user and population-wide request probabilities, indexed
/// `[user][video][representation]` and `[video][representation]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandTable {
    pub per_user: Vec<Vec<[f64; NUM_REPRESENTATIONS]>>,
    pub aggregate: Vec<[f64; NUM_REPRESENTATIONS]>,
}

impl DemandTable {
    pub fn num_videos(&self) -> usize {
        self.aggregate.len()
    }

    pub fn num_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn aggregate_prob(&self, video: usize, rep: Representation) -> f64 {
        self.aggregate[video][rep.index()]
    }
}

/// Mean of the per-user tables.
pub fn aggregate_demand(
    per_user: &[Vec<[f64; NUM_REPRESENTATIONS]>],
) -> Result<Vec<[f64; NUM_REPRESENTATIONS]>> {
    let Some(first) = per_user.first() else {
        return Err(Error::invalid("aggregate demand needs at least one user"));
    };
    let k = first.len();
    if per_user.iter().any(|t| t.len() != k) {
        return Err(Error::invalid(
            "per-user tables have differing video counts",
        ));
    }
    let mut sums = vec![[0.0; NUM_REPRESENTATIONS]; k];
    for table in per_user {
        for (acc, row) in sums.iter_mut().zip(table) {
            for (a, p) in acc.iter_mut().zip(row) {
                *a += p;
            }
        }
    }
    let n = per_user.len() as f64;
    for row in &mut sums {
        for a in row.iter_mut() {
            *a /= n;
        }
    }
    Ok(sums)
}

pub fn build_demand(catalog: &VideoCatalog, users: &UserPopulation) -> Result<DemandTable> {
    let popularity = zipf_popularity(&catalog.ranks(), catalog.gamma())?;
    let k = catalog.len();
    let per_user = users
        .users()
        .iter()
        .map(|user| {
            let dist = user_request_distribution(&popularity, user, catalog)?;
            Ok(dist
                .iter()
                .zip(catalog.videos())
                .map(|(&p, v)| {
                    let (hd, sd) = representation_split(p, v.rank, k);
                    [hd, sd]
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate_demand(&per_user)?;
    Ok(DemandTable {
        per_user,
        aggregate,
    })
}
