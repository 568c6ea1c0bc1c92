//! Self-organizing map training.
//!
//! Two map flavours live here. [`ContinuousMap`] holds real-valued weights on
//! a lattice and moves them with the classic rule
//! `w_i <- w_i + theta(c, i, t) * alpha(t) * (x - w_i)`. [`BinaryMap`] holds
//! binary cluster vectors and is trained winner-take-all: each presented
//! sample pulls its best matching unit one bit closer by flipping the first
//! mismatching position.
//!
//! Distances for the binary map come from a [`Backend`]. The classical
//! backend makes one popcount per (sample, cluster) pair; the quantum
//! backends evaluate one distance circuit per sample covering every cluster
//! at once, so an epoch over `N` samples costs `N` evaluations instead of
//! `M * N`.

use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::hamming::{self, BinaryVector, HammingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SofmError {
    #[error("distance list is empty")]
    EmptyDistances,
    #[error("distance {index} is not finite")]
    NonFiniteDistance { index: usize },
    #[error("no samples to train on")]
    EmptySamples,
    #[error("map has no clusters")]
    EmptyMap,
    #[error("cluster vector {0} appears more than once")]
    DuplicateCluster(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unit {bmu} out of range for a map of {units}")]
    InvalidUnit { bmu: usize, units: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot draw {requested} distinct {dimension}-bit cluster vectors")]
    TooManyClusters { requested: usize, dimension: usize },
    #[error(
        "epoch {epoch}: sample {sample} got no shots in the subspace of clusters {clusters:?}; raise the shot count"
    )]
    MissingDistances { epoch: usize, sample: usize, clusters: Vec<usize> },
    #[error(transparent)]
    Hamming(#[from] HammingError),
}

pub type Result<T> = std::result::Result<T, SofmError>;

/// Index of the smallest distance, lowest index on ties.
pub fn select_bmu(distances: &[f64]) -> Result<usize> {
    if distances.is_empty() {
        return Err(SofmError::EmptyDistances);
    }
    let mut best = 0;
    for (i, &d) in distances.iter().enumerate() {
        if !d.is_finite() {
            return Err(SofmError::NonFiniteDistance { index: i });
        }
        if d < distances[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Learning-rate schedule `alpha(t)`, non-increasing in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    Constant(f64),
    /// `initial / (1 + t / scale)`
    InverseTime { initial: f64, scale: f64 },
    /// `initial * exp(-t / scale)`
    Exponential { initial: f64, scale: f64 },
}

impl LearningRate {
    pub fn at(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            LearningRate::Constant(a) => a,
            LearningRate::InverseTime { initial, scale } => initial / (1.0 + t / scale),
            LearningRate::Exponential { initial, scale } => initial * (-t / scale).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (initial, scale) = match *self {
            LearningRate::Constant(a) => (a, 1.0),
            LearningRate::InverseTime { initial, scale }
            | LearningRate::Exponential { initial, scale } => (initial, scale),
        };
        if !(initial > 0.0 && initial <= 1.0) {
            return Err(SofmError::InvalidConfig(format!(
                "learning rate {initial} outside (0, 1]"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(SofmError::InvalidConfig(format!("schedule scale {scale} must be positive")));
        }
        Ok(())
    }
}

/// Neighborhood function `theta(c, i, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Neighborhood {
    /// Only the best matching unit moves.
    Delta,
    /// `exp(-r^2 / (2 sigma(t)^2))` with `sigma(t) = width * exp(-t / scale)`
    /// and `r` the lattice distance to the best matching unit.
    Gaussian { width: f64, scale: f64 },
}

impl Neighborhood {
    pub fn weight(&self, lattice_distance: f64, t: usize) -> f64 {
        match *self {
            Neighborhood::Delta => {
                if lattice_distance == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Neighborhood::Gaussian { width, scale } => {
                let sigma = width * (-(t as f64) / scale).exp();
                (-lattice_distance * lattice_distance / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lattice {
    Line(usize),
    Grid { rows: usize, cols: usize },
}

impl Lattice {
    pub fn units(&self) -> usize {
        match *self {
            Lattice::Line(n) => n,
            Lattice::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        match *self {
            Lattice::Line(_) => a.abs_diff(b) as f64,
            Lattice::Grid { cols, .. } => {
                let dr = (a / cols).abs_diff(b / cols) as f64;
                let dc = (a % cols).abs_diff(b % cols) as f64;
                dr.hypot(dc)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Classical,
    QuantumExact,
    QuantumSampled { shots: usize },
}

impl Backend {
    pub fn is_quantum(&self) -> bool {
        !matches!(self, Backend::Classical)
    }

    /// Integer distances from `sample` to every cluster plus the number of
    /// distance evaluations spent.
    pub fn distances(
        &self,
        sample: &BinaryVector,
        clusters: &[BinaryVector],
        shot_seed: u64,
    ) -> Result<(Vec<Option<u32>>, usize)> {
        match *self {
            Backend::Classical => {
                let d = clusters
                    .iter()
                    .map(|c| hamming::classical_hamming(sample, c).map(Some))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok((d, clusters.len()))
            }
            Backend::QuantumExact | Backend::QuantumSampled { .. } => {
                let circuit =
                    hamming::build_distance_circuit(std::slice::from_ref(sample), clusters, false)?;
                let matrix = match *self {
                    Backend::QuantumSampled { shots } => circuit.sampled(shots, shot_seed)?,
                    _ => circuit.exact()?,
                };
                let row = matrix.row(0).iter().map(|e| e.map(|e| e.integer_distance)).collect();
                Ok((row, 1))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterInit {
    /// Distinct uniformly random bit strings.
    Random,
    /// Distinct vectors drawn from the training samples, topped up with
    /// random ones if there are too few distinct samples.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: LearningRate,
    pub neighborhood: Neighborhood,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: LearningRate::Constant(1.0),
            neighborhood: Neighborhood::Delta,
            seed: Self::DEFAULT_SEED,
            backend: Backend::Classical,
        }
    }
}

impl TrainConfig {
    pub const DEFAULT_SEED: u64 = 1;

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(SofmError::InvalidConfig("epochs must be at least 1".into()));
        }
        if let Backend::QuantumSampled { shots: 0 } = self.backend {
            return Err(SofmError::InvalidConfig("shots must be at least 1".into()));
        }
        if let Neighborhood::Gaussian { width, scale } = self.neighborhood {
            if !(width > 0.0 && scale > 0.0) {
                return Err(SofmError::InvalidConfig("gaussian width and scale must be positive".into()));
            }
        }
        self.learning_rate.validate()
    }

    /// Binary training moves only the winning unit.
    fn validate_binary(&self) -> Result<()> {
        self.validate()?;
        if self.neighborhood != Neighborhood::Delta {
            return Err(SofmError::InvalidConfig(
                "binary maps support only the delta neighborhood".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMap {
    weights: Vec<Vec<f64>>,
    lattice: Lattice,
}

impl ContinuousMap {
    pub fn new(weights: Vec<Vec<f64>>, lattice: Lattice) -> Result<Self> {
        let dim = weights.first().map(Vec::len).ok_or(SofmError::EmptyMap)?;
        if lattice.units() != weights.len() {
            return Err(SofmError::InvalidConfig(format!(
                "lattice has {} units but {} weight vectors were given",
                lattice.units(),
                weights.len()
            )));
        }
        for w in &weights {
            if w.len() != dim {
                return Err(SofmError::DimensionMismatch { expected: dim, found: w.len() });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(SofmError::InvalidConfig("weights must be finite".into()));
            }
        }
        Ok(Self { weights, lattice })
    }

    pub fn random(lattice: Lattice, dimension: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..lattice.units())
            .map(|_| (0..dimension).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self { weights, lattice }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn dimension(&self) -> usize {
        self.weights[0].len()
    }

    /// Euclidean best matching unit.
    pub fn best_match(&self, sample: &[f64]) -> Result<usize> {
        self.check_dimension(sample)?;
        let d: Vec<f64> = self.weights.iter().map(|w| euclidean(w, sample)).collect();
        select_bmu(&d)
    }

    /// Applies one update step for `sample` won by `bmu` at step `t`.
    pub fn update(&mut self, sample: &[f64], bmu: usize, t: usize, config: &TrainConfig) -> Result<()> {
        self.check_dimension(sample)?;
        if bmu >= self.weights.len() {
            return Err(SofmError::InvalidUnit { bmu, units: self.weights.len() });
        }
        let alpha = config.learning_rate.at(t);
        for (i, w) in self.weights.iter_mut().enumerate() {
            let theta = config.neighborhood.weight(self.lattice.distance(bmu, i), t);
            let step = theta * alpha;
            if step == 0.0 {
                continue;
            }
            for (wk, xk) in w.iter_mut().zip(sample) {
                *wk += step * (xk - *wk);
            }
        }
        Ok(())
    }

    fn check_dimension(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.dimension() {
            return Err(SofmError::DimensionMismatch { expected: self.dimension(), found: sample.len() });
        }
        Ok(())
    }
}

/// Returns the map after one [`ContinuousMap::update`] step.
pub fn continuous_update(
    map: &ContinuousMap,
    sample: &[f64],
    bmu: usize,
    t: usize,
    config: &TrainConfig,
) -> Result<ContinuousMap> {
    let mut next = map.clone();
    next.update(sample, bmu, t, config)?;
    Ok(next)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Flips the first bit where `cluster` disagrees with `sample`.
pub fn binary_update(cluster: &BinaryVector, sample: &BinaryVector) -> Result<BinaryVector> {
    if cluster.len() != sample.len() {
        return Err(SofmError::DimensionMismatch { expected: cluster.len(), found: sample.len() });
    }
    let mut next = cluster.clone();
    if let Some(i) = cluster.first_mismatch(sample) {
        next.flip(i);
    }
    Ok(next)
}

/// Pairwise-distinct binary cluster vectors of one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryMap {
    clusters: Vec<BinaryVector>,
}

impl BinaryMap {
    pub fn new(clusters: Vec<BinaryVector>) -> Result<Self> {
        let dim = clusters.first().map(BinaryVector::len).ok_or(SofmError::EmptyMap)?;
        for (k, c) in clusters.iter().enumerate() {
            if c.len() != dim {
                return Err(SofmError::DimensionMismatch { expected: dim, found: c.len() });
            }
            if clusters[..k].contains(c) {
                return Err(SofmError::DuplicateCluster(c.to_string()));
            }
        }
        Ok(Self { clusters })
    }

    /// `count` distinct random vectors.
    pub fn random(count: usize, dimension: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clusters = Vec::with_capacity(count);
        fill_random(&mut clusters, count, dimension, &mut rng)?;
        Self::new(clusters)
    }

    /// `count` distinct vectors picked from `samples`.
    pub fn from_samples(count: usize, samples: &[BinaryVector], seed: u64) -> Result<Self> {
        let dimension = samples.first().map(BinaryVector::len).ok_or(SofmError::EmptySamples)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut distinct: Vec<BinaryVector> = Vec::new();
        for s in samples {
            if !distinct.contains(s) {
                distinct.push(s.clone());
            }
        }
        distinct.shuffle(&mut rng);
        distinct.truncate(count);
        fill_random(&mut distinct, count, dimension, &mut rng)?;
        Self::new(distinct)
    }

    pub fn initialize(init: ClusterInit, count: usize, samples: &[BinaryVector], seed: u64) -> Result<Self> {
        match init {
            ClusterInit::Random => {
                let dim = samples.first().map(BinaryVector::len).ok_or(SofmError::EmptySamples)?;
                Self::random(count, dim, seed)
            }
            ClusterInit::Samples => Self::from_samples(count, samples, seed),
        }
    }

    pub fn clusters(&self) -> &[BinaryVector] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.clusters[0].len()
    }

    /// Moves unit `unit` one bit toward `sample` unless that would duplicate
    /// another cluster vector.
    pub fn pull(&mut self, unit: usize, sample: &BinaryVector) -> Result<Pull> {
        let current = self
            .clusters
            .get(unit)
            .ok_or(SofmError::InvalidUnit { bmu: unit, units: self.clusters.len() })?;
        let moved = binary_update(current, sample)?;
        if &moved == current {
            Ok(Pull::AtSample)
        } else if self.clusters.contains(&moved) {
            Ok(Pull::Collision)
        } else {
            self.clusters[unit] = moved;
            Ok(Pull::Moved)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pull {
    Moved,
    AtSample,
    Collision,
}

fn fill_random(
    clusters: &mut Vec<BinaryVector>,
    count: usize,
    dimension: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if count == 0 {
        return Err(SofmError::EmptyMap);
    }
    if dimension < 64 && count > 1usize << dimension {
        return Err(SofmError::TooManyClusters { requested: count, dimension });
    }
    while clusters.len() < count {
        let bits: Vec<bool> = (0..dimension).map(|_| rng.random()).collect();
        let v = BinaryVector::from_bits(&bits);
        if !clusters.contains(&v) {
            clusters.push(v);
        }
    }
    Ok(())
}

/// A winning unit whose update was dropped because it would have duplicated
/// another cluster vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SkippedUpdate {
    pub sample: usize,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpochTrace {
    /// 1-based.
    pub epoch: usize,
    /// Sample indices in presentation order.
    pub order: Vec<usize>,
    /// Best matching unit of each sample, indexed by sample.
    pub labels: Vec<usize>,
    /// Cluster vectors at the end of the epoch.
    pub clusters: Vec<BinaryVector>,
    pub skipped: Vec<SkippedUpdate>,
    /// Distance circuit runs (quantum) or pairwise popcounts (classical).
    pub distance_evaluations: usize,
}

impl EpochTrace {
    /// JSON line without the backend-dependent evaluation count.
    pub fn to_json_line(&self) -> String {
        json!({
            "epoch": self.epoch,
            "order": self.order,
            "labels": self.labels,
            "clusters": self.clusters,
            "skipped": self.skipped,
        })
        .to_string()
    }
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// One pass over `samples` in a seeded shuffled order.
pub fn train_epoch(
    map: &mut BinaryMap,
    samples: &[BinaryVector],
    config: &TrainConfig,
    epoch: usize,
) -> Result<EpochTrace> {
    config.validate_binary()?;
    if samples.is_empty() {
        return Err(SofmError::EmptySamples);
    }
    let n = map.dimension();
    if let Some(s) = samples.iter().find(|s| s.len() != n) {
        return Err(SofmError::DimensionMismatch { expected: n, found: s.len() });
    }

    let mut rng = epoch_rng(config.seed, epoch);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);

    let mut labels = vec![0; samples.len()];
    let mut skipped = Vec::new();
    let mut evaluations = 0;
    for &s in &order {
        let shot_seed = rng.next_u64();
        let (distances, cost) = config.backend.distances(&samples[s], &map.clusters, shot_seed)?;
        evaluations += cost;

        let missing: Vec<usize> =
            distances.iter().enumerate().filter(|(_, d)| d.is_none()).map(|(j, _)| j).collect();
        if !missing.is_empty() {
            return Err(SofmError::MissingDistances { epoch, sample: s, clusters: missing });
        }
        let distances: Vec<f64> = distances.iter().map(|d| d.unwrap_or_default() as f64).collect();
        let bmu = select_bmu(&distances)?;
        labels[s] = bmu;

        if map.pull(bmu, &samples[s])? == Pull::Collision {
            skipped.push(SkippedUpdate { sample: s, cluster: bmu });
        }
    }

    Ok(EpochTrace {
        epoch,
        order,
        labels,
        clusters: map.clusters.clone(),
        skipped,
        distance_evaluations: evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub traces: Vec<EpochTrace>,
    pub map: BinaryMap,
    /// Epoch whose labels first repeated those of the previous epoch.
    pub converged_at: Option<usize>,
}

impl Training {
    pub fn total_evaluations(&self) -> usize {
        self.traces.iter().map(|t| t.distance_evaluations).sum()
    }

    pub fn final_labels(&self) -> &[usize] {
        &self.traces.last().expect("at least one epoch").labels
    }

    pub fn traces_jsonl(&self) -> String {
        self.traces.iter().map(|t| t.to_json_line() + "\n").collect()
    }

    /// `epoch,<sample ids...>` header, one row of labels per epoch.
    pub fn labels_csv(&self, sample_ids: &[String]) -> String {
        let mut out = String::from("epoch");
        for id in sample_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for t in &self.traces {
            out.push_str(&t.epoch.to_string());
            for l in &t.labels {
                out.push_str(&format!(",{l}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn evaluations_csv(&self) -> String {
        let mut out = String::from("epoch,distance_evaluations,cumulative\n");
        let mut total = 0;
        for t in &self.traces {
            total += t.distance_evaluations;
            out.push_str(&format!("{},{},{}\n", t.epoch, t.distance_evaluations, total));
        }
        out
    }
}

/// Runs epochs until two consecutive epochs assign identical labels or the
/// epoch budget runs out.
pub fn train(map: BinaryMap, samples: &[BinaryVector], config: &TrainConfig) -> Result<Training> {
    config.validate_binary()?;
    let mut map = map;
    let mut traces: Vec<EpochTrace> = Vec::new();
    let mut converged_at = None;
    for epoch in 1..=config.epochs {
        let trace = train_epoch(&mut map, samples, config, epoch)?;
        let stable = traces.last().is_some_and(|prev| prev.labels == trace.labels);
        traces.push(trace);
        if stable {
            converged_at = Some(epoch);
            break;
        }
    }
    Ok(Training { traces, map, converged_at })
}

/// Fraction of samples whose label's majority tag equals their own tag.
pub fn label_purity<T: Eq + Hash>(labels: &[usize], tags: &[T]) -> f64 {
    assert_eq!(labels.len(), tags.len(), "one tag per label");
    if labels.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<usize, HashMap<&T, usize>> = HashMap::new();
    for (l, t) in labels.iter().zip(tags) {
        *counts.entry(*l).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = counts.values().map(|c| c.values().copied().max().unwrap_or(0)).sum();
    majority as f64 / labels.len() as f64
}
