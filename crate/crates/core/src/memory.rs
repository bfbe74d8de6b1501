//! Template sample memories.
//!
//! Two buffers cooperate: a FIFO main memory of budget `B` holding the most
//! recent accepted samples, and an auxiliary replay buffer of the same budget
//! kept diverse by an entropy-maximization replacement rule. Classifier
//! scores above the acceptance threshold `tau` are discretized into one of
//! `Y` integer labels; the auxiliary buffer replaces within the majority
//! label, preferring victims crowded by near neighbours.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DISTANCE_EPSILON: f64 = 1e-12;

/// Score discretization settings: acceptance threshold `tau` and the number
/// of integer labels `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationConfig {
    pub tau: f64,
    pub num_labels: u32,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            tau: 0.25,
            num_labels: 10,
        }
    }
}

impl DiscretizationConfig {
    pub fn new(tau: f64, num_labels: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParameter {
                what: "tau",
                reason: format!("must be in [0, 1), got {tau}"),
            });
        }
        if num_labels < 2 {
            return Err(Error::InvalidParameter {
                what: "num_labels",
                reason: format!("must be >= 2, got {num_labels}"),
            });
        }
        Ok(Self { tau, num_labels })
    }
}

/// Map a score above `tau` linearly onto `0..Y`. Scores at or below `tau`
/// (and non-finite scores) are rejected, which is an expected outcome rather
/// than an error.
pub fn discretize_score(score: f64, cfg: &DiscretizationConfig) -> Option<u32> {
    if !score.is_finite() || score <= cfg.tau {
        return None;
    }
    let normalized = (score - cfg.tau) / (1.0 - cfg.tau);
    let label = (normalized * cfg.num_labels as f64).floor() as u32;
    Some(label.min(cfg.num_labels - 1))
}

/// One frame's accepted template: the foreground feature vector, the frame's
/// background feature vectors, the classifier score it was accepted with, and
/// the discretized label when the score clears `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSample {
    pub features: Vec<f64>,
    pub background_features: Vec<Vec<f64>>,
    pub score: f64,
    pub label: Option<u32>,
    pub frame_index: usize,
}

impl TemplateSample {
    pub fn new(
        features: Vec<f64>,
        background_features: Vec<Vec<f64>>,
        score: f64,
        frame_index: usize,
        cfg: &DiscretizationConfig,
    ) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFiniteInput { what: "score" });
        }
        let dim = features.len();
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { what: "features" });
        }
        for bg in &background_features {
            if bg.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: bg.len(),
                });
            }
            if bg.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput { what: "background_features" });
            }
        }
        let label = discretize_score(score, cfg);
        Ok(Self {
            features,
            background_features,
            score,
            label,
            frame_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// FIFO buffer of the most recent accepted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainMemory {
    budget: usize,
    entries: VecDeque<TemplateSample>,
}

impl MainMemory {
    pub fn new(budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidParameter {
                what: "budget_main",
                reason: "must be > 0".into(),
            });
        }
        Ok(Self {
            budget,
            entries: VecDeque::with_capacity(budget + 1),
        })
    }

    /// Append a sample; once the budget is exceeded the oldest entry is
    /// evicted and returned. Entries are expected to arrive in frame order.
    pub fn push(&mut self, sample: TemplateSample) -> Result<Option<TemplateSample>> {
        if let Some(front) = self.entries.front() {
            if front.dim() != sample.dim() {
                return Err(Error::DimensionMismatch {
                    expected: front.dim(),
                    got: sample.dim(),
                });
            }
        }
        self.entries.push_back(sample);
        if self.entries.len() > self.budget {
            Ok(self.entries.pop_front())
        } else {
            Ok(None)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn iter(&self) -> impl Iterator<Item = &TemplateSample> {
        self.entries.iter()
    }
}

/// Victim selection rule used by the auxiliary buffer once it is full. All
/// strategies share the FIFO-append pre-fill phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementStrategy {
    /// Uniformly random victim.
    Random,
    /// Crowding-based victim over the whole buffer, labels ignored.
    Density,
    /// Crowding-based victim within the majority label.
    ScoreDiscretizedDensity,
}

/// Replay buffer kept diverse under a fixed budget. Every entry carries a
/// valid discretized label (score > tau).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryMemory {
    budget: usize,
    strategy: ReplacementStrategy,
    entries: Vec<TemplateSample>,
}

impl AuxiliaryMemory {
    pub fn new(budget: usize, strategy: ReplacementStrategy) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidParameter {
                what: "budget_aux",
                reason: "must be > 0".into(),
            });
        }
        Ok(Self {
            budget,
            strategy,
            entries: Vec::with_capacity(budget),
        })
    }

    /// Offer a sample. Under budget it is appended; at budget a victim chosen
    /// by the configured strategy is replaced and returned.
    pub fn insert<R: Rng>(
        &mut self,
        sample: TemplateSample,
        rng: &mut R,
    ) -> Result<Option<TemplateSample>> {
        if sample.label.is_none() {
            return Err(Error::MissingLabel {
                frame_index: sample.frame_index,
            });
        }
        if let Some(first) = self.entries.first() {
            if first.dim() != sample.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: sample.dim(),
                });
            }
        }
        if self.entries.len() < self.budget {
            self.entries.push(sample);
            return Ok(None);
        }
        let victim = match self.strategy {
            ReplacementStrategy::Random => rng.gen_range(0..self.entries.len()),
            ReplacementStrategy::Density => {
                let all: Vec<usize> = (0..self.entries.len()).collect();
                self.pick_crowded(&all, rng)
            }
            ReplacementStrategy::ScoreDiscretizedDensity => {
                let candidates = self.majority_label_indices(rng);
                self.pick_crowded(&candidates, rng)
            }
        };
        let replaced = std::mem::replace(&mut self.entries[victim], sample);
        Ok(Some(replaced))
    }

    /// Indices of the entries carrying the most frequent label, ties between
    /// labels broken uniformly at random.
    fn majority_label_indices<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for entry in &self.entries {
            *counts.entry(entry.label.expect("aux entries always carry labels")).or_insert(0) += 1;
        }
        let max = counts.values().copied().max().unwrap_or(0);
        let tied: Vec<u32> = counts
            .iter()
            .filter(|(_, &c)| c == max)
            .map(|(&label, _)| label)
            .collect();
        let majority = tied[rng.gen_range(0..tied.len())];
        (0..self.entries.len())
            .filter(|&i| self.entries[i].label == Some(majority))
            .collect()
    }

    /// Draw a victim from `candidates` with probability proportional to
    /// `1 - d_i / (max_j d_j + eps)` where `d_i` is the distance to the
    /// nearest other candidate. Isolated entries are nearly never replaced.
    fn pick_crowded<R: Rng>(&self, candidates: &[usize], rng: &mut R) -> usize {
        if candidates.len() == 1 {
            return candidates[0];
        }
        let mut min_dists = Vec::with_capacity(candidates.len());
        for (i, &a) in candidates.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (j, &b) in candidates.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = euclidean(&self.entries[a].features, &self.entries[b].features);
                if d < best {
                    best = d;
                }
            }
            min_dists.push(best);
        }
        let max = min_dists.iter().cloned().fold(0.0_f64, f64::max);
        let weights: Vec<f64> = min_dists
            .iter()
            .map(|d| 1.0 - d / (max + DISTANCE_EPSILON))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return candidates[rng.gen_range(0..candidates.len())];
        }
        let mut draw = rng.gen_range(0.0..total);
        for (w, &idx) in weights.iter().zip(candidates) {
            if draw < *w {
                return idx;
            }
            draw -= w;
        }
        *candidates.last().expect("candidates checked non-empty")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn strategy(&self) -> ReplacementStrategy {
        self.strategy
    }

    pub fn entries(&self) -> &[TemplateSample] {
        &self.entries
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Assemble the training batch: every main-memory entry plus `n` samples
/// drawn uniformly without replacement from the auxiliary buffer (all of it
/// when it holds fewer than `n`).
pub fn assemble_batch<R: Rng>(
    main: &MainMemory,
    aux: Option<&AuxiliaryMemory>,
    n: usize,
    rng: &mut R,
) -> Vec<TemplateSample> {
    let mut batch: Vec<TemplateSample> = main.iter().cloned().collect();
    if let Some(aux) = aux {
        if n > 0 && !aux.is_empty() {
            let take = n.min(aux.len());
            let picks = rand::seq::index::sample(rng, aux.len(), take);
            batch.extend(picks.iter().map(|i| aux.entries()[i].clone()));
        }
    }
    batch
}
