//! Synthetic feature-stream generator with ground-truth drift events.
//!
//! Streams stand in for a deep feature extractor: each frame carries one
//! object candidate drawn from the current appearance mode plus distractor
//! candidates drawn from clutter modes. Drift is scheduled as segments with
//! abrupt, incremental (interpolated means), or gradual (probabilistic mix)
//! transitions; recurrent drift repeats a mode id. Everything is a pure
//! function of the schedule, the stream config, and the seed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One appearance mode: an isotropic Gaussian in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub mean: Vec<f64>,
    pub scale: f64,
}

/// How a segment's mode is entered from the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Abrupt,
    /// Object mean interpolates linearly over the first `window` frames.
    Incremental { window: usize },
    /// Frames are drawn from old vs new mode with linearly shifting
    /// probability over the first `window` frames.
    Gradual { window: usize },
}

impl Transition {
    pub fn kind(&self) -> TransitionKind {
        match self {
            Transition::Abrupt => TransitionKind::Abrupt,
            Transition::Incremental { .. } => TransitionKind::Incremental,
            Transition::Gradual { .. } => TransitionKind::Gradual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Abrupt,
    Incremental,
    Gradual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub mode_id: u32,
    pub length: usize,
    pub transition: Transition,
}

/// Segment plan plus the mode table. Modes never referenced by a segment act
/// as the clutter pool that distractors are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub segments: Vec<Segment>,
    pub modes: BTreeMap<u32, Mode>,
}

impl DriftSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::EmptyInput { what: "schedule segments" });
        }
        let dim = match self.modes.values().next() {
            Some(m) => m.mean.len(),
            None => return Err(Error::EmptyInput { what: "schedule modes" }),
        };
        for mode in self.modes.values() {
            if mode.mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: mode.mean.len(),
                });
            }
            if !(mode.scale > 0.0) {
                return Err(Error::InvalidParameter {
                    what: "mode.scale",
                    reason: "must be > 0".into(),
                });
            }
        }
        for seg in &self.segments {
            if seg.length == 0 {
                return Err(Error::InvalidParameter {
                    what: "segment.length",
                    reason: "must be > 0".into(),
                });
            }
            if !self.modes.contains_key(&seg.mode_id) {
                return Err(Error::InvalidParameter {
                    what: "segment.mode_id",
                    reason: format!("mode {} not in mode table", seg.mode_id),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.modes.values().next().map(|m| m.mean.len()).unwrap_or(0)
    }

    pub fn total_frames(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Mode ids never used as an object segment: the clutter pool.
    pub fn clutter_pool(&self) -> Vec<u32> {
        let used: BTreeSet<u32> = self.segments.iter().map(|s| s.mode_id).collect();
        self.modes.keys().copied().filter(|id| !used.contains(id)).collect()
    }

    /// Frame indices where a previously seen mode returns, with the mode id.
    pub fn return_events(&self) -> Vec<(usize, u32)> {
        let mut seen = BTreeSet::new();
        let mut returns = Vec::new();
        let mut frame = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 && seen.contains(&seg.mode_id) {
                returns.push((frame, seg.mode_id));
            }
            seen.insert(seg.mode_id);
            frame += seg.length;
        }
        returns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    /// Feature dimension; must match the schedule's modes.
    pub dim: usize,
    pub num_distractors: usize,
    pub noise_sigma: f64,
    /// Probability that the emitted object candidate is swapped with a
    /// distractor, modeling tracker mislocalization. Never applied to the
    /// ground-truth first frame.
    pub pseudo_label_noise_p: f64,
    /// When set, one distractor source per segment is a ghost of the
    /// previous segment's mode attenuated by this factor, so the scene keeps
    /// an echo of the object's old appearance after each drift.
    #[serde(default)]
    pub ghost_attenuation: Option<f64>,
    pub seed: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            num_distractors: 4,
            noise_sigma: 0.05,
            pseudo_label_noise_p: 0.0,
            ghost_attenuation: None,
            seed: 0,
        }
    }
}

impl StreamConfig {
    fn validate(&self, schedule: &DriftSchedule) -> Result<()> {
        if self.dim != schedule.dim() {
            return Err(Error::DimensionMismatch {
                expected: schedule.dim(),
                got: self.dim,
            });
        }
        if self.num_distractors == 0 {
            return Err(Error::InvalidParameter {
                what: "num_distractors",
                reason: "must be >= 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.pseudo_label_noise_p) {
            return Err(Error::InvalidParameter {
                what: "pseudo_label_noise_p",
                reason: "must be in [0, 1]".into(),
            });
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidParameter {
                what: "noise_sigma",
                reason: "must be >= 0".into(),
            });
        }
        if let Some(g) = self.ghost_attenuation {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::InvalidParameter {
                    what: "ghost_attenuation",
                    reason: "must be in [0, 1)".into(),
                });
            }
        }
        Ok(())
    }
}

/// One simulated frame: candidate feature vectors, the index of the object
/// among them, and whether this is the ground-truth initialization frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_index: usize,
    pub candidates: Vec<Vec<f64>>,
    pub true_index: usize,
    pub is_ground_truth: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub frame_index: usize,
    pub kind: TransitionKind,
}

/// Generate the stream and its ground-truth drift event log.
pub fn gen_stream(
    schedule: &DriftSchedule,
    cfg: &StreamConfig,
) -> Result<(Vec<Frame>, Vec<DriftEvent>)> {
    schedule.validate()?;
    cfg.validate(schedule)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let clutter_pool = schedule.clutter_pool();
    let mut frames = Vec::with_capacity(schedule.total_frames());
    let mut events = Vec::new();

    let mut global = 0usize;
    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        if seg_idx > 0 {
            events.push(DriftEvent {
                frame_index: global,
                kind: seg.transition.kind(),
            });
        }
        let cur = &schedule.modes[&seg.mode_id];
        let prev_id = if seg_idx > 0 {
            schedule.segments[seg_idx - 1].mode_id
        } else {
            seg.mode_id
        };
        let prev = &schedule.modes[&prev_id];

        for offset in 0..seg.length {
            let (object_mean, object_scale, gen_mode_id) = match seg.transition {
                Transition::Incremental { window } if seg_idx > 0 && offset < window => {
                    let alpha = (offset + 1) as f64 / window as f64;
                    let mean: Vec<f64> = prev
                        .mean
                        .iter()
                        .zip(&cur.mean)
                        .map(|(p, c)| p + alpha * (c - p))
                        .collect();
                    (mean, cur.scale, seg.mode_id)
                }
                Transition::Gradual { window } if seg_idx > 0 && offset < window => {
                    let alpha = (offset + 1) as f64 / (window + 1) as f64;
                    if rng.gen::<f64>() < alpha {
                        (cur.mean.clone(), cur.scale, seg.mode_id)
                    } else {
                        (prev.mean.clone(), prev.scale, prev_id)
                    }
                }
                _ => (cur.mean.clone(), cur.scale, seg.mode_id),
            };

            let n_candidates = cfg.num_distractors + 1;
            let true_index = rng.gen_range(0..n_candidates);
            let mut candidates = Vec::with_capacity(n_candidates);
            for slot in 0..n_candidates {
                if slot == true_index {
                    candidates.push(noisy(&object_mean, object_scale, cfg.noise_sigma, &mut rng));
                } else {
                    let (mean, scale) =
                        distractor_source(schedule, &clutter_pool, gen_mode_id, &mut rng);
                    candidates.push(noisy(&mean, scale, cfg.noise_sigma, &mut rng));
                }
            }

            if global > 0 && cfg.pseudo_label_noise_p > 0.0 && rng.gen::<f64>() < cfg.pseudo_label_noise_p
            {
                let mut partner = rng.gen_range(0..cfg.num_distractors);
                if partner >= true_index {
                    partner += 1;
                }
                candidates.swap(true_index, partner);
            }

            frames.push(Frame {
                frame_index: global,
                candidates,
                true_index,
                is_ground_truth: global == 0,
            });
            global += 1;
        }
    }
    Ok((frames, events))
}

/// Pick the generating distribution for one distractor: a clutter-pool mode
/// when the schedule has one, otherwise another object mode, otherwise a
/// mirrored copy of the current mode.
fn distractor_source<R: Rng>(
    schedule: &DriftSchedule,
    clutter_pool: &[u32],
    current_mode: u32,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    if !clutter_pool.is_empty() {
        let id = clutter_pool[rng.gen_range(0..clutter_pool.len())];
        let mode = &schedule.modes[&id];
        return (mode.mean.clone(), mode.scale);
    }
    let others: Vec<u32> = schedule
        .modes
        .keys()
        .copied()
        .filter(|&id| id != current_mode)
        .collect();
    if !others.is_empty() {
        let id = others[rng.gen_range(0..others.len())];
        let mode = &schedule.modes[&id];
        return (mode.mean.clone(), mode.scale);
    }
    let mode = &schedule.modes[&current_mode];
    (mode.mean.iter().map(|v| -v).collect(), mode.scale)
}

fn noisy<R: Rng>(mean: &[f64], scale: f64, noise_sigma: f64, rng: &mut R) -> Vec<f64> {
    mean.iter()
        .map(|m| m + scale * noise_sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Write one frame per line: `{"frame_index":..,"candidates":[[..],..],"true_index":..}`.
pub fn write_stream_jsonl<W: Write>(frames: &[Frame], mut out: W) -> Result<()> {
    for frame in frames {
        let record = serde_json::json!({
            "frame_index": frame.frame_index,
            "candidates": frame.candidates,
            "true_index": frame.true_index,
        });
        writeln!(out, "{record}").map_err(|e| Error::Io {
            path: "<stream>".into(),
            reason: e.to_string(),
        })?;
    }
    Ok(())
}

// --- Standard benchmark suite -------------------------------------------
//
// Geometry: all object modes share a base block (coords 0..4) and add a
// mode-specific two-coordinate block; clutter modes carry an attenuated base
// plus patterns on the last two coordinates. Object modes are therefore
// pairwise well separated while an unseen object mode still projects onto a
// model trained on another one (through the base), keeping post-drift scores
// above the acceptance threshold. Clutter on drift entries gets a large
// sampling scale so that a half-trained model faces real competition.

pub const SUITE_DIM: usize = 16;
const BASE_COORDS: usize = 4;
const BASE_AMPLITUDE: f64 = 1.0;
const BLOCK_AMPLITUDE: f64 = 1.0;
const CLUTTER_BASE_ATTENUATION: f64 = 0.5;
const CLUTTER_PATTERN_AMPLITUDE: f64 = 2.0;
/// Sampling scale of clutter modes on drift-heavy entries.
const CLUTTER_SCALE_DRIFT: f64 = 16.0;
const CLUTTER_SCALE_CALM: f64 = 1.0;
const NOISE_SIGMA: f64 = 0.025;
const NUM_DISTRACTORS: usize = 4;
const PSEUDO_NOISE_P: f64 = 0.1;
/// First clutter mode id; ids below this are object modes.
const CLUTTER_ID_BASE: u32 = 100;

fn object_mode(k: u32) -> Mode {
    let mut mean = vec![0.0; SUITE_DIM];
    for item in mean.iter_mut().take(BASE_COORDS) {
        *item = BASE_AMPLITUDE;
    }
    let start = BASE_COORDS + 2 * k as usize;
    mean[start] = BLOCK_AMPLITUDE;
    mean[start + 1] = BLOCK_AMPLITUDE;
    Mode { mean, scale: 1.0 }
}

fn clutter_mode(j: u32, scale: f64) -> Mode {
    let mut mean = vec![0.0; SUITE_DIM];
    for item in mean.iter_mut().take(BASE_COORDS) {
        *item = BASE_AMPLITUDE * CLUTTER_BASE_ATTENUATION;
    }
    let signs: [(f64, f64); 3] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0)];
    let (s14, s15) = signs[j as usize % 3];
    mean[SUITE_DIM - 2] = CLUTTER_PATTERN_AMPLITUDE * s14;
    mean[SUITE_DIM - 1] = CLUTTER_PATTERN_AMPLITUDE * s15;
    Mode { mean, scale }
}

fn mode_table(object_ids: &[u32], clutter_scale: f64) -> BTreeMap<u32, Mode> {
    let mut modes = BTreeMap::new();
    for &k in object_ids {
        modes.insert(k, object_mode(k));
    }
    for j in 0..3 {
        modes.insert(CLUTTER_ID_BASE + j, clutter_mode(j, clutter_scale));
    }
    modes
}

fn abrupt(mode_id: u32, length: usize) -> Segment {
    Segment {
        mode_id,
        length,
        transition: Transition::Abrupt,
    }
}

/// A named benchmark stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub schedule: DriftSchedule,
    pub stream: StreamConfig,
}

fn entry(
    name: &str,
    segments: Vec<Segment>,
    object_ids: &[u32],
    clutter_scale: f64,
    noise_p: f64,
) -> SuiteEntry {
    SuiteEntry {
        name: name.to_string(),
        schedule: DriftSchedule {
            segments,
            modes: mode_table(object_ids, clutter_scale),
        },
        stream: StreamConfig {
            dim: SUITE_DIM,
            num_distractors: NUM_DISTRACTORS,
            noise_sigma: NOISE_SIGMA,
            pseudo_label_noise_p: noise_p,
            seed: 0,
        },
    }
}

/// The fixed benchmark set. Names, schedules, and seeds are versioned
/// constants; experiment runners override only the stream seed.
pub fn standard_suite() -> Vec<SuiteEntry> {
    let abrupt_cycle = |reps: usize, len: usize| -> Vec<Segment> {
        let order = [0u32, 1, 2];
        let mut segs = Vec::new();
        for _ in 0..reps {
            for &m in &order {
                segs.push(abrupt(m, len));
            }
        }
        segs
    };

    let recurrent = |len: usize| -> Vec<Segment> {
        let order = [0u32, 1, 2, 3, 4, 0, 1, 2, 3, 4, 0, 1];
        order.iter().map(|&m| abrupt(m, len)).collect()
    };

    let windowed = |make: fn(usize) -> Transition, window: usize| -> Vec<Segment> {
        let order = [0u32, 1, 2, 0, 1, 2];
        order
            .iter()
            .enumerate()
            .map(|(i, &m)| Segment {
                mode_id: m,
                length: 120,
                transition: if i == 0 { Transition::Abrupt } else { make(window) },
            })
            .collect()
    };

    vec![
        entry("stationary", vec![abrupt(0, 600)], &[0], CLUTTER_SCALE_CALM, 0.0),
        entry(
            "abrupt3",
            abrupt_cycle(4, 80),
            &[0, 1, 2],
            CLUTTER_SCALE_DRIFT,
            0.0,
        ),
        entry(
            "gradual",
            windowed(|w| Transition::Gradual { window: w }, 40),
            &[0, 1, 2],
            CLUTTER_SCALE_DRIFT,
            0.0,
        ),
        entry(
            "incremental",
            windowed(|w| Transition::Incremental { window: w }, 30),
            &[0, 1, 2],
            CLUTTER_SCALE_DRIFT,
            0.0,
        ),
        entry(
            "recurrent5",
            recurrent(80),
            &[0, 1, 2, 3, 4],
            CLUTTER_SCALE_DRIFT,
            0.0,
        ),
        entry(
            "stationary_noisy",
            vec![abrupt(0, 600)],
            &[0],
            CLUTTER_SCALE_CALM,
            PSEUDO_NOISE_P,
        ),
        entry(
            "abrupt3_noisy",
            abrupt_cycle(4, 80),
            &[0, 1, 2],
            CLUTTER_SCALE_DRIFT,
            PSEUDO_NOISE_P,
        ),
        entry(
            "recurrent5_noisy",
            recurrent(80),
            &[0, 1, 2, 3, 4],
            CLUTTER_SCALE_DRIFT,
            PSEUDO_NOISE_P,
        ),
    ]
}

pub fn suite_entry(name: &str) -> Result<SuiteEntry> {
    standard_suite()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSuiteEntry { name: name.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_schedule() -> DriftSchedule {
        let mut modes = BTreeMap::new();
        modes.insert(0, Mode { mean: vec![2.0, 0.0], scale: 1.0 });
        modes.insert(1, Mode { mean: vec![0.0, 2.0], scale: 1.0 });
        modes.insert(9, Mode { mean: vec![-2.0, -2.0], scale: 1.0 });
        DriftSchedule {
            segments: vec![abrupt(0, 200), abrupt(1, 200), abrupt(0, 200)],
            modes,
        }
    }

    fn simple_cfg(seed: u64) -> StreamConfig {
        StreamConfig {
            dim: 2,
            num_distractors: 2,
            noise_sigma: 0.05,
            pseudo_label_noise_p: 0.0,
            seed,
        }
    }

    #[test]
    fn identical_seeds_give_identical_streams() {
        let schedule = simple_schedule();
        let (a, ea) = gen_stream(&schedule, &simple_cfg(7)).unwrap();
        let (b, eb) = gen_stream(&schedule, &simple_cfg(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ea, eb);
        let (c, _) = gen_stream(&schedule, &simple_cfg(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn event_log_lists_segment_boundaries() {
        let schedule = simple_schedule();
        let (_, events) = gen_stream(&schedule, &simple_cfg(0)).unwrap();
        assert_eq!(
            events,
            vec![
                DriftEvent { frame_index: 200, kind: TransitionKind::Abrupt },
                DriftEvent { frame_index: 400, kind: TransitionKind::Abrupt },
            ]
        );
    }

    #[test]
    fn third_segment_returns_to_mode_a_mean() {
        let schedule = simple_schedule();
        let (frames, _) = gen_stream(&schedule, &simple_cfg(3)).unwrap();
        // Empirical mean of the object feature over frames 400..600 must be
        // within 3 sigma / sqrt(200) of mode A's mean per coordinate.
        let seg: Vec<&Frame> = frames[400..600].iter().collect();
        let tolerance = 3.0 * 0.05 / (200.0_f64).sqrt();
        for coord in 0..2 {
            let mean: f64 = seg
                .iter()
                .map(|f| f.candidates[f.true_index][coord])
                .sum::<f64>()
                / 200.0;
            let expected = schedule.modes[&0].mean[coord];
            assert!(
                (mean - expected).abs() < tolerance,
                "coord {coord}: {mean} vs {expected}"
            );
        }
    }

    #[test]
    fn first_frame_is_ground_truth_only() {
        let (frames, _) = gen_stream(&simple_schedule(), &simple_cfg(0)).unwrap();
        assert!(frames[0].is_ground_truth);
        assert!(frames[1..].iter().all(|f| !f.is_ground_truth));
        for f in &frames {
            assert!(f.true_index < f.candidates.len());
            assert_eq!(f.candidates.len(), 3);
        }
    }

    #[test]
    fn unreferenced_modes_form_the_clutter_pool() {
        let schedule = simple_schedule();
        assert_eq!(schedule.clutter_pool(), vec![9]);
        // With noise off, every distractor must sit exactly on the clutter mean.
        let cfg = StreamConfig {
            noise_sigma: 0.0,
            ..simple_cfg(0)
        };
        let (frames, _) = gen_stream(&schedule, &cfg).unwrap();
        for f in frames.iter().take(50) {
            for (i, c) in f.candidates.iter().enumerate() {
                if i != f.true_index {
                    assert_eq!(c, &vec![-2.0, -2.0]);
                }
            }
        }
    }

    #[test]
    fn gradual_mix_shifts_toward_new_mode() {
        let mut modes = BTreeMap::new();
        modes.insert(0, Mode { mean: vec![2.0], scale: 1.0 });
        modes.insert(1, Mode { mean: vec![-2.0], scale: 1.0 });
        modes.insert(9, Mode { mean: vec![10.0], scale: 1.0 });
        let schedule = DriftSchedule {
            segments: vec![
                abrupt(0, 5),
                Segment { mode_id: 1, length: 40, transition: Transition::Gradual { window: 40 } },
            ],
            modes,
        };
        let cfg = StreamConfig {
            dim: 1,
            num_distractors: 1,
            noise_sigma: 0.0,
            pseudo_label_noise_p: 0.0,
            seed: 0,
        };
        // Noise-free features identify the generating mode exactly.
        let mut first_half = 0.0;
        let mut second_half = 0.0;
        for seed in 0..200 {
            let (frames, _) = gen_stream(&schedule, &StreamConfig { seed, ..cfg }).unwrap();
            for (offset, f) in frames[5..45].iter().enumerate() {
                let is_new = f.candidates[f.true_index][0] < 0.0;
                if offset < 20 {
                    first_half += is_new as u32 as f64;
                } else {
                    second_half += is_new as u32 as f64;
                }
            }
        }
        assert!(
            second_half > first_half * 1.5,
            "gradual mix not shifting: {first_half} vs {second_half}"
        );
    }

    #[test]
    fn incremental_interpolates_means() {
        let mut modes = BTreeMap::new();
        modes.insert(0, Mode { mean: vec![0.0], scale: 1.0 });
        modes.insert(1, Mode { mean: vec![10.0], scale: 1.0 });
        modes.insert(9, Mode { mean: vec![-5.0], scale: 1.0 });
        let schedule = DriftSchedule {
            segments: vec![
                abrupt(0, 3),
                Segment { mode_id: 1, length: 20, transition: Transition::Incremental { window: 10 } },
            ],
            modes,
        };
        let cfg = StreamConfig {
            dim: 1,
            num_distractors: 1,
            noise_sigma: 0.0,
            pseudo_label_noise_p: 0.0,
            seed: 0,
        };
        let (frames, _) = gen_stream(&schedule, &cfg).unwrap();
        // Object feature climbs 1, 2, ..., 10 across the window, then stays.
        for (i, expected) in (1..=10).chain(std::iter::repeat(10)).take(20).enumerate() {
            let f = &frames[3 + i];
            let v = f.candidates[f.true_index][0];
            assert!((v - expected as f64).abs() < 1e-12, "offset {i}: {v}");
        }
    }

    #[test]
    fn pseudo_noise_swaps_observed_fraction() {
        let schedule = simple_schedule();
        let cfg = StreamConfig {
            pseudo_label_noise_p: 0.3,
            noise_sigma: 0.0,
            ..simple_cfg(5)
        };
        let (frames, _) = gen_stream(&schedule, &cfg).unwrap();
        let mut swapped = 0usize;
        for f in &frames[1..] {
            // With zero noise a swapped frame has a clutter mean at true_index.
            if f.candidates[f.true_index] == vec![-2.0, -2.0] {
                swapped += 1;
            }
        }
        let fraction = swapped as f64 / (frames.len() - 1) as f64;
        assert!((fraction - 0.3).abs() < 0.06, "swap fraction {fraction}");
        // Frame 0 is never corrupted.
        assert_ne!(frames[0].candidates[frames[0].true_index], vec![-2.0, -2.0]);
    }

    #[test]
    fn empty_schedule_is_rejected() {
        let schedule = DriftSchedule { segments: vec![], modes: BTreeMap::new() };
        assert!(gen_stream(&schedule, &simple_cfg(0)).is_err());
    }

    #[test]
    fn suite_is_stable_and_complete() {
        let suite = standard_suite();
        let names: Vec<&str> = suite.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "stationary",
                "abrupt3",
                "gradual",
                "incremental",
                "recurrent5",
                "stationary_noisy",
                "abrupt3_noisy",
                "recurrent5_noisy",
            ]
        );
        for e in &suite {
            e.schedule.validate().unwrap();
            assert_eq!(e.stream.dim, e.schedule.dim());
            assert!(!e.schedule.clutter_pool().is_empty());
        }
        // The stationary entry has no drift events.
        let stationary = suite_entry("stationary").unwrap();
        let (_, events) = gen_stream(&stationary.schedule, &stationary.stream).unwrap();
        assert!(events.is_empty());
        // The recurrent entry revisits at least two mode ids.
        let recurrent = suite_entry("recurrent5").unwrap();
        let revisited: BTreeSet<u32> = recurrent
            .schedule
            .return_events()
            .iter()
            .map(|(_, m)| *m)
            .collect();
        assert!(revisited.len() >= 2);
        // Deterministic across calls.
        assert_eq!(standard_suite(), standard_suite());
        assert!(suite_entry("nope").is_err());
    }

    #[test]
    fn jsonl_export_is_deterministic() {
        let entry = suite_entry("stationary").unwrap();
        let (frames, _) = gen_stream(&entry.schedule, &entry.stream).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_stream_jsonl(&frames[..10], &mut a).unwrap();
        write_stream_jsonl(&frames[..10], &mut b).unwrap();
        assert_eq!(a, b);
        let first_line = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
        let parsed: serde_json::Value = serde_json::from_str(&first_line).unwrap();
        assert_eq!(parsed["frame_index"], 0);
        assert!(parsed["candidates"].is_array());
    }
}
