//! Experiment runner: sweeps update policies and replacement strategies over
//! the simulator suite, computes per-seed and aggregate metrics, and emits
//! JSON or CSV reports. Seeds run in parallel; aggregation is a
//! single-threaded reduce in seed order, so reports are byte-stable.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{buffer_entropy, EntropySummary};
use crate::error::{Error, Result};
use crate::simulator::{gen_stream, suite_entry, DriftSchedule, StreamConfig, SuiteEntry};
use crate::tracker::{ReplacementKind, StepResult, TrackerConfig, TrackerState, UpdatePolicy};

/// Environment variable that overrides the base seed of an experiment.
pub const SEED_ENV_VAR: &str = "DRIFTRACK_SEED";

/// Decouples the tracker's decision randomness from the stream generator,
/// which consumes the raw seed.
const TRACKER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Random-policy firing probability used by the ablation sweep; matches the
/// sparsest periodic budget so the comparison is about timing, not budget.
pub const ABLATION_RANDOM_P: f64 = 1.0 / 15.0;

/// Cadence of the auxiliary-buffer entropy trace.
const ENTROPY_SAMPLE_EVERY: usize = 50;

/// Update-policy selector, parsed from strings like `periodic:5` or
/// `random:0.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    EveryFrame,
    Periodic(usize),
    Random(f64),
    OnChange,
}

impl PolicySpec {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter {
            what: "update_policy",
            reason,
        };
        match text {
            "every_frame" => Ok(PolicySpec::EveryFrame),
            "on_change" => Ok(PolicySpec::OnChange),
            other => {
                if let Some(k) = other.strip_prefix("periodic:") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| bad(format!("bad periodic interval in {other:?}")))?;
                    if k == 0 {
                        return Err(bad("periodic interval must be > 0".into()));
                    }
                    Ok(PolicySpec::Periodic(k))
                } else if let Some(p) = other.strip_prefix("random:") {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| bad(format!("bad random probability in {other:?}")))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(bad("random probability must be in [0, 1]".into()));
                    }
                    Ok(PolicySpec::Random(p))
                } else {
                    Err(bad(format!(
                        "{other:?} is not one of every_frame, periodic:k, random:p, on_change"
                    )))
                }
            }
        }
    }

    pub fn as_config_string(&self) -> String {
        match self {
            PolicySpec::EveryFrame => "every_frame".into(),
            PolicySpec::Periodic(k) => format!("periodic:{k}"),
            PolicySpec::Random(p) => format!("random:{p}"),
            PolicySpec::OnChange => "on_change".into(),
        }
    }

    fn build(&self, cfg: &TrackerConfig) -> UpdatePolicy {
        match self {
            PolicySpec::EveryFrame => UpdatePolicy::EveryFrame,
            PolicySpec::Periodic(k) => UpdatePolicy::Periodic(*k),
            PolicySpec::Random(p) => UpdatePolicy::Random(*p),
            PolicySpec::OnChange => UpdatePolicy::OnChange(cfg.detector()),
        }
    }

    /// Table-style row label.
    pub fn label(&self) -> String {
        match self {
            PolicySpec::EveryFrame => "Every Frame".into(),
            PolicySpec::Periodic(k) => format!("Periodic {k}"),
            PolicySpec::Random(_) => "Random".into(),
            PolicySpec::OnChange => "CD".into(),
        }
    }
}

/// One experiment: a suite entry (or custom schedule), tracker settings, an
/// update policy, and the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub suite: String,
    pub update_policy: String,
    #[serde(flatten)]
    pub tracker: TrackerConfig,
    pub seeds: Vec<u64>,
    /// Alarms at least this many frames from every ground-truth event count
    /// as false alarms.
    pub false_alarm_window: usize,
    /// Custom schedule and stream override the named suite entry.
    pub schedule: Option<DriftSchedule>,
    pub stream: Option<StreamConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: "recurrent5".into(),
            update_policy: "on_change".into(),
            tracker: TrackerConfig::default(),
            seeds: (0..20).collect(),
            false_alarm_window: 25,
            schedule: None,
            stream: None,
        }
    }
}

impl ExperimentConfig {
    pub fn with_seed_count(mut self, n: usize) -> Self {
        self.seeds = (0..n as u64).collect();
        self
    }

    fn resolve_entry(&self) -> Result<SuiteEntry> {
        if let Some(schedule) = &self.schedule {
            let stream = self.stream.unwrap_or_default();
            return Ok(SuiteEntry {
                name: self.suite.clone(),
                schedule: schedule.clone(),
                stream,
            });
        }
        suite_entry(&self.suite)
    }

    /// Seeds after applying the `DRIFTRACK_SEED` base override.
    pub fn effective_seeds(&self) -> Vec<u64> {
        match std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
        {
            Some(base) => (0..self.seeds.len() as u64).map(|i| base + i).collect(),
            None => self.seeds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub frame: usize,
    pub h_y: f64,
    pub h_phi_given_y: f64,
    pub h_joint: f64,
}

/// Metrics from one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub accuracy: f64,
    pub mean_max_score: f64,
    pub updates_performed: u64,
    pub frames_seen: u64,
    pub update_ratio: f64,
    pub alarms: u64,
    pub detection_delay_mean: Option<f64>,
    pub false_alarms: u64,
    pub post_return_recovery_accuracy: Option<f64>,
    pub entropy_trace: Vec<EntropyPoint>,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn from(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }

    pub fn standard_error(&self, n: usize) -> f64 {
        if n > 1 {
            self.std / (n as f64).sqrt()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Stat,
    pub mean_max_score: Stat,
    pub updates_performed: Stat,
    pub update_ratio: Stat,
    pub detection_delay_mean: Option<f64>,
    pub false_alarms_total: u64,
    pub post_return_recovery_accuracy: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub update_policy: String,
    pub replacement: ReplacementKind,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

/// Run one experiment: every seed in parallel, reduced in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let policy = PolicySpec::parse(&cfg.update_policy)?;
    let entry = cfg.resolve_entry()?;
    let seeds = cfg.effective_seeds();
    if seeds.is_empty() {
        return Err(Error::InvalidParameter {
            what: "seeds",
            reason: "at least one seed is required".into(),
        });
    }

    let per_seed: Result<Vec<SeedReport>> = seeds
        .par_iter()
        .map(|&seed| run_seed(&entry, cfg, policy, seed))
        .collect();
    let per_seed = per_seed?;

    let collect = |f: fn(&SeedReport) -> f64| -> Vec<f64> { per_seed.iter().map(f).collect() };
    let delays: Vec<f64> = per_seed
        .iter()
        .filter_map(|r| r.detection_delay_mean)
        .collect();
    let recoveries: Vec<f64> = per_seed
        .iter()
        .filter_map(|r| r.post_return_recovery_accuracy)
        .collect();

    let aggregate = Aggregate {
        accuracy: Stat::from(&collect(|r| r.accuracy)),
        mean_max_score: Stat::from(&collect(|r| r.mean_max_score)),
        updates_performed: Stat::from(&collect(|r| r.updates_performed as f64)),
        update_ratio: Stat::from(&collect(|r| r.update_ratio)),
        detection_delay_mean: if delays.is_empty() {
            None
        } else {
            Some(delays.iter().sum::<f64>() / delays.len() as f64)
        },
        false_alarms_total: per_seed.iter().map(|r| r.false_alarms).sum(),
        post_return_recovery_accuracy: if recoveries.is_empty() {
            None
        } else {
            Some(Stat::from(&recoveries))
        },
    };

    Ok(Report {
        suite: entry.name,
        update_policy: policy.as_config_string(),
        replacement: cfg.tracker.replacement,
        seeds,
        per_seed,
        aggregate,
    })
}

fn run_seed(
    entry: &SuiteEntry,
    cfg: &ExperimentConfig,
    policy: PolicySpec,
    seed: u64,
) -> Result<SeedReport> {
    let stream = StreamConfig { seed, ..entry.stream };
    let (frames, events) = gen_stream(&entry.schedule, &stream)?;
    if frames.len() < 2 {
        return Err(Error::InvalidParameter {
            what: "schedule",
            reason: "stream must contain at least two frames".into(),
        });
    }

    let mut state =
        TrackerState::init_with_policy(&frames[0], &cfg.tracker, policy.build(&cfg.tracker))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ TRACKER_SEED_SALT);

    let steps = frames.len() - 1;
    let mut results: Vec<StepResult> = Vec::with_capacity(steps);
    let mut correct = 0usize;
    let mut score_sum = 0.0;
    let mut alarm_frames: Vec<usize> = Vec::new();
    let mut entropy_trace = Vec::new();

    for frame in &frames[1..] {
        let r = state.step(frame, &mut rng)?;
        if r.chosen_index == frame.true_index {
            correct += 1;
        }
        score_sum += r.max_score;
        if r.alarm {
            alarm_frames.push(frame.frame_index);
        }
        if frame.frame_index % ENTROPY_SAMPLE_EVERY == 0 {
            if let Some(aux) = &state.aux {
                if !aux.is_empty() {
                    let e: EntropySummary = buffer_entropy(aux, cfg.tracker.kde_bandwidth)?;
                    entropy_trace.push(EntropyPoint {
                        frame: frame.frame_index,
                        h_y: e.h_y,
                        h_phi_given_y: e.h_phi_given_y,
                        h_joint: e.h_joint,
                    });
                }
            }
        }
        results.push(r);
    }

    let event_frames: Vec<usize> = events.iter().map(|e| e.frame_index).collect();
    let detection_delay_mean = detection_delays(&event_frames, &alarm_frames, frames.len());
    let false_alarms = alarm_frames
        .iter()
        .filter(|&&a| {
            event_frames
                .iter()
                .map(|&e| a.abs_diff(e))
                .min()
                .map_or(true, |d| d >= cfg.false_alarm_window)
        })
        .count() as u64;

    let returns = entry.schedule.return_events();
    let post_return_recovery_accuracy = if returns.is_empty() {
        None
    } else {
        let mut hits = 0usize;
        let mut total = 0usize;
        for &(start, _) in &returns {
            for f in start..(start + 50).min(frames.len()) {
                if f == 0 {
                    continue;
                }
                total += 1;
                if results[f - 1].chosen_index == frames[f].true_index {
                    hits += 1;
                }
            }
        }
        Some(hits as f64 / total as f64)
    };

    Ok(SeedReport {
        seed,
        accuracy: correct as f64 / steps as f64,
        mean_max_score: score_sum / steps as f64,
        updates_performed: state.updates_performed,
        frames_seen: state.frames_seen,
        update_ratio: state.updates_performed as f64 / state.frames_seen as f64,
        alarms: state.alarms,
        detection_delay_mean,
        false_alarms,
        post_return_recovery_accuracy,
        entropy_trace,
    })
}

/// Mean frames from each ground-truth event to the next alarm before the
/// following event; events with no matching alarm are skipped.
fn detection_delays(events: &[usize], alarms: &[usize], stream_len: usize) -> Option<f64> {
    if events.is_empty() {
        return None;
    }
    let mut delays = Vec::new();
    for (i, &e) in events.iter().enumerate() {
        let window_end = events.get(i + 1).copied().unwrap_or(stream_len);
        if let Some(&a) = alarms.iter().find(|&&a| a >= e && a < window_end) {
            delays.push((a - e) as f64);
        }
    }
    if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<f64>() / delays.len() as f64)
    }
}

// --- Ablation ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub policy: String,
    pub replacement: String,
    pub policy_key: String,
    pub replacement_key: ReplacementKind,
    pub seeds: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub updates_mean: f64,
    pub update_ratio_mean: f64,
    pub mean_max_score: f64,
    pub recovery_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub suite: String,
    pub cells: Vec<AblationCell>,
}

pub fn ablation_policies() -> Vec<PolicySpec> {
    vec![
        PolicySpec::Random(ABLATION_RANDOM_P),
        PolicySpec::Periodic(5),
        PolicySpec::Periodic(10),
        PolicySpec::Periodic(15),
        PolicySpec::OnChange,
    ]
}

pub fn ablation_replacements() -> Vec<ReplacementKind> {
    vec![
        ReplacementKind::Off,
        ReplacementKind::Random,
        ReplacementKind::Density,
        ReplacementKind::ScoreDiscretized,
    ]
}

/// Cross product of update policies and replacement strategies on the base
/// config's suite entry.
pub fn run_ablation(base: &ExperimentConfig) -> Result<AblationTable> {
    let mut cells = Vec::new();
    for policy in ablation_policies() {
        for replacement in ablation_replacements() {
            let mut cfg = base.clone();
            cfg.update_policy = policy.as_config_string();
            cfg.tracker.replacement = replacement;
            let report = run_experiment(&cfg)?;
            cells.push(AblationCell {
                policy: policy.label(),
                replacement: replacement.label().to_string(),
                policy_key: policy.as_config_string(),
                replacement_key: replacement,
                seeds: report.seeds.len(),
                accuracy_mean: report.aggregate.accuracy.mean,
                accuracy_std: report.aggregate.accuracy.std,
                updates_mean: report.aggregate.updates_performed.mean,
                update_ratio_mean: report.aggregate.update_ratio.mean,
                mean_max_score: report.aggregate.mean_max_score.mean,
                recovery_mean: report
                    .aggregate
                    .post_return_recovery_accuracy
                    .map(|s| s.mean),
            });
        }
    }
    Ok(AblationTable {
        suite: base.suite.clone(),
        cells,
    })
}

// --- Emission -------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(text: &str) -> Result<Option<f64>> {
    if text.is_empty() {
        Ok(None)
    } else {
        text.parse().map(Some).map_err(|e| Error::Config {
            path: "<csv>".into(),
            reason: format!("bad float {text:?}: {e}"),
        })
    }
}

pub const SEED_CSV_HEADER: &str = "seed,accuracy,mean_max_score,updates_performed,frames_seen,update_ratio,alarms,detection_delay_mean,false_alarms,post_return_recovery_accuracy";

/// Flat per-seed metrics view of a report (the entropy trace stays in JSON).
pub fn report_to_csv(report: &Report) -> String {
    let mut out = String::from(SEED_CSV_HEADER);
    out.push('\n');
    for r in &report.per_seed {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.accuracy,
            r.mean_max_score,
            r.updates_performed,
            r.frames_seen,
            r.update_ratio,
            r.alarms,
            fmt_opt(r.detection_delay_mean),
            r.false_alarms,
            fmt_opt(r.post_return_recovery_accuracy),
        ));
    }
    out
}

/// Per-seed rows parsed back from `report_to_csv` output.
pub fn seed_rows_from_csv(text: &str) -> Result<Vec<SeedReport>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SEED_CSV_HEADER => {}
        other => {
            return Err(Error::Config {
                path: "<csv>".into(),
                reason: format!("unexpected header {other:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(Error::Config {
                path: "<csv>".into(),
                reason: format!("expected 10 fields, got {}", parts.len()),
            });
        }
        let field = |i: usize| -> &str { parts[i] };
        let parse_f = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|e| Error::Config {
                path: "<csv>".into(),
                reason: format!("bad float {:?}: {e}", field(i)),
            })
        };
        let parse_u = |i: usize| -> Result<u64> {
            field(i).parse().map_err(|e| Error::Config {
                path: "<csv>".into(),
                reason: format!("bad integer {:?}: {e}", field(i)),
            })
        };
        rows.push(SeedReport {
            seed: parse_u(0)?,
            accuracy: parse_f(1)?,
            mean_max_score: parse_f(2)?,
            updates_performed: parse_u(3)?,
            frames_seen: parse_u(4)?,
            update_ratio: parse_f(5)?,
            alarms: parse_u(6)?,
            detection_delay_mean: parse_opt(field(7))?,
            false_alarms: parse_u(8)?,
            post_return_recovery_accuracy: parse_opt(field(9))?,
            entropy_trace: Vec::new(),
        });
    }
    Ok(rows)
}

pub const ABLATION_CSV_HEADER: &str = "policy,replacement,seeds,accuracy_mean,accuracy_std,updates_mean,update_ratio_mean,mean_max_score,recovery_mean";

pub fn ablation_to_csv(table: &AblationTable) -> String {
    let mut out = String::from(ABLATION_CSV_HEADER);
    out.push('\n');
    for c in &table.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.policy,
            c.replacement,
            c.seeds,
            c.accuracy_mean,
            c.accuracy_std,
            c.updates_mean,
            c.update_ratio_mean,
            c.mean_max_score,
            fmt_opt(c.recovery_mean),
        ));
    }
    out
}

pub const ENTROPY_CSV_HEADER: &str = "seed,frame,h_y,h_phi_given_y,h_joint";

/// Entropy traces of every seed as CSV.
pub fn entropy_trace_csv(report: &Report) -> String {
    let mut out = String::from(ENTROPY_CSV_HEADER);
    out.push('\n');
    for r in &report.per_seed {
        for p in &r.entropy_trace {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.seed, p.frame, p.h_y, p.h_phi_given_y, p.h_joint
            ));
        }
    }
    out
}
