//! Per-frame tracking loop: score candidates, localize, gate memory
//! insertion on the score threshold, and retrain under the configured update
//! policy. Memory insertion happens on every frame that clears `tau`;
//! the policy gates only when the classifier is retrained.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::change_detection::{PageHinkley, PageHinkleyConfig};
use crate::classifier::{LinearModel, TrainingBatch};
use crate::error::{Error, Result};
use crate::memory::{
    assemble_batch, AuxiliaryMemory, DiscretizationConfig, MainMemory, ReplacementStrategy,
    TemplateSample,
};
use crate::simulator::Frame;

/// Auxiliary-buffer wiring: off disables replay entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementKind {
    Off,
    Random,
    Density,
    ScoreDiscretized,
}

impl ReplacementKind {
    pub fn strategy(self) -> Option<ReplacementStrategy> {
        match self {
            ReplacementKind::Off => None,
            ReplacementKind::Random => Some(ReplacementStrategy::Random),
            ReplacementKind::Density => Some(ReplacementStrategy::Density),
            ReplacementKind::ScoreDiscretized => Some(ReplacementStrategy::ScoreDiscretizedDensity),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ReplacementKind::Off => "No Aux",
            ReplacementKind::Random => "Random Replacement",
            ReplacementKind::Density => "Density Replacement",
            ReplacementKind::ScoreDiscretized => "Class. Score Discretised",
        }
    }
}

/// When the classifier is retrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UpdatePolicy {
    EveryFrame,
    Periodic(usize),
    Random(f64),
    OnChange(PageHinkley),
}

impl UpdatePolicy {
    pub fn label(&self) -> String {
        match self {
            UpdatePolicy::EveryFrame => "Every Frame".to_string(),
            UpdatePolicy::Periodic(k) => format!("Periodic {k}"),
            UpdatePolicy::Random(_) => "Random".to_string(),
            UpdatePolicy::OnChange(_) => "CD".to_string(),
        }
    }
}

/// Flat tracker configuration; these are the experiment-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub budget_main: usize,
    pub budget_aux: usize,
    pub tau: f64,
    pub num_labels: u32,
    pub replacement: ReplacementKind,
    pub kde_bandwidth: Option<f64>,
    pub aux_draw_n: usize,
    pub reg_lambda: f64,
    pub train_steps: usize,
    pub init_train_steps: usize,
    pub lambda: f64,
    pub delta: f64,
    pub two_sided: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            budget_main: 50,
            budget_aux: 50,
            tau: 0.25,
            num_labels: 10,
            replacement: ReplacementKind::ScoreDiscretized,
            kde_bandwidth: None,
            aux_draw_n: 10,
            reg_lambda: 0.1,
            train_steps: 10,
            init_train_steps: 20,
            lambda: 0.15,
            delta: 0.005,
            two_sided: false,
        }
    }
}

impl TrackerConfig {
    pub fn discretization(&self) -> Result<DiscretizationConfig> {
        DiscretizationConfig::new(self.tau, self.num_labels)
    }

    pub fn detector(&self) -> PageHinkley {
        PageHinkley::new(PageHinkleyConfig {
            lambda: self.lambda,
            delta: self.delta,
            two_sided: self.two_sided,
        })
    }
}

/// Outcome of one tracking step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub chosen_index: usize,
    pub max_score: f64,
    pub inserted: bool,
    pub evicted_to_aux: bool,
    pub retrained: bool,
    pub alarm: bool,
}

/// Everything the loop carries across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub model: LinearModel,
    pub main: MainMemory,
    pub aux: Option<AuxiliaryMemory>,
    pub policy: UpdatePolicy,
    discretization: DiscretizationConfig,
    aux_draw_n: usize,
    pub frames_seen: u64,
    pub updates_performed: u64,
    pub alarms: u64,
}

impl TrackerState {
    /// Initialize from the ground-truth first frame: train the model on the
    /// ground-truth sample (with the frame's distractors as negatives) and
    /// seed the main memory with it.
    pub fn init(first_frame: &Frame, cfg: &TrackerConfig) -> Result<Self> {
        Self::init_with_policy(first_frame, cfg, UpdatePolicy::OnChange(cfg.detector()))
    }

    pub fn init_with_policy(
        first_frame: &Frame,
        cfg: &TrackerConfig,
        policy: UpdatePolicy,
    ) -> Result<Self> {
        if !first_frame.is_ground_truth {
            return Err(Error::InvalidParameter {
                what: "first_frame",
                reason: "tracker must be initialized from a ground-truth frame".into(),
            });
        }
        if first_frame.candidates.is_empty() || first_frame.true_index >= first_frame.candidates.len()
        {
            return Err(Error::InvalidParameter {
                what: "first_frame",
                reason: "malformed candidate set".into(),
            });
        }
        let discretization = cfg.discretization()?;
        let dim = first_frame.candidates[first_frame.true_index].len();

        let foreground = first_frame.candidates[first_frame.true_index].clone();
        let background: Vec<Vec<f64>> = first_frame
            .candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != first_frame.true_index)
            .map(|(_, c)| c.clone())
            .collect();

        let init_model = LinearModel::new(dim, cfg.reg_lambda, cfg.init_train_steps)?;
        let batch = TrainingBatch::new(vec![foreground.clone()], background.clone())?;
        let mut model = init_model.train(&batch)?;
        model.steps = cfg.train_steps;

        let score = model.score(&foreground)?;
        let sample =
            TemplateSample::new(foreground, background, score, first_frame.frame_index, &discretization)?;
        let mut main = MainMemory::new(cfg.budget_main)?;
        main.push(sample)?;

        let aux = match cfg.replacement.strategy() {
            Some(strategy) => Some(AuxiliaryMemory::new(cfg.budget_aux, strategy)?),
            None => None,
        };

        Ok(Self {
            model,
            main,
            aux,
            policy,
            discretization,
            aux_draw_n: cfg.aux_draw_n,
            frames_seen: 1,
            updates_performed: 1,
            alarms: 0,
        })
    }

    /// Process one frame: localize, observe the score, insert into memory if
    /// it clears `tau`, and retrain when the policy fires.
    pub fn step<R: Rng>(&mut self, frame: &Frame, rng: &mut R) -> Result<StepResult> {
        let scored = self.model.score_candidates(&frame.candidates)?;
        self.frames_seen += 1;

        let mut alarm = false;
        let fire = match &mut self.policy {
            UpdatePolicy::EveryFrame => true,
            UpdatePolicy::Periodic(k) => self.frames_seen % *k as u64 == 0,
            UpdatePolicy::Random(p) => rng.gen::<f64>() < *p,
            UpdatePolicy::OnChange(detector) => {
                alarm = detector.observe(scored.max_score)?;
                alarm
            }
        };
        if alarm {
            self.alarms += 1;
        }

        let mut inserted = false;
        let mut evicted_to_aux = false;
        if scored.max_score > self.discretization.tau {
            let features = frame.candidates[scored.argmax_index].clone();
            let background: Vec<Vec<f64>> = frame
                .candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != scored.argmax_index)
                .map(|(_, c)| c.clone())
                .collect();
            let sample = TemplateSample::new(
                features,
                background,
                scored.max_score,
                frame.frame_index,
                &self.discretization,
            )?;
            let evicted = self.main.push(sample)?;
            inserted = true;
            if let (Some(aux), Some(evicted)) = (self.aux.as_mut(), evicted) {
                // Samples without a label cannot enter the auxiliary buffer;
                // with the tau gate on insertion this only affects exotic
                // configurations.
                if evicted.label.is_some() {
                    aux.insert(evicted, rng)?;
                    evicted_to_aux = true;
                }
            }
        }

        if fire {
            let samples = assemble_batch(&self.main, self.aux.as_ref(), self.aux_draw_n, rng);
            let batch = TrainingBatch::from_samples(&samples)?;
            self.model = self.model.train(&batch)?;
            self.updates_performed += 1;
        }

        Ok(StepResult {
            chosen_index: scored.argmax_index,
            max_score: scored.max_score,
            inserted,
            evicted_to_aux,
            retrained: fire,
            alarm,
        })
    }
}
