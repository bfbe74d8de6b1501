//! Streaming toolkit for change-detection-gated online tracking.
//!
//! The pieces mirror the adaptive-tracking loop: a Page-Hinkley detector
//! watches the classifier's maximum score and gates retraining; a FIFO main
//! memory and an entropy-maximizing auxiliary replay buffer hold template
//! samples; a linear classifier trained by steepest descent localizes the
//! object among candidate feature vectors; a drift simulator generates
//! synthetic streams with ground-truth events; and a benchmark harness
//! sweeps update policies against replacement strategies.

pub mod bench;
pub mod change_detection;
pub mod classifier;
pub mod density;
pub mod error;
pub mod memory;
pub mod simulator;
pub mod tracker;

pub use bench::{run_ablation, run_experiment, ExperimentConfig, Report};
pub use change_detection::{PageHinkley, PageHinkleyConfig};
pub use classifier::{LinearModel, TrainingBatch};
pub use density::{buffer_entropy, buffer_entropy_discrete, kde_density, EntropySummary};
pub use error::{Error, Result};
pub use memory::{
    assemble_batch, discretize_score, AuxiliaryMemory, DiscretizationConfig, MainMemory,
    ReplacementStrategy, TemplateSample,
};
pub use simulator::{gen_stream, standard_suite, suite_entry, DriftSchedule, Frame, StreamConfig};
pub use tracker::{ReplacementKind, StepResult, TrackerConfig, TrackerState, UpdatePolicy};
