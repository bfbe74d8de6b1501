//! Online linear foreground/background discriminator.
//!
//! The model is a weight vector plus bias trained by steepest descent with
//! exact line search on the quadratic objective
//! `L(w, b) = sum_pos (w.x + b - 1)^2 + sum_neg (w.x + b)^2 + reg * |w|^2`.
//! Each training call refits from zero-initialized weights on the given
//! batch, so the model always reflects the current memory contents and
//! knowledge of modes absent from the batch decays away. Scores are the
//! linear output clamped to [0, 1]; candidate ranking uses the raw pre-clamp
//! values so that positive rescaling never changes the argmax.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::TemplateSample;

/// Foreground/background training set: positives target 1, negatives 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    positives: Vec<Vec<f64>>,
    negatives: Vec<Vec<f64>>,
}

impl TrainingBatch {
    pub fn new(positives: Vec<Vec<f64>>, negatives: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match positives.first() {
            Some(p) => p.len(),
            None => {
                return Err(Error::EmptyInput {
                    what: "training positives",
                })
            }
        };
        for v in positives.iter().chain(negatives.iter()) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput { what: "batch features" });
            }
        }
        Ok(Self { positives, negatives })
    }

    /// Build a batch from template samples: each sample's foreground feature
    /// is a positive and its bundled background features are negatives, so
    /// replayed samples retrain with their original negatives.
    pub fn from_samples(samples: &[TemplateSample]) -> Result<Self> {
        let positives: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
        let negatives: Vec<Vec<f64>> = samples
            .iter()
            .flat_map(|s| s.background_features.iter().cloned())
            .collect();
        Self::new(positives, negatives)
    }

    pub fn dim(&self) -> usize {
        self.positives[0].len()
    }

    pub fn positives(&self) -> &[Vec<f64>] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Vec<f64>] {
        &self.negatives
    }
}

/// Result of scoring a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidates {
    pub scores: Vec<f64>,
    pub argmax_index: usize,
    pub max_score: f64,
}

/// Linear scorer `clamp(w.x + b, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg_lambda: f64,
    pub steps: usize,
    pub fit_bias: bool,
}

impl LinearModel {
    pub fn new(dim: usize, reg_lambda: f64, steps: usize) -> Result<Self> {
        if reg_lambda < 0.0 || !reg_lambda.is_finite() {
            return Err(Error::InvalidParameter {
                what: "reg_lambda",
                reason: format!("must be >= 0, got {reg_lambda}"),
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter {
                what: "steps",
                reason: "must be > 0".into(),
            });
        }
        Ok(Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            reg_lambda,
            steps,
            fit_bias: true,
        })
    }

    pub fn with_frozen_bias(mut self) -> Self {
        self.fit_bias = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Refit on the batch: `steps` steepest-descent iterations with exact
    /// line search, starting from zero weights.
    pub fn train(&self, batch: &TrainingBatch) -> Result<LinearModel> {
        let (model, _) = self.train_trace(batch)?;
        Ok(model)
    }

    /// As `train`, additionally returning the loss at the initial point and
    /// after each iteration.
    pub fn train_trace(&self, batch: &TrainingBatch) -> Result<(LinearModel, Vec<f64>)> {
        if batch.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: batch.dim(),
            });
        }
        let mut model = self.clone();
        model.weights.iter_mut().for_each(|w| *w = 0.0);
        model.bias = if self.fit_bias { 0.0 } else { self.bias };

        let mut losses = Vec::with_capacity(self.steps + 1);
        losses.push(loss(&model.weights, model.bias, model.reg_lambda, batch));
        for _ in 0..self.steps {
            let (gw, gb) = gradient(&model.weights, model.bias, model.reg_lambda, batch);
            let gb = if model.fit_bias { gb } else { 0.0 };
            let g_norm_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
            if g_norm_sq <= f64::MIN_POSITIVE {
                break;
            }
            // Exact line search on the quadratic: alpha = g.g / (g.H.g) with
            // H.g computed sample-wise.
            let mut g_h_g = 0.0;
            for x in batch.positives.iter().chain(batch.negatives.iter()) {
                let proj: f64 = x.iter().zip(&gw).map(|(xi, gi)| xi * gi).sum::<f64>() + gb;
                g_h_g += 2.0 * proj * proj;
            }
            g_h_g += 2.0 * model.reg_lambda * gw.iter().map(|g| g * g).sum::<f64>();
            if g_h_g <= 0.0 {
                break;
            }
            let alpha = g_norm_sq / g_h_g;
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= alpha * g;
            }
            model.bias -= alpha * gb;
            losses.push(loss(&model.weights, model.bias, model.reg_lambda, batch));
        }
        Ok((model, losses))
    }

    /// Clamped score of one feature vector.
    pub fn score(&self, feature: &[f64]) -> Result<f64> {
        Ok(self.raw_score(feature)?.clamp(0.0, 1.0))
    }

    fn raw_score(&self, feature: &[f64]) -> Result<f64> {
        if feature.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: feature.len(),
            });
        }
        Ok(self.weights.iter().zip(feature).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    /// Score every candidate; the argmax is taken on the raw linear outputs
    /// (ties broken by lowest index) and the reported scores are clamped.
    pub fn score_candidates(&self, candidates: &[Vec<f64>]) -> Result<ScoredCandidates> {
        if candidates.is_empty() {
            return Err(Error::EmptyInput { what: "candidates" });
        }
        let mut raw = Vec::with_capacity(candidates.len());
        for c in candidates {
            raw.push(self.raw_score(c)?);
        }
        let mut argmax = 0;
        for (i, &r) in raw.iter().enumerate() {
            if r > raw[argmax] {
                argmax = i;
            }
        }
        let scores: Vec<f64> = raw.iter().map(|r| r.clamp(0.0, 1.0)).collect();
        Ok(ScoredCandidates {
            max_score: scores[argmax],
            argmax_index: argmax,
            scores,
        })
    }
}

/// Objective value at `(weights, bias)`.
pub fn loss(weights: &[f64], bias: f64, reg_lambda: f64, batch: &TrainingBatch) -> f64 {
    let mut total = 0.0;
    for x in &batch.positives {
        let r = dot(weights, x) + bias - 1.0;
        total += r * r;
    }
    for x in &batch.negatives {
        let r = dot(weights, x) + bias;
        total += r * r;
    }
    total + reg_lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of the objective with respect to weights and bias.
pub fn gradient(
    weights: &[f64],
    bias: f64,
    reg_lambda: f64,
    batch: &TrainingBatch,
) -> (Vec<f64>, f64) {
    let dim = weights.len();
    let mut gw = vec![0.0; dim];
    let mut gb = 0.0;
    for x in &batch.positives {
        let r = 2.0 * (dot(weights, x) + bias - 1.0);
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    for x in &batch.negatives {
        let r = 2.0 * (dot(weights, x) + bias);
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += 2.0 * reg_lambda * w;
    }
    (gw, gb)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn one_dimensional_closed_form() {
        // Positive at x=1, negative at x=-1, frozen bias, no regularization:
        // dL/dw = 2(w - 1) + 2w = 0 -> w = 0.5.
        let batch = TrainingBatch::new(vec![vec![1.0]], vec![vec![-1.0]]).unwrap();
        let model = LinearModel::new(1, 0.0, 10).unwrap().with_frozen_bias();
        let trained = model.train(&batch).unwrap();
        assert!((trained.weights[0] - 0.5).abs() < 1e-8);
        assert_eq!(trained.bias, 0.0);
    }

    #[test]
    fn single_positive_interpolates_target() {
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let batch = TrainingBatch::new(vec![e1.clone()], vec![]).unwrap();
        let model = LinearModel::new(4, 0.0, 10).unwrap();
        let trained = model.train(&batch).unwrap();
        assert!((trained.score(&e1).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn huge_regularization_kills_weights() {
        let batch =
            TrainingBatch::new(vec![vec![1.0, 2.0]], vec![vec![-1.0, 0.5]]).unwrap();
        let model = LinearModel::new(2, 1e12, 20).unwrap();
        let trained = model.train(&batch).unwrap();
        assert!(trained.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn zero_model_scores_zero() {
        let model = LinearModel::new(3, 0.0, 10).unwrap();
        assert_eq!(model.score(&[1.0, -2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn scores_clamp_to_unit_interval() {
        let model = LinearModel {
            weights: vec![1.7],
            bias: 0.0,
            reg_lambda: 0.0,
            steps: 10,
            fit_bias: true,
        };
        assert_eq!(model.score(&[1.0]).unwrap(), 1.0);
        assert_eq!(model.score(&[-1.0]).unwrap(), 0.0);
        let half = LinearModel {
            weights: vec![0.5],
            ..model
        };
        assert_eq!(half.score(&[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn score_rejects_dimension_mismatch() {
        let model = LinearModel::new(2, 0.0, 10).unwrap();
        assert!(model.score(&[1.0]).is_err());
        assert!(model.score_candidates(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn argmax_rules() {
        let model = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            reg_lambda: 0.0,
            steps: 10,
            fit_bias: true,
        };
        let single = model.score_candidates(&[vec![0.3]]).unwrap();
        assert_eq!(single.argmax_index, 0);

        let tied = model.score_candidates(&[vec![0.4], vec![0.4]]).unwrap();
        assert_eq!(tied.argmax_index, 0);

        let mixed = model
            .score_candidates(&[vec![0.2], vec![0.9], vec![0.4]])
            .unwrap();
        assert_eq!(mixed.argmax_index, 1);
        assert!((mixed.max_score - 0.9).abs() < 1e-12);
        assert_eq!(mixed.scores.len(), 3);
    }

    #[test]
    fn argmax_invariant_under_positive_scaling() {
        // Raw outputs above 1 clamp in the reported scores, but ranking uses
        // the raw values, so scaling never moves the argmax.
        let model = LinearModel {
            weights: vec![1.0],
            bias: 0.0,
            reg_lambda: 0.0,
            steps: 10,
            fit_bias: true,
        };
        let candidates = vec![vec![1.7], vec![2.5], vec![0.3]];
        let base = model.score_candidates(&candidates).unwrap();
        for scale in [0.1, 0.5, 2.0, 100.0] {
            let scaled = LinearModel {
                weights: vec![scale],
                ..model.clone()
            };
            let res = scaled.score_candidates(&candidates).unwrap();
            assert_eq!(res.argmax_index, base.argmax_index);
        }
    }

    #[test]
    fn empty_candidates_error() {
        let model = LinearModel::new(1, 0.0, 10).unwrap();
        assert!(model.score_candidates(&[]).is_err());
    }

    #[test]
    fn empty_positives_error() {
        assert!(TrainingBatch::new(vec![], vec![vec![1.0]]).is_err());
    }

    fn random_batch(rng: &mut ChaCha20Rng) -> (TrainingBatch, f64) {
        let dim = rng.gen_range(1..8);
        let n_pos = rng.gen_range(1..10);
        let n_neg = rng.gen_range(0..10);
        let gen_vec = |rng: &mut ChaCha20Rng| -> Vec<f64> {
            (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()
        };
        let positives = (0..n_pos).map(|_| gen_vec(rng)).collect();
        let negatives = (0..n_neg).map(|_| gen_vec(rng)).collect();
        let reg = [0.0, 0.1, 1.0][rng.gen_range(0..3)];
        (TrainingBatch::new(positives, negatives).unwrap(), reg)
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (batch, reg) = random_batch(&mut rng);
            let dim = batch.dim();
            let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias: f64 = rng.gen_range(-1.0..1.0);
            let (gw, gb) = gradient(&weights, bias, reg, &batch);

            let h = 1e-5;
            let mut fd = Vec::with_capacity(dim + 1);
            for i in 0..dim {
                let mut plus = weights.clone();
                let mut minus = weights.clone();
                plus[i] += h;
                minus[i] -= h;
                fd.push(
                    (loss(&plus, bias, reg, &batch) - loss(&minus, bias, reg, &batch)) / (2.0 * h),
                );
            }
            fd.push(
                (loss(&weights, bias + h, reg, &batch) - loss(&weights, bias - h, reg, &batch))
                    / (2.0 * h),
            );

            let analytic: Vec<f64> = gw.iter().copied().chain(std::iter::once(gb)).collect();
            let diff: f64 = analytic
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rel = diff / norm.max(1e-8);
            assert!(rel < 1e-5, "gradient mismatch: relative error {rel}");
        }
    }

    #[test]
    fn loss_is_monotone_non_increasing() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for _ in 0..50 {
            let (batch, reg) = random_batch(&mut rng);
            let model = LinearModel::new(batch.dim(), reg, 25).unwrap();
            let (_, losses) = model.train_trace(&batch).unwrap();
            for pair in losses.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "loss increased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn batch_from_samples_bundles_original_negatives() {
        use crate::memory::{DiscretizationConfig, TemplateSample};
        let cfg = DiscretizationConfig::default();
        let s1 = TemplateSample::new(
            vec![1.0, 0.0],
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            0.9,
            0,
            &cfg,
        )
        .unwrap();
        let s2 = TemplateSample::new(vec![0.9, 0.1], vec![vec![0.1, 0.9]], 0.8, 1, &cfg).unwrap();
        let batch = TrainingBatch::from_samples(&[s1, s2]).unwrap();
        assert_eq!(batch.positives().len(), 2);
        assert_eq!(batch.negatives().len(), 3);
    }
}
