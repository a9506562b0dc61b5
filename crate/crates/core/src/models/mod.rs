//! Differentiable models with hand-written gradients.
//!
//! A model is a [`GradOracle`]: given a flat parameter vector and a batch it
//! returns the mean loss and its exact gradient. Stochastic models (dropout)
//! take the randomness as an explicit [`DropoutMask`] argument, so every
//! evaluation is a pure function of its inputs and finite differences can be
//! taken with the noise frozen.

mod gradcheck;
mod logreg;
mod mlp;
mod quadratic;
mod softmax;

pub use gradcheck::{finite_diff_grad, finite_diff_oracle, relative_error};
pub use logreg::LogRegModel;
pub use mlp::MlpModel;
pub use quadratic::QuadraticModel;
pub use softmax::{argmax, softmax, softmax_xent};

use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Rng;

/// A borrowed view of `rows` samples stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub features: &'a [f64],
    pub labels: &'a [usize],
    pub n_features: usize,
}

impl<'a> Batch<'a> {
    pub fn new(features: &'a [f64], labels: &'a [usize], n_features: usize) -> Result<Self> {
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::invalid(format!(
                "batch of {} labels needs {} feature values, got {}",
                labels.len(),
                labels.len() * n_features,
                features.len()
            )));
        }
        Ok(Batch {
            features,
            labels,
            n_features,
        })
    }

    /// A batch with no samples, for models that ignore data.
    pub fn empty() -> Batch<'static> {
        Batch {
            features: &[],
            labels: &[],
            n_features: 1,
        }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }
}

/// Keep/drop decisions for the hidden units of every row in a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    /// `rows * units` multipliers: `0` for dropped units, `1 / (1 - rate)` for kept ones.
    pub scale: Vec<f64>,
    pub units: usize,
}

impl DropoutMask {
    pub fn sample(rows: usize, units: usize, rate: f64, rng: &mut Rng) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let scale = (0..rows * units)
            .map(|_| if rng.bernoulli(rate) { 0.0 } else { keep })
            .collect();
        DropoutMask { scale, units }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scale[i * self.units..(i + 1) * self.units]
    }
}

/// The model contract consumed by the training loop and the gradient checker.
pub trait GradOracle: Send + Sync {
    fn name(&self) -> &'static str;

    fn param_count(&self) -> usize;

    /// Number of output classes; `None` for models that do not classify.
    fn classes(&self) -> Option<usize> {
        None
    }

    /// Fresh parameters drawn from `rng`.
    fn init_params(&self, rng: &mut Rng) -> Result<ParamVector>;

    /// Mean loss over the batch and its gradient. `mask` freezes any
    /// training-time noise; `None` means evaluation mode.
    fn eval(
        &self,
        params: &ParamVector,
        batch: &Batch<'_>,
        mask: Option<&DropoutMask>,
    ) -> Result<(f64, ParamVector)>;

    /// Mean loss only. Models override this when it is cheaper than `eval`.
    fn loss(&self, params: &ParamVector, batch: &Batch<'_>, mask: Option<&DropoutMask>) -> Result<f64> {
        Ok(self.eval(params, batch, mask)?.0)
    }

    /// Training-time noise for a batch of `rows`, if the model has any.
    fn sample_mask(&self, _rows: usize, _rng: &mut Rng) -> Option<DropoutMask> {
        None
    }

    /// Evaluation-mode logits, `rows * classes` row-major.
    fn class_scores(&self, _params: &ParamVector, _batch: &Batch<'_>) -> Result<Vec<f64>> {
        Err(Error::Unsupported(format!("{} does not produce class scores", self.name())))
    }

    /// Predicted class of a single sample.
    fn predict(&self, params: &ParamVector, features: &[f64]) -> Result<usize> {
        let label = [0usize];
        let batch = Batch::new(features, &label, features.len())?;
        Ok(argmax(&self.class_scores(params, &batch)?))
    }
}

/// Mean cross-entropy and accuracy in evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Evaluation-mode loss and accuracy over `batch`, processed in chunks.
pub fn evaluate(oracle: &dyn GradOracle, params: &ParamVector, batch: &Batch<'_>) -> Result<Evaluation> {
    let classes = oracle
        .classes()
        .ok_or_else(|| Error::Unsupported(format!("{} is not a classifier", oracle.name())))?;
    let rows = batch.rows();
    if rows == 0 {
        return Err(Error::invalid("cannot evaluate an empty batch"));
    }
    const CHUNK: usize = 256;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for start in (0..rows).step_by(CHUNK) {
        let end = (start + CHUNK).min(rows);
        let chunk = Batch::new(
            &batch.features[start * batch.n_features..end * batch.n_features],
            &batch.labels[start..end],
            batch.n_features,
        )?;
        let scores = oracle.class_scores(params, &chunk)?;
        for (i, logits) in scores.chunks_exact(classes).enumerate() {
            let label = chunk.labels[i];
            loss += softmax::xent_loss(logits, label);
            if argmax(logits) == label {
                correct += 1;
            }
        }
    }
    Ok(Evaluation {
        loss: loss / rows as f64,
        accuracy: correct as f64 / rows as f64,
    })
}

/// Fraction of samples whose arg-max prediction equals the label.
pub fn accuracy(oracle: &dyn GradOracle, params: &ParamVector, batch: &Batch<'_>) -> Result<f64> {
    Ok(evaluate(oracle, params, batch)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_shape_is_checked() {
        assert!(Batch::new(&[1.0, 2.0, 3.0], &[0, 1], 2).is_err());
        let b = Batch::new(&[1.0, 2.0, 3.0, 4.0], &[0, 1], 2).unwrap();
        assert_eq!(b.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn dropout_mask_values() {
        let m = DropoutMask::sample(10, 20, 0.5, &mut Rng::from_seed(1));
        assert!(m.scale.iter().all(|&v| v == 0.0 || v == 2.0));
        let none = DropoutMask::sample(3, 4, 0.0, &mut Rng::from_seed(1));
        assert!(none.scale.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        // Over many masks the scaled activation averages back to the input.
        let activations = [0.3, 1.7, 0.0, 4.2];
        let n = 10_000;
        let mut rng = Rng::from_seed(21);
        let mut sums = [0.0; 4];
        let mut sq = [0.0; 4];
        for _ in 0..n {
            let m = DropoutMask::sample(1, 4, 0.5, &mut rng);
            for j in 0..4 {
                let v = activations[j] * m.scale[j];
                sums[j] += v;
                sq[j] += v * v;
            }
        }
        for j in 0..4 {
            let mean = sums[j] / n as f64;
            let var = sq[j] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!((mean - activations[j]).abs() <= 3.0 * se + 1e-12, "unit {j}: {mean}");
        }
    }
}
