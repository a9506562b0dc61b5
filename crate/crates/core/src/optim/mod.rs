//! Optimizers as interchangeable strategies.
//!
//! Every update rule implements [`Optimizer`]: it consumes a gradient, advances
//! its own accumulators, and returns the step `delta` the caller adds to the
//! parameters. The caller then hands the applied step back through
//! [`Optimizer::record_step`] so the effective-ratio window stays current,
//! and calls [`Optimizer::window_reset`] at epoch boundaries.
//!
//! Concrete optimizers are looked up by name in an [`OptimizerRegistry`].

mod adadelta;
mod adagrad;
mod adasmooth;
mod adasmooth_delta;
mod momentum;
mod ratio;
mod registry;
mod rmsprop;
mod sgd;

use serde::{Deserialize, Serialize};

pub use adadelta::AdaDelta;
pub use adagrad::AdaGrad;
pub use adasmooth::{AdaSmooth, AdaSmoothRandom};
pub use adasmooth_delta::AdaSmoothDelta;
pub use momentum::Momentum;
pub use ratio::{sc_period, scaled_smoothing_constant, ErWindow, WindowMode, ER_ZERO_GUARD};
pub use registry::{BuildFn, OptimizerEntry, OptimizerInit, OptimizerRegistry};
pub use rmsprop::RmsProp;
pub use sgd::Sgd;

use crate::error::{Error, Result};
use crate::param::ParamVector;

/// How AdaSmoothDelta averages its squared steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaDecay {
    /// Weights `(1 - c^2)` on the new squared step and `c^2` on the history.
    #[default]
    Adaptive,
    /// Fixed slow decay `rho2`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Global learning rate.
    pub eta: f64,
    /// Decay constant for Momentum, RMSProp and AdaDelta.
    pub rho: f64,
    /// Fast decay constant.
    pub rho1: f64,
    /// Slow decay constant.
    pub rho2: f64,
    pub epsilon: f64,
    pub delta_decay: DeltaDecay,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            eta: 0.001,
            rho: 0.9,
            rho1: 0.5,
            rho2: 0.99,
            epsilon: 1e-6,
            delta_decay: DeltaDecay::Adaptive,
        }
    }
}

impl HyperParams {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_rhos(mut self, rho1: f64, rho2: f64) -> Self {
        self.rho1 = rho1;
        self.rho2 = rho2;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Range checks shared by all kinds. `rho1 == rho2` is accepted: it is
    /// the configuration under which AdaSmooth collapses to RMSProp.
    pub fn validate(&self) -> Result<()> {
        let decay = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [0, 1), got {v}")))
            }
        };
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        decay("rho", self.rho)?;
        decay("rho1", self.rho1)?;
        decay("rho2", self.rho2)?;
        if self.rho2 < self.rho1 {
            return Err(Error::invalid(format!(
                "rho2 ({}) must not be smaller than rho1 ({})",
                self.rho2, self.rho1
            )));
        }
        Ok(())
    }
}

/// Output of one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub delta: ParamVector,
    /// Effective ratio used for this step (ER-driven optimizers only).
    pub er: Option<ParamVector>,
    /// Scaled smoothing constant used for this step.
    pub ssc: Option<ParamVector>,
}

impl StepResult {
    pub(crate) fn plain(delta: ParamVector) -> Self {
        StepResult {
            delta,
            er: None,
            ssc: None,
        }
    }
}

pub trait Optimizer: Send {
    /// Registry name of this optimizer.
    fn name(&self) -> &'static str;

    fn hyper_params(&self) -> &HyperParams;

    fn dim(&self) -> usize {
        self.window().dim()
    }

    /// Computes the step for gradient `grad` and advances internal state.
    fn step(&mut self, grad: &ParamVector) -> Result<StepResult>;

    fn window(&self) -> &ErWindow;

    fn window_mut(&mut self) -> &mut ErWindow;

    /// Whether the update rule reads the effective ratio.
    fn uses_effective_ratio(&self) -> bool {
        false
    }

    /// Feeds the applied step into the effective-ratio window.
    fn record_step(&mut self, delta: &ParamVector) -> Result<()> {
        self.window_mut().record(delta)
    }

    /// Closes the current effective-ratio window (no-op in growing mode).
    fn window_reset(&mut self) {
        self.window_mut().reset();
    }
}

pub(crate) fn check_grad(grad: &ParamVector, dim: usize) -> Result<()> {
    grad.check_len(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let hp = HyperParams::default();
        assert_eq!((hp.rho1, hp.rho2, hp.epsilon, hp.eta), (0.5, 0.99, 1e-6, 0.001));
        hp.validate().unwrap();
    }

    #[test]
    fn validate_rejects_inverted_rhos() {
        assert!(HyperParams::default().with_rhos(0.9, 0.5).validate().is_err());
        assert!(HyperParams::default().with_rhos(0.9, 0.9).validate().is_ok());
        assert!(HyperParams::default().with_rho(1.0).validate().is_err());
        assert!(HyperParams::default().with_eta(-1.0).validate().is_err());
    }

    #[test]
    fn hyper_params_json_round_trip() {
        let hp = HyperParams::default().with_rhos(0.5, 0.95);
        let text = serde_json::to_string(&hp).unwrap();
        assert_eq!(serde_json::from_str::<HyperParams>(&text).unwrap(), hp);
        let partial: HyperParams = serde_json::from_str(r#"{"eta": 0.5}"#).unwrap();
        assert_eq!(partial.eta, 0.5);
        assert_eq!(partial.rho2, 0.99);
    }
}
