use crate::error::Result;
use crate::param::ParamVector;

use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// AdaGrad: steps scaled by the root of the running sum of squared gradients.
#[derive(Debug, Clone)]
pub struct AdaGrad {
    hp: HyperParams,
    accum: Vec<f64>,
    window: ErWindow,
}

impl AdaGrad {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        AdaGrad {
            hp,
            accum: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
        }
    }

    /// Running sum of squared gradients.
    pub fn accumulator(&self) -> &[f64] {
        &self.accum
    }
}

impl Optimizer for AdaGrad {
    fn name(&self) -> &'static str {
        "adagrad"
    }

    fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    fn step(&mut self, grad: &ParamVector) -> Result<StepResult> {
        check_grad(grad, self.dim())?;
        let HyperParams { eta, epsilon, .. } = self.hp;
        let delta = self
            .accum
            .iter_mut()
            .zip(grad.iter())
            .map(|(acc, &g)| {
                *acc += g * g;
                if g == 0.0 {
                    0.0
                } else {
                    -eta * g / (*acc + epsilon).sqrt()
                }
            })
            .collect();
        Ok(StepResult::plain(delta))
    }

    fn window(&self) -> &ErWindow {
        &self.window
    }

    fn window_mut(&mut self) -> &mut ErWindow {
        &mut self.window
    }
}
