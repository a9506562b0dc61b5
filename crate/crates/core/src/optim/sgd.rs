use crate::error::Result;
use crate::param::ParamVector;

use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// Plain (stochastic) gradient descent: `delta = -eta * g`.
#[derive(Debug, Clone)]
pub struct Sgd {
    hp: HyperParams,
    window: ErWindow,
}

impl Sgd {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        Sgd {
            hp,
            window: ErWindow::new(dim, mode),
        }
    }
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    fn step(&mut self, grad: &ParamVector) -> Result<StepResult> {
        check_grad(grad, self.dim())?;
        let eta = self.hp.eta;
        Ok(StepResult::plain(grad.map(|g| -eta * g)))
    }

    fn window(&self) -> &ErWindow {
        &self.window
    }

    fn window_mut(&mut self) -> &mut ErWindow {
        &mut self.window
    }
}
