use crate::error::Result;
use crate::param::ParamVector;

use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// Heavy-ball momentum: `delta = rho * delta_prev - eta * g`.
#[derive(Debug, Clone)]
pub struct Momentum {
    hp: HyperParams,
    velocity: Vec<f64>,
    window: ErWindow,
}

impl Momentum {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        Momentum {
            hp,
            velocity: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }
}

impl Optimizer for Momentum {
    fn name(&self) -> &'static str {
        "momentum"
    }

    fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    fn step(&mut self, grad: &ParamVector) -> Result<StepResult> {
        check_grad(grad, self.dim())?;
        let HyperParams { eta, rho, .. } = self.hp;
        for (v, &g) in self.velocity.iter_mut().zip(grad.iter()) {
            *v = rho * *v - eta * g;
        }
        Ok(StepResult::plain(self.velocity.clone().into()))
    }

    fn window(&self) -> &ErWindow {
        &self.window
    }

    fn window_mut(&mut self) -> &mut ErWindow {
        &mut self.window
    }
}
