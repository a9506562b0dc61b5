use crate::error::Result;
use crate::param::ParamVector;

use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// RMSProp: steps scaled by an exponential moving average of squared gradients.
#[derive(Debug, Clone)]
pub struct RmsProp {
    hp: HyperParams,
    eg2: Vec<f64>,
    window: ErWindow,
}

impl RmsProp {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        RmsProp {
            hp,
            eg2: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
        }
    }

    /// Moving average of squared gradients.
    pub fn mean_square_grad(&self) -> &[f64] {
        &self.eg2
    }
}

impl Optimizer for RmsProp {
    fn name(&self) -> &'static str {
        "rmsprop"
    }

    fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    fn step(&mut self, grad: &ParamVector) -> Result<StepResult> {
        check_grad(grad, self.dim())?;
        let HyperParams { eta, rho, epsilon, .. } = self.hp;
        let delta = self
            .eg2
            .iter_mut()
            .zip(grad.iter())
            .map(|(m, &g)| {
                *m = rho * *m + (1.0 - rho) * g * g;
                if g == 0.0 {
                    0.0
                } else {
                    -eta * g / (*m + epsilon).sqrt()
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_by_hand() {
        let hp = HyperParams::default().with_rho(0.75);
        let mut r = RmsProp::new(1, hp, WindowMode::Epoch);
        let d = r.step(&vec![2.0].into()).unwrap().delta;
        assert_eq!(r.mean_square_grad(), &[1.0]);
        assert!((d[0] + 0.001 * 2.0 / (1.0f64 + 1e-6).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn zero_gradient_decays_average() {
        let hp = HyperParams::default().with_rho(0.75);
        let mut r = RmsProp::new(1, hp, WindowMode::Epoch);
        r.step(&vec![2.0].into()).unwrap();
        let d = r.step(&ParamVector::zeros(1)).unwrap().delta;
        assert_eq!(d[0], 0.0);
        assert_eq!(r.mean_square_grad(), &[0.75]);
    }

    #[test]
    fn memoryless_limit_is_sign_step() {
        let hp = HyperParams::default().with_rho(0.0).with_eta(0.1).with_epsilon(0.0);
        let mut r = RmsProp::new(3, hp, WindowMode::Epoch);
        let d = r.step(&vec![5.0, -0.2, 30.0].into()).unwrap().delta;
        let expected: ParamVector = vec![-0.1, 0.1, -0.1].into();
        assert!(d.max_abs_diff(&expected).unwrap() < 1e-15);
    }
}
