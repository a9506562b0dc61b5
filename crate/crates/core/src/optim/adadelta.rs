use crate::error::Result;
use crate::param::ParamVector;

use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// AdaDelta: unit-matched steps `RMS[dx]_{t-1} / RMS[g]_t * g`.
///
/// Epsilon sits under both square roots. With a zero-initialised step
/// average and epsilon only in the denominator the numerator would stay 0
/// and the optimizer would never move.
#[derive(Debug, Clone)]
pub struct AdaDelta {
    hp: HyperParams,
    eg2: Vec<f64>,
    edx2: Vec<f64>,
    window: ErWindow,
}

impl AdaDelta {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        AdaDelta {
            hp,
            eg2: vec![0.0; dim],
            edx2: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
        }
    }

    pub fn mean_square_grad(&self) -> &[f64] {
        &self.eg2
    }

    pub fn mean_square_step(&self) -> &[f64] {
        &self.edx2
    }
}

impl Optimizer for AdaDelta {
    fn name(&self) -> &'static str {
        "adadelta"
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
            .zip(self.edx2.iter_mut())
            .zip(grad.iter())
            .map(|((mg, mdx), &g)| {
                *mg = rho * *mg + (1.0 - rho) * g * g;
                let d = if g == 0.0 {
                    0.0
                } else {
                    -eta * (*mdx + epsilon).sqrt() / (*mg + epsilon).sqrt() * g
                };
                *mdx = rho * *mdx + (1.0 - rho) * d * d;
                d
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

    fn adadelta(eps: f64) -> AdaDelta {
        let hp = HyperParams::default().with_eta(1.0).with_rho(0.9).with_epsilon(eps);
        AdaDelta::new(1, hp, WindowMode::Epoch)
    }

    #[test]
    fn first_step_bootstraps_from_epsilon() {
        let mut a = adadelta(1e-6);
        let d = a.step(&vec![1.0].into()).unwrap().delta[0];
        assert!((a.mean_square_grad()[0] - 0.1).abs() < 1e-15);
        let expected = -(1e-6f64).sqrt() / (0.1f64 + 1e-6).sqrt();
        assert!((d - expected).abs() < 1e-15);
        assert!((d + 3.162e-3).abs() < 1e-6);
        assert!((a.mean_square_step()[0] - 0.1 * d * d).abs() < 1e-20);
    }

    #[test]
    fn zero_gradient_decays_both_averages() {
        let mut a = adadelta(1e-6);
        a.step(&vec![1.0].into()).unwrap();
        let (g0, x0) = (a.mean_square_grad()[0], a.mean_square_step()[0]);
        assert_eq!(a.step(&ParamVector::zeros(1)).unwrap().delta[0], 0.0);
        assert_eq!(a.mean_square_grad()[0], 0.9 * g0);
        assert_eq!(a.mean_square_step()[0], 0.9 * x0);
    }

    #[test]
    fn zero_epsilon_never_moves() {
        let mut a = adadelta(0.0);
        for _ in 0..20 {
            assert_eq!(a.step(&vec![1.0].into()).unwrap().delta[0], 0.0);
        }
    }
}
