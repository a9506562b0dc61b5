use crate::error::Result;
use crate::param::ParamVector;

use super::ratio::ssc;
use super::{check_grad, DeltaDecay, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

/// AdaSmoothDelta: the AdaDelta unit-matched step with effective-ratio driven
/// smoothing on both moving averages.
///
/// The squared-gradient average gives weight `c^2` to the new value; the
/// squared-step average gives `1 - c^2`, so a zigzagging dimension (small
/// `c`) averages gradients over a long period but reacts quickly in the
/// numerator. The step uses the step average from the previous iteration.
#[derive(Debug, Clone)]
pub struct AdaSmoothDelta {
    hp: HyperParams,
    eg2: Vec<f64>,
    edx2: Vec<f64>,
    window: ErWindow,
}

impl AdaSmoothDelta {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        AdaSmoothDelta {
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

impl Optimizer for AdaSmoothDelta {
    fn name(&self) -> &'static str {
        "adasmooth-delta"
    }

    fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    fn step(&mut self, grad: &ParamVector) -> Result<StepResult> {
        check_grad(grad, self.dim())?;
        let HyperParams {
            eta,
            rho1,
            rho2,
            epsilon,
            delta_decay,
            ..
        } = self.hp;
        let d = self.dim();
        let mut delta = Vec::with_capacity(d);
        let mut er = Vec::with_capacity(d);
        let mut sc = Vec::with_capacity(d);
        for i in 0..d {
            let g = grad[i];
            let e = self.window.ratio_at(i);
            let c = ssc(e, rho1, rho2);
            let c2 = c * c;
            let mg = &mut self.eg2[i];
            *mg = c2 * g * g + (1.0 - c2) * *mg;
            let mdx = &mut self.edx2[i];
            let step = if g == 0.0 {
                0.0
            } else {
                -eta * (*mdx + epsilon).sqrt() / (*mg + epsilon).sqrt() * g
            };
            *mdx = match delta_decay {
                DeltaDecay::Adaptive => (1.0 - c2) * step * step + c2 * *mdx,
                DeltaDecay::Fixed => (1.0 - rho2) * step * step + rho2 * *mdx,
            };
            delta.push(step);
            er.push(e);
            sc.push(c);
        }
        Ok(StepResult {
            delta: delta.into(),
            er: Some(er.into()),
            ssc: Some(sc.into()),
        })
    }

    fn window(&self) -> &ErWindow {
        &self.window
    }

    fn window_mut(&mut self) -> &mut ErWindow {
        &mut self.window
    }

    fn uses_effective_ratio(&self) -> bool {
        true
    }
}
