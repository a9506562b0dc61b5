//! AdaSmooth and its random-decay ablation.
//!
//! Each dimension keeps an EMA of squared gradients whose smoothing constant
//! is chosen per step from that dimension's effective ratio: trending
//! dimensions get the fast constant `1 - rho1`, zigzagging ones the slow
//! constant `1 - rho2`. The constant is squared before use, so with
//! `rho1 == rho2 == rho` the rule is exactly RMSProp with decay
//! `1 - (1 - rho)^2`.

use crate::error::Result;
use crate::param::ParamVector;
use crate::rng::Rng;

use super::ratio::ssc;
use super::{check_grad, ErWindow, HyperParams, Optimizer, StepResult, WindowMode};

#[derive(Debug, Clone)]
pub struct AdaSmooth {
    hp: HyperParams,
    eg2: Vec<f64>,
    window: ErWindow,
}

impl AdaSmooth {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode) -> Self {
        AdaSmooth {
            hp,
            eg2: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
        }
    }

    pub fn mean_square_grad(&self) -> &[f64] {
        &self.eg2
    }
}

/// One AdaSmooth update for a single dimension with smoothing constant `c`.
#[inline]
fn smoothed_step(eg2: &mut f64, g: f64, c: f64, eta: f64, epsilon: f64) -> f64 {
    let c2 = c * c;
    *eg2 = c2 * g * g + (1.0 - c2) * *eg2;
    if g == 0.0 {
        0.0
    } else {
        -eta * g / (*eg2 + epsilon).sqrt()
    }
}

impl Optimizer for AdaSmooth {
    fn name(&self) -> &'static str {
        "adasmooth"
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
            ..
        } = self.hp;
        let d = self.dim();
        let mut delta = Vec::with_capacity(d);
        let mut er = Vec::with_capacity(d);
        let mut sc = Vec::with_capacity(d);
        for (i, (m, &g)) in self.eg2.iter_mut().zip(grad.iter()).enumerate() {
            let e = self.window.ratio_at(i);
            let c = ssc(e, rho1, rho2);
            delta.push(smoothed_step(m, g, c, eta, epsilon));
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

/// Ablation: instead of the effective ratio, each step draws one decay
/// constant uniformly from `[rho1, rho2]` and shares it across dimensions.
#[derive(Debug, Clone)]
pub struct AdaSmoothRandom {
    hp: HyperParams,
    eg2: Vec<f64>,
    window: ErWindow,
    rng: Rng,
    last_rho: Option<f64>,
}

impl AdaSmoothRandom {
    pub fn new(dim: usize, hp: HyperParams, mode: WindowMode, rng: Rng) -> Self {
        AdaSmoothRandom {
            hp,
            eg2: vec![0.0; dim],
            window: ErWindow::new(dim, mode),
            rng,
            last_rho: None,
        }
    }

    /// Decay constant drawn for the most recent step.
    pub fn last_rho(&self) -> Option<f64> {
        self.last_rho
    }

    pub fn mean_square_grad(&self) -> &[f64] {
        &self.eg2
    }
}

impl Optimizer for AdaSmoothRandom {
    fn name(&self) -> &'static str {
        "adasmooth-random"
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
            ..
        } = self.hp;
        let rho = self.rng.uniform(rho1, rho2);
        self.last_rho = Some(rho);
        let c = 1.0 - rho;
        let delta: ParamVector = self
            .eg2
            .iter_mut()
            .zip(grad.iter())
            .map(|(m, &g)| smoothed_step(m, g, c, eta, epsilon))
            .collect();
        Ok(StepResult {
            delta,
            er: Some(self.window.effective_ratio()),
            ssc: Some(ParamVector::filled(self.dim(), c)),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::RmsProp;

    #[test]
    fn first_step_uses_fast_constant() {
        let mut a = AdaSmooth::new(1, HyperParams::default(), WindowMode::Epoch);
        let r = a.step(&vec![2.0].into()).unwrap();
        assert_eq!(r.er.unwrap()[0], 1.0);
        assert_eq!(r.ssc.unwrap()[0], 0.5);
        assert_eq!(a.mean_square_grad(), &[1.0]);
        assert!((r.delta[0] + 0.002).abs() < 1e-8);
        assert!((r.delta[0] + 0.002 / (1.0f64 + 1e-6).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_decays_average() {
        let mut a = AdaSmooth::new(1, HyperParams::default(), WindowMode::Epoch);
        let r = a.step(&vec![2.0].into()).unwrap();
        a.record_step(&r.delta).unwrap();
        let r = a.step(&ParamVector::zeros(1)).unwrap();
        assert_eq!(r.delta[0], 0.0);
        // one step in the window, so e = 1 and c = 0.5
        assert_eq!(a.mean_square_grad(), &[0.75]);
    }

    #[test]
    fn equal_rhos_match_rmsprop() {
        let rho = 0.9;
        let hp = HyperParams::default().with_rhos(rho, rho);
        let rms_hp = HyperParams::default().with_rho(1.0 - (1.0 - rho) * (1.0 - rho));
        let mut a = AdaSmooth::new(2, hp, WindowMode::Epoch);
        let mut r = RmsProp::new(2, rms_hp, WindowMode::Epoch);
        for k in 0..200 {
            let g: ParamVector = vec![(k as f64 * 0.37).sin(), (k as f64 * 1.3).cos() * 3.0].into();
            let da = a.step(&g).unwrap().delta;
            a.record_step(&da).unwrap();
            let dr = r.step(&g).unwrap().delta;
            assert!(da.max_abs_diff(&dr).unwrap() < 1e-15);
        }
    }

    #[test]
    fn random_with_equal_rhos_matches_adasmooth() {
        let hp = HyperParams::default().with_rhos(0.7, 0.7);
        let mut a = AdaSmooth::new(2, hp, WindowMode::Epoch);
        let mut b = AdaSmoothRandom::new(2, hp, WindowMode::Epoch, Rng::from_seed(1));
        for k in 0..50 {
            let g: ParamVector = vec![k as f64 - 20.0, 0.5].into();
            let da = a.step(&g).unwrap().delta;
            let db = b.step(&g).unwrap().delta;
            a.record_step(&da).unwrap();
            b.record_step(&db).unwrap();
            assert_eq!(da, db);
        }
    }

    #[test]
    fn random_draws_are_uniform_in_range() {
        let hp = HyperParams::default().with_rhos(0.5, 0.99);
        let mut b = AdaSmoothRandom::new(1, hp, WindowMode::Epoch, Rng::from_seed(3));
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            b.step(&vec![1.0].into()).unwrap();
            let rho = b.last_rho().unwrap();
            assert!((0.5..0.99).contains(&rho));
            sum += rho;
        }
        // U[0.5, 0.99] has sd 0.49/sqrt(12); allow 4 standard errors.
        let se = 0.49 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((sum / n as f64 - 0.745).abs() < 4.0 * se);
    }

    #[test]
    fn random_ssc_is_shared_across_dimensions() {
        let hp = HyperParams::default().with_rhos(0.5, 0.99);
        let mut b = AdaSmoothRandom::new(4, hp, WindowMode::Epoch, Rng::from_seed(9));
        let c = b.step(&ParamVector::filled(4, 1.0)).unwrap().ssc.unwrap();
        assert!(c.iter().all(|v| *v == c[0]));
        assert!((c[0] - (1.0 - b.last_rho().unwrap())).abs() < 1e-15);
    }
}
