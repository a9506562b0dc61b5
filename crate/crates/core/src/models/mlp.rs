use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Rng;

use super::softmax::softmax_xent;
use super::{Batch, DropoutMask, GradOracle};

/// One-hidden-layer perceptron: dense -> ReLU -> dropout -> dense -> softmax.
///
/// Parameter layout: `W1 (hidden x inputs)`, `b1 (hidden)`,
/// `W2 (classes x hidden)`, `b2 (classes)`, all row-major. Dropout is
/// inverted: kept units are scaled by `1 / (1 - rate)` during training, so
/// evaluation uses the plain network.
#[derive(Debug, Clone)]
pub struct MlpModel {
    inputs: usize,
    hidden: usize,
    classes: usize,
    dropout: f64,
}

struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl MlpModel {
    pub const DEFAULT_HIDDEN: usize = 128;
    pub const DEFAULT_DROPOUT: f64 = 0.5;

    pub fn new(inputs: usize, hidden: usize, classes: usize, dropout: f64) -> Result<Self> {
        if inputs == 0 || hidden == 0 || classes < 2 {
            return Err(Error::invalid("MLP needs inputs >= 1, hidden >= 1, classes >= 2"));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::invalid(format!("dropout rate must lie in [0, 1), got {dropout}")));
        }
        Ok(MlpModel {
            inputs,
            hidden,
            classes,
            dropout,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    /// Architecture in `F(units:activation)DP(rate)` notation.
    pub fn architecture(&self) -> String {
        format!("F({}:Relu)DP({})F({}:Softmax)", self.hidden, self.dropout, self.classes)
    }

    fn offsets(&self) -> Offsets {
        let w1 = 0;
        let b1 = w1 + self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        Offsets { w1, b1, w2, b2 }
    }

    fn check(&self, params: &ParamVector, batch: &Batch<'_>, mask: Option<&DropoutMask>) -> Result<()> {
        params.check_len(self.param_count())?;
        if batch.n_features != self.inputs {
            return Err(Error::invalid(format!(
                "model expects {} inputs, batch has {}",
                self.inputs, batch.n_features
            )));
        }
        if batch.rows() == 0 {
            return Err(Error::invalid("empty batch"));
        }
        if let Some(&bad) = batch.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        if let Some(m) = mask {
            if m.units != self.hidden || m.scale.len() != self.hidden * batch.rows() {
                return Err(Error::invalid("dropout mask does not match batch"));
            }
        }
        Ok(())
    }

    /// Pre-activations of the hidden layer for one sample.
    fn hidden_pre(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let o = self.offsets();
        let w1 = &params[o.w1..o.b1];
        let b1 = &params[o.b1..o.w2];
        for (j, z) in out.iter_mut().enumerate() {
            let row = &w1[j * self.inputs..(j + 1) * self.inputs];
            *z = b1[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn output(&self, params: &[f64], h: &[f64], out: &mut [f64]) {
        let o = self.offsets();
        let w2 = &params[o.w2..o.b2];
        let b2 = &params[o.b2..];
        for (k, z) in out.iter_mut().enumerate() {
            let row = &w2[k * self.hidden..(k + 1) * self.hidden];
            *z = b2[k] + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

impl GradOracle for MlpModel {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn param_count(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.classes * (self.hidden + 1)
    }

    fn classes(&self) -> Option<usize> {
        Some(self.classes)
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamVector> {
        let o = self.offsets();
        let mut p = vec![0.0; self.param_count()];
        let w1 = crate::param::uniform_init(self.inputs, self.hidden, rng)?;
        p[o.w1..o.b1].copy_from_slice(&w1);
        let w2 = crate::param::uniform_init(self.hidden, self.classes, rng)?;
        p[o.w2..o.b2].copy_from_slice(&w2);
        Ok(p.into())
    }

    fn sample_mask(&self, rows: usize, rng: &mut Rng) -> Option<DropoutMask> {
        (self.dropout > 0.0).then(|| DropoutMask::sample(rows, self.hidden, self.dropout, rng))
    }

    fn eval(
        &self,
        params: &ParamVector,
        batch: &Batch<'_>,
        mask: Option<&DropoutMask>,
    ) -> Result<(f64, ParamVector)> {
        self.check(params, batch, mask)?;
        let o = self.offsets();
        let p = params.as_slice();
        let n = batch.rows() as f64;
        let mut grad = vec![0.0; self.param_count()];
        let mut pre = vec![0.0; self.hidden];
        let mut h = vec![0.0; self.hidden];
        let mut dh = vec![0.0; self.hidden];
        let mut logits = vec![0.0; self.classes];
        let mut loss = 0.0;
        for i in 0..batch.rows() {
            let x = batch.row(i);
            self.hidden_pre(p, x, &mut pre);
            let scale = mask.map(|m| m.row(i));
            for j in 0..self.hidden {
                let a = pre[j].max(0.0);
                h[j] = scale.map_or(a, |s| a * s[j]);
            }
            self.output(p, &h, &mut logits);
            let (l, dz) = softmax_xent(&logits, batch.labels[i]);
            loss += l;

            dh.iter_mut().for_each(|v| *v = 0.0);
            {
                let (head, gb2) = grad.split_at_mut(o.b2);
                let gw2 = &mut head[o.w2..];
                let w2 = &p[o.w2..o.b2];
                for (k, &d) in dz.iter().enumerate() {
                    let d = d / n;
                    gb2[k] += d;
                    let grow = &mut gw2[k * self.hidden..(k + 1) * self.hidden];
                    let wrow = &w2[k * self.hidden..(k + 1) * self.hidden];
                    for j in 0..self.hidden {
                        grow[j] += d * h[j];
                        dh[j] += d * wrow[j];
                    }
                }
            }
            let (gw1, rest) = grad.split_at_mut(o.b1);
            let gb1 = &mut rest[..self.hidden];
            for j in 0..self.hidden {
                if pre[j] <= 0.0 {
                    continue;
                }
                let dz1 = scale.map_or(dh[j], |s| dh[j] * s[j]);
                if dz1 == 0.0 {
                    continue;
                }
                gb1[j] += dz1;
                for (g, &xv) in gw1[j * self.inputs..(j + 1) * self.inputs].iter_mut().zip(x) {
                    *g += dz1 * xv;
                }
            }
        }
        Ok((loss / n, grad.into()))
    }

    fn loss(&self, params: &ParamVector, batch: &Batch<'_>, mask: Option<&DropoutMask>) -> Result<f64> {
        self.check(params, batch, mask)?;
        let p = params.as_slice();
        let mut pre = vec![0.0; self.hidden];
        let mut logits = vec![0.0; self.classes];
        let mut loss = 0.0;
        for i in 0..batch.rows() {
            self.hidden_pre(p, batch.row(i), &mut pre);
            if let Some(m) = mask {
                for (v, s) in pre.iter_mut().zip(m.row(i)) {
                    *v = v.max(0.0) * s;
                }
            } else {
                pre.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            self.output(p, &pre, &mut logits);
            loss += super::softmax::xent_loss(&logits, batch.labels[i]);
        }
        Ok(loss / batch.rows() as f64)
    }

    fn class_scores(&self, params: &ParamVector, batch: &Batch<'_>) -> Result<Vec<f64>> {
        params.check_len(self.param_count())?;
        if batch.n_features != self.inputs {
            return Err(Error::invalid("feature count mismatch"));
        }
        let p = params.as_slice();
        let mut pre = vec![0.0; self.hidden];
        let mut out = vec![0.0; batch.rows() * self.classes];
        for (i, z) in out.chunks_exact_mut(self.classes).enumerate() {
            self.hidden_pre(p, batch.row(i), &mut pre);
            pre.iter_mut().for_each(|v| *v = v.max(0.0));
            self.output(p, &pre, z);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{finite_diff_oracle, relative_error};

    fn setup(seed: u64, dropout: f64) -> (MlpModel, ParamVector, Vec<f64>, Vec<usize>, Rng) {
        let mut rng = Rng::from_seed(seed);
        let m = MlpModel::new(6, 8, 3, dropout).unwrap();
        let p: ParamVector = (0..m.param_count()).map(|_| rng.normal() * 0.7).collect();
        let x: Vec<f64> = (0..5 * 6).map(|_| rng.normal()).collect();
        let y: Vec<usize> = (0..5).map(|_| rng.below(3)).collect();
        (m, p, x, y, rng)
    }

    #[test]
    fn masked_gradient_matches_finite_differences() {
        for seed in 0..20 {
            let (m, p, x, y, mut rng) = setup(seed, 0.5);
            let b = Batch::new(&x, &y, 6).unwrap();
            let mask = m.sample_mask(5, &mut rng).unwrap();
            let (loss, g) = m.eval(&p, &b, Some(&mask)).unwrap();
            assert!((loss - m.loss(&p, &b, Some(&mask)).unwrap()).abs() < 1e-12);
            let fd = finite_diff_oracle(&m, &p, &b, Some(&mask), 1e-6).unwrap();
            let err = relative_error(&g, &fd);
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let (m, p, x, y, _) = setup(3, 0.5);
        let b = Batch::new(&x, &y, 6).unwrap();
        let a = m.eval(&p, &b, None).unwrap();
        let c = m.eval(&p, &b, None).unwrap();
        assert_eq!(a, c);
        assert_eq!(m.class_scores(&p, &b).unwrap(), m.class_scores(&p, &b).unwrap());
    }

    #[test]
    fn zero_rate_train_equals_eval() {
        let (m, p, x, y, mut rng) = setup(4, 0.0);
        let b = Batch::new(&x, &y, 6).unwrap();
        assert!(m.sample_mask(5, &mut rng).is_none());
        let mask = DropoutMask::sample(5, 8, 0.0, &mut rng);
        assert_eq!(m.eval(&p, &b, Some(&mask)).unwrap(), m.eval(&p, &b, None).unwrap());
    }

    #[test]
    fn architecture_string() {
        let m = MlpModel::new(784, 128, 10, 0.5).unwrap();
        assert_eq!(m.architecture(), "F(128:Relu)DP(0.5)F(10:Softmax)");
        assert_eq!(m.param_count(), 784 * 128 + 128 + 128 * 10 + 10);
    }

    #[test]
    fn init_zeroes_biases() {
        let m = MlpModel::new(4, 3, 2, 0.5).unwrap();
        let p = m.init_params(&mut Rng::from_seed(2)).unwrap();
        assert_eq!(&p[12..15], &[0.0; 3]);
        assert_eq!(&p[21..], &[0.0; 2]);
    }
}
