use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Rng;

use super::softmax::softmax_xent;
use super::{Batch, DropoutMask, GradOracle};

/// Multinomial logistic regression.
///
/// Parameters are the `classes x features` weight matrix (row-major)
/// followed by one bias per class. The loss is mean cross-entropy.
#[derive(Debug, Clone)]
pub struct LogRegModel {
    features: usize,
    classes: usize,
}

impl LogRegModel {
    pub fn new(features: usize, classes: usize) -> Result<Self> {
        if features == 0 || classes < 2 {
            return Err(Error::invalid(format!(
                "logistic regression needs >= 1 feature and >= 2 classes, got {features} and {classes}"
            )));
        }
        Ok(LogRegModel { features, classes })
    }

    fn check(&self, params: &ParamVector, batch: &Batch<'_>) -> Result<()> {
        params.check_len(self.param_count())?;
        if batch.n_features != self.features {
            return Err(Error::invalid(format!(
                "model expects {} features, batch has {}",
                self.features, batch.n_features
            )));
        }
        if batch.rows() == 0 {
            return Err(Error::invalid("empty batch"));
        }
        if let Some(&bad) = batch.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        Ok(())
    }

    fn logits_into(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let (w, b) = params.split_at(self.classes * self.features);
        for (k, z) in out.iter_mut().enumerate() {
            let row = &w[k * self.features..(k + 1) * self.features];
            *z = b[k] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

impl GradOracle for LogRegModel {
    fn name(&self) -> &'static str {
        "logreg"
    }

    fn param_count(&self) -> usize {
        self.classes * (self.features + 1)
    }

    fn classes(&self) -> Option<usize> {
        Some(self.classes)
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamVector> {
        let mut p = crate::param::uniform_init(self.features, self.classes, rng)?.into_vec();
        p.resize(self.param_count(), 0.0);
        Ok(p.into())
    }

    fn eval(
        &self,
        params: &ParamVector,
        batch: &Batch<'_>,
        _mask: Option<&DropoutMask>,
    ) -> Result<(f64, ParamVector)> {
        self.check(params, batch)?;
        let n = batch.rows() as f64;
        let mut grad = vec![0.0; self.param_count()];
        let mut logits = vec![0.0; self.classes];
        let mut loss = 0.0;
        let nw = self.classes * self.features;
        for i in 0..batch.rows() {
            let x = batch.row(i);
            self.logits_into(params, x, &mut logits);
            let (l, dz) = softmax_xent(&logits, batch.labels[i]);
            loss += l;
            let (gw, gb) = grad.split_at_mut(nw);
            for (k, &d) in dz.iter().enumerate() {
                let d = d / n;
                gb[k] += d;
                for (g, &xj) in gw[k * self.features..(k + 1) * self.features].iter_mut().zip(x) {
                    *g += d * xj;
                }
            }
        }
        Ok((loss / n, grad.into()))
    }

    fn class_scores(&self, params: &ParamVector, batch: &Batch<'_>) -> Result<Vec<f64>> {
        params.check_len(self.param_count())?;
        if batch.n_features != self.features {
            return Err(Error::invalid("feature count mismatch"));
        }
        let mut out = vec![0.0; batch.rows() * self.classes];
        for (i, z) in out.chunks_exact_mut(self.classes).enumerate() {
            self.logits_into(params, batch.row(i), z);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{finite_diff_oracle, relative_error};

    fn random_batch(rows: usize, features: usize, classes: usize, rng: &mut Rng) -> (Vec<f64>, Vec<usize>) {
        let x = (0..rows * features).map(|_| rng.normal()).collect();
        let y = (0..rows).map(|_| rng.below(classes)).collect();
        (x, y)
    }

    #[test]
    fn zero_weights_balanced_batch() {
        let m = LogRegModel::new(3, 2).unwrap();
        let x = [1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let b = Batch::new(&x, &[0, 1], 3).unwrap();
        let (loss, _) = m.eval(&ParamVector::zeros(m.param_count()), &b, None).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::from_seed(12);
        let m = LogRegModel::new(4, 3).unwrap();
        for _ in 0..20 {
            let (x, y) = random_batch(5, 4, 3, &mut rng);
            let b = Batch::new(&x, &y, 4).unwrap();
            let p: ParamVector = (0..m.param_count()).map(|_| rng.normal()).collect();
            let (_, g) = m.eval(&p, &b, None).unwrap();
            let fd = finite_diff_oracle(&m, &p, &b, None, 1e-6).unwrap();
            assert!(relative_error(&g, &fd) < 1e-5);
        }
    }

    #[test]
    fn duplicated_batch_is_invariant() {
        let mut rng = Rng::from_seed(13);
        let m = LogRegModel::new(3, 4).unwrap();
        let (x, y) = random_batch(6, 3, 4, &mut rng);
        let p: ParamVector = (0..m.param_count()).map(|_| rng.normal()).collect();
        let (l1, g1) = m.eval(&p, &Batch::new(&x, &y, 3).unwrap(), None).unwrap();
        let x2: Vec<f64> = x.iter().chain(&x).copied().collect();
        let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
        let (l2, g2) = m.eval(&p, &Batch::new(&x2, &y2, 3).unwrap(), None).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.max_abs_diff(&g2).unwrap() < 1e-12);
    }

    #[test]
    fn loss_is_convex_along_segments() {
        let mut rng = Rng::from_seed(14);
        let m = LogRegModel::new(3, 3).unwrap();
        let (x, y) = random_batch(8, 3, 3, &mut rng);
        let b = Batch::new(&x, &y, 3).unwrap();
        for _ in 0..50 {
            let p: ParamVector = (0..m.param_count()).map(|_| 3.0 * rng.normal()).collect();
            let q: ParamVector = (0..m.param_count()).map(|_| 3.0 * rng.normal()).collect();
            let mid = p.add(&q).unwrap().scale(0.5);
            let lp = m.loss(&p, &b, None).unwrap();
            let lq = m.loss(&q, &b, None).unwrap();
            let lm = m.loss(&mid, &b, None).unwrap();
            assert!(lm <= 0.5 * (lp + lq) + 1e-10);
        }
    }

    #[test]
    fn rejects_bad_labels_and_shapes() {
        let m = LogRegModel::new(2, 2).unwrap();
        let p = ParamVector::zeros(m.param_count());
        let b = Batch::new(&[1.0, 2.0], &[5], 2).unwrap();
        assert!(m.eval(&p, &b, None).is_err());
        let b = Batch::new(&[1.0, 2.0, 3.0], &[0], 3).unwrap();
        assert!(m.eval(&p, &b, None).is_err());
        assert!(LogRegModel::new(2, 1).is_err());
    }

    #[test]
    fn init_zeroes_biases() {
        let m = LogRegModel::new(5, 3).unwrap();
        let p = m.init_params(&mut Rng::from_seed(1)).unwrap();
        assert_eq!(&p[15..], &[0.0, 0.0, 0.0]);
        assert!(p[..15].iter().any(|v| *v != 0.0));
    }
}
