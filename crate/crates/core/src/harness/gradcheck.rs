use serde::Serialize;

use crate::error::Result;
use crate::models::{
    finite_diff_oracle, relative_error, Batch, GradOracle, LogRegModel, MlpModel, QuadraticModel,
};
use crate::param::ParamVector;
use crate::rng::Rng;

pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub model: String,
    pub draws: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

fn check(
    model: &dyn GradOracle,
    draws: usize,
    rng: &mut Rng,
    mut draw: impl FnMut(&mut Rng) -> (ParamVector, Vec<f64>, Vec<usize>, usize),
) -> Result<GradcheckReport> {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (p, x, y, f) = draw(rng);
        let batch = if y.is_empty() { Batch::empty() } else { Batch::new(&x, &y, f)? };
        let mask = model.sample_mask(batch.rows(), rng);
        let (_, g) = model.eval(&p, &batch, mask.as_ref())?;
        let fd = finite_diff_oracle(model, &p, &batch, mask.as_ref(), GRADCHECK_STEP)?;
        worst = worst.max(relative_error(&g, &fd));
    }
    Ok(GradcheckReport {
        model: model.name().to_string(),
        draws,
        max_relative_error: worst,
        tolerance: GRADCHECK_TOLERANCE,
    })
}

/// Compares analytic and central-difference gradients of every model at
/// `draws` random points. The MLP is checked with frozen dropout masks.
pub fn gradcheck_suite(draws: usize, seed: u64) -> Result<Vec<GradcheckReport>> {
    let mut rng = Rng::from_seed(seed);
    let quad = check(&QuadraticModel, draws, &mut rng, |r| {
        let p = vec![r.uniform(-10.0, 10.0), r.uniform(-10.0, 10.0)].into();
        (p, Vec::new(), Vec::new(), 1)
    })?;
    let (f, k, n) = (5, 3, 12);
    let logreg = LogRegModel::new(f, k)?;
    let lr = check(&logreg, draws, &mut rng, |r| {
        let p = (0..logreg.param_count()).map(|_| r.normal()).collect();
        let x = (0..n * f).map(|_| r.normal() * 2.0).collect();
        let y = (0..n).map(|_| r.below(k)).collect();
        (p, x, y, f)
    })?;
    let mlp = MlpModel::new(6, 8, 3, MlpModel::DEFAULT_DROPOUT)?;
    let nn = check(&mlp, draws, &mut rng, |r| {
        let p = (0..mlp.param_count()).map(|_| r.normal() * 0.7).collect();
        let x = (0..5 * 6).map(|_| r.normal()).collect();
        let y = (0..5).map(|_| r.below(3)).collect();
        (p, x, y, 6)
    })?;
    Ok(vec![quad, lr, nn])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let reports = gradcheck_suite(20, 1).unwrap();
        assert_eq!(reports.len(), 3);
        for r in reports {
            assert!(r.passed(), "{r:?}");
        }
    }
}
