use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Rng;

use super::{Batch, DropoutMask, GradOracle};

/// The ravine-shaped convex function
/// `L(x) = 2 (x1 - 3)^2 + 20 (x2 - 2)^2 + 5`, minimised at `(3, 2)` with `L = 5`.
///
/// Curvature is 4 along `x1` and 40 along `x2`, so plain gradient descent
/// oscillates across the valley once `eta > 2 / 40`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticModel;

impl QuadraticModel {
    pub const START: [f64; 2] = [-2.0, 5.0];
    pub const MINIMUM: [f64; 2] = [3.0, 2.0];
    pub const CURVATURE: [f64; 2] = [4.0, 40.0];

    pub fn value(x: &[f64]) -> f64 {
        2.0 * (x[0] - 3.0).powi(2) + 20.0 * (x[1] - 2.0).powi(2) + 5.0
    }

    pub fn gradient(x: &[f64]) -> [f64; 2] {
        [4.0 * x[0] - 12.0, 40.0 * x[1] - 80.0]
    }

    /// Loss and gradient at `x`.
    pub fn eval_at(x: &ParamVector) -> Result<(f64, ParamVector)> {
        if x.len() != 2 {
            return Err(Error::LengthMismatch {
                expected: 2,
                actual: x.len(),
            });
        }
        Ok((Self::value(x), Self::gradient(x).to_vec().into()))
    }
}

impl GradOracle for QuadraticModel {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn param_count(&self) -> usize {
        2
    }

    /// Always the fixed starting point `(-2, 5)`.
    fn init_params(&self, _rng: &mut Rng) -> Result<ParamVector> {
        Ok(Self::START.to_vec().into())
    }

    fn eval(
        &self,
        params: &ParamVector,
        _batch: &Batch<'_>,
        _mask: Option<&DropoutMask>,
    ) -> Result<(f64, ParamVector)> {
        Self::eval_at(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{accuracy, finite_diff_oracle};

    #[test]
    fn minimum() {
        let (loss, grad) = QuadraticModel::eval_at(&vec![3.0, 2.0].into()).unwrap();
        assert_eq!(loss, 5.0);
        assert_eq!(grad, ParamVector::zeros(2));
    }

    #[test]
    fn start_point() {
        let (loss, grad) = QuadraticModel::eval_at(&vec![-2.0, 5.0].into()).unwrap();
        assert_eq!(loss, 235.0);
        assert_eq!(grad, vec![-20.0, 120.0].into());
    }

    #[test]
    fn wrong_dimension() {
        assert!(QuadraticModel::eval_at(&ParamVector::zeros(3)).is_err());
    }

    #[test]
    fn finite_differences_at_start() {
        let fd = finite_diff_oracle(
            &QuadraticModel,
            &vec![-2.0, 5.0].into(),
            &Batch::empty(),
            None,
            1e-6,
        )
        .unwrap();
        assert!((fd[0] + 20.0).abs() < 1e-6);
        assert!((fd[1] - 120.0).abs() < 1e-6);
    }

    #[test]
    fn accuracy_is_not_applicable() {
        let err = accuracy(&QuadraticModel, &ParamVector::zeros(2), &Batch::empty());
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
