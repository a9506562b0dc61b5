//! Central finite differences, used as an independent oracle for the
//! analytic gradients.

use crate::error::Result;
use crate::param::ParamVector;

use super::{Batch, DropoutMask, GradOracle};

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, params: &ParamVector, h: f64) -> Result<ParamVector>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut x = params.as_slice().to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = f(&x)?;
        x[i] = orig - h;
        let minus = f(&x)?;
        x[i] = orig;
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad.into())
}

/// Finite-difference gradient of a model's batch loss with `mask` frozen.
pub fn finite_diff_oracle(
    oracle: &dyn GradOracle,
    params: &ParamVector,
    batch: &Batch<'_>,
    mask: Option<&DropoutMask>,
    h: f64,
) -> Result<ParamVector> {
    finite_diff_grad(|x| oracle.loss(&x.to_vec().into(), batch, mask), params, h)
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute difference when both
/// vectors are (numerically) zero.
pub fn relative_error(a: &ParamVector, b: &ParamVector) -> f64 {
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a.norm().max(b.norm());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
