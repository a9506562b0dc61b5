//! Flat parameter vectors and elementwise arithmetic.
//!
//! Models store matrices row-major inside a single [`ParamVector`] and carry
//! the shape metadata themselves.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ElementwiseOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ElementwiseOp::Add => a + b,
            ElementwiseOp::Sub => a - b,
            ElementwiseOp::Mul => a * b,
            ElementwiseOp::Div => a / b,
        }
    }
}

/// A fixed-length vector of `f64` parameters, gradients, or steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        ParamVector(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Mutable access to the values. The length cannot change through this.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() == expected {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected,
                actual: self.len(),
            })
        }
    }

    pub fn elementwise(&self, other: &ParamVector, op: ElementwiseOp) -> Result<ParamVector> {
        other.check_len(self.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| op.apply(a, b))
            .collect())
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.elementwise(other, ElementwiseOp::Add)
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.elementwise(other, ElementwiseOp::Sub)
    }

    pub fn mul(&self, other: &ParamVector) -> Result<ParamVector> {
        self.elementwise(other, ElementwiseOp::Mul)
    }

    pub fn div(&self, other: &ParamVector) -> Result<ParamVector> {
        self.elementwise(other, ElementwiseOp::Div)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        self.0.iter().map(|&v| f(v)).collect()
    }

    pub fn scale(&self, k: f64) -> ParamVector {
        self.map(|v| v * k)
    }

    /// In-place `self += other`, used to apply a step to the parameters.
    pub fn add_assign(&mut self, other: &ParamVector) -> Result<()> {
        other.check_len(self.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.0.iter().position(|v| !v.is_finite())
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> Result<f64> {
        other.check_len(self.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl FromIterator<f64> for ParamVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        ParamVector(iter.into_iter().collect())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `fan_in * fan_out` weights drawn uniformly from `[-b, b]` with the Glorot
/// bound. Biases are not part of the returned vector; models zero them.
pub fn uniform_init(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Result<ParamVector> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::invalid("fan_in and fan_out must be at least 1"));
    }
    let bound = glorot_bound(fan_in, fan_out);
    Ok((0..fan_in * fan_out)
        .map(|_| rng.uniform(-bound, bound))
        .collect())
}
