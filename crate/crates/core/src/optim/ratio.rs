//! Effective-ratio bookkeeping.
//!
//! The effective ratio of a parameter over a window of steps is
//! `|sum of steps| / sum of |steps|`: 1 when every step points the same way,
//! 0 for a perfect zigzag. Both sums are accumulated incrementally, so no step
//! history is stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVector;

use super::HyperParams;

/// Total absolute movement at or below which a parameter counts as unmoved.
pub const ER_ZERO_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    /// The window restarts at every epoch boundary.
    #[default]
    #[serde(alias = "per-epoch")]
    Epoch,
    /// The window spans the whole run; resets are ignored.
    Growing,
}

impl std::str::FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epoch" | "per-epoch" => Ok(WindowMode::Epoch),
            "growing" => Ok(WindowMode::Growing),
            other => Err(Error::invalid(format!("unknown window mode {other:?}"))),
        }
    }
}

/// Running signed and absolute step sums for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ErWindow {
    signed: Vec<f64>,
    abs: Vec<f64>,
    steps: usize,
    seen_any: bool,
    mode: WindowMode,
}

impl ErWindow {
    pub fn new(dim: usize, mode: WindowMode) -> Self {
        ErWindow {
            signed: vec![0.0; dim],
            abs: vec![0.0; dim],
            steps: 0,
            seen_any: false,
            mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.signed.len()
    }

    pub fn mode(&self) -> WindowMode {
        self.mode
    }

    /// Number of steps accumulated since the last reset (`M`).
    pub fn steps_in_window(&self) -> usize {
        self.steps
    }

    pub fn signed_sum(&self) -> &[f64] {
        &self.signed
    }

    pub fn abs_sum(&self) -> &[f64] {
        &self.abs
    }

    pub fn record(&mut self, delta: &ParamVector) -> Result<()> {
        delta.check_len(self.dim())?;
        for ((s, a), &d) in self.signed.iter_mut().zip(&mut self.abs).zip(delta.iter()) {
            *s += d;
            *a += d.abs();
        }
        self.steps += 1;
        self.seen_any = true;
        Ok(())
    }

    /// Clears the sums. The "has history" flag survives, so a reset window
    /// reports 0 for every parameter until it sees a step.
    pub fn reset(&mut self) {
        if self.mode == WindowMode::Growing {
            return;
        }
        self.signed.iter_mut().for_each(|v| *v = 0.0);
        self.abs.iter_mut().for_each(|v| *v = 0.0);
        self.steps = 0;
    }

    /// Effective ratio of parameter `i`.
    #[inline]
    pub fn ratio_at(&self, i: usize) -> f64 {
        if !self.seen_any {
            return 1.0;
        }
        let total = self.abs[i];
        if total <= ER_ZERO_GUARD {
            0.0
        } else {
            (self.signed[i].abs() / total).min(1.0)
        }
    }

    /// Effective ratio of every parameter; all ones before the first step.
    pub fn effective_ratio(&self) -> ParamVector {
        (0..self.dim()).map(|i| self.ratio_at(i)).collect()
    }
}

/// EMA period `N` matching decay constant `rho` via `1 - rho = 2 / (N + 1)`.
pub fn sc_period(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(format!("decay constant must lie in [0, 1), got {rho}")));
    }
    Ok(2.0 / (1.0 - rho) - 1.0)
}

/// Per-dimension smoothing constant interpolated between the slow constant
/// `1 - rho2` (ratio 0) and the fast constant `1 - rho1` (ratio 1).
#[inline]
pub(crate) fn ssc(e: f64, rho1: f64, rho2: f64) -> f64 {
    (rho2 - rho1) * e + (1.0 - rho2)
}

pub fn scaled_smoothing_constant(e: &ParamVector, hp: &HyperParams) -> ParamVector {
    e.map(|v| ssc(v, hp.rho1, hp.rho2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_after(steps: &[f64]) -> ErWindow {
        let mut w = ErWindow::new(1, WindowMode::Epoch);
        for &s in steps {
            w.record(&vec![s].into()).unwrap();
        }
        w
    }

    #[test]
    fn period_examples() {
        assert!((sc_period(0.9).unwrap() - 19.0).abs() < 1e-12);
        assert_eq!(sc_period(0.0).unwrap(), 1.0);
        assert!((sc_period(0.99).unwrap() - 199.0).abs() < 1e-9);
        assert!(sc_period(1.0).is_err());
    }

    #[test]
    fn monotone_history_has_unit_ratio() {
        assert_eq!(window_after(&[1.0, 1.0, 1.0, 1.0]).ratio_at(0), 1.0);
    }

    #[test]
    fn zigzag_history_has_zero_ratio() {
        assert_eq!(window_after(&[1.0, -1.0, 1.0, -1.0]).ratio_at(0), 0.0);
    }

    #[test]
    fn partial_trend() {
        let w = window_after(&[2.0, -1.0, 2.0, -1.0]);
        assert!((w.ratio_at(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn record_accumulates() {
        let w = window_after(&[1.0, -1.0]);
        assert_eq!((w.signed_sum()[0], w.abs_sum()[0]), (0.0, 2.0));
        let w = window_after(&[2.0]);
        assert_eq!((w.signed_sum()[0], w.abs_sum()[0]), (2.0, 2.0));
        let w = window_after(&[2.0, -1.0]);
        assert_eq!((w.signed_sum()[0], w.abs_sum()[0], w.steps_in_window()), (1.0, 3.0, 2));
        assert!((w.ratio_at(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_history_means_full_trend() {
        let w = ErWindow::new(3, WindowMode::Epoch);
        assert_eq!(w.effective_ratio(), ParamVector::filled(3, 1.0));
    }

    #[test]
    fn unmoved_parameter_after_history_is_zero() {
        let mut w = ErWindow::new(2, WindowMode::Epoch);
        w.record(&vec![0.5, 0.0].into()).unwrap();
        assert_eq!(w.effective_ratio(), vec![1.0, 0.0].into());
    }

    #[test]
    fn reset_then_single_step() {
        let mut w = window_after(&[1.0, -4.0]);
        w.reset();
        assert_eq!(w.steps_in_window(), 0);
        w.record(&vec![3.0].into()).unwrap();
        assert_eq!(w.ratio_at(0), 1.0);
        assert_eq!(w.steps_in_window(), 1);
    }

    #[test]
    fn growing_window_ignores_reset() {
        let mut w = ErWindow::new(1, WindowMode::Growing);
        w.record(&vec![2.0].into()).unwrap();
        w.record(&vec![-1.0].into()).unwrap();
        w.reset();
        assert_eq!(w.steps_in_window(), 2);
        assert!((w.ratio_at(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ssc_examples() {
        let hp = HyperParams::default();
        let c = scaled_smoothing_constant(&vec![1.0, 0.0, 0.5].into(), &hp);
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert!((c[1] - 0.01).abs() < 1e-15);
        assert!((c[2] - 0.255).abs() < 1e-15);
    }

    #[test]
    fn window_mode_parses() {
        assert_eq!("epoch".parse::<WindowMode>().unwrap(), WindowMode::Epoch);
        assert_eq!("growing".parse::<WindowMode>().unwrap(), WindowMode::Growing);
        assert!("weekly".parse::<WindowMode>().is_err());
    }
}
