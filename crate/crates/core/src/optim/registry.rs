//! Name-keyed optimizer registry.
//!
//! The harness and CLI never name a concrete optimizer type; they resolve a
//! string such as `"adasmooth"` through [`OptimizerRegistry`] and get back a
//! boxed [`Optimizer`] plus that optimizer's default hyper-parameters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::{
    AdaDelta, AdaGrad, AdaSmooth, AdaSmoothDelta, AdaSmoothRandom, HyperParams, Momentum,
    Optimizer, RmsProp, Sgd, WindowMode,
};

/// Everything an optimizer needs at construction besides its hyper-parameters.
#[derive(Debug, Clone)]
pub struct OptimizerInit {
    pub dim: usize,
    pub window: WindowMode,
    /// Private stream for optimizers that draw random numbers.
    pub rng: Rng,
}

impl OptimizerInit {
    pub fn new(dim: usize) -> Self {
        OptimizerInit {
            dim,
            window: WindowMode::Epoch,
            rng: Rng::from_seed(0),
        }
    }

    pub fn with_window(mut self, window: WindowMode) -> Self {
        self.window = window;
        self
    }

    pub fn with_rng(mut self, rng: Rng) -> Self {
        self.rng = rng;
        self
    }
}

pub type BuildFn = fn(HyperParams, OptimizerInit) -> Box<dyn Optimizer>;

#[derive(Clone)]
pub struct OptimizerEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: HyperParams,
    pub build: BuildFn,
}

impl std::fmt::Debug for OptimizerEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OptimizerEntry")
            .field("name", &self.name)
            .field("defaults", &self.defaults)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct OptimizerRegistry {
    entries: BTreeMap<&'static str, OptimizerEntry>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding every built-in optimizer with its default settings.
    pub fn builtin() -> Self {
        let base = HyperParams::default();
        let mut reg = Self::empty();
        reg.register(OptimizerEntry {
            name: "sgd",
            description: "plain stochastic gradient descent",
            defaults: base.with_eta(0.01),
            build: |hp, init| Box::new(Sgd::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "momentum",
            description: "SGD with heavy-ball momentum",
            defaults: base.with_rho(0.9),
            build: |hp, init| Box::new(Momentum::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "adagrad",
            description: "AdaGrad (accumulated squared gradients)",
            defaults: base.with_eta(0.01),
            build: |hp, init| Box::new(AdaGrad::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "rmsprop",
            description: "RMSProp (EMA of squared gradients)",
            defaults: base.with_rho(0.99),
            build: |hp, init| Box::new(RmsProp::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "adadelta",
            description: "AdaDelta (unit-matched RMS ratio)",
            defaults: base.with_eta(1.0).with_rho(0.99),
            build: |hp, init| Box::new(AdaDelta::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "adasmooth",
            description: "AdaSmooth (effective-ratio scaled smoothing)",
            defaults: base,
            build: |hp, init| Box::new(AdaSmooth::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "adasmooth-delta",
            description: "AdaSmoothDelta (effective-ratio AdaDelta)",
            defaults: base.with_eta(0.5),
            build: |hp, init| Box::new(AdaSmoothDelta::new(init.dim, hp, init.window)),
        });
        reg.register(OptimizerEntry {
            name: "adasmooth-random",
            description: "AdaSmooth with a uniformly drawn decay per batch",
            defaults: base,
            build: |hp, init| Box::new(AdaSmoothRandom::new(init.dim, hp, init.window, init.rng)),
        });
        reg
    }

    /// Adds or replaces an entry.
    pub fn register(&mut self, entry: OptimizerEntry) {
        self.entries.insert(entry.name, entry);
    }

    pub fn get(&self, name: &str) -> Result<&OptimizerEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownOptimizer(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = &OptimizerEntry> + '_ {
        self.entries.values()
    }

    pub fn defaults(&self, name: &str) -> Result<HyperParams> {
        Ok(self.get(name)?.defaults)
    }

    pub fn build(
        &self,
        name: &str,
        hp: HyperParams,
        init: OptimizerInit,
    ) -> Result<Box<dyn Optimizer>> {
        let entry = self.get(name)?;
        hp.validate()?;
        Ok((entry.build)(hp, init))
    }
}
