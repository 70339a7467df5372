//! JSON run configuration. Every field is optional and overrides the
//! built-in defaults; command-line flags override the file in turn.
//!
//! ```json
//! {
//!   "signal_power": {"linear": 1.0},
//!   "snr": {"db": -15},
//!   "jsr": {"db": 25},
//!   "taps": [8, 16, 32],
//!   "tones": 5,
//!   "experiment": {"trials": 20000, "modes": ["perfect", "blind"], "jammers": ["comb", "ar1(0.8)"]},
//!   "optimizer": {"mu_alpha": 0.05, "restarts": 16}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use wienerjam_core::model::{db_to_linear, linear_to_db};
use wienerjam_core::optimizer::OptimizerConfig;

use crate::error::{config_error, Result};
use crate::harness::{ExperimentConfig, JammerSpec, Mode};

/// A power or power ratio tagged with its unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Quantity {
    Db(f64),
    Linear(f64),
}

impl Quantity {
    pub fn linear(&self) -> Result<f64> {
        match *self {
            Quantity::Db(x) if x.is_finite() => Ok(db_to_linear(x)),
            Quantity::Linear(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(config_error(format!("{self:?} is not a finite positive power"))),
        }
    }

    pub fn db(&self) -> Result<f64> {
        Ok(linear_to_db(self.linear()?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JammerEntry {
    Label(String),
    Spec(JammerSpec),
}

impl JammerEntry {
    pub fn resolve(&self) -> Result<JammerSpec> {
        match self {
            JammerEntry::Label(s) => s.parse(),
            JammerEntry::Spec(s) => Ok(*s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub block_len: Option<usize>,
    pub trials: Option<usize>,
    pub modes: Option<Vec<Mode>>,
    pub jammers: Option<Vec<JammerEntry>>,
    pub master_seed: Option<u64>,
    pub loading: Option<f64>,
    pub max_redraws: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub mu_alpha: Option<f64>,
    pub mu_omega: Option<f64>,
    pub max_iter: Option<usize>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub restarts: Option<usize>,
    pub tol: Option<f64>,
    pub stall_window: Option<usize>,
}

impl OptimizerSection {
    pub fn apply(&self, base: OptimizerConfig) -> OptimizerConfig {
        OptimizerConfig {
            mu_alpha: self.mu_alpha.unwrap_or(base.mu_alpha),
            mu_omega: self.mu_omega.unwrap_or(base.mu_omega),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            adam_beta1: self.adam_beta1.unwrap_or(base.adam_beta1),
            adam_beta2: self.adam_beta2.unwrap_or(base.adam_beta2),
            adam_eps: self.adam_eps.unwrap_or(base.adam_eps),
            restarts: self.restarts.unwrap_or(base.restarts),
            tol: self.tol.unwrap_or(base.tol),
            stall_window: self.stall_window.unwrap_or(base.stall_window),
        }
    }

    /// Fully populated mirror of `config`, for echoing.
    pub fn echo(config: &OptimizerConfig) -> Self {
        Self {
            mu_alpha: Some(config.mu_alpha),
            mu_omega: Some(config.mu_omega),
            max_iter: Some(config.max_iter),
            adam_beta1: Some(config.adam_beta1),
            adam_beta2: Some(config.adam_beta2),
            adam_eps: Some(config.adam_eps),
            restarts: Some(config.restarts),
            tol: Some(config.tol),
            stall_window: Some(config.stall_window),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub signal_power: Option<Quantity>,
    pub snr: Option<Quantity>,
    pub jsr: Option<Quantity>,
    pub taps: Option<Vec<usize>>,
    pub tones: Option<usize>,
    pub experiment: Option<ExperimentSection>,
    pub optimizer: Option<OptimizerSection>,
}

/// Everything a command needs after defaults, file and flags are merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub experiment: ExperimentConfig,
    pub optimizer: OptimizerConfig,
    pub tones: Option<usize>,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.settings()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies the file on top of the defaults and validates the result.
    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        let e = &mut s.experiment;
        if let Some(q) = self.signal_power {
            e.signal_power = q.linear()?;
        }
        if let Some(q) = self.snr {
            e.snr_db = q.db()?;
        }
        if let Some(q) = self.jsr {
            e.jsr_db = q.db()?;
        }
        if let Some(t) = &self.taps {
            e.taps = t.clone();
        }
        if let Some(x) = &self.experiment {
            e.block_len = x.block_len.unwrap_or(e.block_len);
            e.trials = x.trials.unwrap_or(e.trials);
            e.master_seed = x.master_seed.unwrap_or(e.master_seed);
            e.max_redraws = x.max_redraws.unwrap_or(e.max_redraws);
            if x.loading.is_some() {
                e.loading = x.loading;
            }
            if let Some(m) = &x.modes {
                e.modes = m.clone();
            }
            if let Some(j) = &x.jammers {
                e.jammers = j.iter().map(JammerEntry::resolve).collect::<Result<_>>()?;
            }
        }
        if let Some(o) = &self.optimizer {
            s.optimizer = o.apply(s.optimizer);
        }
        s.tones = self.tones;
        s.validate()?;
        Ok(s)
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.optimizer.validate()?;
        if self.tones == Some(0) {
            return Err(config_error("tones must be at least 1"));
        }
        Ok(())
    }
}
