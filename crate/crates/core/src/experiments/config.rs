use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::gasper::TieBreak;
use crate::net::{load_trace, DelayModel};
use crate::params::ProtocolParams;
use crate::validators::{AdversarySelection, AttestationTiming, HonestConfig, StrategyConfig};

/// Network delay model as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    Zero,
    Fixed { ms: u64 },
    Lognormal { median_ms: f64, sigma: f64 },
    /// Replays a recorded trace; relative paths resolve against the config file.
    Empirical { trace: PathBuf, sender: u32 },
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec::Lognormal {
            median_ms: 100.0,
            sigma: 0.5,
        }
    }
}

impl DelaySpec {
    pub fn to_model(&self, base_dir: Option<&Path>) -> Result<DelayModel> {
        Ok(match self {
            DelaySpec::Zero => DelayModel::Zero,
            DelaySpec::Fixed { ms } => DelayModel::Fixed(*ms),
            DelaySpec::Lognormal { median_ms, sigma } => DelayModel::LogNormal {
                median_ms: *median_ms,
                sigma: *sigma,
            },
            DelaySpec::Empirical { trace, sender } => {
                let path = match base_dir {
                    Some(dir) if trace.is_relative() => dir.join(trace),
                    _ => trace.clone(),
                };
                let trace = load_trace(&path)?;
                if trace.messages_from(*sender).is_none() {
                    return Err(Error::UnknownSender(*sender));
                }
                DelayModel::Empirical {
                    trace: Arc::new(trace),
                    sender: *sender,
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub t_min_ms: u64,
    pub t_max_ms: u64,
    pub step_ms: u64,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<u64> {
        (self.t_min_ms..=self.t_max_ms).step_by(self.step_ms as usize).collect()
    }
}

/// One experiment: parameters, network, adversary, and how many runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub params: ProtocolParams,
    #[serde(default)]
    pub delay: DelaySpec,
    #[serde(default)]
    pub timing: AttestationTiming,
    #[serde(default)]
    pub tiebreak: TieBreak,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub adversary: AdversarySelection,
    #[serde(default)]
    pub adversarial_delay: bool,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_horizon() -> u64 {
    800
}

fn default_trials() -> u64 {
    10
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ProtocolParams::default(),
            delay: DelaySpec::default(),
            timing: AttestationTiming::default(),
            tiebreak: TieBreak::default(),
            strategy: StrategyConfig::default(),
            adversary: AdversarySelection::default(),
            adversarial_delay: false,
            horizon: default_horizon(),
            trials: default_trials(),
            seed: 0,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            Error::InvalidParam { field, reason } => Error::config(format!("params.{field}"), reason),
            other => other,
        })?;
        self.strategy.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        match &self.delay {
            DelaySpec::Lognormal { median_ms, sigma } => {
                if !(*median_ms > 0.0 && median_ms.is_finite()) {
                    return Err(Error::config("delay.median_ms", "must be positive"));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::config("delay.sigma", "must be non-negative"));
                }
            }
            DelaySpec::Fixed { ms } if *ms > self.params.delta_ms() => {
                return Err(Error::config("delay.ms", "exceeds the synchrony bound"));
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            if s.step_ms == 0 {
                return Err(Error::config("sweep.step_ms", "must be positive"));
            }
            if s.t_min_ms > s.t_max_ms {
                return Err(Error::config("sweep.t_min_ms", "exceeds sweep.t_max_ms"));
            }
        }
        if let Some(t) = self.strategy.t_delay_ms() {
            if t > self.params.delta_ms() {
                return Err(Error::config("strategy.t_delay_ms", "exceeds the synchrony bound"));
            }
        }
        let needs_adversary = !matches!(self.strategy, StrategyConfig::None);
        if needs_adversary && self.adversary == AdversarySelection::None {
            return Err(Error::config("adversary", "strategy needs adversarial validators"));
        }
        if self.adversary == AdversarySelection::Fraction && needs_adversary && self.params.beta <= 0.0 {
            return Err(Error::config("params.beta", "must be positive for a fractional adversary"));
        }
        if let AdversarySelection::Placed { attack_slot, per_slot } = &self.adversary {
            if *attack_slot == 0 {
                return Err(Error::config("adversary.attack_slot", "must be at least 1"));
            }
            if per_slot.iter().any(|&c| c > self.params.committee_size) {
                return Err(Error::config("adversary.per_slot", "exceeds committee size"));
            }
        }
        Ok(())
    }

    /// Simulation settings for trial `trial`, with `strategy` in place of the
    /// configured one.
    pub fn sim_config(&self, network: DelayModel, seed: u64, verbose: bool) -> SimConfig {
        SimConfig {
            params: self.params.clone(),
            honest: HonestConfig {
                attestation_timing: self.timing,
                tiebreak: self.tiebreak,
            },
            network,
            adversarial_delay: self.adversarial_delay,
            horizon: self.horizon,
            seed,
            selection: self.adversary.clone(),
            verbose,
        }
    }
}
