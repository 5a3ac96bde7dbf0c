use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_learning_rate() -> f64 {
    2e-5
}

fn default_batch_size() -> usize {
    16
}

fn default_max_sequence_length() -> usize {
    128
}

/// Fine-tuning hyperparameters. `epochs` has no default and must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub epochs: u32,
    /// Tokens beyond this length are truncated.
    #[serde(default = "default_max_sequence_length")]
    pub max_sequence_length: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TrainingConfig {
    pub fn new(epochs: u32, seed: u64) -> Self {
        TrainingConfig {
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            epochs,
            max_sequence_length: default_max_sequence_length(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be positive"));
        }
        if self.max_sequence_length == 0 {
            return Err(Error::validation("max_sequence_length must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unset_fields_resolve_to_defaults() {
        let cfg: TrainingConfig = toml::from_str("epochs = 3").unwrap();
        assert_eq!(cfg.learning_rate, 2e-5);
        assert_eq!(cfg.batch_size, 16);
        assert_eq!(cfg.max_sequence_length, 128);
        assert_eq!(cfg, TrainingConfig::new(3, 0));
    }

    #[test]
    fn epochs_required() {
        assert!(toml::from_str::<TrainingConfig>("learning_rate = 1e-4").is_err());
    }

    #[test]
    fn validation() {
        let mut c = TrainingConfig::new(1, 0);
        assert!(c.validate().is_ok());
        c.batch_size = 0;
        assert!(c.validate().is_err());
        let c = TrainingConfig {
            learning_rate: -1.0,
            ..TrainingConfig::new(1, 0)
        };
        assert!(c.validate().is_err());
    }
}
