//! Run configuration files.
//!
//! A run is described by a single TOML file with two sections: `[model]`
//! mirrors [`HyperConfig`] (plus `[model.tuning]` for proposal scales) and
//! `[run]` sets chain length. Every key is optional; omitted keys take the
//! defaults baked into the library, so an empty file is a valid config.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::HyperConfig;

/// Chain-length settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Total Gibbs sweeps.
    pub iters: u64,
    /// Sweeps discarded before storage; adaptation also stops here.
    pub burnin: u64,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { iters: 100_000, burnin: 10_000, thin: 10 }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.thin == 0 {
            return Err(Error::invalid("iters and thin must be at least 1"));
        }
        if self.burnin >= self.iters {
            return Err(Error::invalid(format!(
                "burnin {} leaves no sweeps of {} to store",
                self.burnin, self.iters
            )));
        }
        Ok(())
    }
}

/// Full configuration of a fitting run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: HyperConfig,
    pub run: RunSettings,
}

impl RunConfig {
    /// Parses TOML text. Unknown keys are rejected so typos cannot silently
    /// fall back to defaults.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::format(format!("config {}: {e}", path.display()))
        })?;
        RunConfig::parse_str(&text)
    }

    /// Serializes the full configuration, defaults included, so a written
    /// file documents every setting in force.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.run.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::AlphaPrior;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model.s_max, 30);
        assert_eq!(cfg.model.lambda_d, 2.0);
        assert_eq!(cfg.run.iters, 100_000);
        assert_eq!(cfg.run.burnin, 10_000);
        assert_eq!(cfg.run.thin, 10);
    }

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let cfg = RunConfig::parse_str(
            "[model]\ns_max = 5\nbeta_prior_mean = 3.0\n\n[run]\niters = 2000\nburnin = 500\n",
        )
        .unwrap();
        assert_eq!(cfg.model.s_max, 5);
        assert_eq!(cfg.model.beta_prior_mean, 3.0);
        assert_eq!(cfg.model.c, 1.0);
        assert_eq!(cfg.run.iters, 2000);
        assert_eq!(cfg.run.thin, 10);
    }

    #[test]
    fn alpha_prior_table_parses() {
        let cfg = RunConfig::parse_str(
            "[model.alpha_prior]\ntype = \"beta\"\na = 1.0\nb = 9.0\n",
        )
        .unwrap();
        assert_eq!(cfg.model.alpha_prior, AlphaPrior::Beta { a: 1.0, b: 9.0 });
    }

    #[test]
    fn tuning_section_parses() {
        let cfg = RunConfig::parse_str(
            "[model.tuning]\nkappa_gamma = 0.2\nadapt = false\n",
        )
        .unwrap();
        assert_eq!(cfg.model.tuning.kappa_gamma, 0.2);
        assert!(!cfg.model.tuning.adapt);
        assert_eq!(cfg.model.tuning.sigma_py, 0.4);
    }

    #[test]
    fn round_trip_preserves_everything() {
        let mut cfg = RunConfig::default();
        cfg.model.s_max = 7;
        cfg.model.alpha_prior = AlphaPrior::Beta { a: 1.0, b: 9.0 };
        cfg.model.tuning.sigma_ab_diag = [[0.04, 0.01], [0.01, 0.04]];
        cfg.run.thin = 25;
        let text = cfg.to_toml_string();
        let back = RunConfig::parse_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn typos_and_bad_values_are_rejected_not_defaulted() {
        assert!(RunConfig::parse_str("[model]\ns_mx = 5\n").is_err());
        assert!(RunConfig::parse_str("[run]\niterations = 10\n").is_err());
        assert!(RunConfig::parse_str("[run]\niters = 0\n").is_err());
        assert!(RunConfig::parse_str("[run]\niters = 100\nburnin = 100\n").is_err());
        assert!(RunConfig::parse_str("[model]\nc = -1.0\n").is_err());
        assert!(RunConfig::parse_str("not toml [[").is_err());
    }

    #[test]
    fn load_reads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[run]\niters = 50\nburnin = 10\nthin = 2\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!((cfg.run.iters, cfg.run.burnin, cfg.run.thin), (50, 10, 2));
        assert!(RunConfig::load(dir.path().join("missing.toml")).is_err());
    }
}
