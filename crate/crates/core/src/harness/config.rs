//! Experiment configuration and its JSON form.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, PowerProfile};
use crate::eoga::NormalizationMode;
use crate::error::{Error, Result};

/// A way of turning a realization into a channel whose rate is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// The omni-antenna channel as drawn.
    Physical,
    /// Single shared pattern from the min-max gain allocation.
    Eoga,
    /// Per-antenna patterns, manifold CG subproblem solver.
    SofMo,
    /// Per-antenna patterns, eigen-decomposition subproblem solver.
    SofEvd,
    /// Ideal channel `√N_t [I | 0]`.
    UpperBound,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Physical, Scheme::Eoga, Scheme::SofMo, Scheme::SofEvd, Scheme::UpperBound];

    /// Name used in CSV output and config files.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Physical => "physical",
            Scheme::Eoga => "eoga",
            Scheme::SofMo => "sof_mo",
            Scheme::SofEvd => "sof_evd",
            Scheme::UpperBound => "upper_bound",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// What the `sweep_value` column ranges over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// One row per scheme and entry of `snr_grid_db`.
    #[default]
    SnrSweep,
    /// One row per scheme and rays-per-cluster value, at a single SNR.
    RaySweep(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    pub normalization_mode: NormalizationMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::desk_scale(),
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            n_trials: 200,
            base_seed: 0,
            schemes: Scheme::ALL.to_vec(),
            sweep: Sweep::SnrSweep,
            normalization_mode: NormalizationMode::Exact,
        }
    }
}

impl ExperimentConfig {
    /// Rays-per-cluster sweep on a narrow-spread, good-conditioned channel at 30 dB.
    ///
    /// Uses a 32×8 array: at 16×4 the single-pattern rate does not rise
    /// monotonically with the ray count.
    pub fn ray_sweep_default() -> Self {
        Self {
            channel: ChannelConfig {
                n_tx: 32,
                n_rx: 8,
                angle_spread_std: 3f64.to_radians(),
                power_profile: PowerProfile::GoodConditioned,
                ..ChannelConfig::desk_scale()
            },
            snr_grid_db: vec![30.0],
            n_trials: 100,
            schemes: vec![Scheme::Physical, Scheme::Eoga, Scheme::UpperBound],
            sweep: Sweep::RaySweep(vec![1, 2, 4, 8]),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("snr_grid_db must not be empty".into()));
        }
        if self.snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("snr_grid_db entries must be finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes must not be empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.schemes.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::InvalidConfig(format!("scheme {} listed twice", dup.name())));
        }
        if let Sweep::RaySweep(rays) = &self.sweep {
            if rays.is_empty() || rays.contains(&0) {
                return Err(Error::InvalidConfig("ray_sweep needs nonempty, positive ray counts".into()));
            }
            if self.snr_grid_db.len() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "ray_sweep takes exactly one snr_grid_db value, got {}",
                    self.snr_grid_db.len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_json() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let ray = ExperimentConfig::ray_sweep_default();
        assert_eq!(ExperimentConfig::from_json(&ray.to_json()).unwrap(), ray);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"n_trials": 3, "schemes": ["upper_bound", "sof_mo"]}"#).unwrap();
        assert_eq!(cfg.n_trials, 3);
        assert_eq!(cfg.schemes, vec![Scheme::UpperBound, Scheme::SofMo]);
        assert_eq!(cfg.channel, ChannelConfig::desk_scale());
    }

    #[test]
    fn sweep_forms_parse() {
        let cfg = ExperimentConfig::from_json(r#"{"sweep": "snr_sweep"}"#).unwrap();
        assert_eq!(cfg.sweep, Sweep::SnrSweep);
        let cfg = ExperimentConfig::from_json(r#"{"sweep": {"ray_sweep": [1, 2]}, "snr_grid_db": [30]}"#).unwrap();
        assert_eq!(cfg.sweep, Sweep::RaySweep(vec![1, 2]));
    }

    #[test]
    fn rejects_invalid_configs() {
        for text in [
            r#"{"n_trial": 3}"#,
            r#"{"n_trials": 0}"#,
            r#"{"snr_grid_db": []}"#,
            r#"{"schemes": []}"#,
            r#"{"schemes": ["eoga", "eoga"]}"#,
            r#"{"schemes": ["sdr"]}"#,
            r#"{"sweep": {"ray_sweep": [1, 2]}}"#,
            r#"{"sweep": {"ray_sweep": []}, "snr_grid_db": [30]}"#,
            r#"{"channel": {"n_tx": 0, "n_rx": 4, "n_clusters": 8, "n_rays": 4, "angle_spread_std": 0.2, "power_profile": "ill_conditioned"}}"#,
            r#"{"channel": {"n_tx": 16, "n_rx": 4, "n_clusters": 8, "n_rays": 4, "angle_spread_std": 0.2, "power_profile": "ill_conditioned", "extra": 1}}"#,
            r#"{"normalization_mode": "approximate"}"#,
            "not json",
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(Error::InvalidConfig(_))), "accepted {text}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::from_name(s.name()), Some(s));
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
    }
}
