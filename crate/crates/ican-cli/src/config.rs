//! Run configuration: defaults, overridden by a flat key=value config file,
//! overridden by command-line flags. The canonical JSON serialization is
//! hashed into every output artifact.

use ican::embed::WalkConfig;
use ican::model::IcanConfig;
use ican::sir::SirConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub master_seed: u64,
    pub walk: WalkConfig,
    pub sir: SirConfig,
    pub ican: IcanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            walk: WalkConfig::default(),
            sir: SirConfig::default(),
            ican: IcanConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("config file {}: {e}", path.display()))?;
            cfg.apply_file(&text)?;
        }
        Ok(cfg)
    }

    /// Flat key=value lines with section prefixes (sir., embed., ican.) and
    /// the bare master_seed key; '#' comments.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("config line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| format!("bad value `{v}`: {e}"))
        }
        match key {
            "master_seed" => self.master_seed = p(value)?,
            "sir.gamma" => self.sir.gamma = Some(p(value)?),
            "sir.gamma_multiplier" => self.sir.gamma_multiplier = p(value)?,
            "sir.delta" => self.sir.delta = p(value)?,
            "sir.sims_per_node" => self.sir.sims_per_node = p(value)?,
            "sir.max_steps" => self.sir.max_steps = p(value)?,
            "sir.seed" => self.sir.seed = p(value)?,
            "embed.walks_per_node" => self.walk.walks_per_node = p(value)?,
            "embed.walk_length" => self.walk.walk_length = p(value)?,
            "embed.window" => self.walk.window = p(value)?,
            "embed.return_bias" => self.walk.return_bias = p(value)?,
            "embed.inout_bias" => self.walk.inout_bias = p(value)?,
            "embed.negatives_per_positive" => self.walk.negatives_per_positive = p(value)?,
            "embed.epochs" => self.walk.epochs = p(value)?,
            "embed.learning_rate" => self.walk.learning_rate = p(value)?,
            "embed.standardize" => self.walk.standardize = p(value)?,
            "embed.seed" => self.walk.seed = p(value)?,
            "ican.hidden_layers" => self.ican.hidden_layers = p(value)?,
            "ican.injection_layer" => self.ican.injection_layer = p(value)?,
            "ican.ranking_layers" => self.ican.ranking_layers = p(value)?,
            "ican.hidden_width" => self.ican.hidden_width = p(value)?,
            "ican.feature_dim" => self.ican.feature_dim = p(value)?,
            "ican.lambda1" => self.ican.lambda1 = p(value)?,
            "ican.lambda2" => self.ican.lambda2 = p(value)?,
            "ican.lambda3" => self.ican.lambda3 = p(value)?,
            "ican.beta" => self.ican.beta = p(value)?,
            "ican.theta" => self.ican.theta = p(value)?,
            "ican.learning_rate" => self.ican.learning_rate = p(value)?,
            "ican.outer_iterations" => self.ican.outer_iterations = p(value)?,
            "ican.inner_steps" => self.ican.inner_steps = p(value)?,
            "ican.w_threshold" => self.ican.w_threshold = p(value)?,
            "ican.seed" => self.ican.seed = p(value)?,
            _ => return Err(format!("unknown config key `{key}`")),
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("run config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("# comment\nican.lambda1=0.5\nsir.sims_per_node=7\nmaster_seed=9\n")
            .unwrap();
        assert_eq!(cfg.ican.lambda1, 0.5);
        assert_eq!(cfg.sir.sims_per_node, 7);
        assert_eq!(cfg.master_seed, 9);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("nope.key=1\n").unwrap_err();
        assert!(err.contains("unknown config key"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.ican.lambda1 = 2.0;
        assert_ne!(a.hash(), b.hash());
    }
}
