use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::env::{LocoParams, ObstacleConfig};
use crate::predictor::PredictorConfig;
use crate::proposer::ProposerConfig;
use crate::trainer::{CycleConfig, EvalConfig, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    #[default]
    Reacher,
    Loco,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Reacher obstacle generation; ignored for loco.
    pub obstacles: ObstacleConfig,
    /// Loco constants; ignored for the reacher.
    pub loco: LocoParams,
}

/// Full run configuration. `seed` has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub predictor: PredictorConfig,
    #[serde(default)]
    pub proposer: ProposerConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn cycle_config(&self) -> CycleConfig {
        CycleConfig {
            seed: self.seed,
            predictor: self.predictor.clone(),
            proposer: self.proposer.clone(),
            trainer: self.trainer.clone(),
            eval: self.eval.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Parses `raw` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies one `section.key=value` override to a parsed config table.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!(
            "override `{spec}` has an empty key"
        )));
    }
    let mut t = table;
    for k in &keys[..keys.len() - 1] {
        let entry = t
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override `{spec}`: `{k}` is not a section"))
        })?;
    }
    t.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, overrides).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let bad = |m: &str| Err(CliError::Config(m.to_string()));
    if cfg.trainer.grid_dim == 0 || cfg.proposer.grid_side < 2 {
        return bad("grid needs dimension ≥ 1 and side ≥ 2");
    }
    if !(0.0..1.0).contains(&cfg.predictor.validation_fraction) {
        return bad("predictor.validation_fraction must be in [0, 1)");
    }
    if cfg.trainer.sigma_explore < 0.0 || cfg.proposer.lr < 0.0 || cfg.predictor.lr < 0.0 {
        return bad("learning rates and exploration noise must be non-negative");
    }
    if cfg.eval.r_max <= 0.0 {
        return bad("eval.r_max must be positive");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        assert!(
            matches!(parse_config("[trainer]\ncycles = 2\n", &[]), Err(CliError::Config(m)) if m.contains("seed"))
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("seed = 1\n[predictor]\nepoch = 3\n", &[]).is_err());
        assert!(parse_config("seed = 1\n[nonsense]\n", &[]).is_err());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let sets = [
            "predictor.arch.head=[256, 256]".to_string(),
            "env.kind=loco".to_string(),
            "proposer.loss.alpha=0".to_string(),
        ];
        let cfg = parse_config("seed = 3\n", &sets).unwrap();
        assert_eq!(cfg.predictor.arch.head, vec![256, 256]);
        assert_eq!(cfg.env.kind, EnvKind::Loco);
        assert_eq!(cfg.proposer.loss.alpha, 0.0);
        assert!(parse_config("seed = 3\n", &["predictor.nope=1".to_string()]).is_err());
        assert!(parse_config("seed = 3\n", &["novalue".to_string()]).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = parse_config("seed = 11\n[env]\nkind = \"loco\"\n", &[]).unwrap();
        assert_eq!(parse_config(&cfg.to_toml(), &[]).unwrap(), cfg);
    }
}
