//! Versioned experiment configuration files.

use std::path::PathBuf;

use center_outward::experiments::{DoublingParams, GcParams, WeakParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig<P> {
    pub version: u32,
    pub experiment: String,
    pub params: P,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Gc(ExperimentConfig<GcParams>),
    Weak(ExperimentConfig<WeakParams>),
    Doubling(ExperimentConfig<DoublingParams>),
}

/// The experiment name is read first so that an unknown name is a usage
/// error rather than a schema error.
pub fn parse_experiment(text: &str) -> CliResult<Experiment> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    let name = value
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| CliError::Validation("config is missing the string field `experiment`".into()))?
        .to_owned();
    fn typed<P: serde::de::DeserializeOwned>(v: serde_json::Value) -> CliResult<ExperimentConfig<P>> {
        let cfg: ExperimentConfig<P> =
            serde_json::from_value(v).map_err(|e| CliError::Validation(format!("config schema violation: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported config version {} (expected {})",
                cfg.version, CONFIG_VERSION
            )));
        }
        Ok(cfg)
    }
    match name.as_str() {
        "gc" => Ok(Experiment::Gc(typed(value)?)),
        "weak" => Ok(Experiment::Weak(typed(value)?)),
        "doubling" => Ok(Experiment::Doubling(typed(value)?)),
        other => Err(CliError::Usage(format!("unknown experiment {other:?}; expected gc, weak or doubling"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOUBLING: &str = r#"{"version":1,"experiment":"doubling","params":{"d":3,"r_list":[0.08],"method":"quadrature","budget":1000,"seed":1,"max_spread":1.3}}"#;

    #[test]
    fn parses_doubling() {
        assert!(matches!(parse_experiment(DOUBLING).unwrap(), Experiment::Doubling(_)));
    }

    #[test]
    fn unknown_name_is_usage() {
        let e = parse_experiment(&DOUBLING.replace("\"doubling\"", "\"bogus\"")).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_USAGE);
    }

    #[test]
    fn unknown_field_is_validation() {
        let e = parse_experiment(&DOUBLING.replace("\"seed\":1", "\"seed\":1,\"extra\":2")).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_VALIDATION);
        assert!(e.to_string().contains("extra"));
    }

    #[test]
    fn wrong_version_is_validation() {
        let e = parse_experiment(&DOUBLING.replace("\"version\":1", "\"version\":7")).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_VALIDATION);
    }
}
