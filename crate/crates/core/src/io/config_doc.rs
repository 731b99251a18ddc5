use std::path::Path;

use super::FormatError;
use crate::harvest::{FieldError, InSituConfig, ValidationErrors};

const SCHEMA: &str = include_str!("../../schema/insitu_config.schema.json");

/// JSON Schema (draft 2020-12) describing the config document.
pub fn config_schema() -> &'static str {
    SCHEMA
}

/// Parses and validates a config document. Syntax errors, unknown fields and
/// invariant violations all surface as field-level errors.
pub fn parse_config(json: &str) -> Result<InSituConfig, FormatError> {
    let config: InSituConfig = serde_json::from_str(json).map_err(|e| {
        FormatError::Config(ValidationErrors(vec![FieldError::new(
            format!("$ (line {}, column {})", e.line(), e.column()),
            e.to_string(),
        )]))
    })?;
    config.validate().map_err(FormatError::Config)?;
    Ok(config)
}

pub fn to_config_json(config: &InSituConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serializes");
    s.push('\n');
    s
}

pub fn read_config(path: &Path) -> Result<InSituConfig, FormatError> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn write_config(path: &Path, config: &InSituConfig) -> Result<(), FormatError> {
    config.validate().map_err(FormatError::Config)?;
    std::fs::write(path, to_config_json(config))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Bounds;
    use crate::render::{Camera, Colormap};

    fn config() -> InSituConfig {
        let b = Bounds::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        InSituConfig::full_window("demo", Camera::presets(&b, 64, 48), Colormap::viridis(0.0, 0.38), 5000, 20, 0.005)
    }

    #[test]
    fn round_trip() {
        let c = config();
        assert_eq!(parse_config(&to_config_json(&c)).unwrap(), c);
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&to_config_json(&config())).unwrap();
        v["surprise"] = 1.into();
        match parse_config(&v.to_string()) {
            Err(FormatError::Config(e)) => assert!(e.0[0].message.contains("surprise")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(config_schema()).unwrap();
        assert_eq!(v["additionalProperties"], false);
    }
}
