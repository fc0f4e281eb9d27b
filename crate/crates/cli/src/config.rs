//! Flag / config-file merging.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{usage, CliResult};

/// Parameter values from a `--config` JSON object. Keys are the long flag
/// names with `_` in place of `-`.
#[derive(Debug, Default)]
pub struct Settings {
    values: Map<String, Value>,
}

impl Settings {
    /// Reads the config file (if any) and rejects keys outside `allowed`.
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read config {}: {e}", path.display())),
        };
        let values = match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return usage(format!("config {} must hold a JSON object", path.display())),
            Err(e) => return usage(format!("config {} is not valid JSON: {e}", path.display())),
        };
        if let Some(bad) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return usage(format!("unknown config key {bad:?}; expected one of {}", allowed.join(", ")));
        }
        Ok(Self { values })
    }

    pub fn from_map(values: Map<String, Value>) -> Self {
        Self { values }
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn get<T: DeserializeOwned>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => match serde_json::from_value(v.clone()) {
                Ok(t) => Ok(Some(t)),
                Err(e) => usage(format!("config key {key:?}: {e}")),
            },
        }
    }

    pub fn or<T: DeserializeOwned>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    pub fn required<T: DeserializeOwned>(&self, key: &str, flag: Option<T>) -> CliResult<T> {
        match self.get(key, flag)? {
            Some(v) => Ok(v),
            None => usage(format!("missing required parameter --{}", key.replace('_', "-"))),
        }
    }

    /// Boolean switches: set by the flag or a `true` config value.
    pub fn flag(&self, key: &str, flag: bool) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key, None)?.unwrap_or(false))
    }
}
