//! Merging of defaults, `--config` files and command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

fn object(value: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{what} must be a JSON object"))),
    }
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    object(value, &format!("--config {}", path.display()))
}

/// Resolves `T` from its defaults, then `file` (if any), then `flags`.
/// Flags serialize only the options that were given on the command line.
pub fn resolve<T>(flags: &impl Serialize, file: Option<&Map<String, Value>>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let mut merged = object(serde_json::to_value(T::default()).expect("defaults serialize"), "defaults")?;
    if let Some(file) = file {
        for (k, v) in file {
            if !merged.contains_key(k) {
                return Err(CliError::Usage(format!("--config: unknown key `{k}`")));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    let flags = object(serde_json::to_value(flags).expect("flags serialize"), "flags")?;
    for (k, v) in flags {
        if v.is_null() || v == Value::Bool(false) {
            continue;
        }
        merged.insert(k, v);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("--config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Default, Debug, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Job {
        a: u32,
        b: Option<String>,
        c: bool,
    }

    #[derive(Serialize)]
    struct Flags {
        a: Option<u32>,
        b: Option<String>,
        c: bool,
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = object(serde_json::json!({"a": 3, "b": "file", "c": true}), "t").unwrap();
        let flags = Flags { a: Some(7), b: None, c: false };
        let job: Job = resolve(&flags, Some(&file)).unwrap();
        assert_eq!(job, Job { a: 7, b: Some("file".into()), c: true });
        let job: Job = resolve(&flags, None).unwrap();
        assert_eq!(job, Job { a: 7, b: None, c: false });
    }

    #[test]
    fn unknown_file_key_is_a_usage_error() {
        let file = object(serde_json::json!({"zzz": 1}), "t").unwrap();
        let flags = Flags { a: None, b: None, c: false };
        assert!(matches!(resolve::<Job>(&flags, Some(&file)), Err(CliError::Usage(_))));
    }
}
