//! The `--config` file: a JSON object with an optional section per command,
//! for example `{"generate": {"artifacts": {"depth_resolution": 512}}}`.

use std::path::Path;

use blockworld::{Error, Result};
use serde::de::DeserializeOwned;
use serde_json::Value;

pub struct ConfigFile(Value);

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
        let Some(path) = path else { return Ok(ConfigFile(Value::Object(Default::default()))) };
        let text = read_text(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Syntax(format!("{}: {e}", path.display())))?;
        if !v.is_object() {
            return Err(Error::Schema { path: String::new(), message: "config must be a JSON object".into() });
        }
        Ok(ConfigFile(v))
    }

    /// The section for `command`, or the default when absent.
    pub fn section<T: DeserializeOwned + Default>(&self, command: &str) -> Result<T> {
        match self.0.get(command) {
            None => Ok(T::default()),
            Some(v) => serde_path_to_error::deserialize(v.clone()).map_err(|e| Error::Schema {
                path: format!("{command}.{}", e.path()),
                message: e.into_inner().to_string(),
            }),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
