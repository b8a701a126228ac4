//! Config-file loading and flag/file/default merging.
//!
//! The config file is TOML with one table per subcommand, keyed like the long
//! flags with `-` replaced by `_`:
//!
//! ```toml
//! [train]
//! epochs = 200
//! lr = 0.001
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub preprocess: toml::Table,
    pub train: toml::Table,
    pub eval: toml::Table,
    pub baseline: toml::Table,
    pub gradcheck: toml::Table,
    pub synth: toml::Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Parses one subcommand table into that subcommand's optional settings.
pub fn section<T: DeserializeOwned>(table: &toml::Table, name: &str) -> Result<T, CliError> {
    table
        .clone()
        .try_into()
        .map_err(|e| CliError::Usage(format!("config [{name}]: {e}")))
}

/// Fills every `None` field of `$flags` from `$file`.
macro_rules! fill_from {
    ($flags:expr, $file:expr, [$($field:ident),* $(,)?]) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.clone(); } )*
    };
}
pub(crate) use fill_from;

pub fn tool_version() -> String {
    format!("fnwl {}", env!("CARGO_PKG_VERSION"))
}

/// Provenance block embedded in every artifact.
pub fn metadata(command: &str, effective: &impl serde::Serialize) -> serde_json::Value {
    serde_json::json!({
        "tool": tool_version(),
        "command": command,
        "config": effective,
    })
}
