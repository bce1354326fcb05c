use serde::{Deserialize, Serialize};

use super::{FormatError, ParamRecord};

/// Tag identifying the manifest layout.
pub const MANIFEST_FORMAT: &str = "emech-run/1";

/// A linear grid as given on the command line (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    pub name: String,
    pub center_hz: f64,
    pub half_span_hz: f64,
    pub points: usize,
}

/// Everything needed to rerun a command and reproduce its outputs.
///
/// `args` holds the subcommand's own options verbatim; the library does not
/// interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format: String,
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub params: ParamRecord,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grids: Vec<GridRecord>,
    pub args: serde_json::Value,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest is plain data");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let manifest: RunManifest = serde_json::from_str(text)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(FormatError::Invalid(format!(
                "unsupported manifest format `{}` (expected `{MANIFEST_FORMAT}`)",
                manifest.format
            )));
        }
        Ok(manifest)
    }
}
