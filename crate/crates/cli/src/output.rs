use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use electromech::formats::{GridRecord, ParamRecord, RunManifest, MANIFEST_FORMAT};

/// Files produced by one run, named relative to the output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
    grids: Vec<GridRecord>,
}

impl Outputs {
    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn grid(&mut self, name: &str, center_hz: f64, half_span_hz: f64, points: usize) {
        self.grids.push(GridRecord {
            name: name.to_string(),
            center_hz,
            half_span_hz,
            points,
        });
    }
}

pub fn manifest_name(subcommand: &str) -> String {
    format!("{subcommand}.manifest.json")
}

/// Writes every output file and then the manifest describing the run.
/// Returns the manifest path.
pub fn write_run(
    dir: &Path,
    subcommand: &str,
    params: &ParamRecord,
    seed: u64,
    args: serde_json::Value,
    outputs: Outputs,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    for (name, contents) in &outputs.files {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    let manifest = RunManifest {
        format: MANIFEST_FORMAT.to_string(),
        tool: "emech".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        params: params.clone(),
        seed: Some(seed),
        grids: outputs.grids,
        args,
        outputs: outputs.files.into_iter().map(|(name, _)| name).collect(),
    };
    let path = dir.join(manifest_name(subcommand));
    fs::write(&path, manifest.to_json()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
