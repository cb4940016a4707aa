//! Run manifests: one JSON document next to every output artifact, holding
//! enough to re-run the command that produced it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::failure::{runtime, CmdResult};

pub const TOOL: &str = "etlsentry";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    pub seed: Option<u64>,
    /// Every setting after defaults were applied.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

/// Per-invocation facts shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub argv: Vec<String>,
    pub cwd: PathBuf,
}

impl Invocation {
    pub fn manifest(
        &self,
        subcommand: &str,
        seed: Option<u64>,
        config: serde_json::Value,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        wall_time: Duration,
    ) -> RunManifest {
        RunManifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv: self.argv.clone(),
            cwd: self.cwd.clone(),
            seed,
            config,
            inputs,
            outputs,
            wall_time_s: wall_time.as_secs_f64(),
        }
    }
}

/// `run.jsonl` → `run.manifest.json`
pub fn manifest_path(artifact: &Path) -> PathBuf {
    artifact.with_extension("manifest.json")
}

pub fn write_manifest(m: &RunManifest, path: &Path) -> CmdResult {
    let mut text = serde_json::to_string_pretty(m).map_err(runtime)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub fn read_manifest(path: &Path) -> CmdResult<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| runtime(format!("{}: not a run manifest: {e}", path.display())))
}

pub fn to_value<T: Serialize>(v: &T) -> CmdResult<serde_json::Value> {
    serde_json::to_value(v).map_err(runtime)
}
