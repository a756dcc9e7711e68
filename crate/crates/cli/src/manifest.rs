use std::path::Path;

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::spec::{ExperimentSpec, Mode};

pub const MANIFEST: &str = "manifest.json";

/// Writes `manifest.json`: the resolved config, the code version, the seeds
/// and any mode-specific details. The worker count is left out because no
/// output depends on it.
pub fn write_manifest(out: &Path, mode: Mode, spec: &ExperimentSpec, seeds: &[u64], extra: Value) -> CliResult<()> {
    let mut config = spec.clone();
    config.workers = None;
    config.mode = Some(mode);
    let doc = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": mode.name(),
        "config": config,
        "seeds": seeds,
        "details": extra,
    });
    let path = out.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(CliError::io(&path))
}
