//! Command-line front end: experiment configs, sweeps and CSV outputs.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod spec;
pub mod sweep;
pub mod table;

use std::path::{Path, PathBuf};

pub use commands::{execute, RunContext};
pub use error::{CliError, CliResult};
pub use spec::{parse_lambdas, ExperimentSpec, Mode};
pub use sweep::{run_sweep, SweepSummary};

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub alphas: Vec<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
    pub beta: Option<f64>,
}

pub fn load_spec(path: &Path) -> CliResult<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    ExperimentSpec::from_json_str(&text)
}

/// Merges config file and overrides; `verb` is the subcommand, if any.
pub fn resolve(verb: Option<Mode>, ov: &Overrides) -> CliResult<(Mode, ExperimentSpec, RunContext)> {
    let mut spec = match &ov.config {
        Some(p) => load_spec(p)?,
        None => ExperimentSpec::default(),
    };
    let mode = match (verb, spec.mode) {
        (Some(v), Some(m)) if v != m => {
            return Err(CliError::Usage(format!("config is for mode {}, not {}", m.name(), v.name())))
        }
        (Some(v), _) | (None, Some(v)) => v,
        (None, None) => return Err(CliError::Usage("config does not name a mode".into())),
    };
    spec.mode = Some(mode);
    if let Some(s) = ov.seed {
        spec.solver.seed = s;
    }
    if !ov.alphas.is_empty() {
        spec.alphas = ov.alphas.clone();
    }
    if let Some(l) = &ov.lambdas {
        spec.lambdas = l.clone();
    }
    if ov.input.is_some() {
        spec.input = ov.input.clone();
    }
    if ov.beta.is_some() {
        spec.beta = ov.beta;
    }
    let workers = ov.workers.or(spec.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError::Usage("workers must be positive".into()));
    }
    let out = ov.out.clone().or_else(|| spec.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((mode, spec, RunContext { out, workers }))
}

/// Runs and maps the outcome to an exit status: 0 success, 1 runtime
/// error, 2 invalid configuration.
pub fn run(verb: Option<Mode>, ov: &Overrides) -> i32 {
    match resolve(verb, ov).and_then(|(mode, spec, ctx)| execute(mode, &spec, &ctx)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("phi4: {e}");
            e.exit_code()
        }
    }
}

/// Executes the config file at `path` in the mode it names.
pub fn run_config(path: &Path) -> i32 {
    run(
        None,
        &Overrides {
            config: Some(path.to_path_buf()),
            ..Overrides::default()
        },
    )
}
