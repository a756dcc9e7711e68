//! Monte Carlo sweep over (α, seed): stationary run → potential path → λ_T.
//!
//! Jobs run on a work-stealing pool; a single sink appends results in job
//! order, one flushed line at a time. The table therefore does not depend on
//! the worker count, and an interrupted sweep leaves a prefix of it.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use phi4_core::ftle::ftle;
use phi4_core::solver::SolverConfig;
use phi4_core::stationary::{calibrate_burn_in, sample_stationary, DoublingCheck};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::spec::ExperimentSpec;
use crate::table::{
    csv_line, parse_failures_csv, parse_ftle_csv, FailureRecord, FtleRecord, JobKey, Table, FAILURE_COLUMNS,
    FTLE_COLUMNS,
};

pub const FTLE_CSV: &str = "ftle.csv";
pub const FAILURES_CSV: &str = "failures.csv";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BurnIn {
    pub alpha: f64,
    pub burn_in: f64,
    /// Doubling checks run to choose it; empty when fixed by the config.
    pub checks: Vec<DoublingCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub jobs: usize,
    pub skipped: usize,
    pub written: usize,
    pub failed: usize,
    pub burn_ins: Vec<BurnIn>,
}

/// Solver settings of one job.
pub fn job_config(spec: &ExperimentSpec, alpha: f64, seed: u64) -> SolverConfig {
    SolverConfig {
        alpha,
        seed,
        ..spec.solver.clone()
    }
}

/// Burn-in for `alpha`: the configured one, or the doubling calibration over
/// the first `calibration.seeds` seeds counting from the first sweep seed.
pub fn burn_in_for(spec: &ExperimentSpec, alpha: f64, first_seed: u64) -> CliResult<BurnIn> {
    if let Some(tb) = spec.burn_in {
        return Ok(BurnIn {
            alpha,
            burn_in: tb,
            checks: Vec::new(),
        });
    }
    let c = &spec.calibration;
    let seeds: Vec<u64> = (0..c.seeds).map(|i| first_seed.wrapping_add(i)).collect();
    let cfg = job_config(spec, alpha, first_seed);
    let (tb, checks) = calibrate_burn_in(&cfg, c.initial, &seeds, c.tolerance, c.max_doublings)?;
    Ok(BurnIn {
        alpha,
        burn_in: tb,
        checks,
    })
}

/// One λ_T sample.
pub fn run_job(spec: &ExperimentSpec, alpha: f64, seed: u64, burn_in: f64) -> phi4_core::Result<FtleRecord> {
    let start = Instant::now();
    let cfg = job_config(spec, alpha, seed);
    let run = sample_stationary(&cfg, burn_in, seed)?;
    let q = run.potential()?;
    let s = ftle(&q, alpha, seed, &spec.ftle)?;
    Ok(FtleRecord {
        alpha,
        seed,
        horizon: cfg.horizon,
        cutoff: cfg.cutoff,
        dt: cfg.dt,
        burn_in,
        lambda: s.lambda,
        iterations: s.iterations,
        residual: s.residual,
        converged: s.converged,
        wall_ms: spec.record_wall_ms.then(|| start.elapsed().as_millis() as u64),
    })
}

/// Opens `path` for appending after dropping an interrupted last line; a
/// missing or empty file gets the header.
fn open_table<R>(
    path: &Path,
    header: &[&str],
    parse: impl Fn(&str) -> Result<Table<R>, String>,
) -> CliResult<(File, Vec<R>)> {
    let text = match std::fs::read(path) {
        Ok(b) => String::from_utf8(b).map_err(|e| CliError::Data {
            path: path.into(),
            msg: e.to_string(),
        })?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(CliError::io(path)(e)),
    };
    let table = parse(&text).map_err(|msg| CliError::Data { path: path.into(), msg })?;
    let f = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(path)
        .map_err(CliError::io(path))?;
    f.set_len(table.complete_len as u64).map_err(CliError::io(path))?;
    let mut f = OpenOptions::new().append(true).open(path).map_err(CliError::io(path))?;
    if table.complete_len == 0 {
        f.write_all(&csv_line(header)).map_err(CliError::io(path))?;
    }
    f.flush().map_err(CliError::io(path))?;
    Ok((f, table.rows))
}

struct Sink {
    rows: File,
    failures: File,
    rows_path: PathBuf,
    failures_path: PathBuf,
}

impl Sink {
    fn write(&mut self, result: Result<FtleRecord, FailureRecord>) -> CliResult<bool> {
        let (f, path, line, ok) = match &result {
            Ok(r) => (&mut self.rows, &self.rows_path, csv_line(r.fields()), true),
            Err(e) => (&mut self.failures, &self.failures_path, csv_line(e.fields()), false),
        };
        f.write_all(&line).map_err(CliError::io(path))?;
        f.flush().map_err(CliError::io(path))?;
        Ok(ok)
    }
}

/// Runs every (α, seed) job not yet recorded in `out/ftle.csv` or
/// `out/failures.csv`. Failed jobs are recorded with their reason and count as
/// done.
pub fn run_sweep(spec: &ExperimentSpec, out: &Path, workers: usize) -> CliResult<SweepSummary> {
    spec.validate(crate::spec::Mode::Sweep)?;
    let seeds = spec.seed_list()?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;

    let rows_path = out.join(FTLE_CSV);
    let failures_path = out.join(FAILURES_CSV);
    let (rows, done_rows) = open_table(&rows_path, &FTLE_COLUMNS, parse_ftle_csv)?;
    let (failures, done_failures) = open_table(&failures_path, &FAILURE_COLUMNS, parse_failures_csv)?;
    let done: HashSet<JobKey> = done_rows
        .iter()
        .map(FtleRecord::key)
        .chain(done_failures.iter().map(FailureRecord::key))
        .collect();

    let burn_ins = spec
        .alphas
        .iter()
        .map(|&a| burn_in_for(spec, a, seeds[0]))
        .collect::<CliResult<Vec<_>>>()?;

    crate::manifest::write_manifest(
        out,
        crate::spec::Mode::Sweep,
        spec,
        &seeds,
        serde_json::json!({ "burn_in": burn_ins }),
    )?;

    let all: Vec<(f64, u64, f64)> = burn_ins
        .iter()
        .flat_map(|b| seeds.iter().map(move |&s| (b.alpha, s, b.burn_in)))
        .collect();
    let jobs: Vec<(f64, u64, f64)> = all
        .iter()
        .copied()
        .filter(|(a, s, _)| !done.contains(&(a.to_bits(), *s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut sink = Sink {
        rows,
        failures,
        rows_path,
        failures_path,
    };
    let (tx, rx) = mpsc::channel::<(usize, Result<FtleRecord, FailureRecord>)>();

    let (written, failed) = std::thread::scope(|sc| {
        let writer = sc.spawn(move || -> CliResult<(usize, usize)> {
            let mut pending = BTreeMap::new();
            let (mut next, mut ok, mut bad) = (0, 0, 0);
            for (i, r) in rx {
                pending.insert(i, r);
                while let Some(r) = pending.remove(&next) {
                    if sink.write(r)? {
                        ok += 1;
                    } else {
                        bad += 1;
                    }
                    next += 1;
                }
            }
            Ok((ok, bad))
        });
        pool.install(|| {
            jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, &(alpha, seed, tb))| {
                let r = run_job(spec, alpha, seed, tb).map_err(|e| FailureRecord {
                    alpha,
                    seed,
                    error: e.to_string(),
                });
                // a closed channel means the writer failed; its error is reported below
                let _ = tx.send((i, r));
            });
        });
        writer.join().expect("sink thread panicked")
    })?;

    Ok(SweepSummary {
        jobs: all.len(),
        skipped: all.len() - jobs.len(),
        written,
        failed,
        burn_ins,
    })
}
