//! One function per verb. Each validates the spec, creates the output
//! directory, writes its outputs and the manifest.

use std::path::{Path, PathBuf};

use phi4_core::ftle::{ftle, FtleSample, PotentialPath};
use phi4_core::io::FieldPath;
use phi4_core::littlewood_paley::BlockDecomposition;
use phi4_core::noise::{stationary_z, wick_constant, NoiseStream};
use phi4_core::solver::simulate;
use phi4_core::stationary::{mean_se, sample_stationary};
use phi4_core::steer::demo_support;
use phi4_core::{SpectralField, TorusGrid};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::write_manifest;
use crate::spec::{ExperimentSpec, Mode};
use crate::sweep::{burn_in_for, job_config, run_sweep};
use crate::table::{num, write_table, FTLE_VERB_COLUMNS, STEER_COLUMNS, WICK_COLUMNS};

/// Where and how to run.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub workers: usize,
}

pub fn execute(mode: Mode, spec: &ExperimentSpec, ctx: &RunContext) -> CliResult<()> {
    spec.validate(mode)?;
    let out = ctx.out.as_path();
    if mode == Mode::Sweep {
        let s = run_sweep(spec, out, ctx.workers)?;
        println!(
            "sweep: {} jobs, {} already done, {} written, {} failed",
            s.jobs, s.skipped, s.written, s.failed
        );
        return Ok(());
    }
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    match mode {
        Mode::Simulate => cmd_simulate(spec, out),
        Mode::Stationary => cmd_stationary(spec, out),
        Mode::Ftle => cmd_ftle(spec, out),
        Mode::Steer => cmd_steer(spec, out),
        Mode::WickCheck => cmd_wick(spec, out),
        Mode::Besov => cmd_besov(spec, out),
        Mode::Sweep => unreachable!(),
    }
}

fn load_input(spec: &ExperimentSpec) -> CliResult<Option<FieldPath>> {
    spec.input
        .as_ref()
        .map(|p| FieldPath::load(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))))
        .transpose()
}

fn config_value(spec: &ExperimentSpec) -> serde_json::Value {
    serde_json::to_value(&spec.solver).expect("config serializes")
}

fn cmd_simulate(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let cfg = &spec.solver;
    let grid = cfg.grid()?;
    let phi0 = match load_input(spec)? {
        Some(p) => {
            let f = p.fields.last().expect("paths are non-empty").clone();
            if !TorusGrid::same(f.grid(), &grid) {
                return Err(CliError::Usage("input field does not match the solver grid".into()));
            }
            f
        }
        None => SpectralField::zeros(&grid),
    };
    write_manifest(out, Mode::Simulate, spec, &[cfg.seed], json!({}))?;
    let path = simulate(cfg, &phi0, true)?;
    FieldPath::new("phi", cfg.dt, cfg.snapshot_steps(), path.phi)?
        .with_config(config_value(spec))
        .save(&out.join("phi.path"))?;
    let rows: Vec<Vec<String>> = path
        .diagnostics
        .iter()
        .map(|d| {
            vec![
                d.step.to_string(),
                num(d.time),
                num(d.r_regular),
                num(d.r_besov0),
                num(d.r_sup),
                d.block_cutoff.to_string(),
                num(d.u1),
                num(d.u2),
            ]
        })
        .collect();
    let header = ["step", "t", "r_regular", "r_besov0", "r_sup", "block_cutoff", "u1", "u2"];
    write_table(&out.join("diagnostics.csv"), &header, &rows)?;
    println!("simulate: {} snapshots written to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_stationary(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let cfg = &spec.solver;
    let b = burn_in_for(spec, cfg.alpha, cfg.seed)?;
    write_manifest(out, Mode::Stationary, spec, &[cfg.seed], json!({ "burn_in": [&b] }))?;
    let run = sample_stationary(cfg, b.burn_in, cfg.seed)?;
    let meta = json!({ "solver": config_value(spec), "burn_in": b.burn_in, "shift": run.shift });
    for (kind, fields) in [("phi", &run.phi), ("z", &run.gaussian), ("q", &run.q)] {
        FieldPath::new(kind, run.dt, run.steps.clone(), fields.clone())?
            .with_config(meta.clone())
            .save(&out.join(format!("{kind}.path")))?;
    }
    println!("stationary: burn-in {}, q path written to {}", b.burn_in, out.join("q.path").display());
    Ok(())
}

fn ftle_row(s: &FtleSample) -> Vec<String> {
    vec![
        num(s.alpha),
        num(s.horizon),
        s.seed.to_string(),
        num(s.lambda),
        s.iterations.to_string(),
        num(s.residual),
        s.converged.to_string(),
    ]
}

fn cmd_ftle(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let seed = spec.solver.seed;
    let input = load_input(spec)?;
    let mut details = Vec::new();
    let mut rows = Vec::new();
    let given: Option<PotentialPath> = input.map(|p| p.to_potential()).transpose()?;
    if given.is_none() {
        for &alpha in &spec.alpha_list() {
            details.push(burn_in_for(spec, alpha, seed)?);
        }
    }
    write_manifest(out, Mode::Ftle, spec, &[seed], json!({ "burn_in": details }))?;
    for (i, &alpha) in spec.alpha_list().iter().enumerate() {
        let s = match &given {
            Some(q) => ftle(q, alpha, seed, &spec.ftle)?,
            None => {
                let run = sample_stationary(&job_config(spec, alpha, seed), details[i].burn_in, seed)?;
                ftle(&run.potential()?, alpha, seed, &spec.ftle)?
            }
        };
        println!("alpha {} T {} lambda_T {}", s.alpha, s.horizon, s.lambda);
        rows.push(ftle_row(&s));
    }
    write_table(&out.join("ftle.csv"), &FTLE_VERB_COLUMNS, &rows)
}

fn cmd_steer(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let alpha = spec.alpha_list()[0];
    write_manifest(out, Mode::Steer, spec, &[], json!({ "alpha": alpha }))?;
    let report = demo_support(&spec.lambdas, alpha, &spec.solver, &spec.ftle)?;
    let rows: Vec<Vec<String>> = report
        .iter()
        .map(|r| {
            println!("target {} measured {} |err| {:.3e}", r.lambda_target, r.lambda_measured, r.abs_err);
            vec![
                num(r.lambda_target),
                num(r.kappa),
                num(r.phi0),
                num(r.f),
                num(r.c),
                num(r.lambda_measured),
                num(r.abs_err),
            ]
        })
        .collect();
    write_table(&out.join("steer.csv"), &STEER_COLUMNS, &rows)
}

/// Pointwise variance of stationary `Z` (unit noise) against `C_N`.
pub fn wick_check_row(dim: usize, cutoff: usize, mass: f64, samples: u64, seed: u64) -> phi4_core::Result<[f64; 4]> {
    let grid = TorusGrid::new(dim, cutoff)?;
    let c = wick_constant(&grid, mass)?;
    let xs = (0..samples)
        .map(|s| {
            let z = stationary_z(&grid, mass, 1.0, &NoiseStream::new(seed, s), 0)?;
            // value at the origin is the coefficient sum
            Ok(z.coeffs().iter().map(|a| a.re).sum::<f64>().powi(2))
        })
        .collect::<phi4_core::Result<Vec<f64>>>()?;
    let (m, se) = mean_se(&xs);
    Ok([c, m, se, (m - c) / se])
}

fn cmd_wick(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let cfg = &spec.solver;
    write_manifest(out, Mode::WickCheck, spec, &[cfg.seed], json!({}))?;
    let mut rows = Vec::new();
    for &n in &spec.wick.cutoffs {
        let [c, m, se, z] = wick_check_row(cfg.dim, n, cfg.mass, spec.wick.samples, cfg.seed)?;
        println!("N {n}: C_N {c:.6} empirical {m:.6} ± {se:.6} (z = {z:.2})");
        rows.push(vec![n.to_string(), num(cfg.mass), num(c), num(m), num(se), num(z)]);
    }
    write_table(&out.join("wick.csv"), &WICK_COLUMNS, &rows)
}

fn cmd_besov(spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let path = load_input(spec)?.expect("validated");
    let beta = spec.beta.unwrap_or(-spec.solver.epsilon);
    write_manifest(out, Mode::Besov, spec, &[], json!({ "beta": beta }))?;
    let lp = BlockDecomposition::new(path.grid());
    let mut rows = Vec::new();
    for ((step, t), f) in path.steps.iter().zip(&path.times).zip(&path.fields) {
        let norms = lp.block_sup_norms(f);
        println!("step {step} t {t}: B^{beta}_inf,inf norm {}", lp.besov_norm(f, beta));
        for (j, b) in (-1..).zip(&norms) {
            println!("  block {j:>2}: {b:.6e}");
            let weighted = 2f64.powf(j as f64 * beta) * b;
            rows.push(vec![step.to_string(), num(*t), j.to_string(), num(*b), num(weighted)]);
        }
    }
    write_table(&out.join("besov.csv"), &["step", "t", "block", "sup_norm", "weighted"], &rows)
}
