//! The experiment configuration: one JSON document.

use std::path::PathBuf;

use phi4_core::ftle::FtleOptions;
use phi4_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest seed set a config may expand to.
pub const MAX_SEEDS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Stationary,
    Ftle,
    Sweep,
    Steer,
    WickCheck,
    Besov,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Stationary => "stationary",
            Mode::Ftle => "ftle",
            Mode::Sweep => "sweep",
            Mode::Steer => "steer",
            Mode::WickCheck => "wick-check",
            Mode::Besov => "besov",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

/// Either an explicit list or `{"start": s, "count": n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSet {
    List(Vec<u64>),
    Range(SeedRange),
}

impl SeedSet {
    pub fn expand(&self) -> CliResult<Vec<u64>> {
        let seeds = match self {
            SeedSet::List(v) => v.clone(),
            SeedSet::Range(r) => {
                if r.count > MAX_SEEDS || r.start.checked_add(r.count).is_none() {
                    return Err(CliError::Usage(format!("seed range {r:?} too large")));
                }
                (r.start..r.start + r.count).collect()
            }
        };
        if seeds.len() as u64 > MAX_SEEDS {
            return Err(CliError::Usage("too many seeds".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("duplicate seeds".into()));
        }
        Ok(seeds)
    }
}

/// Burn-in doubling test, used when `burn_in` is not given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub initial: f64,
    pub seeds: u64,
    /// Accept when the doubled burn-in moves both means by less than this
    /// many standard errors.
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            initial: 0.25,
            seeds: 20,
            tolerance: 1.0,
            max_doublings: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WickCheckSpec {
    pub cutoffs: Vec<usize>,
    pub samples: u64,
}

impl Default for WickCheckSpec {
    fn default() -> Self {
        Self {
            cutoffs: vec![4, 8, 16],
            samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Option<Mode>,
    pub solver: SolverConfig,
    pub alphas: Vec<f64>,
    pub seeds: Option<SeedSet>,
    /// Fixed burn-in time; calibrated per α when absent.
    pub burn_in: Option<f64>,
    pub calibration: Calibration,
    pub ftle: FtleOptions,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Fill the wall_ms column (makes ftle.csv machine dependent).
    pub record_wall_ms: bool,
    /// Steering targets.
    pub lambdas: Vec<f64>,
    pub wick: WickCheckSpec,
    /// Field or path file read by `ftle`, `simulate` and `besov`.
    pub input: Option<PathBuf>,
    /// Besov exponent; defaults to `-epsilon`.
    pub beta: Option<f64>,
}

impl ExperimentSpec {
    pub fn from_json_str(s: &str) -> CliResult<Self> {
        serde_json::from_str(s).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// α values to run, falling back to the solver's α.
    pub fn alpha_list(&self) -> Vec<f64> {
        if self.alphas.is_empty() {
            vec![self.solver.alpha]
        } else {
            self.alphas.clone()
        }
    }

    pub fn seed_list(&self) -> CliResult<Vec<u64>> {
        match &self.seeds {
            Some(s) => s.expand(),
            None => Ok(vec![self.solver.seed]),
        }
    }

    pub fn validate(&self, mode: Mode) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.solver.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.alphas.iter().chain(&self.lambdas).any(|x| !x.is_finite()) {
            return usage("alphas and lambdas must be finite".into());
        }
        if let Some(tb) = self.burn_in {
            if !(tb > 0.0 && tb.is_finite()) {
                return usage(format!("burn_in must be positive, got {tb}"));
            }
        }
        let c = &self.calibration;
        if !(c.initial > 0.0 && c.initial.is_finite()) || c.seeds < 2 || !(c.tolerance > 0.0) || c.max_doublings > 30 {
            return usage(format!("invalid calibration {c:?}"));
        }
        if !(self.ftle.tol > 0.0) || self.ftle.max_iter == 0 {
            return usage("ftle.tol and ftle.max_iter must be positive".into());
        }
        if self.workers == Some(0) {
            return usage("workers must be positive".into());
        }
        self.seed_list()?;
        match mode {
            Mode::Sweep => {
                if self.alphas.is_empty() {
                    return usage("sweep needs a non-empty alphas list".into());
                }
                if self.seed_list()?.is_empty() {
                    return usage("sweep needs a non-empty seed set".into());
                }
                let mut a: Vec<u64> = self.alphas.iter().map(|x| x.to_bits()).collect();
                a.sort_unstable();
                if a.windows(2).any(|w| w[0] == w[1]) {
                    return usage("duplicate alphas".into());
                }
            }
            Mode::Steer if self.lambdas.is_empty() => return usage("steer needs lambdas".into()),
            Mode::WickCheck => {
                let w = &self.wick;
                if w.cutoffs.is_empty() || w.cutoffs.iter().any(|&n| n == 0 || n > 512) || w.samples < 2 {
                    return usage(format!("invalid wick-check settings {w:?}"));
                }
            }
            Mode::Besov if self.input.is_none() => return usage("besov needs an input file".into()),
            _ => {}
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return usage("beta must be finite".into());
            }
        }
        Ok(())
    }
}

/// Parses `"-5,-1,0,1,5"`; blanks around entries are ignored.
pub fn parse_lambdas(s: &str) -> CliResult<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(CliError::Usage("empty lambda list".into()));
    }
    s.split(',')
        .map(|t| match t.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(CliError::Usage(format!("bad lambda {t:?}"))),
        })
        .collect()
}
