//! Stationary solution by burn-in and its renormalized square.
//!
//! A run starts at step `-n_b` with `Z` drawn from its stationary law and
//! `Φ = 0`, and integrates to time 0 before recording `[0, T]`. Noise is
//! keyed by the absolute step, so runs with different burn-in share the
//! noise on their common interval and approach the same pullback limit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ftle::PotentialPath;
use crate::noise::NoiseStream;
use crate::solver::{snapshot_steps, SolverConfig, Trajectory};
use crate::torus::{Padding, SpectralField, TorusGrid};

/// Recorded stationary trajectory on `[0, T]`.
#[derive(Clone, Debug)]
pub struct StationaryRun {
    pub burn_in: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// Wick shift used in `q`.
    pub shift: f64,
    /// Step indices of the snapshots.
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub phi: Vec<SpectralField>,
    pub gaussian: Vec<SpectralField>,
    /// `:Φ²:` at each snapshot.
    pub q: Vec<SpectralField>,
}

impl StationaryRun {
    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.phi[0].grid()
    }

    /// Potential for the linearization, interpolated between snapshots.
    pub fn potential(&self) -> Result<PotentialPath> {
        let n = *self.steps.last().unwrap_or(&0);
        PotentialPath::from_snapshots(&self.q, &self.steps, self.dt, n)
    }
}

/// Number of burn-in steps for `T_b`.
pub fn burn_in_steps(cfg: &SolverConfig, burn_in: f64) -> usize {
    (burn_in / cfg.dt).round() as usize
}

/// Integrates from `Φ(-T_b) = 0` (with `Z(-T_b)` stationary) and records
/// `Φ`, `Z` and `:Φ²:` at the configured snapshots of `[0, T]`.
pub fn sample_stationary(cfg: &SolverConfig, burn_in: f64, seed: u64) -> Result<StationaryRun> {
    if !(burn_in > 0.0) {
        return Err(Error::InvalidConfig(format!("burn-in must be positive, got {burn_in}")));
    }
    cfg.validate()?;
    let grid = cfg.grid()?;
    let nb = burn_in_steps(cfg, burn_in) as i64;
    let noise = NoiseStream::new(seed, 0);
    let mut traj = Trajectory::start(cfg, &SpectralField::zeros(&grid), noise, -nb)?;
    traj.advance_by(nb as usize)?;

    let keep = snapshot_steps(cfg.steps(), cfg.snapshot_stride);
    let mut run = StationaryRun {
        burn_in,
        horizon: cfg.horizon,
        dt: cfg.dt,
        seed,
        shift: traj.shift(),
        steps: keep.clone(),
        times: Vec::with_capacity(keep.len()),
        phi: Vec::with_capacity(keep.len()),
        gaussian: Vec::with_capacity(keep.len()),
        q: Vec::with_capacity(keep.len()),
    };
    let mut at = 0;
    for &k in &keep {
        traj.advance_by(k - at)?;
        at = k;
        let phi = traj.phi();
        let z = traj.state().gaussian.clone();
        run.q.push(renormalized_square(&phi, &z, run.shift)?);
        run.times.push(traj.time());
        run.phi.push(phi);
        run.gaussian.push(z);
    }
    Ok(run)
}

/// `F(u, v, w) = u² + 2uv + w` with `u = Φ - Z`, `v = Z`, `w = Z² - c`.
pub fn renormalized_square(phi: &SpectralField, z: &SpectralField, c: f64) -> Result<SpectralField> {
    phi.check_grid(z)?;
    let u = phi - z;
    let mut q = u.dealiased_product(&u)?;
    q.axpy(2.0, &u.dealiased_product(z)?);
    q.axpy(1.0, &z.dealiased_product(z)?);
    Ok(q.add_constant(-c))
}

/// Snapshot-wise [`renormalized_square`].
pub fn renormalized_square_path(phi: &[SpectralField], z: &[SpectralField], c: f64) -> Result<Vec<SpectralField>> {
    if phi.len() != z.len() {
        return Err(Error::Misaligned {
            expected: phi.len(),
            found: z.len(),
        });
    }
    phi.iter().zip(z).map(|(p, z)| renormalized_square(p, z, c)).collect()
}

/// `q ≡ κ` over the configured horizon.
pub fn deterministic_potential(kappa: f64, cfg: &SolverConfig) -> Result<PotentialPath> {
    cfg.validate()?;
    PotentialPath::constant(&cfg.grid()?, kappa, cfg.dt, cfg.steps())
}

/// Spatial means `∫Φ²` and `∫Φ⁴` (exact quadrature on the cubic grid).
pub fn moments(phi: &SpectralField) -> [f64; 2] {
    let grid = phi.grid();
    let v = grid.physical(Padding::Cubic, phi.coeffs());
    let n = v.len() as f64;
    let (m2, m4) = v.iter().fold((0.0, 0.0), |(a, b), x| {
        let s = x * x;
        (a + s, b + s * s)
    });
    [m2 / n, m4 / n]
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outcome of one burn-in doubling comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingCheck {
    pub burn_in: f64,
    /// Means of `∫Φ²`, `∫Φ⁴` at time 0 with `T_b` and `2T_b`.
    pub short: [f64; 2],
    pub long: [f64; 2],
    /// Standard errors with `2T_b`.
    pub se: [f64; 2],
    pub accepted: bool,
}

/// Observables at time 0 after burn-in `T_b`, one entry per seed.
fn time_zero_moments(cfg: &SolverConfig, burn_in: f64, seeds: &[u64]) -> Result<Vec<[f64; 2]>> {
    let mut c = cfg.clone();
    c.horizon = c.dt;
    c.snapshot_stride = 1;
    seeds
        .iter()
        .map(|&s| Ok(moments(&sample_stationary(&c, burn_in, s)?.phi[0])))
        .collect()
}

/// Compares the time-0 observables after burn-in `T_b` and `2T_b`; they are
/// accepted when both means move by less than `tolerance` standard errors.
pub fn doubling_check(cfg: &SolverConfig, burn_in: f64, seeds: &[u64], tolerance: f64) -> Result<DoublingCheck> {
    let a = time_zero_moments(cfg, burn_in, seeds)?;
    let b = time_zero_moments(cfg, 2.0 * burn_in, seeds)?;
    let mut check = DoublingCheck {
        burn_in,
        short: [0.0; 2],
        long: [0.0; 2],
        se: [0.0; 2],
        accepted: true,
    };
    for i in 0..2 {
        let xs: Vec<f64> = a.iter().map(|m| m[i]).collect();
        let ys: Vec<f64> = b.iter().map(|m| m[i]).collect();
        let (ma, _) = mean_se(&xs);
        let (mb, se) = mean_se(&ys);
        check.short[i] = ma;
        check.long[i] = mb;
        check.se[i] = se;
        if !((ma - mb).abs() <= tolerance * se) {
            check.accepted = false;
        }
    }
    Ok(check)
}

/// Doubles the burn-in from `initial` until [`doubling_check`] accepts (at
/// most `max_doublings` times). Returns the accepted burn-in and the checks.
pub fn calibrate_burn_in(
    cfg: &SolverConfig,
    initial: f64,
    seeds: &[u64],
    tolerance: f64,
    max_doublings: usize,
) -> Result<(f64, Vec<DoublingCheck>)> {
    let mut tb = initial;
    let mut log = Vec::new();
    for _ in 0..=max_doublings {
        let c = doubling_check(cfg, tb, seeds, tolerance)?;
        let ok = c.accepted;
        log.push(c);
        if ok {
            return Ok((tb, log));
        }
        tb *= 2.0;
    }
    Err(Error::InvalidConfig(format!(
        "burn-in not calibrated after {max_doublings} doublings from {initial}"
    )))
}
