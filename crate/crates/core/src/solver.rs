//! Da Prato–Debussche splitting `Φ = R + Z` and exponential-Euler integration
//! of the remainder, the solution maps `Ψ_α` and `𝒥_α`, and the paraproduct
//! diagnostics of the a-priori bound.
//!
//! The remainder solves
//!
//! ```text
//! ∂_t R = (Δ - m) R + G,
//! G = -R³ - 3R²Z₁ - 3RZ₂ - Z₃ + (α + m) R  [+ (α + m) Z₁]
//! ```
//!
//! where the bracketed term is present when `Z₁` is the massive Gaussian part
//! of a stochastic run, so that `R + Z₁` solves the renormalized equation with
//! parameter `α`. One step is `R̂_k ← e^{-μ_k h} R̂_k + φ₁(-μ_k h) h Ĝ_k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::BlockDecomposition;
use crate::noise::{self, NoiseStream, OuStepper, WickTriple};
use crate::torus::{Padding, SpectralField, TorusGrid, FOUR_PI_SQ};

/// `φ₁(z) = (e^z - 1)/z`, `φ₁(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dim: usize,
    pub cutoff: usize,
    /// Physical points per axis; defaults to the padding used for cubic terms.
    pub points: Option<usize>,
    pub dt: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub mass: f64,
    pub seed: u64,
    pub snapshot_stride: usize,
    /// Regularity loss `ε` used by the Besov diagnostics.
    pub epsilon: f64,
    /// Scale `σ` of the forcing noise `σξ`.
    pub noise_amplitude: f64,
    /// Wick renormalization of the cubic term; defaults to `dim == 2`.
    pub renormalize: Option<bool>,
    /// Fine noise draws per step (coupling across step sizes).
    pub noise_substeps: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            cutoff: 16,
            points: None,
            dt: 1e-3,
            horizon: 1.0,
            alpha: 0.0,
            mass: 1.0,
            seed: 0,
            snapshot_stride: 1,
            epsilon: 0.1,
            noise_amplitude: 1.0,
            renormalize: None,
            noise_substeps: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0) {
            return Err(Error::NonPositiveStep(self.dt));
        }
        if !(self.horizon >= self.dt) {
            return bad(format!("horizon {} shorter than dt {}", self.horizon, self.dt));
        }
        let steps = (self.horizon / self.dt).round();
        if ((steps * self.dt - self.horizon) / self.horizon).abs() > 1e-9 {
            return bad(format!("horizon {} is not a multiple of dt {}", self.horizon, self.dt));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be positive".into());
        }
        if !(self.mass > 0.0) {
            return Err(Error::NonPositiveMass(self.mass));
        }
        if !self.alpha.is_finite() || !self.noise_amplitude.is_finite() || self.noise_amplitude < 0.0 {
            return bad("alpha and noise_amplitude must be finite, amplitude >= 0".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.dim == 1 || self.dim == 2) || self.cutoff == 0 {
            return bad(format!("need dim in {{1, 2}} and cutoff >= 1, got {} / {}", self.dim, self.cutoff));
        }
        if self.cutoff > 512 {
            return bad(format!("cutoff {} too large", self.cutoff));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<TorusGrid>> {
        match self.points {
            Some(m) => TorusGrid::with_points(self.dim, self.cutoff, m),
            None => TorusGrid::new(self.dim, self.cutoff),
        }
    }

    /// Number of steps covering `[0, T]`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Step indices at which snapshots are stored (always includes both ends).
    pub fn snapshot_steps(&self) -> Vec<usize> {
        snapshot_steps(self.steps(), self.snapshot_stride)
    }

    pub fn renormalizes(&self) -> bool {
        self.renormalize.unwrap_or(self.dim == 2)
    }

    /// Shift `c` used in the Wick powers: `σ² C_N`, or 0 without
    /// renormalization.
    pub fn wick_shift(&self, grid: &TorusGrid) -> Result<f64> {
        if self.renormalizes() {
            Ok(self.noise_amplitude.powi(2) * noise::wick_constant(grid, self.mass)?)
        } else {
            Ok(0.0)
        }
    }
}

pub(crate) fn snapshot_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps).step_by(stride.max(1)).collect();
    if *out.last().unwrap() != steps {
        out.push(steps);
    }
    out
}

/// Exponential-Euler integrator for `∂_t u = (Δ - μ₀) u + G(u)` with
/// precomputed per-mode factors.
#[derive(Clone, Debug)]
struct EtdFactors {
    decay: Vec<f64>,
    weight: Vec<f64>,
}

impl EtdFactors {
    fn new(grid: &TorusGrid, mass: f64, dt: f64) -> Self {
        let (decay, weight) = grid
            .k_squared()
            .iter()
            .map(|k2| {
                let z = -(mass + FOUR_PI_SQ * k2) * dt;
                (z.exp(), phi1(z) * dt)
            })
            .unzip();
        Self { decay, weight }
    }

    fn apply(&self, u: &SpectralField, drift: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        for (((o, g), a), w) in out
            .coeffs_mut()
            .iter_mut()
            .zip(drift.coeffs())
            .zip(&self.decay)
            .zip(&self.weight)
        {
            *o = *o * *a + g * *w;
        }
        out
    }
}

/// One-step map of the remainder equation.
#[derive(Clone, Debug)]
pub struct RemainderStepper {
    grid: Arc<TorusGrid>,
    alpha: f64,
    mass: f64,
    compensate: bool,
    etd: EtdFactors,
}

impl RemainderStepper {
    /// `compensate` adds `(α + m) Z₁` to the drift (stochastic mode).
    pub fn new(grid: &Arc<TorusGrid>, cfg: &SolverConfig, compensate: bool) -> Self {
        Self {
            grid: grid.clone(),
            alpha: cfg.alpha,
            mass: cfg.mass,
            compensate,
            etd: EtdFactors::new(grid, cfg.mass, cfg.dt),
        }
    }

    /// The drift `G(R, 𝒵)` (see module docs).
    pub fn drift(
        &self,
        r: &SpectralField,
        z1: &SpectralField,
        z2: &SpectralField,
        z3: &SpectralField,
    ) -> SpectralField {
        let coeffs = self.grid.evaluate(
            Padding::Cubic,
            [r.coeffs(), z1.coeffs(), z2.coeffs()],
            |[r, z1, z2]| -r * r * r - 3.0 * r * r * z1 - 3.0 * r * z2,
        );
        let mut g = SpectralField::from_raw(&self.grid, coeffs);
        let lin = self.alpha + self.mass;
        g.axpy(-1.0, z3);
        g.axpy(lin, r);
        if self.compensate {
            g.axpy(lin, z1);
        }
        g
    }

    pub fn step(
        &self,
        r: &SpectralField,
        z1: &SpectralField,
        z2: &SpectralField,
        z3: &SpectralField,
    ) -> SpectralField {
        self.etd.apply(r, &self.drift(r, z1, z2, z3))
    }
}

/// One exponential-Euler step of the remainder equation.
pub fn remainder_step(
    r: &SpectralField,
    snapshot: (&SpectralField, &SpectralField, &SpectralField),
    cfg: &SolverConfig,
    compensate: bool,
) -> Result<SpectralField> {
    let (z1, z2, z3) = snapshot;
    for z in [z1, z2, z3] {
        r.check_grid(z)?;
    }
    let out = RemainderStepper::new(r.grid(), cfg, compensate).step(r, z1, z2, z3);
    if !out.is_finite() {
        return Err(Error::BlowUp { step: 0, time: cfg.dt });
    }
    Ok(out)
}

/// Snapshots of `R` and `Ψ_α = R + Z₁`.
#[derive(Clone, Debug)]
pub struct PsiPath {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub remainder: Vec<SpectralField>,
    pub psi: Vec<SpectralField>,
}

/// `Ψ_α(φ₀, 𝒵)`: integrates the remainder from `R(0) = φ₀` along the
/// snapshots of `𝒵` (one per step, `cfg.steps() + 1` in total).
pub fn solve_psi(
    phi0: &SpectralField,
    triple: &WickTriple,
    cfg: &SolverConfig,
    compensate: bool,
) -> Result<PsiPath> {
    cfg.validate()?;
    let steps = cfg.steps();
    if triple.len() != steps + 1 || triple.z2.len() != steps + 1 || triple.z3.len() != steps + 1 {
        return Err(Error::Misaligned {
            expected: steps + 1,
            found: triple.len().min(triple.z2.len()).min(triple.z3.len()),
        });
    }
    phi0.check_grid(&triple.z1[0])?;
    let stepper = RemainderStepper::new(phi0.grid(), cfg, compensate);
    let keep = cfg.snapshot_steps();
    let mut out = PsiPath {
        steps: Vec::with_capacity(keep.len()),
        times: Vec::with_capacity(keep.len()),
        remainder: Vec::with_capacity(keep.len()),
        psi: Vec::with_capacity(keep.len()),
    };
    let mut next = 0;
    let mut r = phi0.clone();
    for i in 0..=steps {
        if next < keep.len() && keep[next] == i {
            out.steps.push(i);
            out.times.push(i as f64 * cfg.dt);
            out.psi.push(&r + &triple.z1[i]);
            out.remainder.push(r.clone());
            next += 1;
        }
        if i == steps {
            break;
        }
        r = stepper.step(&r, &triple.z1[i], &triple.z2[i], &triple.z3[i]);
        if !r.is_finite() {
            return Err(Error::BlowUp {
                step: i + 1,
                time: (i + 1) as f64 * cfg.dt,
            });
        }
    }
    Ok(out)
}

/// Forcing of the controlled equation.
#[derive(Clone, Debug)]
pub enum Forcing {
    Constant(f64),
    Field(SpectralField),
    /// One field per step, held constant over the step.
    Snapshots(Vec<SpectralField>),
}

/// `𝒥_α(φ₀, f, c)`: solves `∂_t Φ = ΔΦ - Φ³ + (3c + α)Φ + f` and returns
/// the snapshots selected by `cfg.snapshot_stride`.
pub fn solve_j(
    phi0: &SpectralField,
    forcing: &Forcing,
    c: f64,
    cfg: &SolverConfig,
) -> Result<Vec<SpectralField>> {
    cfg.validate()?;
    if !(c >= 0.0) {
        return Err(Error::NegativeShift(c));
    }
    let grid = phi0.grid();
    let steps = cfg.steps();
    match forcing {
        Forcing::Field(f) => phi0.check_grid(f)?,
        Forcing::Snapshots(fs) => {
            if fs.len() < steps {
                return Err(Error::Misaligned {
                    expected: steps,
                    found: fs.len(),
                });
            }
            for f in fs {
                phi0.check_grid(f)?;
            }
        }
        Forcing::Constant(_) => {}
    }
    let etd = EtdFactors::new(grid, 0.0, cfg.dt);
    let lin = 3.0 * c + cfg.alpha;
    let keep = cfg.snapshot_steps();
    let mut out = Vec::with_capacity(keep.len());
    let mut next = 0;
    let mut phi = phi0.clone();
    for i in 0..=steps {
        if next < keep.len() && keep[next] == i {
            out.push(phi.clone());
            next += 1;
        }
        if i == steps {
            break;
        }
        let coeffs = grid.evaluate(Padding::Cubic, [phi.coeffs()], |[p]| -p * p * p);
        let mut g = SpectralField::from_raw(grid, coeffs);
        g.axpy(lin, &phi);
        match forcing {
            Forcing::Constant(f) => g = g.add_constant(*f),
            Forcing::Field(f) => g.axpy(1.0, f),
            Forcing::Snapshots(fs) => g.axpy(1.0, &fs[i]),
        }
        phi = etd.apply(&phi, &g);
        if !phi.is_finite() {
            return Err(Error::BlowUp {
                step: i + 1,
                time: (i + 1) as f64 * cfg.dt,
            });
        }
    }
    Ok(out)
}

/// Solver state at a step; restarting from it continues the trajectory
/// bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub step: i64,
    pub remainder: SpectralField,
    pub gaussian: SpectralField,
}

/// Stochastic trajectory of the renormalized equation, `Φ = R + Z`, with the
/// Gaussian part advanced exactly and the remainder by exponential Euler.
/// Noise of step `i` covers `[i·dt, (i+1)·dt)`; steps may be negative.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Arc<TorusGrid>,
    dt: f64,
    shift: f64,
    noise: NoiseStream,
    ou: OuStepper,
    remainder: RemainderStepper,
    state: TrajectoryState,
}

impl Trajectory {
    /// Starts at `start_step` with `Z` drawn from its stationary law and
    /// `Φ = φ₀` (so `R = φ₀ - Z`).
    pub fn start(cfg: &SolverConfig, phi0: &SpectralField, noise: NoiseStream, start_step: i64) -> Result<Self> {
        let z = noise::stationary_z(phi0.grid(), cfg.mass, cfg.noise_amplitude, &noise, start_step)?;
        let state = TrajectoryState {
            step: start_step,
            remainder: phi0 - &z,
            gaussian: z,
        };
        Self::resume(cfg, noise, state)
    }

    pub fn resume(cfg: &SolverConfig, noise: NoiseStream, state: TrajectoryState) -> Result<Self> {
        cfg.validate()?;
        state.remainder.check_grid(&state.gaussian)?;
        let grid = state.remainder.grid().clone();
        Ok(Self {
            shift: cfg.wick_shift(&grid)?,
            dt: cfg.dt,
            noise,
            ou: OuStepper::new(&grid, cfg.mass, cfg.dt, cfg.noise_amplitude, cfg.noise_substeps)?,
            remainder: RemainderStepper::new(&grid, cfg, true),
            grid,
            state,
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn state(&self) -> &TrajectoryState {
        &self.state
    }

    pub fn step_index(&self) -> i64 {
        self.state.step
    }

    pub fn time(&self) -> f64 {
        self.state.step as f64 * self.dt
    }

    /// Wick shift `c` used for `Z₂`, `Z₃`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn phi(&self) -> SpectralField {
        &self.state.remainder + &self.state.gaussian
    }

    /// `(Z², Z³)` renormalized at the current state.
    pub fn wick(&self) -> (SpectralField, SpectralField) {
        noise::wick_powers(&self.state.gaussian, self.shift)
    }

    pub fn advance(&mut self) -> Result<()> {
        let (z2, z3) = self.wick();
        let s = &self.state;
        let r = self.remainder.step(&s.remainder, &s.gaussian, &z2, &z3);
        let z = self.ou.step(&s.gaussian, &self.noise, s.step);
        let step = s.step + 1;
        if !r.is_finite() || !z.is_finite() {
            return Err(Error::BlowUp {
                step: step.max(0) as usize,
                time: step as f64 * self.dt,
            });
        }
        self.state = TrajectoryState {
            step,
            remainder: r,
            gaussian: z,
        };
        Ok(())
    }

    pub fn advance_by(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.advance()?;
        }
        Ok(())
    }
}

/// Snapshots of a stochastic run.
#[derive(Clone, Debug)]
pub struct SimulationPath {
    pub times: Vec<f64>,
    pub phi: Vec<SpectralField>,
    pub remainder: Vec<SpectralField>,
    pub gaussian: Vec<SpectralField>,
    pub diagnostics: Vec<Diagnostics>,
}

/// Runs `cfg.steps()` steps from `Φ(0) = φ₀`, storing every
/// `snapshot_stride`-th state. With `diagnose` the Besov norms of the
/// remainder (and the paraproduct splitting) are recorded at each snapshot.
pub fn simulate(cfg: &SolverConfig, phi0: &SpectralField, diagnose: bool) -> Result<SimulationPath> {
    let mut traj = Trajectory::start(cfg, phi0, NoiseStream::new(cfg.seed, 0), 0)?;
    let splitter = if diagnose {
        Some(USplitter::new(traj.grid())?)
    } else {
        None
    };
    let keep = cfg.snapshot_steps();
    let mut path = SimulationPath {
        times: Vec::new(),
        phi: Vec::new(),
        remainder: Vec::new(),
        gaussian: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut next = 0;
    for i in 0..=cfg.steps() {
        if next < keep.len() && keep[next] == i {
            let s = traj.state();
            path.times.push(traj.time());
            path.phi.push(traj.phi());
            path.remainder.push(s.remainder.clone());
            path.gaussian.push(s.gaussian.clone());
            if let Some(sp) = &splitter {
                let (z2, z3) = traj.wick();
                path.diagnostics.push(sp.diagnose(i, traj.time(), &s.remainder, &s.gaussian, &z2, &z3, cfg.epsilon)?);
            }
            next += 1;
        }
        if i < cfg.steps() {
            traj.advance()?;
        }
    }
    Ok(path)
}

/// Norms of the remainder and of the splitting `U₁ + U₂` at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step: usize,
    pub time: f64,
    /// `‖R‖_{C^{2-ε}}`
    pub r_regular: f64,
    /// `‖R‖_{C^0}`
    pub r_besov0: f64,
    pub r_sup: f64,
    /// Block cutoff `n` of the splitting.
    pub block_cutoff: i32,
    /// `‖U₁‖_{C^{-ε-δ}}` with `δ = ε`.
    pub u1: f64,
    /// `‖U₂‖_{C^{-ε}}`
    pub u2: f64,
}

/// Block cutoff `n ≥ 1` with `2^{-n(2-2ε)} max(‖R‖₀, 1) ≃ 1`.
pub fn block_cutoff_for(r_norm0: f64, epsilon: f64) -> i32 {
    let x = r_norm0.max(1.0).log2() / (2.0 - 2.0 * epsilon);
    (x.ceil() as i32).max(1)
}

/// Paraproduct splitting of the singular drift terms.
///
/// `R²` is formed without truncation on an auxiliary grid of cutoff `2N`, so
/// that `U₁ + U₂` equals the band projection of `-3R²Z₁ - 3RZ₂ - Z₃`. The
/// cubic bookkeeping term `R³ - R₂³` is not part of either output.
#[derive(Clone, Debug)]
pub struct USplitter {
    grid: Arc<TorusGrid>,
    wide: BlockDecomposition,
    lp: BlockDecomposition,
}

impl USplitter {
    pub fn new(grid: &Arc<TorusGrid>) -> Result<Self> {
        let wide = TorusGrid::new(grid.dim(), 2 * grid.cutoff())?;
        Ok(Self {
            grid: grid.clone(),
            wide: BlockDecomposition::new(&wide),
            lp: BlockDecomposition::new(grid),
        })
    }

    pub fn split(
        &self,
        r: &SpectralField,
        z1: &SpectralField,
        z2: &SpectralField,
        z3: &SpectralField,
        n: i32,
    ) -> Result<(SpectralField, SpectralField)> {
        for z in [z1, z2, z3] {
            r.check_grid(z)?;
        }
        if !TorusGrid::same(&self.grid, r.grid()) {
            return Err(Error::GridMismatch);
        }
        let wide = self.wide.grid();
        let lp = &self.wide;
        let r_w = r.resample(wide)?;
        let z1_w = z1.resample(wide)?;
        let z2_w = z2.resample(wide)?;
        let r2 = r_w.dealiased_product(&r_w)?;

        let z1_hi = lp.project_high(&z1_w, 2 * n);
        let z1_lo = lp.project_low(&z1_w, 2 * n);
        let z2_hi = lp.project_high(&z2_w, n);
        let z2_lo = lp.project_low(&z2_w, n);

        let mut u1 = lp.paraproduct(&r2, &z1_hi)?.scale(-3.0);
        u1.axpy(-3.0, &lp.paraproduct(&r_w, &z2_hi)?);
        let mut u1 = u1.resample(&self.grid)?;
        u1.axpy(-1.0, z3);

        let mut u2 = lp.paraproduct(&r2, &z1_lo)?.scale(-3.0);
        u2.axpy(-3.0, &lp.paraproduct(&r_w, &z2_lo)?);
        // R² ≽ Z₁ = Z₁ ≺ R² + R² ⊙ Z₁
        u2.axpy(-3.0, &lp.para_or_res(&z1_w, &r2)?);
        u2.axpy(-3.0, &lp.para_or_res(&z2_w, &r_w)?);
        Ok((u1, u2.resample(&self.grid)?))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn diagnose(
        &self,
        step: usize,
        time: f64,
        r: &SpectralField,
        z1: &SpectralField,
        z2: &SpectralField,
        z3: &SpectralField,
        epsilon: f64,
    ) -> Result<Diagnostics> {
        let blocks = self.lp.block_sup_norms(r);
        let r_besov0 = crate::littlewood_paley::weighted_max(&blocks, 0.0);
        let n = block_cutoff_for(r_besov0, epsilon);
        let (u1, u2) = self.split(r, z1, z2, z3, n)?;
        Ok(Diagnostics {
            step,
            time,
            r_regular: crate::littlewood_paley::weighted_max(&blocks, 2.0 - epsilon),
            r_besov0,
            r_sup: r.sup_norm(),
            block_cutoff: n,
            u1: self.lp.besov_norm(&u1, -2.0 * epsilon),
            u2: self.lp.besov_norm(&u2, -epsilon),
        })
    }
}

/// See [`USplitter::split`].
pub fn u_split(
    r: &SpectralField,
    z1: &SpectralField,
    z2: &SpectralField,
    z3: &SpectralField,
    n: i32,
) -> Result<(SpectralField, SpectralField)> {
    USplitter::new(r.grid())?.split(r, z1, z2, z3, n)
}
