//! Finite-time Lyapunov exponents of the linearized flow
//! `∂_t v = Δv + αv - 3 q(t) v` along a potential path `q`.
//!
//! The potential is piecewise constant on `[t_i, t_{i+1})`. Each snapshot is
//! split into its spatial mean `q̄_i` and a fluctuation `q̃_i`. The mean enters
//! the exactly integrated diagonal part through the rate `g_i = α - 3q̄_i`;
//! the fluctuation is integrated with a fourth-order integrating-factor
//! Runge–Kutta step. With `q̃ = 0` the step is exact.
//!
//! Means and `α` are held on a dyadic lattice of spacing `2^-40`, so `g_i` is
//! computed in exact integer arithmetic. Shifting `(α, q) → (α + 3s, q + s)`
//! by a lattice value `s` therefore leaves every operation bit-identical.
//!
//! The adjoint propagator applies the exact transpose of each discrete step
//! in reverse order, so `⟨S u, w⟩ = ⟨u, S* w⟩` holds to rounding. Iterates
//! are renormalized after every step and their growth is accumulated in log
//! space, which keeps `λ_T` representable far beyond the range of `f64`
//! magnitudes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Domain;
use crate::torus::{sample_gaussian, SpectralField, TorusGrid, FOUR_PI_SQ};

/// Lattice spacing of potential means and of `α` is `1/TICKS`.
pub const TICKS: f64 = (1u64 << 40) as f64;

/// Rounds to the `2^-40` lattice.
pub fn to_ticks(x: f64) -> i64 {
    (x * TICKS).round() as i64
}

pub fn from_ticks(t: i64) -> f64 {
    t as f64 / TICKS
}

/// One snapshot of the potential: lattice mean plus fluctuation.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSnapshot {
    mean_ticks: i64,
    fluctuation: Option<SpectralField>,
}

impl PotentialSnapshot {
    pub fn new(field: &SpectralField) -> Self {
        let mean_ticks = to_ticks(field.mean());
        let mut fl = field.clone();
        let z = field.grid().zero_index();
        fl.coeffs_mut()[z] = num_complex::Complex64::new(0.0, 0.0);
        let fluctuation = if fl.coeffs().iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            None
        } else {
            Some(fl)
        };
        Self {
            mean_ticks,
            fluctuation,
        }
    }

    pub fn constant(kappa: f64) -> Self {
        Self {
            mean_ticks: to_ticks(kappa),
            fluctuation: None,
        }
    }

    pub fn mean(&self) -> f64 {
        from_ticks(self.mean_ticks)
    }

    pub fn fluctuation(&self) -> Option<&SpectralField> {
        self.fluctuation.as_ref()
    }

    pub fn to_field(&self, grid: &Arc<TorusGrid>) -> SpectralField {
        match &self.fluctuation {
            Some(f) => f.add_constant(self.mean()),
            None => SpectralField::constant(grid, self.mean()),
        }
    }
}

/// Potential `q(t)` on `[0, T]`, piecewise constant on `[t_i, t_{i+1})`,
/// `t_i = i·dt`. Holds one snapshot per step (`T/dt` of them).
#[derive(Clone, Debug)]
pub struct PotentialPath {
    grid: Arc<TorusGrid>,
    dt: f64,
    snapshots: Vec<PotentialSnapshot>,
}

impl PotentialPath {
    /// Uses `fields[i]` on `[i·dt, (i+1)·dt)`. A trailing snapshot at `T`
    /// (as produced by the solvers) is accepted and ignored by passing
    /// `steps`.
    pub fn from_fields(fields: &[SpectralField], dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        if fields.len() < steps || steps == 0 {
            return Err(Error::Misaligned {
                expected: steps.max(1),
                found: fields.len(),
            });
        }
        let grid = fields[0].grid().clone();
        for f in &fields[..steps] {
            if !TorusGrid::same(&grid, f.grid()) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Self {
            dt,
            snapshots: fields[..steps].iter().map(PotentialSnapshot::new).collect(),
            grid,
        })
    }

    /// Snapshots stored every `stride` steps (plus one at `steps`), linearly
    /// interpolated onto every step.
    pub fn from_strided(fields: &[SpectralField], dt: f64, stride: usize, steps: usize) -> Result<Self> {
        if stride <= 1 {
            return Self::from_fields(fields, dt, steps);
        }
        Self::from_snapshots(fields, &crate::solver::snapshot_steps(steps, stride), dt, steps)
    }

    /// Snapshots at the given increasing step indices (starting at 0),
    /// linearly interpolated onto every step.
    pub fn from_snapshots(fields: &[SpectralField], at: &[usize], dt: f64, steps: usize) -> Result<Self> {
        if fields.len() != at.len() || at.first() != Some(&0) || at.last().is_none_or(|&l| l < steps.saturating_sub(1)) {
            return Err(Error::Misaligned {
                expected: at.len(),
                found: fields.len(),
            });
        }
        if at.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("snapshot steps must increase".into()));
        }
        let mut j = 0;
        let per_step: Vec<SpectralField> = (0..steps)
            .map(|i| {
                while j + 1 < at.len() && at[j + 1] <= i {
                    j += 1;
                }
                if at[j] == i || j + 1 == at.len() {
                    return fields[j].clone();
                }
                let w = (i - at[j]) as f64 / (at[j + 1] - at[j]) as f64;
                let mut f = fields[j].scale(1.0 - w);
                f.axpy(w, &fields[j + 1]);
                f
            })
            .collect();
        Self::from_fields(&per_step, dt, steps)
    }

    /// `q ≡ κ` over `steps` steps.
    pub fn constant(grid: &Arc<TorusGrid>, kappa: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        Ok(Self {
            grid: grid.clone(),
            dt,
            snapshots: vec![PotentialSnapshot::constant(kappa); steps.max(1)],
        })
    }

    /// `q + s` (the lattice-rounded `s` is added to every mean).
    pub fn shifted(&self, s: f64) -> Self {
        let ds = to_ticks(s);
        let mut out = self.clone();
        for snap in &mut out.snapshots {
            snap.mean_ticks += ds;
        }
        out
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.snapshots.len() as f64
    }

    pub fn snapshots(&self) -> &[PotentialSnapshot] {
        &self.snapshots
    }

    pub fn field(&self, i: usize) -> SpectralField {
        self.snapshots[i].to_field(&self.grid)
    }

    /// Reversed snapshot order, `q(T - t)`.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.snapshots.reverse();
        out
    }
}

/// Field with a separate logarithmic scale: the represented value is
/// `e^{log_scale} · field`.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub field: SpectralField,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(&self) -> SpectralField {
        self.field.scale(self.log_scale.exp())
    }

    /// `log ‖value‖_{L²}`.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.field.spectral_norm().ln()
    }
}

/// Discrete propagator `S = A_{n-1} ⋯ A_0` along a potential path.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    path: &'a PotentialPath,
    alpha_ticks: i64,
    heat: Vec<f64>,
    heat_half: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(path: &'a PotentialPath, alpha: f64) -> Self {
        let h = path.dt;
        let (heat, heat_half) = path
            .grid
            .k_squared()
            .iter()
            .map(|k2| ((-FOUR_PI_SQ * k2 * h).exp(), (-FOUR_PI_SQ * k2 * h * 0.5).exp()))
            .unzip();
        Self {
            path,
            alpha_ticks: to_ticks(alpha),
            heat,
            heat_half,
        }
    }

    /// Growth rate `α - 3q̄_i` of the diagonal part on step `i`.
    pub fn rate(&self, i: usize) -> f64 {
        from_ticks(self.alpha_ticks - 3 * self.path.snapshots[i].mean_ticks)
    }

    fn diag(&self, v: &SpectralField, factors: &[f64], scalar: f64) -> SpectralField {
        let mut out = v.clone();
        for (c, f) in out.coeffs_mut().iter_mut().zip(factors) {
            *c *= f * scalar;
        }
        out
    }

    /// `B v = -3 Π(q̃ v)`.
    fn apply_b(q: &SpectralField, v: &SpectralField) -> SpectralField {
        let mut out = q.dealiased_product(v).expect("grids checked by the path");
        out.scale_in_place(-3.0);
        out
    }

    fn step(&self, i: usize, u: &SpectralField) -> SpectralField {
        let h = self.path.dt;
        let g = self.rate(i);
        let (e, e2) = ((g * h).exp(), (g * h * 0.5).exp());
        let Some(q) = &self.path.snapshots[i].fluctuation else {
            return self.diag(u, &self.heat, e);
        };
        let full = |x: &SpectralField| self.diag(x, &self.heat, e);
        let half = |x: &SpectralField| self.diag(x, &self.heat_half, e2);

        let eu = full(u);
        let e2u = half(u);
        let k1 = Self::apply_b(q, u);
        let mut y2 = e2u.clone();
        y2.axpy(0.5 * h, &half(&k1));
        let k2 = Self::apply_b(q, &y2);
        let mut y3 = e2u;
        y3.axpy(0.5 * h, &k2);
        let k3 = Self::apply_b(q, &y3);
        let mut y4 = eu.clone();
        y4.axpy(h, &half(&k3));
        let k4 = Self::apply_b(q, &y4);

        let mut out = eu;
        out.axpy(h / 6.0, &full(&k1));
        let mut mid = k2;
        mid.axpy(1.0, &k3);
        out.axpy(h / 3.0, &half(&mid));
        out.axpy(h / 6.0, &k4);
        out
    }

    /// Transpose of [`Self::step`] (reverse-mode through its stages).
    fn step_adjoint(&self, i: usize, w: &SpectralField) -> SpectralField {
        let h = self.path.dt;
        let g = self.rate(i);
        let (e, e2) = ((g * h).exp(), (g * h * 0.5).exp());
        let Some(q) = &self.path.snapshots[i].fluctuation else {
            return self.diag(w, &self.heat, e);
        };
        let full = |x: &SpectralField| self.diag(x, &self.heat, e);
        let half = |x: &SpectralField| self.diag(x, &self.heat_half, e2);

        let mut ubar = full(w);
        let mut k1bar = full(w).scale(h / 6.0);
        let e2w = half(w);
        let mut k2bar = e2w.scale(h / 3.0);
        let mut k3bar = e2w.scale(h / 3.0);
        let k4bar = w.scale(h / 6.0);

        let y4bar = Self::apply_b(q, &k4bar);
        ubar.axpy(1.0, &full(&y4bar));
        k3bar.axpy(h, &half(&y4bar));

        let y3bar = Self::apply_b(q, &k3bar);
        ubar.axpy(1.0, &half(&y3bar));
        k2bar.axpy(0.5 * h, &y3bar);

        let y2bar = Self::apply_b(q, &k2bar);
        let e2y2 = half(&y2bar);
        ubar.axpy(1.0, &e2y2);
        k1bar.axpy(0.5 * h, &e2y2);

        ubar.axpy(1.0, &Self::apply_b(q, &k1bar));
        ubar
    }

    fn run(&self, v0: &SpectralField, adjoint: bool) -> Result<Scaled> {
        if !TorusGrid::same(&self.path.grid, v0.grid()) {
            return Err(Error::GridMismatch);
        }
        let n = self.path.steps();
        let mut v = v0.clone();
        let mut log_scale = 0.0;
        for s in 0..n {
            let i = if adjoint { n - 1 - s } else { s };
            v = if adjoint { self.step_adjoint(i, &v) } else { self.step(i, &v) };
            let norm = v.spectral_norm();
            if !norm.is_finite() {
                return Err(Error::BlowUp {
                    step: s + 1,
                    time: (s + 1) as f64 * self.path.dt,
                });
            }
            if norm > 0.0 {
                v.scale_in_place(norm.recip());
                log_scale += norm.ln();
            }
        }
        Ok(Scaled { field: v, log_scale })
    }

    /// `S v₀` in scaled form.
    pub fn forward(&self, v0: &SpectralField) -> Result<Scaled> {
        self.run(v0, false)
    }

    /// `S* w₀` in scaled form.
    pub fn adjoint(&self, w0: &SpectralField) -> Result<Scaled> {
        self.run(w0, true)
    }
}

/// `v(T)` for the linearization along `q` started from `v₀`.
pub fn tangent_flow(v0: &SpectralField, q: &PotentialPath, alpha: f64) -> Result<SpectralField> {
    Ok(Propagator::new(q, alpha).forward(v0)?.value())
}

/// `S* w₀`: the same equation along the time-reversed potential, with each
/// step replaced by its exact transpose.
pub fn adjoint_flow(w0: &SpectralField, q: &PotentialPath, alpha: f64) -> Result<SpectralField> {
    Ok(Propagator::new(q, alpha).adjoint(w0)?.value())
}

/// Power-iteration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtleOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Size of the fixed-seed perturbation added to the constant start vector.
    pub perturbation: f64,
}

impl Default for FtleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            perturbation: 1e-3,
        }
    }
}

/// Largest singular value of the propagator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorNorm {
    /// `log σ_max`.
    pub log_sigma: f64,
    pub iterations: usize,
    /// Relative change of the last two estimates of `σ_max`.
    pub residual: f64,
    pub converged: bool,
    /// `log σ` after every iteration.
    pub history: Vec<f64>,
}

impl OperatorNorm {
    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }
}

/// Deterministic unit start vector: constant mode plus a small fixed-seed
/// perturbation.
pub fn start_vector(grid: &Arc<TorusGrid>, perturbation: f64) -> SpectralField {
    let mut v = sample_gaussian(grid, 0, 0, Domain::Perturbation, 0, |k2| 1.0 / (1.0 + k2))
        .scale(perturbation);
    v = v.add_constant(1.0);
    let n = v.spectral_norm();
    v.scale(n.recip())
}

/// `σ_max` of the propagator by power iteration on `S*S`: the estimate after
/// iteration `k` is `‖S v_k‖` for the unit iterate `v_k`, and the iteration
/// stops once it changes by less than `tol` (relative).
pub fn operator_norm(q: &PotentialPath, alpha: f64, opts: &FtleOptions) -> Result<OperatorNorm> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let prop = Propagator::new(q, alpha);
    let mut v = start_vector(q.grid(), opts.perturbation);
    let mut history: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter.max(1) {
        let sv = prop.forward(&v)?;
        let est = sv.log_norm();
        if let Some(&prev) = history.last() {
            residual = (est - prev).exp_m1().abs();
        }
        history.push(est);
        if residual < opts.tol {
            return Ok(OperatorNorm {
                log_sigma: est,
                iterations: it,
                residual,
                converged: true,
                history,
            });
        }
        let back = prop.adjoint(&sv.field)?;
        let n = back.field.spectral_norm();
        if n == 0.0 {
            // S*S v = 0: the estimate cannot improve
            break;
        }
        v = back.field.scale(n.recip());
    }
    let log_sigma = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OperatorNorm {
        log_sigma,
        iterations: history.len(),
        residual,
        converged: false,
        history,
    })
}

/// One FTLE record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtleSample {
    pub alpha: f64,
    pub horizon: f64,
    pub seed: u64,
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// `λ_T = log(σ_max)/T`.
pub fn ftle(q: &PotentialPath, alpha: f64, seed: u64, opts: &FtleOptions) -> Result<FtleSample> {
    let horizon = q.horizon();
    if !(horizon > 0.0) {
        return Err(Error::NegativeTime(horizon));
    }
    let norm = operator_norm(q, alpha, opts)?;
    Ok(FtleSample {
        alpha,
        horizon,
        seed,
        lambda: norm.log_sigma / horizon,
        iterations: norm.iterations,
        residual: norm.residual,
        converged: norm.converged,
    })
}
