//! Space-time white noise on the Galerkin band, the Gaussian part `Z` and its
//! Wick powers.
//!
//! `Z` solves `∂_t Z = (Δ - m) Z + σ ξ` and is advanced with the exact
//! Ornstein–Uhlenbeck transition of every Fourier mode. Its stationary
//! pointwise variance on the band is `σ² C_N`, `C_N = Σ_k 1/(2(m + 4π²|k|²))`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::torus::{sample_gaussian, Padding, SpectralField, TorusGrid, FOUR_PI_SQ};

/// Decay rate `μ_k = m + 4π²|k|²` of every coefficient.
pub fn mode_rates(grid: &TorusGrid, mass: f64) -> Vec<f64> {
    grid.k_squared()
        .iter()
        .map(|k2| mass + FOUR_PI_SQ * k2)
        .collect()
}

/// `C_N = Σ_{|k|_∞ ≤ N} 1/(2(m + 4π²|k|²))`, the stationary variance of the
/// truncated Gaussian part at a point.
pub fn wick_constant(grid: &TorusGrid, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    Ok(mode_rates(grid, mass).iter().map(|mu| 0.5 / mu).sum())
}

/// Identifies one noise realization; draws are keyed by
/// `(seed, trajectory, step, mode)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseStream {
    pub seed: u64,
    pub trajectory: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory: u64) -> Self {
        Self { seed, trajectory }
    }

    /// Standard complex normals for the zero mode and the half-space modes
    /// (in the grid's noise order) at a given step.
    pub fn draws(&self, grid: &TorusGrid, domain: Domain, step: i64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.noise_order().len()];
        rng::fill_complex_normals(self.seed, self.trajectory, domain, step, &mut out);
        out
    }
}

/// Exact Ornstein–Uhlenbeck transition over a step `h` for every mode.
///
/// With `substeps = s > 1` the increment of coarse step `i` is assembled from
/// the fine draws `i·s, …, i·s + s - 1` of step `h/s`, so runs at `h` and
/// `h/2` (with twice the substeps) share one Brownian path.
#[derive(Clone, Debug)]
pub struct OuStepper {
    grid: Arc<TorusGrid>,
    h: f64,
    substeps: u32,
    decay: Vec<f64>,
    fine_decay: Vec<f64>,
    fine_sd: Vec<f64>,
}

impl OuStepper {
    pub fn new(grid: &Arc<TorusGrid>, mass: f64, h: f64, amplitude: f64, substeps: u32) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::NonPositiveStep(h));
        }
        if !(mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        let substeps = substeps.max(1);
        let hf = h / substeps as f64;
        let rates = mode_rates(grid, mass);
        let decay = rates.iter().map(|mu| (-mu * h).exp()).collect();
        let order = grid.noise_order();
        let fine_decay = order.iter().map(|&i| (-rates[i] * hf).exp()).collect();
        let fine_sd = order
            .iter()
            .map(|&i| {
                let mu = rates[i];
                amplitude * (-(-2.0 * mu * hf).exp_m1() / (2.0 * mu)).sqrt()
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            h,
            substeps,
            decay,
            fine_decay,
            fine_sd,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn substeps(&self) -> u32 {
        self.substeps
    }

    /// Noise increment `η` of coarse step `step`, indexed by noise order.
    fn increment(&self, noise: &NoiseStream, step: i64) -> Vec<Complex64> {
        let s = self.substeps as i64;
        let mut eta = vec![Complex64::new(0.0, 0.0); self.fine_sd.len()];
        for j in 0..s {
            let draws = noise.draws(&self.grid, Domain::Increment, step * s + j);
            for (((e, d), sd), a) in eta.iter_mut().zip(&draws).zip(&self.fine_sd).zip(&self.fine_decay) {
                *e = *e * *a + d * *sd;
            }
        }
        eta
    }

    /// `Ẑ_k ← e^{-μ_k h} Ẑ_k + η_k`.
    pub fn step(&self, z: &SpectralField, noise: &NoiseStream, step: i64) -> SpectralField {
        let mut out = self.decay_only(z);
        let eta = self.increment(noise, step);
        let coeffs = out.coeffs_mut();
        for (&idx, e) in self.grid.noise_order().iter().zip(&eta) {
            let neg = self.grid.neg_index(idx);
            if idx == neg {
                coeffs[idx].re += e.re * std::f64::consts::SQRT_2;
            } else {
                coeffs[idx] += e;
                coeffs[neg] = coeffs[idx].conj();
            }
        }
        out
    }

    /// The deterministic part of the transition, `e^{-μ_k h} Ẑ_k`.
    pub fn decay_only(&self, z: &SpectralField) -> SpectralField {
        let mut out = z.clone();
        for (c, a) in out.coeffs_mut().iter_mut().zip(&self.decay) {
            *c *= *a;
        }
        out
    }
}

/// One exact Ornstein–Uhlenbeck step of `Z` under unit-amplitude noise.
pub fn ou_step(
    z: &SpectralField,
    h: f64,
    mass: f64,
    noise: &NoiseStream,
    step: i64,
) -> Result<SpectralField> {
    Ok(OuStepper::new(z.grid(), mass, h, 1.0, 1)?.step(z, noise, step))
}

/// Sample of the stationary law of `Z`: `E|Ẑ_k|² = 1/(2μ_k)`.
pub fn sample_stationary_z(grid: &Arc<TorusGrid>, mass: f64, seed: u64) -> Result<SpectralField> {
    stationary_z(grid, mass, 1.0, &NoiseStream::new(seed, 0), 0)
}

/// Stationary sample with noise amplitude `σ` (variance `σ²/(2μ_k)`), keyed
/// by the step at which the trajectory starts.
pub fn stationary_z(
    grid: &Arc<TorusGrid>,
    mass: f64,
    amplitude: f64,
    noise: &NoiseStream,
    step: i64,
) -> Result<SpectralField> {
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    let a2 = amplitude * amplitude;
    Ok(sample_gaussian(grid, noise.seed, noise.trajectory, Domain::Stationary, step, |k2| {
        a2 / (2.0 * (mass + FOUR_PI_SQ * k2))
    }))
}

/// `(Z² - c, Z³ - 3cZ)` with both powers computed alias-free.
pub fn wick_powers(z: &SpectralField, c: f64) -> (SpectralField, SpectralField) {
    let grid = z.grid();
    let values = grid.physical(Padding::Cubic, z.coeffs());
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let cube: Vec<f64> = values.iter().map(|v| v * v * v).collect();
    let z2 = SpectralField::from_raw(grid, grid.project(Padding::Cubic, &sq)).add_constant(-c);
    let mut z3 = SpectralField::from_raw(grid, grid.project(Padding::Cubic, &cube));
    z3.axpy(-3.0 * c, z);
    (z2, z3)
}

/// Enhanced noise `(Z₁, Z₂, Z₃)` as synchronized snapshot paths.
#[derive(Clone, Debug)]
pub struct WickTriple {
    pub z1: Vec<SpectralField>,
    pub z2: Vec<SpectralField>,
    pub z3: Vec<SpectralField>,
    pub c_used: f64,
}

impl WickTriple {
    /// Wick powers of every snapshot of a Gaussian path.
    pub fn from_gaussian(path: Vec<SpectralField>, c: f64) -> Self {
        let (z2, z3) = path.iter().map(|z| wick_powers(z, c)).unzip();
        Self {
            z1: path,
            z2,
            z3,
            c_used: c,
        }
    }

    /// Triple with all three components identically zero.
    pub fn zero(grid: &Arc<TorusGrid>, snapshots: usize) -> Self {
        let zero = vec![SpectralField::zeros(grid); snapshots];
        Self {
            z1: zero.clone(),
            z2: zero.clone(),
            z3: zero,
            c_used: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.z1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z1.is_empty()
    }

    /// Largest coefficient deviation from `Z₂ = Z₁² - c`, `Z₃ = Z₁³ - 3cZ₁`,
    /// relative to the size of the snapshot.
    pub fn compatibility_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((z1, z2), z3) in self.z1.iter().zip(&self.z2).zip(&self.z3) {
            let sq = z1.dealiased_product(z1).expect("same grid").add_constant(-self.c_used);
            let mut cube = z1.dealiased_product3(z1, z1).expect("same grid");
            cube.axpy(-3.0 * self.c_used, z1);
            let scale = 1.0 + sq.spectral_norm() + cube.spectral_norm();
            worst = worst.max(sq.max_abs_diff(z2) / scale).max(cube.max_abs_diff(z3) / scale);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wick_constant_small_cases() {
        let g0 = TorusGrid::new(2, 0).unwrap();
        assert_relative_eq!(wick_constant(&g0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        let g1 = TorusGrid::new(2, 1).unwrap();
        let four_pi2 = FOUR_PI_SQ;
        let expected = 0.5 + 4.0 / (2.0 * (1.0 + four_pi2)) + 4.0 / (2.0 * (1.0 + 2.0 * four_pi2));
        assert_relative_eq!(wick_constant(&g1, 1.0).unwrap(), expected, max_relative = 1e-14);
        assert!(matches!(wick_constant(&g1, 0.0), Err(Error::NonPositiveMass(_))));
    }

    #[test]
    fn noiseless_step_decays_constant() {
        let grid = TorusGrid::new(2, 3).unwrap();
        let stepper = OuStepper::new(&grid, 1.0, 0.1, 0.0, 1).unwrap();
        let z = SpectralField::constant(&grid, 2.0);
        let out = stepper.step(&z, &NoiseStream::new(1, 0), 0);
        assert_relative_eq!(out.mean(), 2.0 * (-0.1f64).exp(), max_relative = 1e-15);
        assert!(matches!(ou_step(&z, 0.0, 1.0, &NoiseStream::new(1, 0), 0), Err(Error::NonPositiveStep(_))));
    }

    #[test]
    fn stationary_variance_is_preserved_algebraically() {
        let grid = TorusGrid::new(2, 4).unwrap();
        let h = 0.013;
        let stepper = OuStepper::new(&grid, 1.0, h, 1.0, 1).unwrap();
        let rates = mode_rates(&grid, 1.0);
        for (mu, a) in rates.iter().zip(&stepper.decay) {
            let kept = a * a / (2.0 * mu);
            let injected = -(-2.0 * mu * h).exp_m1() / (2.0 * mu);
            assert_relative_eq!(kept + injected, 1.0 / (2.0 * mu), max_relative = 1e-14);
        }
    }

    #[test]
    fn substeps_share_the_brownian_path() {
        // one step of h built from 4 fine draws equals 4 fine steps
        let grid = TorusGrid::new(2, 3).unwrap();
        let noise = NoiseStream::new(3, 0);
        let z0 = sample_stationary_z(&grid, 1.0, 9).unwrap();
        let coarse = OuStepper::new(&grid, 1.0, 0.04, 1.0, 4).unwrap();
        let fine = OuStepper::new(&grid, 1.0, 0.01, 1.0, 1).unwrap();
        let a = coarse.step(&z0, &noise, 2);
        let mut b = z0.clone();
        for j in 8..12 {
            b = fine.step(&b, &noise, j);
        }
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn wick_powers_of_constant() {
        let grid = TorusGrid::new(2, 3).unwrap();
        let z = SpectralField::constant(&grid, 1.5);
        let (z2, z3) = wick_powers(&z, 0.4);
        assert_relative_eq!(z2.mean(), 1.5 * 1.5 - 0.4, epsilon = 1e-14);
        assert_relative_eq!(z3.mean(), 1.5f64.powi(3) - 3.0 * 0.4 * 1.5, epsilon = 1e-13);
    }

    #[test]
    fn wick_powers_without_shift_are_plain_powers() {
        let grid = TorusGrid::new(2, 5).unwrap();
        let z = sample_stationary_z(&grid, 1.0, 4).unwrap();
        let (z2, z3) = wick_powers(&z, 0.0);
        assert!(z2.max_abs_diff(&z.dealiased_product(&z).unwrap()) < 1e-14);
        assert!(z3.max_abs_diff(&z.dealiased_product3(&z, &z).unwrap()) < 1e-14);
        let triple = WickTriple::from_gaussian(vec![z.clone(), z], 0.7);
        assert!(triple.compatibility_defect() < 1e-14);
    }

    #[test]
    fn hermitian_pairing_of_draws() {
        let grid = TorusGrid::new(2, 3).unwrap();
        let z = ou_step(&SpectralField::zeros(&grid), 0.1, 1.0, &NoiseStream::new(5, 1), 7).unwrap();
        assert!(z.is_hermitian());
    }
}
