//! Band-limited real fields on the unit torus `[0,1)^d`, `d ∈ {1, 2}`.
//!
//! A field is stored as its Fourier coefficients `c_k`, `|k|_∞ ≤ N`, in the
//! basis `e_k(x) = exp(2πi k·x)`, so that `f(x) = Σ_k c_k e_k(x)`,
//! `‖e_k‖_{L²} = 1` and the Laplacian acts on mode `k` by `-4π²|k|²`.
//! Coefficients are kept exactly Hermitian (`c_{-k} = conj(c_k)`).
//!
//! Nonlinear operations evaluate on a zero-padded physical grid and truncate
//! back to the band. Quadratic products use the grid of `M ≥ 3N+1` points per
//! axis; cubic expressions use a second grid with at least `4N+1` points, the
//! smallest size for which a product of three band-`N` fields is alias-free.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// `4π²`, the Laplacian eigenvalue scale on the unit torus.
pub const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Smallest even 5-smooth integer `≥ min`.
pub fn padded_size(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        if n % 2 == 0 {
            let mut m = n;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            if m == 1 {
                return n;
            }
        }
        n += 1;
    }
}

/// Which padded grid a nonlinear evaluation runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Padding {
    /// `M` points per axis: exact for products of two band-limited fields.
    Quadratic,
    /// At least `4N+1` points per axis: exact for cubic expressions.
    Cubic,
}

#[derive(Clone)]
struct Transform {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transform {
    fn new(planner: &mut FftPlanner<f64>, size: usize) -> Self {
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }
}

/// Discretization of `𝕋^d`: cutoff `N`, physical points `M` per axis and the
/// transform plans shared by every field on the grid.
pub struct TorusGrid {
    dim: usize,
    cutoff: usize,
    side: usize,
    len: usize,
    wavenumbers: Vec<[i64; 2]>,
    k_sq: Vec<f64>,
    noise_order: Vec<usize>,
    quad: Transform,
    cubic: Transform,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("cutoff", &self.cutoff)
            .field("points", &self.quad.size)
            .field("cubic_points", &self.cubic.size)
            .finish()
    }
}

impl TorusGrid {
    /// Grid with the default padding, `M` = smallest even 5-smooth size
    /// `≥ 4N+1`, so both product kinds share one grid.
    pub fn new(dim: usize, cutoff: usize) -> Result<Arc<Self>> {
        Self::with_points(dim, cutoff, padded_size(4 * cutoff + 1))
    }

    pub fn with_points(dim: usize, cutoff: usize, points: usize) -> Result<Arc<Self>> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 3 * cutoff + 1 || points % 2 != 0 || points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need an even number of points >= 3N+1 = {}, got {points}",
                3 * cutoff + 1
            )));
        }
        let n = cutoff as i64;
        let side = 2 * cutoff + 1;
        let len = side.pow(dim as u32);
        let mut wavenumbers = Vec::with_capacity(len);
        if dim == 1 {
            for k in -n..=n {
                wavenumbers.push([k, 0]);
            }
        } else {
            for k0 in -n..=n {
                for k1 in -n..=n {
                    wavenumbers.push([k0, k1]);
                }
            }
        }
        let k_sq = wavenumbers
            .iter()
            .map(|k| (k[0] * k[0] + k[1] * k[1]) as f64)
            .collect();

        let mut planner = FftPlanner::new();
        let quad = Transform::new(&mut planner, points);
        let cubic_points = points.max(padded_size(4 * cutoff + 1));
        let cubic = if cubic_points == points {
            quad.clone()
        } else {
            Transform::new(&mut planner, cubic_points)
        };

        let mut grid = Self {
            dim,
            cutoff,
            side,
            len,
            wavenumbers,
            k_sq,
            noise_order: Vec::new(),
            quad,
            cubic,
        };
        grid.noise_order = grid.build_noise_order();
        Ok(Arc::new(grid))
    }

    /// Zero mode followed by the half-space modes, shell by shell in `|k|_∞`.
    /// Shell `r` only depends on `r`, so a grid with a larger cutoff extends
    /// this list without reordering it.
    fn build_noise_order(&self) -> Vec<usize> {
        let n = self.cutoff as i64;
        let mut order = vec![self.zero_index()];
        for r in 1..=n {
            if self.dim == 1 {
                order.push(self.index_of(&[r]).unwrap());
                continue;
            }
            for k0 in -r..=r {
                for k1 in -r..=r {
                    if k0.abs().max(k1.abs()) != r {
                        continue;
                    }
                    if k0 > 0 || (k0 == 0 && k1 > 0) {
                        order.push(self.index_of(&[k0, k1]).unwrap());
                    }
                }
            }
        }
        order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Physical points `M` per axis.
    pub fn points(&self) -> usize {
        self.quad.size
    }

    /// Points per axis of the grid used for cubic expressions.
    pub fn cubic_points(&self) -> usize {
        self.cubic.size
    }

    /// Number of stored coefficients, `(2N+1)^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of physical samples `M^d`.
    pub fn physical_len(&self) -> usize {
        self.quad.size.pow(self.dim as u32)
    }

    pub fn zero_index(&self) -> usize {
        (self.len - 1) / 2
    }

    /// Index of `-k` given the index of `k`.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        self.len - 1 - idx
    }

    /// Wavenumber of coefficient `idx`; the second component is 0 in 1D.
    pub fn wavenumber(&self, idx: usize) -> [i64; 2] {
        self.wavenumbers[idx]
    }

    /// `|k|²` for every coefficient, in storage order.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_sq
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let n = self.cutoff as i64;
        if k.iter().any(|&c| c.abs() > n) {
            return None;
        }
        Some(match self.dim {
            1 => (k[0] + n) as usize,
            _ => (k[0] + n) as usize * self.side + (k[1] + n) as usize,
        })
    }

    pub(crate) fn noise_order(&self) -> &[usize] {
        &self.noise_order
    }

    pub fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b)
            || (a.dim == b.dim && a.cutoff == b.cutoff && a.quad.size == b.quad.size)
    }

    fn transform(&self, pad: Padding) -> &Transform {
        match pad {
            Padding::Quadratic => &self.quad,
            Padding::Cubic => &self.cubic,
        }
    }

    #[inline]
    fn wrap(k: i64, p: usize) -> usize {
        k.rem_euclid(p as i64) as usize
    }

    /// Evaluates `a + i b` on the padded grid. Layout is `[x1][x0]` in 2D.
    fn synthesize(&self, tr: &Transform, a: &[Complex64], b: Option<&[Complex64]>) -> Vec<Complex64> {
        let p = tr.size;
        let n = self.cutoff as i64;
        let s = self.side;
        let i = Complex64::new(0.0, 1.0);
        let value = |idx: usize| match b {
            Some(b) => a[idx] + i * b[idx],
            None => a[idx],
        };
        let mut scratch = vec![ZERO; tr.inverse.get_inplace_scratch_len()];
        if self.dim == 1 {
            let mut buf = vec![ZERO; p];
            for (idx, k) in (-n..=n).enumerate() {
                buf[Self::wrap(k, p)] = value(idx);
            }
            tr.inverse.process_with_scratch(&mut buf, &mut scratch);
            return buf;
        }
        // rows of fixed k0: transform over k1 -> x1
        let mut rows = vec![ZERO; s * p];
        for i0 in 0..s {
            let row = &mut rows[i0 * p..(i0 + 1) * p];
            for i1 in 0..s {
                row[Self::wrap(i1 as i64 - n, p)] = value(i0 * s + i1);
            }
        }
        tr.inverse.process_with_scratch(&mut rows, &mut scratch);
        // transpose to [x1][k0] and transform over k0 -> x0
        let mut out = vec![ZERO; p * p];
        for i0 in 0..s {
            let col = Self::wrap(i0 as i64 - n, p);
            let row = &rows[i0 * p..(i0 + 1) * p];
            for (x1, v) in row.iter().enumerate() {
                out[x1 * p + col] = *v;
            }
        }
        tr.inverse.process_with_scratch(&mut out, &mut scratch);
        out
    }

    /// Inverse of [`Self::synthesize`] for real data stored in the real parts
    /// of `values`; truncates to the band and restores exact Hermitian
    /// symmetry.
    fn analyze(&self, tr: &Transform, mut values: Vec<Complex64>) -> Vec<Complex64> {
        let p = tr.size;
        let n = self.cutoff as i64;
        let s = self.side;
        let mut scratch = vec![ZERO; tr.forward.get_inplace_scratch_len()];
        let mut coeffs = vec![ZERO; self.len];
        let scale = 1.0 / (p.pow(self.dim as u32) as f64);
        if self.dim == 1 {
            tr.forward.process_with_scratch(&mut values, &mut scratch);
            for (idx, k) in (-n..=n).enumerate() {
                coeffs[idx] = values[Self::wrap(k, p)] * scale;
            }
        } else {
            // [x1][x0] -> [x1][k0]
            tr.forward.process_with_scratch(&mut values, &mut scratch);
            let mut rows = vec![ZERO; s * p];
            for i0 in 0..s {
                let col = Self::wrap(i0 as i64 - n, p);
                let row = &mut rows[i0 * p..(i0 + 1) * p];
                for (x1, v) in row.iter_mut().enumerate() {
                    *v = values[x1 * p + col];
                }
            }
            tr.forward.process_with_scratch(&mut rows, &mut scratch);
            for i0 in 0..s {
                for i1 in 0..s {
                    coeffs[i0 * s + i1] = rows[i0 * p + Self::wrap(i1 as i64 - n, p)] * scale;
                }
            }
        }
        self.symmetrize(&mut coeffs);
        coeffs
    }

    fn symmetrize(&self, coeffs: &mut [Complex64]) {
        let z = self.zero_index();
        for idx in 0..z {
            let neg = self.neg_index(idx);
            let avg = (coeffs[idx] + coeffs[neg].conj()) * 0.5;
            coeffs[idx] = avg;
            coeffs[neg] = avg.conj();
        }
        coeffs[z].im = 0.0;
    }

    /// Evaluates `f` pointwise on the padded grid from the physical values
    /// of `inputs` and projects the result back onto the band.
    pub(crate) fn evaluate<const K: usize>(
        &self,
        pad: Padding,
        inputs: [&[Complex64]; K],
        f: impl Fn([f64; K]) -> f64,
    ) -> Vec<Complex64> {
        let tr = self.transform(pad);
        let packed: Vec<Vec<Complex64>> = inputs
            .chunks(2)
            .map(|pair| self.synthesize(tr, pair[0], pair.get(1).copied()))
            .collect();
        let npts = packed.first().map_or(tr.size.pow(self.dim as u32), Vec::len);
        let mut out = vec![ZERO; npts];
        let mut vals = [0.0; K];
        for (x, o) in out.iter_mut().enumerate() {
            for (j, v) in vals.iter_mut().enumerate() {
                let c = packed[j / 2][x];
                *v = if j % 2 == 0 { c.re } else { c.im };
            }
            o.re = f(vals);
        }
        self.analyze(tr, out)
    }

    /// Physical values of two fields at once (packed into one transform).
    pub(crate) fn physical_pair(
        &self,
        pad: Padding,
        a: &[Complex64],
        b: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let packed = self.synthesize(self.transform(pad), a, Some(b));
        packed.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Projects physical values (internal layout) onto the band.
    pub(crate) fn project(&self, pad: Padding, values: &[f64]) -> Vec<Complex64> {
        let buf = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.analyze(self.transform(pad), buf)
    }

    /// Physical values on the padded grid in the internal `[x1][x0]` layout.
    pub(crate) fn physical(&self, pad: Padding, coeffs: &[Complex64]) -> Vec<f64> {
        self.synthesize(self.transform(pad), coeffs, None)
            .into_iter()
            .map(|c| c.re)
            .collect()
    }
}

/// A real field on the torus, stored by its Fourier coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        TorusGrid::same(&self.grid, &other.grid) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn constant(grid: &Arc<TorusGrid>, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[grid.zero_index()] = Complex64::new(value, 0.0);
        f
    }

    /// Builds a field from coefficients in storage order, restoring Hermitian
    /// symmetry by averaging `c_k` with `conj(c_{-k})`.
    pub fn from_coeffs(grid: &Arc<TorusGrid>, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        grid.symmetrize(&mut coeffs);
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub(crate) fn from_raw(grid: &Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        let f = Self {
            grid: grid.clone(),
            coeffs,
        };
        debug_assert!(!f.is_finite() || f.is_hermitian());
        f
    }

    /// Single Fourier mode `amplitude·e_k + conj(amplitude)·e_{-k}`.
    pub fn mode(grid: &Arc<TorusGrid>, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        f.set_mode(k, amplitude)?;
        Ok(f)
    }

    /// Sets `c_k = value` and `c_{-k} = conj(value)`.
    pub fn set_mode(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidGrid(format!("wavenumber {k:?} outside the band")))?;
        let neg = self.grid.neg_index(idx);
        if idx == neg {
            self.coeffs[idx] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[idx] = value;
            self.coeffs[neg] = value.conj();
        }
        Ok(())
    }

    /// Samples `f` at the `M^d` grid points and projects onto the band.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let m = grid.points();
        let h = 1.0 / m as f64;
        let values: Vec<f64> = if grid.dim() == 1 {
            (0..m).map(|j| f(&[j as f64 * h])).collect()
        } else {
            (0..m * m)
                .map(|j| f(&[(j / m) as f64 * h, (j % m) as f64 * h]))
                .collect()
        };
        Self::from_physical(grid, &values).expect("length matches grid")
    }

    /// Forward transform of `M^d` real samples, row-major `[x0][x1]`, with
    /// `x = j/M`.
    pub fn from_physical(grid: &Arc<TorusGrid>, values: &[f64]) -> Result<Self> {
        let m = grid.points();
        if values.len() != grid.physical_len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.physical_len(),
                values.len()
            )));
        }
        let mut buf = vec![ZERO; values.len()];
        if grid.dim() == 1 {
            for (b, v) in buf.iter_mut().zip(values) {
                b.re = *v;
            }
        } else {
            for x0 in 0..m {
                for x1 in 0..m {
                    buf[x1 * m + x0].re = values[x0 * m + x1];
                }
            }
        }
        let coeffs = grid.analyze(&grid.quad, buf);
        Ok(Self::from_raw(grid, coeffs))
    }

    /// Values on the `M^d` grid, row-major `[x0][x1]`.
    pub fn to_physical(&self) -> Vec<f64> {
        let internal = self.grid.physical(Padding::Quadratic, &self.coeffs);
        if self.grid.dim() == 1 {
            return internal;
        }
        let m = self.grid.points();
        let mut out = vec![0.0; internal.len()];
        for x1 in 0..m {
            for x0 in 0..m {
                out[x0 * m + x1] = internal[x1 * m + x0];
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `e_k`; zero outside the band.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.coeffs[i])
    }

    /// Spatial mean, i.e. the zero-mode coefficient.
    pub fn mean(&self) -> f64 {
        self.coeffs[self.grid.zero_index()].re
    }

    pub fn is_hermitian(&self) -> bool {
        let z = self.grid.zero_index();
        self.coeffs[z].im == 0.0
            && (0..z).all(|i| self.coeffs[self.grid.neg_index(i)] == self.coeffs[i].conj())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if TorusGrid::same(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `P_t` with mass: multiplies mode `k` by `exp(-(m + 4π²|k|²) t)`.
    pub fn heat_semigroup(&self, t: f64, mass: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let mut out = self.clone();
        for (c, k2) in out.coeffs.iter_mut().zip(self.grid.k_squared()) {
            *c *= (-(mass + FOUR_PI_SQ * k2) * t).exp();
        }
        Ok(out)
    }

    /// Alias-free product `a·b` truncated to the band.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let coeffs = self
            .grid
            .evaluate(Padding::Quadratic, [&self.coeffs, &other.coeffs], |[a, b]| a * b);
        Ok(Self::from_raw(&self.grid, coeffs))
    }

    /// Alias-free product `a·b·c` truncated to the band.
    pub fn dealiased_product3(&self, b: &Self, c: &Self) -> Result<Self> {
        self.check_grid(b)?;
        self.check_grid(c)?;
        let coeffs = self.grid.evaluate(
            Padding::Cubic,
            [&self.coeffs, &b.coeffs, &c.coeffs],
            |[x, y, z]| x * y * z,
        );
        Ok(Self::from_raw(&self.grid, coeffs))
    }

    /// `sqrt(M^{-d} Σ_x f(x)²)` on the physical grid.
    pub fn l2_norm(&self) -> f64 {
        let values = self.grid.physical(Padding::Quadratic, &self.coeffs);
        (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
    }

    /// `max_x |f(x)|` over the physical grid.
    pub fn sup_norm(&self) -> f64 {
        self.grid
            .physical(Padding::Quadratic, &self.coeffs)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// L² norm from the coefficients, `sqrt(Σ_k |c_k|²)`.
    pub fn spectral_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// L² inner product `∫ f g dx`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(s);
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert!(TorusGrid::same(&self.grid, &other.grid), "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[self.grid.zero_index()].re += c;
        out
    }

    /// Keeps the modes for which `keep(k)` holds, zeroing the rest.
    pub fn filter(&self, keep: impl Fn([i64; 2]) -> bool) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            if !keep(self.grid.wavenumber(idx)) {
                *c = ZERO;
            }
        }
        out
    }

    /// Restriction or zero-extension onto another grid of the same
    /// dimension (modes present in both are copied).
    pub fn resample(&self, target: &Arc<TorusGrid>) -> Result<Self> {
        if target.dim() != self.grid.dim() {
            return Err(Error::GridMismatch);
        }
        let mut out = Self::zeros(target);
        let d = self.grid.dim();
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavenumber(idx);
            if let Some(j) = target.index_of(&k[..d]) {
                out.coeffs[j] = *c;
            }
        }
        Ok(out)
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Product of two or three fields, alias-free on the retained band.
pub fn dealiased_product(
    a: &SpectralField,
    b: &SpectralField,
    c: Option<&SpectralField>,
) -> Result<SpectralField> {
    match c {
        Some(c) => a.dealiased_product3(b, c),
        None => a.dealiased_product(b),
    }
}

/// Truncated massive Gaussian free field `𝒩(0, (1-Δ)^{-1})`: independent
/// Hermitian-paired modes with `E|c_k|² = 1/(1 + 4π²|k|²)`.
pub fn sample_gff(grid: &Arc<TorusGrid>, seed: u64) -> SpectralField {
    sample_gaussian(grid, seed, 0, Domain::FreeField, 0, |k2| {
        1.0 / (1.0 + FOUR_PI_SQ * k2)
    })
}

/// Hermitian Gaussian field with `E|c_k|² = variance(|k|²)` drawn from the
/// counter `(seed, trajectory, domain, step)`.
pub(crate) fn sample_gaussian(
    grid: &Arc<TorusGrid>,
    seed: u64,
    trajectory: u64,
    domain: Domain,
    step: i64,
    variance: impl Fn(f64) -> f64,
) -> SpectralField {
    let order = grid.noise_order();
    let mut draws = vec![ZERO; order.len()];
    rng::fill_complex_normals(seed, trajectory, domain, step, &mut draws);
    let mut f = SpectralField::zeros(grid);
    let k2 = grid.k_squared();
    for (&idx, z) in order.iter().zip(&draws) {
        let sd = variance(k2[idx]).sqrt();
        let neg = grid.neg_index(idx);
        if idx == neg {
            f.coeffs[idx] = Complex64::new(sd * z.re * std::f64::consts::SQRT_2, 0.0);
        } else {
            f.coeffs[idx] = z * sd;
            f.coeffs[neg] = f.coeffs[idx].conj();
        }
    }
    f
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_field(grid: &Arc<TorusGrid>, seed: u64) -> SpectralField {
        sample_gaussian(grid, seed, 0, Domain::Auxiliary, 0, |_| 1.0)
    }

    #[test]
    fn padded_sizes() {
        assert_eq!(padded_size(17), 18);
        assert_eq!(padded_size(33), 36);
        assert_eq!(padded_size(65), 72);
        assert_eq!(padded_size(129), 144);
        assert_eq!(padded_size(1), 2);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::with_points(3, 4, 18).is_err());
        assert!(TorusGrid::with_points(2, 4, 12).is_err());
        assert!(TorusGrid::with_points(2, 4, 13).is_err());
        assert!(TorusGrid::with_points(2, 4, 14).is_ok());
    }

    #[test]
    fn constant_to_physical() {
        let grid = TorusGrid::new(2, 3).unwrap();
        let f = SpectralField::constant(&grid, 2.5);
        for v in f.to_physical() {
            assert_relative_eq!(v, 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_mode_is_cosine() {
        for dim in [1, 2] {
            let grid = TorusGrid::new(dim, 4).unwrap();
            let k: Vec<i64> = if dim == 1 { vec![1] } else { vec![1, 0] };
            let f = SpectralField::mode(&grid, &k, Complex64::new(0.5, 0.0)).unwrap();
            let m = grid.points();
            for (j, v) in f.to_physical().iter().enumerate() {
                let x0 = if dim == 1 { j } else { j / m } as f64 / m as f64;
                assert!((v - (2.0 * PI * x0).cos()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn round_trip() {
        for dim in [1, 2] {
            let grid = TorusGrid::new(dim, 7).unwrap();
            let f = random_field(&grid, 3);
            let back = SpectralField::from_physical(&grid, &f.to_physical()).unwrap();
            assert!(back.max_abs_diff(&f) <= 1e-12 * f.spectral_norm());
            assert!(back.is_hermitian());
        }
    }

    #[test]
    fn heat_semigroup_multipliers() {
        let grid = TorusGrid::new(2, 3).unwrap();
        let c = SpectralField::constant(&grid, 1.7);
        assert_eq!(c.heat_semigroup(0.3, 0.0).unwrap(), c);
        let f = SpectralField::mode(&grid, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let g = f.heat_semigroup(1.0, 0.0).unwrap();
        assert_relative_eq!(g.coeff(&[1, 0]).re, (-FOUR_PI_SQ).exp(), max_relative = 1e-14);
        assert!(matches!(f.heat_semigroup(-1.0, 0.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn semigroup_law_and_contraction() {
        let grid = TorusGrid::new(2, 5).unwrap();
        let f = random_field(&grid, 9);
        let a = f.heat_semigroup(0.01, 1.0).unwrap().heat_semigroup(0.02, 1.0).unwrap();
        let b = f.heat_semigroup(0.03, 1.0).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        for t in [0.0, 1e-4, 1e-2, 1.0] {
            assert!(f.heat_semigroup(t, 0.0).unwrap().l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn products() {
        let grid = TorusGrid::new(1, 3).unwrap();
        let a = SpectralField::constant(&grid, 2.0);
        let b = SpectralField::constant(&grid, 3.0);
        assert_relative_eq!(a.dealiased_product(&b).unwrap().mean(), 6.0, epsilon = 1e-14);
        let c = SpectralField::mode(&grid, &[1], Complex64::new(0.5, 0.0)).unwrap();
        let c2 = c.dealiased_product(&c).unwrap();
        assert_relative_eq!(c2.mean(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(c2.coeff(&[2]).re, 0.25, epsilon = 1e-14);

        // second harmonic dropped when it leaves the band
        let g1 = TorusGrid::new(1, 1).unwrap();
        let c = SpectralField::mode(&g1, &[1], Complex64::new(0.5, 0.0)).unwrap();
        let c2 = c.dealiased_product(&c).unwrap();
        assert_relative_eq!(c2.mean(), 0.5, epsilon = 1e-14);
        assert_eq!(c2.coeff(&[1]), ZERO);
    }

    #[test]
    fn grid_mismatch() {
        let g1 = TorusGrid::new(2, 3).unwrap();
        let g2 = TorusGrid::new(2, 4).unwrap();
        let a = SpectralField::constant(&g1, 1.0);
        let b = SpectralField::constant(&g2, 1.0);
        assert!(matches!(a.dealiased_product(&b), Err(Error::GridMismatch)));
        assert!(matches!(dealiased_product(&a, &a, Some(&b)), Err(Error::GridMismatch)));
    }

    #[test]
    fn norms() {
        let grid = TorusGrid::new(2, 4).unwrap();
        let c = SpectralField::constant(&grid, 3.0);
        assert_relative_eq!(c.l2_norm(), 3.0, epsilon = 1e-13);
        assert_relative_eq!(c.sup_norm(), 3.0, epsilon = 1e-13);
        let f = SpectralField::mode(&grid, &[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(f.l2_norm(), 0.5f64.sqrt(), epsilon = 1e-13);
        assert_relative_eq!(f.sup_norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn noise_order_extends() {
        let small = TorusGrid::new(2, 3).unwrap();
        let large = TorusGrid::new(2, 6).unwrap();
        for (a, b) in small.noise_order().iter().zip(large.noise_order()) {
            assert_eq!(small.wavenumber(*a), large.wavenumber(*b));
        }
        // zero + half of the non-zero modes
        assert_eq!(small.noise_order().len(), 1 + (small.len() - 1) / 2);
    }

    #[test]
    fn gff_variances_exact_per_mode_structure() {
        let grid = TorusGrid::new(2, 2).unwrap();
        let f = sample_gff(&grid, 5);
        assert!(f.is_hermitian());
        assert_eq!(f, sample_gff(&grid, 5));
        assert_ne!(f, sample_gff(&grid, 6));
    }
}
