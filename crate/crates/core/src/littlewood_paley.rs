//! Sharp dyadic Littlewood–Paley blocks, Hölder–Besov norms and Bony's
//! paraproduct decomposition on the retained band.
//!
//! Block `-1` holds the zero mode only; block `j ≥ 0` holds the modes with
//! `2^{j-1} ≤ |k|₂ < 2^j` (block 0 is therefore empty on the integer
//! lattice). The blocks partition the band exactly, so
//! `u≺v + u⊙v + v≺u = uv` holds up to rounding.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{Padding, SpectralField, TorusGrid};

/// Block index of a wavenumber with `|k|₂² = k_sq`.
pub fn block_index(k_sq: u64) -> i32 {
    if k_sq == 0 {
        return -1;
    }
    let mut j = 1;
    while k_sq >= 1u64 << (2 * j) {
        j += 1;
    }
    j
}

/// Largest non-empty block index `J` for a grid: the block of `|k|₂² = dN²`.
pub fn max_block(grid: &TorusGrid) -> i32 {
    let n = grid.cutoff() as u64;
    block_index(grid.dim() as u64 * n * n)
}

/// Block membership of every coefficient of a grid.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    grid: Arc<TorusGrid>,
    max_block: i32,
    membership: Vec<i32>,
}

impl BlockDecomposition {
    pub fn new(grid: &Arc<TorusGrid>) -> Self {
        let membership = grid
            .k_squared()
            .iter()
            .map(|&k2| block_index(k2 as u64))
            .collect();
        Self {
            grid: grid.clone(),
            max_block: max_block(grid),
            membership,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    /// `J`; valid block indices are `-1..=J`.
    pub fn max_block(&self) -> i32 {
        self.max_block
    }

    pub fn membership(&self) -> &[i32] {
        &self.membership
    }

    fn select(&self, f: &SpectralField, keep: impl Fn(i32) -> bool) -> SpectralField {
        let mut out = f.clone();
        for (c, &j) in out.coeffs_mut().iter_mut().zip(&self.membership) {
            if !keep(j) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `Δ_j f`.
    pub fn block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        if j < -1 || j > self.max_block {
            return Err(Error::BlockOutOfRange {
                index: j,
                max: self.max_block,
            });
        }
        self.check(f)?;
        Ok(self.select(f, |b| b == j))
    }

    /// `Δ_{≤n} f`.
    pub fn project_low(&self, f: &SpectralField, n: i32) -> SpectralField {
        self.select(f, |b| b <= n)
    }

    /// `Δ_{>n} f`.
    pub fn project_high(&self, f: &SpectralField, n: i32) -> SpectralField {
        self.select(f, |b| b > n)
    }

    /// `sup_x |Δ_j f(x)|` for `j = -1..=J`.
    pub fn block_sup_norms(&self, f: &SpectralField) -> Vec<f64> {
        (-1..=self.max_block)
            .map(|j| self.select(f, |b| b == j).sup_norm())
            .collect()
    }

    /// `‖f‖_{C^β} = max_j 2^{βj} ‖Δ_j f‖_∞`.
    pub fn besov_norm(&self, f: &SpectralField, beta: f64) -> f64 {
        weighted_max(&self.block_sup_norms(f), beta)
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if TorusGrid::same(&self.grid, f.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Physical values of every block of `u` and `v` on the quadratic grid.
    fn physical_blocks(&self, u: &SpectralField, v: &SpectralField) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (-1..=self.max_block)
            .map(|j| {
                let ub = self.select(u, |b| b == j);
                let vb = self.select(v, |b| b == j);
                self.grid.physical_pair(Padding::Quadratic, ub.coeffs(), vb.coeffs())
            })
            .unzip()
    }

    /// The three Bony pieces `(u≺v, u⊙v, v≺u)` computed from one set of block
    /// transforms.
    pub fn bony(&self, u: &SpectralField, v: &SpectralField) -> Result<[SpectralField; 3]> {
        self.check(u)?;
        self.check(v)?;
        let (ub, vb) = self.physical_blocks(u, v);
        let nb = ub.len();
        let npts = ub[0].len();
        // position p holds block p - 1
        let cumulative = |blocks: &[Vec<f64>]| {
            let mut acc = vec![vec![0.0; npts]; nb];
            for p in 0..nb {
                if p > 0 {
                    let (prev, cur) = acc.split_at_mut(p);
                    cur[0].copy_from_slice(&prev[p - 1]);
                }
                for (a, b) in acc[p].iter_mut().zip(&blocks[p]) {
                    *a += b;
                }
            }
            acc
        };
        let ucum = cumulative(&ub);
        let vcum = cumulative(&vb);

        let mut low_high = vec![0.0; npts];
        let mut high_low = vec![0.0; npts];
        let mut resonant = vec![0.0; npts];
        for p in 0..nb {
            // Δ_{≤j-2} sits at position p - 2
            if p >= 2 {
                for x in 0..npts {
                    low_high[x] += ucum[p - 2][x] * vb[p][x];
                    high_low[x] += vcum[p - 2][x] * ub[p][x];
                }
            }
            for q in p.saturating_sub(1)..(p + 2).min(nb) {
                for x in 0..npts {
                    resonant[x] += ub[q][x] * vb[p][x];
                }
            }
        }
        let field = |vals: &[f64]| {
            SpectralField::from_raw(&self.grid, self.grid.project(Padding::Quadratic, vals))
        };
        Ok([field(&low_high), field(&resonant), field(&high_low)])
    }

    /// `u≺v = Σ_j (Δ_{≤j-2}u)(Δ_j v)`.
    pub fn paraproduct(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        let [lh, _, _] = self.bony(u, v)?;
        Ok(lh)
    }

    /// `u⊙v = Σ_{|i-j|≤1} (Δ_i u)(Δ_j v)`.
    pub fn resonant(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        let [_, res, _] = self.bony(u, v)?;
        Ok(res)
    }

    /// `u≼v = u≺v + u⊙v`.
    pub fn para_or_res(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        let [lh, res, _] = self.bony(u, v)?;
        Ok(&lh + &res)
    }
}

/// `max_j 2^{βj} s_j` over block sup-norms listed from `j = -1`.
pub fn weighted_max(block_norms: &[f64], beta: f64) -> f64 {
    block_norms
        .iter()
        .enumerate()
        .map(|(p, s)| (beta * (p as f64 - 1.0)).exp2() * s)
        .fold(0.0, f64::max)
}
