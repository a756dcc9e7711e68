#![allow(dead_code)]

use std::sync::Arc;

use phi4_core::{sample_gff, SpectralField, TorusGrid};

/// Random real field with coefficient variance `(1 + |k|²)^{-s}`.
pub fn rough_field(grid: &Arc<TorusGrid>, seed: u64, s: f64) -> SpectralField {
    let base = sample_gff(grid, seed);
    let mut out = SpectralField::zeros(grid);
    for (i, c) in base.coeffs().iter().enumerate() {
        let k = grid.wavenumber(i);
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        // undo the free-field variance, then impose the requested decay
        let w = ((1.0 + 4.0 * std::f64::consts::PI.powi(2) * k2) / (1.0 + k2).powf(s)).sqrt();
        out.set_mode(&k[..grid.dim()], c * w).unwrap();
    }
    out
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
