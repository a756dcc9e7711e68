//! Counter-based Gaussian draws.
//!
//! Every draw is a pure function of `(seed, trajectory, domain, step, slot)`:
//! a ChaCha8 key is derived from `(seed, trajectory, domain)`, the stream id is
//! the step counter and `slot` is the position inside the stream. Nothing is
//! carried between calls, so results do not depend on evaluation order or on
//! how work is split across threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Independent families of draws sharing one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Per-step white-noise increments.
    Increment = 1,
    /// Initial condition drawn from the stationary Ornstein–Uhlenbeck law.
    Stationary = 2,
    /// Massive Gaussian free field samples.
    FreeField = 3,
    /// Start-vector perturbation of the power iteration.
    Perturbation = 4,
    /// Generic test/auxiliary fields.
    Auxiliary = 5,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key(seed: u64, trajectory: u64, domain: Domain) -> [u8; 32] {
    let mut state = seed;
    let a = splitmix64(&mut state);
    state ^= trajectory.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let b = splitmix64(&mut state);
    state ^= (domain as u64).wrapping_mul(0xA076_1D64_78BD_642F);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);
    let mut out = [0u8; 32];
    for (chunk, word) in out.chunks_exact_mut(8).zip([a, b, c, d]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    out
}

#[inline]
fn open_unit(x: u64) -> f64 {
    // (0, 1]
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fills `out` with standard complex Gaussians (`E|z|^2 = 1`, independent
/// real and imaginary parts of variance 1/2). Slot `i` of a given
/// `(seed, trajectory, domain, step)` is always the same number, whatever
/// the length of `out`.
pub fn fill_complex_normals(
    seed: u64,
    trajectory: u64,
    domain: Domain,
    step: i64,
    out: &mut [Complex64],
) {
    let mut rng = ChaCha8Rng::from_seed(key(seed, trajectory, domain));
    rng.set_stream(step as u64);
    for z in out.iter_mut() {
        let u = open_unit(rng.next_u64());
        let v = rng.next_u64() as f64 * (1.0 / 18_446_744_073_709_551_616.0);
        let radius = (-u.ln()).sqrt();
        let (s, c) = (2.0 * PI * v).sin_cos();
        *z = Complex64::new(radius * c, radius * s);
    }
}
