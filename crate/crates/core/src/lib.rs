//! Spectral-Galerkin simulation of the renormalized Φ⁴ equation on the torus.

pub mod error;
pub mod ftle;
pub mod io;
pub mod littlewood_paley;
pub mod noise;
pub mod rng;
pub mod solver;
pub mod stationary;
pub mod steer;
pub mod torus;

pub use error::{Error, Result};
pub use torus::{dealiased_product, sample_gff, SpectralField, TorusGrid};
