//! Steering the renormalized square to a constant and thereby the FTLE to
//! any prescribed value.
//!
//! For a target `λ` and parameter `α`, `κ = (α - λ)/3` and a constant triple
//! `(φ₀, f, c)` makes `φ₀` a fixed point of the controlled equation with
//! `φ₀² - c = κ`. The linearization along `q ≡ κ` then grows exactly at rate
//! `α - 3κ = λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ftle::{ftle, FtleOptions, PotentialPath};
use crate::solver::{solve_j, Forcing, SolverConfig};
use crate::torus::SpectralField;

/// Constant initial value, forcing and renormalization shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringTriple {
    pub phi0: f64,
    pub f: f64,
    pub c: f64,
}

impl SteeringTriple {
    /// `-φ₀³ + (3c + α)φ₀ + f`, zero at a fixed point.
    pub fn fixed_point_defect(&self, alpha: f64) -> f64 {
        -self.phi0.powi(3) + (3.0 * self.c + alpha) * self.phi0 + self.f
    }

    /// `φ₀² - c`.
    pub fn kappa(&self) -> f64 {
        self.phi0 * self.phi0 - self.c
    }
}

/// `κ < 0`: `(0, 0, -κ)`; `κ ≥ 0`: `(√κ, κ^{3/2} - α√κ, 0)`.
pub fn triple_for_kappa(kappa: f64, alpha: f64) -> SteeringTriple {
    if kappa < 0.0 {
        SteeringTriple {
            phi0: 0.0,
            f: 0.0,
            c: -kappa,
        }
    } else {
        let r = kappa.sqrt();
        SteeringTriple {
            phi0: r,
            f: kappa * r - alpha * r,
            c: 0.0,
        }
    }
}

pub fn kappa_for_lambda(lambda: f64, alpha: f64) -> f64 {
    (alpha - lambda) / 3.0
}

/// One line of the steering report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerRow {
    pub lambda_target: f64,
    pub kappa: f64,
    pub phi0: f64,
    pub f: f64,
    pub c: f64,
    /// `λ_T` along the simulated potential `𝒥² - c`.
    pub lambda_measured: f64,
    /// `λ_T` along the analytic potential `q ≡ κ`.
    pub lambda_analytic: f64,
    /// Larger of the two deviations from the target.
    pub abs_err: f64,
    /// `sup_t ‖𝒥(t) - φ₀‖_∞`.
    pub path_deviation: f64,
    /// `sup_t ‖𝒥(t)² - c - κ‖_∞`.
    pub square_deviation: f64,
    pub converged: bool,
}

/// Steers to each target in turn: builds the triple, solves the controlled
/// equation, and measures the FTLE along both the analytic and the simulated
/// potential.
pub fn demo_support(targets: &[f64], alpha: f64, cfg: &SolverConfig, opts: &FtleOptions) -> Result<Vec<SteerRow>> {
    let cfg = SolverConfig {
        alpha,
        snapshot_stride: 1,
        ..cfg.clone()
    };
    cfg.validate()?;
    let grid = cfg.grid()?;
    let steps = cfg.steps();
    targets
        .iter()
        .map(|&lambda| {
            if !lambda.is_finite() {
                return Err(Error::InvalidConfig(format!("target {lambda} is not finite")));
            }
            let kappa = kappa_for_lambda(lambda, alpha);
            let t = triple_for_kappa(kappa, alpha);
            let phi0 = SpectralField::constant(&grid, t.phi0);
            let path = solve_j(&phi0, &Forcing::Constant(t.f), t.c, &cfg)?;
            let q: Vec<SpectralField> = path
                .iter()
                .map(|j| Ok(j.dealiased_product(j)?.add_constant(-t.c)))
                .collect::<Result<_>>()?;
            let path_deviation = path.iter().map(|j| j.max_abs_diff(&phi0)).fold(0.0, f64::max);
            let square_deviation = q
                .iter()
                .map(|q| q.add_constant(-kappa).sup_norm())
                .fold(0.0, f64::max);

            let simulated = ftle(&PotentialPath::from_fields(&q, cfg.dt, steps)?, alpha, 0, opts)?;
            let analytic = ftle(&PotentialPath::constant(&grid, kappa, cfg.dt, steps)?, alpha, 0, opts)?;
            Ok(SteerRow {
                lambda_target: lambda,
                kappa,
                phi0: t.phi0,
                f: t.f,
                c: t.c,
                lambda_measured: simulated.lambda,
                lambda_analytic: analytic.lambda,
                abs_err: (simulated.lambda - lambda).abs().max((analytic.lambda - lambda).abs()),
                path_deviation,
                square_deviation,
                converged: simulated.converged && analytic.converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_kappa_uses_the_shift() {
        assert_eq!(
            triple_for_kappa(-1.0, 3.0),
            SteeringTriple {
                phi0: 0.0,
                f: 0.0,
                c: 1.0
            }
        );
    }

    #[test]
    fn positive_kappa() {
        assert_eq!(
            triple_for_kappa(4.0, 2.0),
            SteeringTriple {
                phi0: 2.0,
                f: 4.0,
                c: 0.0
            }
        );
        assert_eq!(triple_for_kappa(0.0, 5.0).kappa(), 0.0);
    }

    #[test]
    fn kappa_from_lambda() {
        assert_eq!(kappa_for_lambda(0.0, 0.0), 0.0);
        assert_eq!(kappa_for_lambda(-5.0, 1.0), 2.0);
    }

    #[test]
    fn fixed_point_algebra() {
        for &alpha in &[-3.0, 0.0, 2.5] {
            for &lambda in &[-7.0, -1.0, 0.0, 0.3, 9.0] {
                let k = kappa_for_lambda(lambda, alpha);
                let t = triple_for_kappa(k, alpha);
                assert!(t.c >= 0.0);
                assert!(t.fixed_point_defect(alpha).abs() < 1e-12);
                assert!((t.kappa() - k).abs() < 1e-12);
            }
        }
    }
}
