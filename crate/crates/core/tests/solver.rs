mod common;

use std::collections::HashMap;

use num_complex::Complex64;
use phi4_core::littlewood_paley::BlockDecomposition;
use phi4_core::noise::{NoiseStream, WickTriple};
use phi4_core::solver::{simulate, solve_j, solve_psi, Forcing, SolverConfig, Trajectory};
use phi4_core::{sample_gff, SpectralField, TorusGrid};

const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

fn cfg(cutoff: usize, dt: f64, horizon: f64, alpha: f64) -> SolverConfig {
    SolverConfig {
        cutoff,
        dt,
        horizon,
        alpha,
        ..SolverConfig::default()
    }
}

/// `ṙ = αr - r³` in closed form.
fn logistic(alpha: f64, r0: f64, t: f64) -> f64 {
    let e = (2.0 * alpha * t).exp();
    let r2 = alpha * r0 * r0 * e / (alpha + r0 * r0 * (e - 1.0));
    r0.signum() * r2.sqrt()
}

#[test]
fn constant_data_follow_the_scalar_ode() {
    let mut errs = Vec::new();
    for dt in [2e-3, 1e-3, 5e-4] {
        let c = cfg(3, dt, 0.5, 1.5);
        let grid = c.grid().unwrap();
        let triple = WickTriple::zero(&grid, c.steps() + 1);
        let p = solve_psi(&SpectralField::constant(&grid, 0.3), &triple, &c, false).unwrap();
        let err = p
            .psi
            .iter()
            .zip(&p.times)
            .map(|(f, &t)| (f.mean() - logistic(1.5, 0.3, t)).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[0] < 1e-3);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn controlled_equation_decays_at_rate_alpha() {
    let c = cfg(2, 1e-4, 0.5, -1.0);
    let grid = c.grid().unwrap();
    let path = solve_j(&SpectralField::constant(&grid, 1e-4), &Forcing::Constant(0.0), 0.0, &c).unwrap();
    let last = path.last().unwrap().mean();
    assert!((last / (1e-4 * (-0.5f64).exp()) - 1.0).abs() < 1e-4);
}

type Coeffs = HashMap<(i64, i64), Complex64>;

fn to_map(f: &SpectralField) -> Coeffs {
    let g = f.grid();
    (0..g.len()).map(|i| {
        let k = g.wavenumber(i);
        ((k[0], k[1]), f.coeffs()[i])
    })
    .collect()
}

fn mul(a: &Coeffs, b: &Coeffs) -> Coeffs {
    let mut out = Coeffs::new();
    for (ka, va) in a {
        for (kb, vb) in b {
            *out.entry((ka.0 + kb.0, ka.1 + kb.1)).or_default() += va * vb;
        }
    }
    out
}

fn band(a: &Coeffs, n: i64) -> Coeffs {
    a.iter().filter(|(k, _)| k.0.abs() <= n && k.1.abs() <= n).map(|(k, v)| (*k, *v)).collect()
}

fn axpy(out: &mut Coeffs, s: f64, x: &Coeffs) {
    for (k, v) in x {
        *out.entry(*k).or_default() += v * s;
    }
}

/// Remainder drift including the linear part, by explicit convolutions.
fn rhs(r: &Coeffs, z1: &Coeffs, z2: &Coeffs, z3: &Coeffs, alpha: f64, n: i64) -> Coeffs {
    let r2 = mul(r, r);
    let mut g = Coeffs::new();
    axpy(&mut g, -1.0, &mul(&r2, r));
    axpy(&mut g, -3.0, &mul(&r2, z1));
    axpy(&mut g, -3.0, &mul(r, z2));
    axpy(&mut g, -1.0, z3);
    let mut g = band(&g, n);
    for (k, v) in r {
        *g.entry(*k).or_default() += v * (alpha - FOUR_PI_SQ * (k.0 * k.0 + k.1 * k.1) as f64);
    }
    g
}

fn rk4(r0: &Coeffs, z: [&Coeffs; 3], alpha: f64, n: i64, dt: f64, steps: usize) -> Coeffs {
    let f = |r: &Coeffs| rhs(r, z[0], z[1], z[2], alpha, n);
    let mut r = r0.clone();
    for _ in 0..steps {
        let k1 = f(&r);
        let mut y = r.clone();
        axpy(&mut y, dt / 2.0, &k1);
        let k2 = f(&y);
        let mut y = r.clone();
        axpy(&mut y, dt / 2.0, &k2);
        let k3 = f(&y);
        let mut y = r.clone();
        axpy(&mut y, dt, &k3);
        let k4 = f(&y);
        axpy(&mut r, dt / 6.0, &k1);
        axpy(&mut r, dt / 3.0, &k2);
        axpy(&mut r, dt / 3.0, &k3);
        axpy(&mut r, dt / 6.0, &k4);
    }
    r
}

#[test]
fn dense_coefficient_ode_at_n2() {
    let (n, alpha, horizon) = (2usize, 0.5, 0.1);
    let grid = TorusGrid::new(2, n).unwrap();
    let r0 = common::rough_field(&grid, 1, 0.5);
    let z = sample_gff(&grid, 2).scale(0.5);
    let c = 0.2;
    let triple = WickTriple::from_gaussian(vec![z.clone(); 2], c);
    let (z2, z3) = (triple.z2[0].clone(), triple.z3[0].clone());
    // Wick powers rebuilt independently
    let zm = to_map(&z);
    let mut w2 = band(&mul(&zm, &zm), n as i64);
    *w2.entry((0, 0)).or_default() -= c;
    let mut w3 = band(&mul(&mul(&zm, &zm), &zm), n as i64);
    axpy(&mut w3, -3.0 * c, &zm);
    for (k, v) in &w2 {
        assert!((z2.coeff(&[k.0, k.1]) - v).norm() < 1e-13);
    }
    for (k, v) in &w3 {
        assert!((z3.coeff(&[k.0, k.1]) - v).norm() < 1e-13);
    }

    let reference = rk4(&to_map(&r0), [&zm, &w2, &w3], alpha, n as i64, 1e-5, 10_000);
    let mut errs = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let cf = cfg(n, dt, horizon, alpha);
        let steps = cf.steps();
        let triple = WickTriple::from_gaussian(vec![z.clone(); steps + 1], c);
        let p = solve_psi(&r0, &triple, &cf, false).unwrap();
        let got = to_map(p.remainder.last().unwrap());
        let num: f64 = reference.iter().map(|(k, v)| (got[k] - v).norm_sqr()).sum();
        let den: f64 = reference.values().map(|v| v.norm_sqr()).sum();
        errs.push((num / den).sqrt());
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.3).contains(&ratio), "errors {errs:?}");
    }
}

fn ct_besov(a: &[SpectralField], b: &[SpectralField], lp: &BlockDecomposition, beta: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| lp.besov_norm(&(x - y), beta)).fold(0.0, f64::max)
}

#[test]
fn solution_map_is_continuous_in_the_initial_value() {
    let c = SolverConfig {
        snapshot_stride: 10,
        ..cfg(8, 1e-3, 0.2, 1.0)
    };
    let grid = c.grid().unwrap();
    let lp = BlockDecomposition::new(&grid);
    let z: Vec<SpectralField> = {
        let mut traj = Trajectory::start(&c, &SpectralField::zeros(&grid), NoiseStream::new(7, 0), 0).unwrap();
        let mut out = vec![traj.state().gaussian.clone()];
        for _ in 0..c.steps() {
            traj.advance().unwrap();
            out.push(traj.state().gaussian.clone());
        }
        out
    };
    let triple = WickTriple::from_gaussian(z, c.wick_shift(&grid).unwrap());
    let phi0 = sample_gff(&grid, 1);
    let dir = common::rough_field(&grid, 2, -0.1);
    let base = solve_psi(&phi0, &triple, &c, false).unwrap();
    let diffs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eta| {
            let mut p = phi0.clone();
            p.axpy(eta, &dir);
            let out = solve_psi(&p, &triple, &c, false).unwrap();
            ct_besov(&out.psi, &base.psi, &lp, -c.epsilon)
        })
        .collect();
    for w in diffs.windows(2) {
        let slope = (w[0] / w[1]).log10();
        assert!((slope - 1.0).abs() < 0.1, "diffs {diffs:?}");
    }
}

#[test]
fn flow_property_is_bit_exact() {
    let c = cfg(8, 1e-3, 0.05, 0.5);
    let grid = c.grid().unwrap();
    let phi0 = sample_gff(&grid, 3);
    let noise = NoiseStream::new(11, 2);
    let mut whole = Trajectory::start(&c, &phi0, noise, -7).unwrap();
    whole.advance_by(40).unwrap();
    let mut first = Trajectory::start(&c, &phi0, noise, -7).unwrap();
    first.advance_by(13).unwrap();
    let mut second = Trajectory::resume(&c, noise, first.state().clone()).unwrap();
    second.advance_by(27).unwrap();
    assert_eq!(whole.state(), second.state());
}

#[test]
fn runs_are_deterministic() {
    let c = SolverConfig {
        seed: 5,
        snapshot_stride: 7,
        ..cfg(6, 1e-3, 0.05, 0.0)
    };
    let grid = c.grid().unwrap();
    let a = simulate(&c, &SpectralField::zeros(&grid), true).unwrap();
    let b = simulate(&c, &SpectralField::zeros(&grid), true).unwrap();
    assert_eq!(a.phi, b.phi);
    assert_eq!(a.diagnostics, b.diagnostics);
    let other = simulate(&SolverConfig { seed: 6, ..c.clone() }, &SpectralField::zeros(&grid), false).unwrap();
    assert_ne!(a.phi.last(), other.phi.last());
}

#[test]
fn remainder_stays_bounded() {
    let mut peaks = Vec::new();
    for dt in [2e-3, 1e-3] {
        let mut worst: f64 = 0.0;
        for seed in 0..50 {
            let c = SolverConfig {
                seed,
                snapshot_stride: 25,
                noise_substeps: if dt > 1.5e-3 { 2 } else { 1 },
                ..cfg(16, dt, 0.5, 0.0)
            };
            let grid = c.grid().unwrap();
            let lp = BlockDecomposition::new(&grid);
            let p = simulate(&c, &SpectralField::zeros(&grid), false).unwrap();
            let m = p.remainder.iter().map(|r| lp.besov_norm(r, 2.0 - c.epsilon)).fold(0.0, f64::max);
            assert!(m.is_finite());
            worst = worst.max(m);
        }
        peaks.push(worst);
    }
    assert!((peaks[0] / peaks[1] - 1.0).abs() < 0.25, "peaks {peaks:?}");
}
