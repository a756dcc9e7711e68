mod common;

use phi4_core::ftle::{from_ticks, to_ticks, ftle, FtleOptions, PotentialPath};
use phi4_core::{SpectralField, TorusGrid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_physical_round_trip(dim in 1usize..=2, n in 1usize..=9, seed in any::<u64>(), s in -0.5f64..1.5) {
        let grid = TorusGrid::new(dim, n).unwrap();
        let f = common::rough_field(&grid, seed, s);
        let back = SpectralField::from_physical(&grid, &f.to_physical()).unwrap();
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.spectral_norm().max(1.0));
    }

    #[test]
    fn product_is_commutative(n in 1usize..=6, a in any::<u64>(), b in any::<u64>()) {
        let grid = TorusGrid::new(2, n).unwrap();
        let (u, v) = (common::rough_field(&grid, a, 0.5), common::rough_field(&grid, b, 0.5));
        let scale = u.spectral_norm() * v.spectral_norm();
        let d = u.dealiased_product(&v).unwrap().max_abs_diff(&v.dealiased_product(&u).unwrap());
        prop_assert!(d <= 1e-13 * scale);
    }

    #[test]
    fn tick_lattice_is_idempotent(x in -1e6f64..1e6) {
        let t = to_ticks(x);
        prop_assert_eq!(to_ticks(from_ticks(t)), t);
        prop_assert!((from_ticks(t) - x).abs() <= 0.5 / (1u64 << 40) as f64 + 1e-16 * x.abs());
    }

    #[test]
    fn constant_potential_rate(alpha in -3.0f64..3.0, kappa in -1.0f64..1.0) {
        let grid = TorusGrid::new(1, 4).unwrap();
        let q = PotentialPath::constant(&grid, kappa, 1e-2, 20).unwrap();
        let l = ftle(&q, alpha, 0, &FtleOptions::default()).unwrap().lambda;
        prop_assert!((l - (alpha - 3.0 * kappa)).abs() <= 1e-8 * (1.0 + (alpha - 3.0 * kappa).abs()));
    }
}
