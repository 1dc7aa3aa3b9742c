use approx::assert_relative_eq;
use proptest::prelude::*;
use roughpde::io::{field_from_json, field_to_json};
use roughpde::mildsolver::{check_parameters, rho_exponent, select_rho_t};
use roughpde::paraproduct::{bony_decompose, dealiased_product};
use roughpde::roughfield::{gaussian_field, generate_rough};
use roughpde::spectral::{dyadic_decompose, heat_propagate};
use roughpde::{Grid, SpectralField};

fn line(exp: u32) -> Grid {
    Grid::line(1 << exp).unwrap()
}

fn close(a: &SpectralField, b: &SpectralField, tol: f64) -> bool {
    a.max_coefficient_distance(b) <= tol * (1.0 + a.max_coefficient().max(b.max_coefficient()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_sum_back_to_the_field(exp in 3u32..10, dim in 1usize..3, reg in -0.45f64..1.0, seed in any::<u64>()) {
        let n = if dim == 2 { 1 << exp.min(6) } else { 1 << exp };
        let grid = Grid::new(dim, n, 1.7).unwrap();
        let f = gaussian_field(grid, reg, seed, 0);
        let rec = dyadic_decompose(&f).reconstruct();
        prop_assert!(close(&rec, &f, 1e-12));
    }

    #[test]
    fn heat_flow_is_a_semigroup(s in 0.0f64..0.5, t in 0.0f64..0.5, seed in any::<u64>()) {
        let f = gaussian_field(line(6), 0.2, seed, 0);
        let two_steps = heat_propagate(&heat_propagate(&f, s).unwrap(), t).unwrap();
        let one_step = heat_propagate(&f, s + t).unwrap();
        prop_assert!(close(&two_steps, &one_step, 1e-13));
    }

    #[test]
    fn heat_flow_damps_each_mode_exactly(k in 1i32..20, t in 0.0f64..0.3) {
        let grid = line(6);
        let f = SpectralField::from_fn(grid, |x| (k as f64 * x[0]).cos());
        let u = heat_propagate(&f, t).unwrap();
        let decay = (-(k * k) as f64 * t).exp();
        for (i, v) in u.to_physical().iter().enumerate() {
            assert_relative_eq!(*v, decay * (k as f64 * grid.node(i)[0]).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn products_are_bilinear(a in -3.0f64..3.0, seed in any::<u64>()) {
        let grid = line(6);
        let f = gaussian_field(grid, 0.7, seed, 1);
        let g = gaussian_field(grid, -0.3, seed, 2);
        let h = gaussian_field(grid, -0.3, seed, 3);
        let mixed = g.scale(a).axpy(1.0, &h).unwrap();
        let lhs = dealiased_product(&f, &mixed).unwrap();
        let rhs = dealiased_product(&f, &g).unwrap().scale(a).axpy(1.0, &dealiased_product(&f, &h).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
        let parts = bony_decompose(&f, &mixed).unwrap();
        let pg = bony_decompose(&f, &g).unwrap();
        let ph = bony_decompose(&f, &h).unwrap();
        prop_assert!(close(&parts.resonant, &pg.resonant.scale(a).axpy(1.0, &ph.resonant).unwrap(), 1e-12));
        prop_assert!(close(&parts.total(), &lhs, 1e-12));
    }

    #[test]
    fn product_is_symmetric(seed in any::<u64>()) {
        let grid = line(7);
        let f = gaussian_field(grid, 0.5, seed, 1);
        let g = gaussian_field(grid, -0.2, seed, 2);
        prop_assert!(close(&dealiased_product(&f, &g).unwrap(), &dealiased_product(&g, &f).unwrap(), 1e-14));
    }

    #[test]
    fn weight_selection_meets_its_bounds(r0 in 0.0f64..20.0, c in 1e-3f64..50.0, alpha in 0.05f64..0.95, frac in 0.05f64..0.95) {
        let lower = f64::max(-alpha, alpha - 1.0);
        let beta = lower * (1.0 - frac);
        let cp = select_rho_t(r0, c, alpha, beta);
        if !cp.rho0.is_finite() {
            // only allowed when even the largest power of two misses a bound
            let w = 2f64.powi(1023).powf(rho_exponent(alpha, beta));
            let r = cp.r0;
            prop_assert!(
                2.0 * c * w * (1.0 + 4.0 * r * r).sqrt() > 0.25 || c / r * w > 0.25 || c * w * (1.0 + 8.0 * r * r).sqrt() >= 1.0
            );
            prop_assert_eq!(cp.t0, 0.0);
            return Ok(());
        }
        let w = cp.rho0.powf(rho_exponent(alpha, beta));
        let r = cp.r0;
        prop_assert!(r >= r0);
        prop_assert!(cp.rho0 >= 1.0 && cp.rho0.log2().fract() == 0.0);
        prop_assert!(2.0 * c * w * (1.0 + 4.0 * r * r).sqrt() <= 0.25);
        prop_assert!(c / r * w <= 0.25);
        prop_assert!(c * w * (1.0 + 8.0 * r * r).sqrt() < 1.0);
        prop_assert!((cp.rho0 * cp.t0).exp() <= 1.4 * (1.0 + 1e-12));
        // a larger constant never buys a smaller weight
        prop_assert!(select_rho_t(r0, 2.0 * c, alpha, beta).rho0 >= cp.rho0);
    }

    #[test]
    fn parameter_gate_is_the_inequality(alpha in -1.0f64..2.0, beta in -2.0f64..1.0) {
        let direct = alpha > 0.0 && alpha < 1.0 && f64::max(-alpha, alpha - 1.0) < beta && beta < 0.0;
        prop_assert_eq!(check_parameters(alpha, beta).passed, direct);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), beta in -0.49f64..-0.01) {
        let grid = line(6);
        let a = generate_rough(beta, grid, seed, 2, 1.0).unwrap();
        let b = generate_rough(beta, grid, seed, 2, 1.0).unwrap();
        prop_assert_eq!(&a.slices, &b.slices);
        let other = generate_rough(beta, grid, seed.wrapping_add(1), 2, 1.0).unwrap();
        prop_assert_ne!(&a.slices, &other.slices);
    }

    #[test]
    fn field_files_round_trip(exp in 3u32..8, reg in -0.45f64..1.0, seed in any::<u64>()) {
        let f = gaussian_field(line(exp), reg, seed, 0);
        prop_assert_eq!(field_from_json(&field_to_json(&f).unwrap()).unwrap(), f);
    }
}
