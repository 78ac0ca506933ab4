use proptest::prelude::*;

use sqg_core::dynamics::{nonlinear_pairing, step, ModelParams};
use sqg_core::experiments::hausdorff_semidistance;
use sqg_core::operators::{apply_fractional_laplacian, riesz_perp_velocity};
use sqg_core::persistence::{decode_snapshot, encode_snapshot, parse_config, read_table, write_table};
use sqg_core::presets::random_band;
use sqg_core::{Grid, SpectralField};

fn field(n: usize, kmax: f64, norm: f64, seed: u64) -> SpectralField {
    random_band(&Grid::new(n).unwrap(), 1.0, kmax, norm, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshot_round_trip_is_bit_exact(seed in 0u64..10_000, t in -1e6f64..1e6, gamma in 0.01f64..2.0, eps in 0.0f64..1.0) {
        let values = field(32, 10.0, 3.0, seed).to_physical();
        let bytes = encode_snapshot(&values, t, gamma, eps);
        let snap = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(snap.t.to_bits(), t.to_bits());
        prop_assert_eq!(snap.gamma.to_bits(), gamma.to_bits());
        prop_assert_eq!(snap.epsilon.to_bits(), eps.to_bits());
        for (a, b) in values.values().iter().zip(snap.values.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_exact(row in prop::collection::vec(prop::num::f64::ANY, 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let cols: Vec<String> = (0..row.len()).map(|i| format!("c{i}")).collect();
        write_table(&path, &cols, std::slice::from_ref(&row)).unwrap();
        let (back_cols, rows) = read_table(&path).unwrap();
        prop_assert_eq!(back_cols, cols);
        for (a, b) in row.iter().zip(&rows[0]) {
            if a.is_nan() {
                prop_assert!(b.is_nan());
            } else {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn config_canonical_form_round_trips(
        log_n in 3u32..8,
        gamma in 0.05f64..2.0,
        eps in 0.0f64..0.5,
        steps in 1u32..200,
        seed in 0u64..1000,
        adaptive in any::<bool>(),
    ) {
        let n = 1usize << log_n;
        let text = format!(
            "[grid]\nn = {n}\n[model]\ngamma = {gamma:?}\nepsilon = {eps:?}\n[time]\ndt = 0.01\nt_end = {}\nadaptive = {adaptive}\n\
             [ic]\nkind = \"random_band\"\nk_min = 1.0\nk_max = 2.5\nl2_norm = 1.0\nseed = {seed}\n",
            steps as f64 * 0.01
        );
        let parsed = parse_config(&text);
        prop_assume!(parsed.is_ok());
        let config = parsed.unwrap();
        let again = parse_config(&config.to_canonical()).unwrap();
        prop_assert_eq!(again, config);
    }

    #[test]
    fn nonlinear_pairing_vanishes(seed in 0u64..10_000, norm in 0.1f64..50.0) {
        let theta = field(32, 10.0, norm, seed);
        let l2 = theta.l2_norm().powi(2);
        prop_assert!(nonlinear_pairing(&theta).abs() <= 1e-11 * l2);
    }

    #[test]
    fn riesz_is_an_isometry_and_divergence_free(seed in 0u64..10_000) {
        let theta = field(32, 10.0, 2.0, seed);
        let u = riesz_perp_velocity(&theta);
        prop_assert!((u.l2_norm() - theta.l2_norm()).abs() <= 1e-12 * theta.l2_norm());
        prop_assert!(u.max_divergence() <= 1e-12 * theta.max_abs_coeff() * 16.0);
    }

    #[test]
    fn fractional_powers_compose(seed in 0u64..10_000, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let theta = field(32, 10.0, 1.0, seed);
        let lhs = apply_fractional_laplacian(&apply_fractional_laplacian(&theta, b).unwrap(), a).unwrap();
        let rhs = apply_fractional_laplacian(&theta, a + b).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * rhs.l2_norm());
    }

    #[test]
    fn unforced_step_never_grows_l2(seed in 0u64..10_000, gamma in 0.2f64..2.0, eps in 0.0f64..0.1) {
        let theta = field(32, 8.0, 1.0, seed);
        let params = ModelParams::unforced(theta.grid(), gamma, eps).unwrap();
        let next = step(&theta, &params, 1e-3).unwrap();
        prop_assert!(next.l2_norm() <= theta.l2_norm() * (1.0 + 1e-9));
    }

    #[test]
    fn semidistance_to_a_superset_is_zero(seeds in prop::collection::vec(0u64..1000, 1..4), extra in 1000u64..2000) {
        let a: Vec<SpectralField> = seeds.iter().map(|&s| field(16, 4.0, 1.0, s)).collect();
        let mut b = a.clone();
        b.push(field(16, 4.0, 1.0, extra));
        prop_assert_eq!(hausdorff_semidistance(&a, &b).unwrap(), 0.0);
        prop_assert!(hausdorff_semidistance(&b, &a).unwrap() >= 0.0);
    }
}
