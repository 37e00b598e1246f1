use proptest::prelude::*;
use svea::dispersion::{m_exact, m_pade, m_taylor2, CarrierPoint, KgParams, PadeCoefficients};
use svea::spectral::{Field, PeriodicGrid, Space};
use svea::Complex64;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Random trigonometric polynomial with modes in `[-band, band]`.
fn band_limited(grid: &PeriodicGrid, coeffs: &[Complex64], band: i64) -> Field {
    let mut spec = Field::zeros(grid, Space::Spectral);
    for (c, m) in coeffs.iter().zip(-band..=band) {
        spec.values_mut()[grid.slot(m)] = *c;
    }
    spec.to_physical()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_holds(v in complex_vec(128)) {
        let grid = PeriodicGrid::standard(128).unwrap();
        let f = Field::new(&grid, v, Space::Physical).unwrap();
        let l2 = f.l2_norm().powi(2);
        let coeffs: f64 = f.to_spectral().values().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((l2 - grid.length() * coeffs).abs() <= 1e-12 * l2.max(1e-300));
    }

    #[test]
    fn transform_round_trip(v in complex_vec(64)) {
        let grid = PeriodicGrid::standard(64).unwrap();
        let f = Field::new(&grid, v, Space::Physical).unwrap();
        let back = f.to_spectral().to_physical();
        let scale = f.linf_norm().max(1e-300);
        prop_assert!(f.sub(&back).unwrap().linf_norm() <= 1e-12 * scale);
    }

    #[test]
    fn unitary_multipliers_are_isometries(v in complex_vec(256), t in 0.0f64..50.0, eps in 0.001f64..0.1) {
        let grid = PeriodicGrid::standard(256).unwrap();
        let f = Field::new(&grid, v, Space::Physical).unwrap();
        let carrier = CarrierPoint::kg(KgParams::toy());
        let pade = PadeCoefficients::kg(KgParams::toy()).unwrap();
        let before = f.l2_norm();
        for sym in [
            Box::new(|xi: f64| m_exact(&carrier, xi, eps)) as Box<dyn Fn(f64) -> f64>,
            Box::new(|xi: f64| m_taylor2(&carrier, xi, eps)),
            Box::new(|xi: f64| m_pade(&carrier, &pade, xi, eps)),
        ] {
            let g = f.apply_symbol(|xi| Complex64::from_polar(1.0, -t * sym(xi))).unwrap();
            prop_assert!((g.l2_norm() - before).abs() <= 1e-12 * before);
        }
    }

    #[test]
    fn wiener_norm_is_submultiplicative(a in complex_vec(9), b in complex_vec(9)) {
        // bands of 4 keep the product free of aliasing on 64 nodes
        let grid = PeriodicGrid::standard(64).unwrap();
        let f = band_limited(&grid, &a, 4);
        let g = band_limited(&grid, &b, 4);
        let fg = f.mul(&g).unwrap();
        prop_assert!(fg.wiener_norm() <= f.wiener_norm() * g.wiener_norm() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn pade_constraints_hold(kbar in 0.1f64..10.0, v in 0.1f64..10.0, eps in 1e-3f64..1.0, xi in -1e3f64..1e3) {
        let p = PadeCoefficients::kg(KgParams::new(v, kbar).unwrap()).unwrap();
        prop_assert!(p.big_b > 0.0);
        prop_assert!(p.discriminant_margin() > 0.0);
        prop_assert!(p.denominator(xi, eps) > 0.0);
    }

    #[test]
    fn symbols_agree_near_the_carrier(kbar in 0.1f64..10.0, v in 0.1f64..10.0, xi in -1.0f64..1.0) {
        // at εξ = 1e-4 the three symbols differ by at most O((εξ)²)
        let params = KgParams::new(v, kbar).unwrap();
        let carrier = CarrierPoint::kg(params);
        let pade = PadeCoefficients::kg(params).unwrap();
        let eps = 1e-4;
        let exact = m_exact(&carrier, xi, eps);
        let scale = 1.0 + exact.abs();
        prop_assert!((m_taylor2(&carrier, xi, eps) - exact).abs() <= 1e-6 * scale);
        prop_assert!((m_pade(&carrier, &pade, xi, eps) - exact).abs() <= 1e-6 * scale);
    }
}
