use blochpack_core::geometry::{hyperbolic_distance, DiskPoint, MobiusMap};
use blochpack_core::symbols::Symbol;
use blochpack_core::zeropack::{packing_ratio, phi, PackingPolynomial, PackingQuadrature};
use blochpack_core::Complex64;
use proptest::prelude::*;

fn disk_point() -> impl Strategy<Value = DiskPoint> {
    (0.0..0.95f64, -3.2..3.2f64).prop_map(|(r, t)| DiskPoint::from_polar(r, t).unwrap())
}

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b)), 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_maps_are_isometries(a in disk_point(), z in disk_point(), w in disk_point(), arg in -3.2..3.2f64) {
        let m = MobiusMap::new(a.value(), Complex64::from_polar(1.0, arg)).unwrap();
        let d0 = hyperbolic_distance(z, w);
        let d1 = hyperbolic_distance(m.apply_point(z), m.apply_point(w));
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }

    #[test]
    fn mobius_inverse_undoes_the_map(a in disk_point(), z in disk_point(), arg in -3.2..3.2f64) {
        let m = MobiusMap::new(a.value(), Complex64::from_polar(1.0, arg)).unwrap();
        let back = m.inverse().apply(m.apply(z.value()));
        prop_assert!((back - z.value()).norm() < 1e-12);
    }

    #[test]
    fn phi_is_nonnegative_and_vanishes_on_the_level_set(c in coeffs(6), z in disk_point()) {
        let f = PackingPolynomial::new(c);
        prop_assert!(phi(&f, z) >= 0.0);
        let v = f.eval(z.value()).norm();
        if v > 1e-3 {
            // rescaling f puts z on the level set (1 - |z|^2)|f| = 1
            let g = f.with_phase(Complex64::new(1.0 / (v * z.defect()), 0.0));
            prop_assert!(phi(&g, z) < 1e-20);
        }
    }

    #[test]
    fn packing_ratio_ignores_phase_and_rotation_of_zero_free_polynomials(
        c in coeffs(4), arg in -3.2..3.2f64, alpha in -3.2..3.2f64,
    ) {
        // dominant constant term: no zeros in the closed disk
        let mut c = c;
        let tail: f64 = c.iter().skip(1).map(|v| v.norm()).sum();
        c[0] = Complex64::new(tail + 0.5, 0.0);
        let f = PackingPolynomial::new(c);
        let q = PackingQuadrature::default();
        let base = packing_ratio(&f, 4.0, &q).unwrap().ratio;
        let ph = packing_ratio(&f.with_phase(Complex64::from_polar(1.0, arg)), 4.0, &q).unwrap().ratio;
        let rot = packing_ratio(&f.rotated(alpha), 4.0, &q).unwrap().ratio;
        prop_assert!((ph - base).abs() <= 1e-12);
        prop_assert!((rot - base).abs() <= 1e-9);
    }

    #[test]
    fn gauge_fixing_keeps_the_modulus(c in coeffs(6), z in disk_point()) {
        let f = PackingPolynomial::new(c);
        let g = f.gauge_fixed();
        prop_assert!((f.eval(z.value()).norm() - g.eval(z.value()).norm()).abs() < 1e-12);
        if let Some(lead) = g.coeffs.iter().rev().find(|c| c.norm() > 0.0) {
            prop_assert!(lead.im.abs() < 1e-12 && lead.re > 0.0);
        }
    }

    #[test]
    fn catalog_symbols_respect_their_sup_bound(z in disk_point()) {
        for (name, mu) in Symbol::catalog() {
            prop_assert!(mu.eval(z.value()).norm() <= mu.sup_bound() + 1e-12, "{}", name);
        }
    }
}
