use blochpack_core::quadrature::{weighted_level, QuadratureSpec};
use blochpack_core::zeropack::{
    constant_ratio, optimal_constant, optimize_packing, packing_column, packing_ratio, packing_ratio_adaptive,
    packing_sweep, PackingConfig, PackingPolynomial, PackingQuadrature,
};
use blochpack_core::Complex64;
use std::time::Instant;

fn sample() -> PackingPolynomial {
    PackingPolynomial::new(vec![
        Complex64::new(1.5, 0.0),
        Complex64::new(0.4, -0.2),
        Complex64::new(-0.3, 0.7),
        Complex64::new(0.1, 0.05),
    ])
}

fn level_of(r: f64) -> f64 {
    -(-r * r).ln_1p()
}

#[test]
fn weighted_area_equals_log_form() {
    let q = PackingQuadrature::default();
    for r in [0.9, 0.99, 0.999, (1.0 - (-12.0f64).exp()).sqrt()] {
        let lambda = level_of(r);
        let p = packing_ratio(&PackingPolynomial::zero(2), lambda, &q).unwrap();
        assert!((p.denominator_integral - p.denominator).abs() < 1e-10, "{p:?}");
        assert!((weighted_level(r) - lambda).abs() < 1e-10 * lambda);
    }
}

#[test]
fn product_rule_agrees_with_adaptive_quadrature() {
    let f = sample();
    let r = 0.99;
    let fixed = packing_ratio(&f, level_of(r), &PackingQuadrature::default()).unwrap().ratio;
    let adaptive = packing_ratio_adaptive(&f, r, &QuadratureSpec::with_tol(1e-10)).unwrap();
    assert!((fixed - adaptive).abs() < 1e-9, "{fixed} vs {adaptive}");
}

#[test]
fn rotation_and_phase_invariance() {
    let q = PackingQuadrature::default();
    let f = sample();
    let base = packing_ratio(&f, 8.0, &q).unwrap().ratio;
    for alpha in [0.1, 1.0, 2.5] {
        let rot = packing_ratio(&f.rotated(alpha), 8.0, &q).unwrap().ratio;
        assert!((rot - base).abs() < 1e-9, "alpha {alpha}: {rot} vs {base}");
    }
    for arg in [0.3, -2.0] {
        let ph = packing_ratio(&f.with_phase(Complex64::from_polar(1.0, arg)), 8.0, &q).unwrap().ratio;
        assert!((ph - base).abs() < 1e-12);
    }
}

#[test]
fn ratio_is_continuous_in_coefficients() {
    let q = PackingQuadrature::default();
    let f = sample();
    let base = packing_ratio(&f, 12.0, &q).unwrap().ratio;
    let mut g = f.clone();
    g.coeffs[0] += 1e-6;
    let moved = packing_ratio(&g, 12.0, &q).unwrap().ratio;
    assert!((moved - base).abs() <= 1e-4);
}

#[test]
fn optimized_constants_follow_closed_form_across_levels() {
    let cfg = PackingConfig::default();
    for lambda in [4.0, 8.0, 16.0] {
        let out = optimize_packing(0, lambda, None, &cfg).unwrap();
        let (_, ratio) = optimal_constant(lambda);
        assert!((out.best.ratio - ratio).abs() < 1e-8, "lambda {lambda}");
        // 1 - 2 r^4 / ((1 - (1 - r^2)^2) lambda)
        let r2 = 1.0 - (-lambda).exp();
        let alt = 1.0 - 2.0 * r2 * r2 / ((1.0 - (1.0 - r2).powi(2)) * lambda);
        assert!((ratio - alt).abs() < 1e-12);
        assert!(constant_ratio(0.0, lambda) == 1.0);
    }
}

#[test]
fn column_is_nonincreasing_in_degree() {
    let start = Instant::now();
    let degrees: Vec<usize> = (0..=4).collect();
    let cfg = PackingConfig {
        restarts: 2,
        ..Default::default()
    };
    let col = packing_column(&degrees, 12.0, &cfg).unwrap();
    let ratios: Vec<f64> = col.iter().map(|o| o.best.ratio).collect();
    for w in ratios.windows(2) {
        assert!(w[1] <= w[0], "{ratios:?}");
    }
    assert!(ratios[4] < ratios[0], "{ratios:?}");
    assert!(ratios.iter().all(|r| (0.0..=1.0).contains(r)));
    eprintln!("ratios {ratios:?} in {:?}", start.elapsed());
}

#[test]
fn sweep_reports_running_minimum() {
    let cfg = PackingConfig {
        restarts: 2,
        ..Default::default()
    };
    let sweep = packing_sweep(&[0, 1], &[4.0, 8.0], &cfg).unwrap();
    assert_eq!(sweep.columns.len(), 2);
    for (col, (lambda, min)) in sweep.columns.iter().zip(&sweep.running_min) {
        assert_eq!(col[0].best.lambda, *lambda);
        assert!(*min <= col[0].best.ratio);
    }
    assert!(sweep.trend_slope.is_some());
    assert!(packing_sweep(&[0], &[8.0, 4.0], &cfg).is_err());
}

#[test]
fn vanishing_at_origin_is_integrated_accurately() {
    let f = PackingPolynomial::new(vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.5), Complex64::new(0.3, 0.0)]);
    let r = 0.999;
    let fixed = packing_ratio(&f, level_of(r), &PackingQuadrature::default()).unwrap().ratio;
    let adaptive = packing_ratio_adaptive(&f, r, &QuadratureSpec::with_tol(1e-11)).unwrap();
    assert!((fixed - adaptive).abs() < 1e-9, "{fixed} vs {adaptive}");
}
