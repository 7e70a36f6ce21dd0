use blochpack_core::geometry::DiskPoint;
use blochpack_core::holo::Holomorphic;
use blochpack_core::quadrature::QuadratureSpec;
use blochpack_core::symbols::{
    bergman_project, bergman_project_deriv, conjugated_deriv, perala_series_bound, ProjectedFunc,
    Symbol,
};
use blochpack_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_point(rng: &mut ChaCha8Rng, r_max: f64) -> Complex64 {
    let r = r_max * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
}

#[test]
fn harmonic_closed_form_inside_series_disk() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in 0..=6 {
        let g = ProjectedFunc::new(Symbol::AngularHarmonic { m }, &spec()).unwrap();
        for _ in 0..100 {
            let z = random_point(&mut rng, 0.9);
            let want = z.powi(m) * (2.0 * (m + 1) as f64 / (m + 2) as f64);
            let got = g.value(z).unwrap();
            assert!((got - want).norm() < 1e-7, "m={m} z={z}: {got} vs {want}");
        }
    }
}

#[test]
fn negative_harmonics_project_to_zero() {
    // conj(w)/|w| is orthogonal to every holomorphic monomial
    let g = ProjectedFunc::new(Symbol::AngularHarmonic { m: -1 }, &spec()).unwrap();
    for z in [c(0.3, 0.1), c(-0.95, 0.2)] {
        assert!(g.value(z).unwrap().norm() < 1e-12);
    }
}

#[test]
fn series_and_angular_routes_agree() {
    for (name, mu) in Symbol::catalog() {
        let g = ProjectedFunc::new(mu, &spec()).unwrap();
        for z in [c(0.85, 0.0), c(-0.3, 0.8), c(0.1, -0.6), c(0.0, 0.0)] {
            let (v1, d1) = g.value_and_deriv(z).unwrap();
            let (v2, d2) = g.by_cells(z).unwrap();
            assert!((v1 - v2).norm() < 1e-9, "{name} value at {z}: {v1} vs {v2}");
            assert!((d1 - d2).norm() < 1e-8, "{name} deriv at {z}: {d1} vs {d2}");
        }
    }
}

#[test]
fn angular_route_matches_area_quadrature() {
    let tight = QuadratureSpec::with_tol(1e-9);
    for (name, mu) in Symbol::catalog() {
        let g = ProjectedFunc::new(mu, &tight).unwrap();
        for z in [c(0.93, 0.1), c(-0.2, -0.95)] {
            let (v1, d1) = g.by_cells(z).unwrap();
            let (v2, d2) = g.by_area_quadrature(z).unwrap();
            assert!((v1 - v2).norm() < 1e-6, "{name} value at {z}: {v1} vs {v2}");
            assert!((d1 - d2).norm() < 1e-6 * d1.norm().max(1.0), "{name} deriv at {z}: {d1} vs {d2}");
        }
    }
}

#[test]
fn conjugated_route_agrees_with_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tight = QuadratureSpec::with_tol(1e-9);
    for (name, mu) in Symbol::catalog() {
        {
            let z = DiskPoint::new(random_point(&mut rng, 0.95)).unwrap();
            let direct = bergman_project_deriv(&mu, z, &tight).unwrap();
            let conj = conjugated_deriv(&mu, z, &tight).unwrap();
            let scale = direct.norm().max(1e-2);
            assert!((direct - conj).norm() <= 1e-6 * scale, "{name} at {:?}: {direct} vs {conj}", z.value());
        }
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let h = 1e-5;
    for (name, mu) in Symbol::catalog() {
        let g = ProjectedFunc::new(mu, &spec()).unwrap();
        for z in [c(0.5, 0.2), c(-0.7, -0.4), c(0.92, 0.05)] {
            let fd = (g.value(z + h).unwrap() - g.value(z - h).unwrap()) / (2.0 * h);
            let d = g.deriv(z).unwrap();
            assert!((fd - d).norm() < 1e-5 * d.norm().max(1.0), "{name} at {z}: {fd} vs {d}");
        }
    }
}

#[test]
fn projection_is_holomorphic() {
    // discrete Cauchy-Riemann residual: g(z+h) - g(z-h) = -i (g(z+ih) - g(z-ih))
    for (name, mu) in Symbol::catalog() {
        let g = ProjectedFunc::new(mu, &spec()).unwrap();
        for z in [c(0.4, -0.3), c(0.0, 0.96)] {
            let h = 1e-3 * (1.0 - z.norm());
            let dx = (g.value(z + h).unwrap() - g.value(z - h).unwrap()) / (2.0 * h);
            let dy = (g.value(z + c(0.0, h)).unwrap() - g.value(z - c(0.0, h)).unwrap()) / (2.0 * h);
            let residual = (dx + c(0.0, 1.0) * dy).norm() / dx.norm().max(1.0);
            assert!(residual < 1e-6, "{name} at {z}: residual {residual}");
        }
    }
}

#[test]
fn projection_is_linear() {
    let a = c(0.3, -1.1);
    let b = c(-0.7, 0.2);
    let m1 = Symbol::AngularHarmonic { m: 2 };
    let m2 = Symbol::BoxIndicator {
        r_lo: 0.2,
        r_hi: 0.97,
        theta_lo: 0.5,
        theta_hi: 2.5,
    };
    for z in [c(0.2, 0.3), c(0.6, 0.75)] {
        let zp = DiskPoint::new(z).unwrap();
        let p1 = bergman_project(&m1, zp, &spec()).unwrap();
        let p2 = bergman_project(&m2, zp, &spec()).unwrap();
        let sum = Symbol::product(vec![Symbol::Constant { c: a }, m1.clone()]);
        let sum2 = Symbol::product(vec![Symbol::Constant { c: b }, m2.clone()]);
        let lhs = bergman_project(&sum, zp, &spec()).unwrap() + bergman_project(&sum2, zp, &spec()).unwrap();
        let rhs = a * p1 + b * p2;
        assert!((lhs - rhs).norm() < 1e-10);
        // the field a m1 + b m2 through the generic route
        let field = |w: Complex64| a * m1.eval(w) + b * m2.eval(w);
        let (radii, angles) = (vec![0.2, 0.97], vec![0.5, 2.5]);
        let known = blochpack_core::quadrature::Breaks { radii: &radii, angles: &angles, angles_at: None };
        let (v, _) = blochpack_core::symbols::project_field_split(field, z, &known, &QuadratureSpec::with_tol(1e-9)).unwrap();
        assert!((v - rhs).norm() < 1e-7, "{v} vs {rhs}");
    }
}

#[test]
fn kernel_phase_attains_the_series_value() {
    for r0 in [0.0, 0.5, 0.9] {
        let z0 = c(r0 * 0.6, r0 * 0.8);
        let mu = Symbol::KernelPhase { z0 };
        let d = bergman_project_deriv(&mu, DiskPoint::new(z0).unwrap(), &QuadratureSpec::with_tol(1e-10)).unwrap();
        let b = perala_series_bound(r0 * r0).unwrap();
        assert!((d.re - b.series_value).abs() < 1e-7 * b.series_value, "{d} vs {}", b.series_value);
        assert!(d.im.abs() < 1e-7 * b.series_value);
    }
}

#[test]
fn derivative_respects_perala_bound_near_the_rim() {
    for (name, mu) in Symbol::catalog() {
        let g = ProjectedFunc::new(mu, &spec()).unwrap();
        for r in [0.99, 0.999, 0.99999] {
            for th in [0.0, 0.7, 2.0, 4.0] {
                let z = Complex64::from_polar(r, th);
                let v = (1.0 - r * r) * g.deriv(z).unwrap().norm();
                assert!(v <= 8.0 / PI + 1e-6, "{name} at {z}: {v}");
            }
        }
    }
}
