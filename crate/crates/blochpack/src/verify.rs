//! The invariant suite behind `blochpack verify`.

use std::f64::consts::PI;

use anyhow::Result;
use blochpack_core::bloch::{bloch_seminorm, hyperbolic_uniform_points, BlochGridSpec, BOUND_TOL, NG_BOUND};
use blochpack_core::geometry::{shrink_box, AnnulusFamily, HalfPlaneRect, HypBox};
use blochpack_core::holo::{Holomorphic, Polynomial};
use blochpack_core::quadrature::weighted_level;
use blochpack_core::spectra::{integral_means, iteration_bound_check, littlewood_paley_check, LevelRule, IterationOutcome};
use blochpack_core::symbols::{perala_series_bound, ProjectedFunc, Symbol};
use blochpack_core::zeropack::{optimal_constant, optimize_packing, packing_ratio, PackingConfig, PackingPolynomial};
use blochpack_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;

/// `8/pi`, the bound on `(1-|z|^2)|(P mu)'(z)|` for `||mu|| <= 1`.
pub const DERIV_BOUND: f64 = 8.0 / PI;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (an error, a supremum, ...).
    pub value: f64,
    /// The threshold it is compared against.
    pub bound: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        name: name.into(),
        passed: value <= bound,
        value,
        bound,
        detail: String::new(),
    }
}

fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Check {
    Check {
        name: name.into(),
        passed: false,
        value: f64::NAN,
        bound: f64::NAN,
        detail: err.to_string(),
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| failed(name, format!("{e:#}")))
}

/// The verify symbol list: the configured symbols, plus the injected
/// `1.5 x kernel-phase(0.9)` on request.
pub fn verify_symbols(cfg: &RunConfig) -> Result<Vec<(String, Symbol)>> {
    let mut out = cfg.resolve_symbols()?;
    if cfg.verify.inject_bad_symbol {
        out.push((
            "injected-1.5-kernel-phase".into(),
            Symbol::product(vec![Symbol::constant(1.5), Symbol::KernelPhase { z0: Complex64::new(0.9, 0.0) }]),
        ));
    }
    Ok(out)
}

/// Symbols without a polar-cell decomposition are projected by 2-D
/// quadrature (~0.1 s per point), so they get a coarse grid that stops at
/// `|z| = 0.9`; its last ring contains the point `0.9`.
pub fn derivative_grid(mu: &Symbol, spec: &BlochGridSpec) -> BlochGridSpec {
    if mu.cells().is_some() {
        *spec
    } else {
        BlochGridSpec {
            step: spec.step.max(0.5),
            max_radius: spec.max_radius.min(0.9),
            max_ring_points: spec.max_ring_points.min(32),
            ..*spec
        }
    }
}

fn geometry_checks(cfg: &RunConfig) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(run("geometry.annulus_width", || {
        let fam = AnnulusFamily::new(cfg.grid.l, cfg.grid.k_max)?;
        let err = (1..=fam.k_max)
            .map(|k| (fam.hyperbolic_width(k) - fam.l).abs())
            .fold(0.0, f64::max);
        Ok(at_most("geometry.annulus_width", err, 1e-10))
    }));
    out.push(run("geometry.annulus_weighted_area", || {
        let fam = AnnulusFamily::new(cfg.grid.l, cfg.grid.k_max)?;
        let mut err: f64 = 0.0;
        for k in 1..=fam.k_max {
            let (lo, hi) = (fam.radius(k - 1), fam.radius(k));
            if hi.clamped {
                continue;
            }
            err = err.max((fam.weighted_area(k) - (weighted_level(hi.r) - weighted_level(lo.r))).abs());
        }
        Ok(at_most("geometry.annulus_weighted_area", err, 1e-10))
    }));
    out.push(run("geometry.half_plane_box_area", || {
        let (l, eps) = (cfg.grid.l, cfg.grid.eps);
        let q = HalfPlaneRect::prototype(l);
        let mut err = (q.weighted_area() - l * l / PI).abs();
        if let HypBox::HalfPlane(s) = shrink_box(&HypBox::HalfPlane(q), eps)? {
            err = err.max((s.weighted_area() - (1.0 - 2.0 * eps).powi(2) * l * l / PI).abs());
        }
        Ok(at_most("geometry.half_plane_box_area", err, 1e-9))
    }));
    out
}

fn projection_checks(cfg: &RunConfig, pts: &[Complex64]) -> Vec<Check> {
    let spec = &cfg.quadrature;
    let inner: Vec<Complex64> = pts.iter().copied().filter(|z| z.norm() <= 0.9).collect();
    let mut out = Vec::new();
    out.push(run("projection.constant_one", || {
        let g = ProjectedFunc::new(Symbol::constant(1.0), spec)?;
        let err = pts
            .iter()
            .map(|&z| Ok((g.value(z)? - 1.0).norm()))
            .collect::<blochpack_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(at_most("projection.constant_one", err, 1e-8))
    }));
    out.push(run("projection.harmonics", || {
        let mut err: f64 = 0.0;
        for m in 0..=6 {
            let g = ProjectedFunc::new(Symbol::AngularHarmonic { m }, spec)?;
            let c = 2.0 * (m as f64 + 1.0) / (m as f64 + 2.0);
            for &z in &inner {
                err = err.max((g.value(z)? - c * z.powi(m)).norm());
            }
        }
        Ok(at_most("projection.harmonics", err, 1e-7))
    }));
    out.push(run("projection.disk_indicator", || {
        let s = 0.5;
        let g = ProjectedFunc::new(Symbol::DiskIndicator { s }, spec)?;
        let mut err: f64 = 0.0;
        for &z in pts {
            err = err.max((g.value(z)? - s * s).norm());
        }
        Ok(at_most("projection.disk_indicator", err, 1e-8))
    }));
    out.push(run("perala.derivative_at_origin", || {
        let g = ProjectedFunc::new(Symbol::AngularHarmonic { m: 1 }, spec)?;
        let d = g.deriv(Complex64::new(0.0, 0.0))?;
        Ok(at_most("perala.derivative_at_origin", (d - 4.0 / 3.0).norm(), 1e-8))
    }));
    out.push(run("perala.series_below_closed_bound", || {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..=99 {
            let b = perala_series_bound(0.01 * i as f64)?;
            worst = worst.max(b.series_value + b.tail_bound - b.closed_bound);
        }
        Ok(at_most("perala.series_below_closed_bound", worst, 0.0))
    }));
    out
}

fn bound_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let symbols = verify_symbols(cfg)?;
    let per_symbol: Vec<Vec<Check>> = symbols
        .par_iter()
        .map(|(name, mu)| {
            let d_name = format!("bloch.derivative_bound[{name}]");
            let n_name = format!("bloch.ng_bound[{name}]");
            let rep = ProjectedFunc::new(mu.clone(), &cfg.quadrature)
                .and_then(|g| bloch_seminorm(&g, &derivative_grid(mu, &cfg.bloch)));
            match rep {
                Ok(rep) => {
                    let mut d = at_most(d_name, rep.seminorm_estimate, DERIV_BOUND + BOUND_TOL);
                    let mut n = at_most(n_name, rep.grid_max * rep.grid_max, NG_BOUND + BOUND_TOL);
                    if rep.radius_shrunk {
                        d.detail = format!("search radius reduced to {}", rep.effective_radius);
                        n.detail = d.detail.clone();
                    }
                    vec![d, n]
                }
                Err(e) => vec![failed(d_name, &e), failed(n_name, &e)],
            }
        })
        .collect();
    Ok(per_symbol.into_iter().flatten().collect())
}

fn spectra_checks(cfg: &RunConfig) -> Vec<Check> {
    let spec = &cfg.quadrature;
    let mut out = Vec::new();
    out.push(run("spectra.littlewood_paley_identity", || {
        let lp = littlewood_paley_check(&Polynomial::monomial(1), spec)?;
        let err = [lp.lhs, lp.mid, lp.rhs].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        Ok(at_most("spectra.littlewood_paley_identity", err, 1e-10))
    }));
    out.push(run("spectra.means_at_zero", || {
        let g = ProjectedFunc::new(Symbol::AngularHarmonic { m: 1 }, spec)?;
        let v = integral_means(&g, 0.99, Complex64::new(0.0, 0.0), spec)?.value;
        Ok(at_most("spectra.means_at_zero", (v - 1.0).abs(), 0.0))
    }));
    out.push(run("spectra.extremal_iteration_curve", || {
        let eta = NG_BOUND;
        let t = Complex64::new(0.1, 0.0);
        let c = 0.25 * eta * t.norm_sqr();
        let rule = LevelRule::up_to_radius(0.999, 1.0)?;
        let check = iteration_bound_check(|lvl| Ok(4.0 * (c * lvl.lambda).exp()), &rule, eta, t)?;
        let mut chk = at_most(
            "spectra.extremal_iteration_curve",
            check.margin.abs().max(check.premise_margin.abs()),
            1e-9,
        );
        chk.passed &= check.outcome == IterationOutcome::Holds;
        Ok(chk)
    }));
    out
}

fn zeropack_checks(cfg: &RunConfig) -> Vec<Check> {
    let q = cfg.packing.quadrature;
    let mut out = Vec::new();
    out.push(run("zeropack.zero_ratio", || {
        let r = packing_ratio(&PackingPolynomial::zero(3), 8.0, &q)?;
        Ok(at_most("zeropack.zero_ratio", (r.ratio - 1.0).abs(), 1e-12))
    }));
    out.push(run("zeropack.weighted_area", || {
        let r = packing_ratio(&PackingPolynomial::zero(0), 12.0, &q)?;
        Ok(at_most("zeropack.weighted_area", (r.denominator_integral - r.denominator).abs(), 1e-10))
    }));
    out.push(run("zeropack.degree_zero_closed_form", || {
        let pcfg = PackingConfig {
            seed: cfg.seed,
            ..cfg.packing
        };
        let o = optimize_packing(0, 4.0, None, &pcfg)?;
        let (c, ratio) = optimal_constant(4.0);
        let err = (o.best.ratio - ratio).abs().max((o.best.f.coeffs[0].re - c).abs() * 0.1);
        Ok(at_most("zeropack.degree_zero_closed_form", err, 1e-4))
    }));
    out.push(run("zeropack.phase_invariance", || {
        let f = PackingPolynomial::new(vec![Complex64::new(1.5, 0.2), Complex64::new(-0.4, 0.3), Complex64::new(0.2, -0.1)]);
        let a = packing_ratio(&f, 8.0, &q)?.ratio;
        let b = packing_ratio(&f.with_phase(Complex64::from_polar(1.0, 0.7)), 8.0, &q)?.ratio;
        Ok(at_most("zeropack.phase_invariance", (a - b).abs(), 1e-12))
    }));
    out
}

fn config_checks(cfg: &RunConfig) -> Vec<Check> {
    vec![run("config.round_trip", || {
        let back = RunConfig::from_json(&cfg.to_json(), std::path::Path::new("<memory>"))?;
        Ok(Check {
            name: "config.round_trip".into(),
            passed: back == *cfg,
            value: 0.0,
            bound: 0.0,
            detail: String::new(),
        })
    })]
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let pts = hyperbolic_uniform_points(cfg.verify.points, 0.999)?;
    let mut checks = geometry_checks(cfg);
    checks.extend(projection_checks(cfg, &pts));
    checks.extend(bound_checks(cfg)?);
    checks.extend(spectra_checks(cfg));
    checks.extend(zeropack_checks(cfg));
    checks.extend(config_checks(cfg));
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { passed, checks })
}

