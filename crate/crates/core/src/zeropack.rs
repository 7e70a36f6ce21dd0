//! The hyperbolic zero-packing functional
//! `Phi_f(z) = ((1-|z|^2)|f(z)| - 1)^2` and the ratio
//! `int_{D(0,r)} Phi_f dA_-1 / log(1/(1-r^2))`, minimized over polynomials.
//!
//! Ratios are evaluated with a fixed product rule: composite 16-point Gauss in
//! `tau = log(1/(1-u^2))` (in `sigma = sqrt(tau)` on the first panel, where
//! circle means of `|f|` go like `sqrt(tau)` when `f(0) = 0`) times the trapezoid rule
//! with `N >= 4d + 16` angles, so that `|f|^2` is integrated exactly on each
//! circle and the objective is a smooth deterministic function of the
//! coefficients. Optimized ratios are finite-degree, finite-radius upper
//! bounds for the inner infimum; they are not estimates of its `r -> 1` limit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::DiskPoint;
use crate::optim::{nelder_mead, SimplexConfig};
use crate::quadrature::{gauss_legendre16, integrate_disk, radius_of_level, CompensatedSum, Measure, QuadratureSpec};

/// `f(z) = sum c_k z^k`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PackingPolynomial {
    pub coeffs: Vec<Complex64>,
}

impl PackingPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// The zero polynomial of formal degree `d`.
    pub fn zero(d: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); d + 1],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coeffs: vec![Complex64::new(c, 0.0)],
        }
    }

    /// Formal degree (number of coefficients minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `f(e^{i alpha} z)`.
    pub fn rotated(&self, alpha: f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * Complex64::from_polar(1.0, alpha * k as f64))
                .collect(),
        }
    }

    /// `omega f` for unimodular `omega`.
    pub fn with_phase(&self, omega: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * omega).collect(),
        }
    }

    /// Padded with zero coefficients up to degree `d`.
    pub fn padded(&self, d: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < d + 1 {
            coeffs.resize(d + 1, Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    /// The representative whose highest-degree nonzero coefficient is real
    /// and nonnegative (the ratio depends on `|f|` only).
    pub fn gauge_fixed(&self) -> Self {
        match self.coeffs.iter().rev().find(|c| c.norm() > 0.0) {
            Some(lead) => self.with_phase(lead.conj() / lead.norm()),
            None => self.clone(),
        }
    }

    /// Search parameters `[Re c0, Re c1, Im c1, ..., Re cd, Im cd]`;
    /// `Im c0` is dropped by rotating `c0` onto the nonnegative axis.
    fn to_params(&self) -> Vec<f64> {
        let f = match self.coeffs.first() {
            Some(c0) if c0.norm() > 0.0 => self.with_phase(c0.conj() / c0.norm()),
            _ => self.clone(),
        };
        let mut x = Vec::with_capacity(2 * f.coeffs.len());
        for (k, c) in f.coeffs.iter().enumerate() {
            x.push(c.re);
            if k > 0 {
                x.push(c.im);
            }
        }
        x
    }

    fn from_params(x: &[f64]) -> Self {
        let d = x.len() / 2;
        let mut coeffs = Vec::with_capacity(d + 1);
        coeffs.push(Complex64::new(x[0], 0.0));
        for k in 1..=d {
            coeffs.push(Complex64::new(x[2 * k - 1], x[2 * k]));
        }
        Self { coeffs }
    }
}

/// `((1-|z|^2)|f(z)| - 1)^2`.
pub fn phi(f: &PackingPolynomial, z: DiskPoint) -> f64 {
    let v = z.defect() * f.eval(z.value()).norm() - 1.0;
    v * v
}

/// Parameters of the fixed product rule.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PackingQuadrature {
    /// Width of the Gauss panels in `tau`.
    pub panel_width: f64,
    /// Angles per circle are `max(min_angles, 4 d + 16)`; the floor keeps
    /// the trapezoid error for `|f|` at rounding level unless zeros of `f`
    /// lie close to a sampled circle.
    pub min_angles: usize,
}

impl Default for PackingQuadrature {
    fn default() -> Self {
        Self {
            panel_width: 2.0,
            min_angles: 128,
        }
    }
}

/// The product rule on `D(0, r)`, `log(1/(1-r^2)) = lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingRule {
    pub lambda: f64,
    /// `(u, 1-u^2, weight in tau)`
    radial: Vec<(f64, f64, f64)>,
    angles: Vec<Complex64>,
}

impl PackingRule {
    pub fn new(lambda: f64, degree: usize, q: &PackingQuadrature) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(crate::error::invalid("lambda", "need 0 < lambda < inf"));
        }
        if !(q.panel_width > 0.0) {
            return Err(crate::error::invalid("panel_width", "must be positive"));
        }
        let n = (lambda / q.panel_width).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=n).map(|i| lambda * i as f64 / n as f64).collect();
        let mut radial = Vec::with_capacity(16 * n);
        // tau = sigma^2 on the first panel
        for (sigma, wt) in gauss_legendre16(0.0, edges[1].sqrt()) {
            let tau = sigma * sigma;
            radial.push((radius_of_level(tau), (-tau).exp(), 2.0 * sigma * wt));
        }
        for w in edges[1..].windows(2) {
            for (tau, wt) in gauss_legendre16(w[0], w[1]) {
                radial.push((radius_of_level(tau), (-tau).exp(), wt));
            }
        }
        let n_theta = q.min_angles.max(4 * degree + 16);
        let angles = (0..n_theta)
            .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / n_theta as f64))
            .collect();
        Ok(Self { lambda, radial, angles })
    }

    pub fn radius(&self) -> f64 {
        radius_of_level(self.lambda)
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    /// `int_{D(0,r)} Phi_f dA_-1` under the rule.
    pub fn numerator(&self, f: &PackingPolynomial) -> f64 {
        let inv_n = 1.0 / self.angles.len() as f64;
        let mut acc = CompensatedSum::default();
        for &(u, s, wt) in &self.radial {
            let mut ring = 0.0;
            for &e in &self.angles {
                let v = s * f.eval(e * u).norm() - 1.0;
                ring += v * v;
            }
            acc.add(wt * ring * inv_n);
        }
        acc.total()
    }

    /// `int_{D(0,r)} dA_-1` under the rule; equals `lambda` up to rounding.
    pub fn weighted_area(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &(_, _, wt) in &self.radial {
            acc.add(wt);
        }
        acc.total()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PackingRatio {
    pub r: f64,
    pub lambda: f64,
    pub f: PackingPolynomial,
    pub numerator: f64,
    /// `log(1/(1-r^2))`
    pub denominator: f64,
    /// `int_{D(0,r)} dA_-1` by the same rule as the numerator.
    pub denominator_integral: f64,
    pub ratio: f64,
}

/// The ratio at `log(1/(1-r^2)) = lambda`.
pub fn packing_ratio(f: &PackingPolynomial, lambda: f64, q: &PackingQuadrature) -> Result<PackingRatio> {
    let rule = PackingRule::new(lambda, f.degree(), q)?;
    Ok(ratio_with_rule(f, &rule))
}

fn ratio_with_rule(f: &PackingPolynomial, rule: &PackingRule) -> PackingRatio {
    let numerator = rule.numerator(f);
    PackingRatio {
        r: rule.radius(),
        lambda: rule.lambda,
        f: f.clone(),
        numerator,
        denominator: rule.lambda,
        denominator_integral: rule.weighted_area(),
        ratio: numerator / rule.lambda,
    }
}

/// The same ratio by adaptive quadrature, as an independent check of the
/// product rule.
pub fn packing_ratio_adaptive(f: &PackingPolynomial, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(crate::error::invalid("r", "need 0 < r < 1"));
    }
    let res = integrate_disk(
        |z: Complex64| {
            let v = (1.0 - z.norm()) * (1.0 + z.norm()) * f.eval(z).norm() - 1.0;
            v * v
        },
        r,
        Measure::WeightedArea,
        spec,
    )?;
    Ok(res.require()? / crate::quadrature::weighted_level(r))
}

/// Ratio of the constant `c` at level `lambda`:
/// `1 + [c^2 (1-a^2)/2 - 2 c r^2] / lambda`, `a = 1 - r^2 = e^{-lambda}`.
pub fn constant_ratio(c: f64, lambda: f64) -> f64 {
    let r2 = -(-lambda).exp_m1();
    let one_minus_a2 = -(-2.0 * lambda).exp_m1();
    1.0 + (0.5 * c * c * one_minus_a2 - 2.0 * c * r2) / lambda
}

/// The optimal constant `c* = 2 r^2/(1-a^2) = 2/(1+a)` and its ratio.
pub fn optimal_constant(lambda: f64) -> (f64, f64) {
    let a = (-lambda).exp();
    let c = 2.0 / (1.0 + a);
    (c, constant_ratio(c, lambda))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PackingConfig {
    /// Random starts in addition to `f = 0` and the warm start.
    pub restarts: usize,
    pub seed: u64,
    /// Half-width of the uniform distribution of random coefficients,
    /// relative to the optimal constant.
    pub start_scale: f64,
    pub simplex: SimplexConfig,
    pub quadrature: PackingQuadrature,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0x5eed,
            start_scale: 1.0,
            simplex: SimplexConfig::default(),
            quadrature: PackingQuadrature::default(),
        }
    }
}

/// One start of the multi-start search.
#[derive(Clone, Debug, PartialEq)]
pub struct StartOutcome {
    pub index: usize,
    pub start_value: f64,
    pub value: f64,
    pub params: Vec<f64>,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PackingOutcome {
    pub degree: usize,
    /// Gauge-fixed optimum with its ratio.
    pub best: PackingRatio,
    pub best_start: usize,
    /// No start improved on the best starting point.
    pub stalled: bool,
    pub evals: usize,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Start points in a fixed order: `f = 0`, the warm start (padded to
/// degree `d`) if given, then `cfg.restarts` seeded random polynomials.
pub fn packing_starts(d: usize, lambda: f64, warm: Option<&PackingPolynomial>, cfg: &PackingConfig) -> Vec<Vec<f64>> {
    let mut starts = vec![PackingPolynomial::zero(d).to_params()];
    if let Some(w) = warm {
        let mut x = w.padded(d).to_params();
        x.truncate(2 * d + 1);
        starts.push(x);
    }
    let scale = cfg.start_scale * optimal_constant(lambda).0;
    for i in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, d as u64, i as u64 ^ lambda.to_bits()));
        let mut x = Vec::with_capacity(2 * d + 1);
        x.push(rng.gen_range(0.0..2.0 * scale));
        for _ in 0..2 * d {
            x.push(rng.gen_range(-scale..scale));
        }
        starts.push(x);
    }
    starts
}

/// Runs the simplex search from one start.
pub fn refine_start(rule: &PackingRule, index: usize, x0: &[f64], cfg: &PackingConfig) -> Result<StartOutcome> {
    let objective = |x: &[f64]| rule.numerator(&PackingPolynomial::from_params(x)) / rule.lambda;
    let start_value = objective(x0);
    let step: Vec<f64> = x0.iter().map(|v| (0.1 * v.abs()).max(0.25)).collect();
    let res = nelder_mead(objective, x0, &step, &cfg.simplex)?;
    Ok(StartOutcome {
        index,
        start_value,
        value: res.value,
        params: res.x,
        evals: res.evals,
        converged: res.converged,
    })
}

/// Deterministic choice by `(value, index)`.
pub fn select_best(d: usize, rule: &PackingRule, outcomes: &[StartOutcome]) -> Result<PackingOutcome> {
    let best = outcomes
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
        .ok_or_else(|| crate::error::invalid("outcomes", "no starts were run"))?;
    let best_start_value = outcomes.iter().map(|o| o.start_value).fold(f64::INFINITY, f64::min);
    let f = PackingPolynomial::from_params(&best.params).gauge_fixed();
    let ratio = ratio_with_rule(&f, rule);
    if !(ratio.ratio <= 1.0 + 1e-12) || !(ratio.ratio >= 0.0) {
        return Err(Error::InvariantViolation(alloc::format!(
            "optimized ratio {} outside [0, 1]",
            ratio.ratio
        )));
    }
    Ok(PackingOutcome {
        degree: d,
        best: ratio,
        best_start: best.index,
        stalled: !(best.value < best_start_value - 1e-12 * (1.0 + best_start_value.abs())),
        evals: outcomes.iter().map(|o| o.evals).sum(),
    })
}

/// Multi-start minimization over polynomials of degree `d`, with the starts
/// run by `run` (serially here; the CLI runs them in parallel).
pub fn optimize_packing_with<R>(
    d: usize,
    lambda: f64,
    warm: Option<&PackingPolynomial>,
    cfg: &PackingConfig,
    run: R,
) -> Result<PackingOutcome>
where
    R: FnOnce(&PackingRule, &[Vec<f64>]) -> Result<Vec<StartOutcome>>,
{
    let rule = PackingRule::new(lambda, d, &cfg.quadrature)?;
    let starts = packing_starts(d, lambda, warm, cfg);
    let outcomes = run(&rule, &starts)?;
    select_best(d, &rule, &outcomes)
}

pub fn optimize_packing(
    d: usize,
    lambda: f64,
    warm: Option<&PackingPolynomial>,
    cfg: &PackingConfig,
) -> Result<PackingOutcome> {
    optimize_packing_with(d, lambda, warm, cfg, |rule, starts| {
        starts
            .iter()
            .enumerate()
            .map(|(i, x)| refine_start(rule, i, x, cfg))
            .collect()
    })
}

/// Optimized ratios for increasing degrees at one level, each degree
/// warm-started from the previous optimum.
pub fn packing_column(degrees: &[usize], lambda: f64, cfg: &PackingConfig) -> Result<Vec<PackingOutcome>> {
    packing_column_with(degrees, lambda, cfg, |d, warm, col_cfg| optimize_packing(d, lambda, warm, col_cfg))
}

/// The column's configuration: one angular order, fixed by the highest
/// degree, so a warm start scores the same at the next degree.
pub fn column_config(degrees: &[usize], cfg: &PackingConfig) -> PackingConfig {
    let d_max = degrees.iter().copied().max().unwrap_or(0);
    let mut col = *cfg;
    col.quadrature.min_angles = col.quadrature.min_angles.max(4 * d_max + 16);
    col
}

/// [`packing_column`] with a custom per-degree optimizer, which receives
/// the [`column_config`].
pub fn packing_column_with<O>(degrees: &[usize], lambda: f64, cfg: &PackingConfig, mut optimize: O) -> Result<Vec<PackingOutcome>>
where
    O: FnMut(usize, Option<&PackingPolynomial>, &PackingConfig) -> Result<PackingOutcome>,
{
    let col_cfg = column_config(degrees, cfg);
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::error::invalid("degrees", "must be strictly increasing"));
    }
    if !(lambda > 0.0) {
        return Err(crate::error::invalid("lambda", "must be positive"));
    }
    let mut out: Vec<PackingOutcome> = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let warm = out.last().map(|o| o.best.f.clone());
        out.push(optimize(d, warm.as_ref(), &col_cfg)?);
    }
    Ok(out)
}

/// Sweep table over levels and degrees.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PackingSweep {
    /// One column per level, degrees ascending.
    pub columns: Vec<Vec<PackingOutcome>>,
    /// `(lambda, min over degrees)`: finite-degree, finite-radius upper
    /// bounds for the inner infimum, not estimates of its limit.
    pub running_min: Vec<(f64, f64)>,
    /// Slope of the minimal ratio against `lambda` (when >= 2 levels).
    pub trend_slope: Option<f64>,
}

pub fn summarize_sweep(columns: Vec<Vec<PackingOutcome>>) -> Result<PackingSweep> {
    let running_min: Vec<(f64, f64)> = columns
        .iter()
        .filter_map(|col| {
            let lambda = col.first()?.best.lambda;
            let min = col.iter().map(|o| o.best.ratio).fold(f64::INFINITY, f64::min);
            Some((lambda, min))
        })
        .collect();
    let trend_slope = if running_min.len() >= 2 {
        let xs: Vec<f64> = running_min.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = running_min.iter().map(|p| p.1).collect();
        Some(crate::spectra::linear_fit(&xs, &ys)?.0)
    } else {
        None
    };
    Ok(PackingSweep {
        columns,
        running_min,
        trend_slope,
    })
}

pub fn packing_sweep(degrees: &[usize], lambdas: &[f64], cfg: &PackingConfig) -> Result<PackingSweep> {
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::error::invalid("lambdas", "must be strictly increasing"));
    }
    let columns = lambdas
        .iter()
        .map(|&l| packing_column(degrees, l, cfg))
        .collect::<Result<Vec<_>>>()?;
    summarize_sweep(columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> PackingQuadrature {
        PackingQuadrature::default()
    }

    #[test]
    fn phi_examples() {
        let z0 = DiskPoint::origin();
        assert_eq!(phi(&PackingPolynomial::zero(3), z0), 1.0);
        assert_eq!(phi(&PackingPolynomial::constant(1.0), z0), 0.0);
        let z = DiskPoint::from_polar(0.5f64.sqrt(), 0.3).unwrap();
        assert!(phi(&PackingPolynomial::constant(2.0), z) < 1e-28);
    }

    #[test]
    fn zero_polynomial_has_unit_ratio() {
        for lambda in [4.0, 12.0] {
            let r = packing_ratio(&PackingPolynomial::zero(5), lambda, &q()).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-12);
            assert!((r.denominator_integral - lambda).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_match_closed_form() {
        for (c, lambda) in [(1.0, 4.0), (1.96, 4.0), (0.3, 12.0)] {
            let r = packing_ratio(&PackingPolynomial::constant(c), lambda, &q()).unwrap();
            assert!((r.ratio - constant_ratio(c, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_values_at_level_four() {
        let (c, ratio) = optimal_constant(4.0);
        assert!((c - 1.964_03).abs() < 1e-5, "{c}");
        assert!((ratio - 0.517_99).abs() < 1e-5, "{ratio}");
    }

    #[test]
    fn horner_matches_power_sum() {
        let f = PackingPolynomial::new(vec![
            Complex64::new(0.5, 0.1),
            Complex64::new(-1.0, 2.0),
            Complex64::new(0.0, 0.3),
            Complex64::new(4.0, -1.0),
        ]);
        let z = Complex64::new(0.7, -0.2);
        let naive: Complex64 = f.coeffs.iter().enumerate().map(|(k, c)| c * z.powi(k as i32)).sum();
        assert!((f.eval(z) - naive).norm() < 1e-14);
    }

    #[test]
    fn params_round_trip_up_to_phase() {
        let f = PackingPolynomial::new(vec![Complex64::new(0.0, 1.0), Complex64::new(2.0, -1.0)]);
        let g = PackingPolynomial::from_params(&f.to_params());
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-0.6, 0.1)] {
            assert!((f.eval(z).norm() - g.eval(z).norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn degree_zero_optimum_is_the_closed_form() {
        let cfg = PackingConfig::default();
        let out = optimize_packing(0, 4.0, None, &cfg).unwrap();
        let (c, ratio) = optimal_constant(4.0);
        assert!((out.best.ratio - ratio).abs() < 1e-8, "{out:?}");
        assert!((out.best.f.coeffs[0].re - c).abs() < 1e-4);
    }
}
