//! Bloch-space functionals: the seminorm `sup (1-|z|^2)|g'(z)|`, the
//! pointwise growth bound it implies, and the field
//! `N_g(z) = (1-|z|^2)^2 |g'(z)|^2`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::DiskPoint;
use crate::holo::{bloch_density, Holomorphic};
use crate::quadrature::QuadratureSpec;
use crate::symbols::{ProjectedFunc, Symbol};

/// `64/pi^2`, the pointwise bound of `N_g` for `g = P mu`, `||mu|| <= 1`.
pub const NG_BOUND: f64 = 64.0 / (PI * PI);

/// Slack allowed on top of [`NG_BOUND`] and the derivative bound `8/pi`.
pub const BOUND_TOL: f64 = 1e-6;

/// Sampling policy for the seminorm search.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BlochGridSpec {
    /// Hyperbolic spacing between rings and (up to the cap) along rings.
    pub step: f64,
    pub max_radius: f64,
    /// Points per ring are `2^j` with `2^j <= max_ring_points`.
    pub max_ring_points: usize,
    /// Golden-section passes (radial + angular) around the grid argmax.
    pub refine_passes: usize,
}

impl Default for BlochGridSpec {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_radius: 1.0 - 1e-5,
            max_ring_points: 1024,
            refine_passes: 3,
        }
    }
}

impl BlochGridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(crate::error::invalid("step", "must be positive"));
        }
        if !(self.max_radius > 0.0 && self.max_radius < 1.0) {
            return Err(crate::error::invalid("max_radius", "must lie in (0, 1)"));
        }
        if self.max_ring_points == 0 {
            return Err(crate::error::invalid("max_ring_points", "must be positive"));
        }
        Ok(())
    }

    /// The same grid with half the spacing; every point of `self` is kept.
    pub fn refined(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            max_ring_points: 2 * self.max_ring_points,
            ..*self
        }
    }
}

/// Hyperbolic distance from 0 to radius `r` (metric `2|dz|/(1-|z|^2)`).
fn rho_of(r: f64) -> f64 {
    2.0 * r.atanh()
}

fn radius_of(rho: f64) -> f64 {
    (0.5 * rho).tanh()
}

/// Rings at hyperbolic distance `j * step`, each with a power-of-two number
/// of equally spaced points approximating hyperbolic spacing `step`.
pub fn hyperbolic_grid(spec: &BlochGridSpec) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let rho_max = rho_of(spec.max_radius);
    let n_rings = (rho_max / spec.step).floor() as usize;
    let mut points = alloc::vec![Complex64::new(0.0, 0.0)];
    for j in 1..=n_rings {
        let rho = j as f64 * spec.step;
        let want = TAU * rho.sinh() / spec.step;
        let mut n = 4usize;
        while (n as f64) < want && n < spec.max_ring_points {
            n *= 2;
        }
        let n = n.min(spec.max_ring_points.max(1));
        let r = radius_of(rho);
        points.extend((0..n).map(|i| Complex64::from_polar(r, TAU * i as f64 / n as f64)));
    }
    let r_last = radius_of(n_rings as f64 * spec.step);
    if r_last < spec.max_radius * (1.0 - 1e-15) {
        let n = spec.max_ring_points;
        points.extend((0..n).map(|i| Complex64::from_polar(spec.max_radius, TAU * i as f64 / n as f64)));
    }
    Ok(points)
}

/// About `n` points spread uniformly in hyperbolic area over `D(0, max_radius)`.
pub fn hyperbolic_uniform_points(n: usize, max_radius: f64) -> Result<Vec<Complex64>> {
    if n == 0 || !(max_radius > 0.0 && max_radius < 1.0) {
        return Err(crate::error::invalid("n", "need n >= 1 and 0 < max_radius < 1"));
    }
    let rho_max = rho_of(max_radius);
    let rings = ((n as f64).sqrt() as usize).clamp(1, 64);
    let rhos: Vec<f64> = (0..rings).map(|j| (j as f64 + 0.5) * rho_max / rings as f64).collect();
    let weight: f64 = rhos.iter().map(|r| r.sinh()).sum();
    let mut points = alloc::vec![Complex64::new(0.0, 0.0)];
    for (j, &rho) in rhos.iter().enumerate() {
        let k = ((n - 1) as f64 * rho.sinh() / weight).round().max(1.0) as usize;
        let r = radius_of(rho);
        // stagger rings so the angular grids do not line up
        let offset = 0.5 * (j % 2) as f64;
        points.extend((0..k).map(|i| Complex64::from_polar(r, TAU * (i as f64 + offset) / k as f64)));
    }
    Ok(points)
}

/// Grid estimate of the Bloch seminorm.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlochReport {
    /// Best value found (grid maximum, then refined); a lower bound.
    pub seminorm_estimate: f64,
    pub grid_max: f64,
    pub argmax: Complex64,
    /// Hyperbolic grid spacing.
    pub grid_resolution: f64,
    /// Heuristic: local Lipschitz constant times half the spacing.
    pub upper_cushion: f64,
    pub points: usize,
    /// Largest radius at which evaluation succeeded.
    pub effective_radius: f64,
    /// Evaluation failed near the rim and the search radius was reduced.
    pub radius_shrunk: bool,
}

/// Searches `(1-|z|^2)|g'(z)|` over [`hyperbolic_grid`], then refines the
/// argmax by golden-section search along the radial and angular directions.
pub fn bloch_seminorm<G: Holomorphic + ?Sized>(g: &G, spec: &BlochGridSpec) -> Result<BlochReport> {
    spec.validate()?;
    let mut effective = *spec;
    let mut shrunk = false;
    let (values, points) = loop {
        let points = hyperbolic_grid(&effective)?;
        let mut values = Vec::with_capacity(points.len());
        let mut failed = None;
        for &z in &points {
            match bloch_density(g, z) {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => {
                    failed = Some(Error::NonFinite { at: z });
                    break;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        match failed {
            None => break (values, points),
            Some(e) => {
                // retreat one decade toward the center
                let defect = 1.0 - effective.max_radius;
                if defect >= 0.1 {
                    return Err(e);
                }
                effective.max_radius = 1.0 - 10.0 * defect;
                shrunk = true;
            }
        }
    };
    let (mut best_i, mut grid_max) = (0usize, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > grid_max {
            grid_max = v;
            best_i = i;
        }
    }
    let z0 = points[best_i];
    // Lipschitz cushion from nearby samples, in the hyperbolic metric.
    let d0 = DiskPoint::new(z0)?;
    let mut lip: f64 = 0.0;
    for (i, &z) in points.iter().enumerate() {
        if i == best_i {
            continue;
        }
        let d = crate::geometry::hyperbolic_distance(d0, DiskPoint::new(z)?);
        if d > 0.0 && d <= 2.5 * spec.step {
            lip = lip.max((values[i] - grid_max).abs() / d);
        }
    }
    let (mut best, mut at) = (grid_max, z0);
    let rho_max = rho_of(effective.max_radius);
    let density = |rho: f64, th: f64| -> f64 {
        let z = Complex64::from_polar(radius_of(rho.clamp(0.0, rho_max)), th);
        bloch_density(g, z).unwrap_or(f64::NEG_INFINITY)
    };
    for _ in 0..spec.refine_passes {
        let rho = rho_of(at.norm());
        let th = at.arg();
        let (r_new, v) = golden_max(|x| density(x, th), (rho - spec.step).max(0.0), (rho + spec.step).min(rho_max));
        if v > best {
            best = v;
            at = Complex64::from_polar(radius_of(r_new), th);
        }
        let rho = rho_of(at.norm());
        if rho > 0.0 {
            let dth = spec.step / rho.sinh().max(1e-300);
            let dth = dth.min(PI);
            let (t_new, v) = golden_max(|t| density(rho, t), th - dth, th + dth);
            if v > best {
                best = v;
                at = Complex64::from_polar(radius_of(rho), t_new);
            }
        }
    }
    Ok(BlochReport {
        seminorm_estimate: best,
        grid_max,
        argmax: at,
        grid_resolution: spec.step,
        upper_cushion: lip * 0.5 * spec.step,
        points: points.len(),
        effective_radius: effective.max_radius,
        radius_shrunk: shrunk,
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns the best
/// abscissa seen and its value.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..60 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Outcome of checking `|g(z)| <= (||g||_B / 2) log((1+|z|)/(1-|z|))`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthReport {
    /// Largest `|g(z)| / bound(z)` over the samples (`<= 1` when the bound holds).
    pub max_ratio: f64,
    pub worst_point: Complex64,
    pub violations: usize,
    pub holds: bool,
}

/// Relative tolerance on the growth bound.
pub const GROWTH_TOL: f64 = 1e-9;

pub fn growth_bound_check<G: Holomorphic + ?Sized>(g: &G, seminorm: f64, samples: &[Complex64]) -> Result<GrowthReport> {
    let g0 = g.value(Complex64::new(0.0, 0.0))?;
    if g0.norm() > 1e-12 {
        return Err(crate::error::invalid("g", format!("needs g(0) = 0, got {g0}")));
    }
    if !(seminorm >= 0.0) {
        return Err(crate::error::invalid("seminorm", "must be nonnegative"));
    }
    let mut report = GrowthReport {
        max_ratio: 0.0,
        worst_point: Complex64::new(0.0, 0.0),
        violations: 0,
        holds: true,
    };
    for &z in samples {
        DiskPoint::new(z)?;
        let r = z.norm();
        if r == 0.0 {
            continue;
        }
        // (1/2) log((1+r)/(1-r)) = atanh r
        let bound = seminorm * r.atanh();
        let v = g.value(z)?.norm();
        let ratio = if bound > 0.0 {
            v / bound
        } else if v > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_point = z;
        }
        if ratio > 1.0 + GROWTH_TOL {
            report.violations += 1;
            report.holds = false;
        }
    }
    Ok(report)
}

/// `N_g(z) = (1-|z|^2)^2 |g'(z)|^2`.
pub fn n_g<G: Holomorphic + ?Sized>(g: &G, z: DiskPoint) -> Result<f64> {
    let b = bloch_density(g, z.value())?;
    Ok(b * b)
}

/// `N_g` for `g = P mu`, checked against `64/pi^2 * ||mu||^2`.
#[derive(Clone, Debug)]
pub struct NgField {
    g: ProjectedFunc,
    bound: f64,
}

impl NgField {
    pub fn new(mu: Symbol, spec: &QuadratureSpec) -> Result<Self> {
        let s = mu.sup_bound();
        let g = ProjectedFunc::new(mu, spec)?;
        Ok(Self {
            g,
            bound: NG_BOUND * s * s,
        })
    }

    pub fn projection(&self) -> &ProjectedFunc {
        &self.g
    }

    /// Certified upper bound for this field.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, z: DiskPoint) -> Result<f64> {
        let v = n_g(&self.g, z)?;
        if v > self.bound + BOUND_TOL {
            return Err(Error::InvariantViolation(format!(
                "N_g({}) = {v} exceeds {}",
                z.value(),
                self.bound
            )));
        }
        Ok(v)
    }

    /// Maximum over `points`; the first failing point aborts.
    pub fn grid_max(&self, points: &[Complex64]) -> Result<(f64, Complex64)> {
        let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        for &z in points {
            let v = self.eval(DiskPoint::new(z)?)?;
            if v > best.0 {
                best = (v, z);
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::{HalfLogRatio, Polynomial};

    #[test]
    fn identity_has_unit_seminorm_at_origin() {
        let g = Polynomial::monomial(1);
        let r = bloch_seminorm(&g, &BlochGridSpec::default()).unwrap();
        assert!((r.seminorm_estimate - 1.0).abs() < 1e-12);
        assert!(r.argmax.norm() < 1e-6);
    }

    #[test]
    fn half_log_ratio_attains_one() {
        let r = bloch_seminorm(&HalfLogRatio, &BlochGridSpec::default()).unwrap();
        assert!((r.seminorm_estimate - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn grid_is_nested_under_refinement() {
        let spec = BlochGridSpec {
            max_radius: 0.99,
            max_ring_points: 64,
            ..Default::default()
        };
        let coarse = hyperbolic_grid(&spec).unwrap();
        let fine = hyperbolic_grid(&spec.refined()).unwrap();
        for z in coarse.iter().take(200) {
            assert!(fine.iter().any(|w| (w - z).norm() < 1e-12), "{z}");
        }
    }

    #[test]
    fn growth_bound_is_sharp_on_the_real_axis() {
        let samples: Vec<Complex64> = (1..10).map(|k| Complex64::new(k as f64 / 10.0, 0.0)).collect();
        let r = growth_bound_check(&HalfLogRatio, 1.0, &samples).unwrap();
        assert!(r.holds);
        assert!((r.max_ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn growth_check_requires_centered_functions() {
        let g = Polynomial::new(alloc::vec![Complex64::new(1.0, 0.0)]);
        assert!(growth_bound_check(&g, 1.0, &[Complex64::new(0.5, 0.0)]).is_err());
    }

    #[test]
    fn ng_of_first_harmonic_at_origin() {
        let f = NgField::new(Symbol::AngularHarmonic { m: 1 }, &QuadratureSpec::default()).unwrap();
        let v = f.eval(DiskPoint::origin()).unwrap();
        assert!((v - 16.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_points_fill_requested_count() {
        let p = hyperbolic_uniform_points(2000, 0.999).unwrap();
        assert!(p.len() > 1900 && p.len() < 2100, "{}", p.len());
        assert!(p.iter().all(|z| z.norm() < 0.999));
    }
}
