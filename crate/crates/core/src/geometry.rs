//! Hyperbolic geometry of the unit disk and the upper half-plane.
//!
//! The disk carries the metric `2|dz|/(1-|z|^2)` and the half-plane the
//! metric `|d zeta|/Im zeta`; both have curvature -1. Annuli are cut at the
//! radii `r_k = tanh(Lk/2)` so each has hyperbolic width exactly `L`, and each
//! annulus is tiled by congruent polar boxes.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{RadialLevel, Region};

/// A point of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.norm_sqr() < 1.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(Self(z))
        } else {
            Err(Error::OutsideDisk(z))
        }
    }

    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(r, theta))
    }

    pub fn origin() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// `1 - |z|^2`.
    pub fn defect(self) -> f64 {
        let r = self.0.norm();
        (1.0 - r) * (1.0 + r)
    }
}

/// Hyperbolic distance in the metric `2|dz|/(1-|z|^2)`:
/// `log((1+rho)/(1-rho))` with `rho = |z-w|/|1 - conj(z) w|`.
pub fn hyperbolic_distance(z: DiskPoint, w: DiskPoint) -> f64 {
    let (z, w) = (z.0, w.0);
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    if num == 0.0 {
        return 0.0;
    }
    let rho = (num / den).min(1.0);
    // 1 - rho^2 = (1-|z|^2)(1-|w|^2)/|1 - conj(z) w|^2 without cancellation
    let one_minus_rho2 = DiskPoint(z).defect() * DiskPoint(w).defect() / (den * den);
    2.0 * rho.ln_1p() - one_minus_rho2.ln()
}

/// Hyperbolic distance in the upper half-plane with metric `|d zeta|/Im zeta`.
pub fn half_plane_distance(a: Complex64, b: Complex64) -> Result<f64> {
    if !(a.im > 0.0) {
        return Err(Error::OutsideHalfPlane(a));
    }
    if !(b.im > 0.0) {
        return Err(Error::OutsideHalfPlane(b));
    }
    let s = (a - b).norm() / (2.0 * (a.im * b.im).sqrt());
    Ok(2.0 * s.asinh())
}

/// Sense-preserving disk automorphism `xi -> phase * (xi - a)/(1 - conj(a) xi)`.
///
/// `a` is the preimage of 0. The involution `xi -> (z - xi)/(1 - conj(z) xi)`
/// is `a = z`, `phase = -1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    a: Complex64,
    phase: Complex64,
}

impl MobiusMap {
    pub fn new(a: Complex64, phase: Complex64) -> Result<Self> {
        DiskPoint::new(a)?;
        let m = phase.norm();
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("phase", "must be a nonzero finite complex number"));
        }
        Ok(Self { a, phase: phase / m })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn rotation(angle: f64) -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            phase: Complex64::from_polar(1.0, angle),
        }
    }

    /// The involution exchanging `z` and 0.
    pub fn swap(z: DiskPoint) -> Self {
        Self {
            a: z.0,
            phase: Complex64::new(-1.0, 0.0),
        }
    }

    pub fn center(&self) -> Complex64 {
        self.a
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn apply(&self, xi: Complex64) -> Complex64 {
        self.phase * (xi - self.a) / (Complex64::new(1.0, 0.0) - self.a.conj() * xi)
    }

    pub fn apply_point(&self, p: DiskPoint) -> DiskPoint {
        let w = self.apply(p.0);
        // Rounding can push |w| to 1 for points extremely close to the rim.
        if w.norm_sqr() < 1.0 {
            DiskPoint(w)
        } else {
            DiskPoint(w / w.norm() * (1.0 - f64::EPSILON))
        }
    }

    pub fn derivative(&self, xi: Complex64) -> Complex64 {
        let d = Complex64::new(1.0, 0.0) - self.a.conj() * xi;
        self.phase * (1.0 - self.a.norm_sqr()) / (d * d)
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: -self.a * self.phase,
            phase: self.phase.conj(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> Self {
        let a = other.inverse().apply(self.inverse().apply(Complex64::new(0.0, 0.0)));
        let d = self.derivative(other.apply(a)) * other.derivative(a);
        let phase = d * (1.0 - a.norm_sqr());
        Self {
            a,
            phase: phase / phase.norm(),
        }
    }
}

/// A radius of the annulus family, kept together with `1 - r` so that no
/// precision is lost near the rim.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusRadius {
    pub r: f64,
    pub one_minus_r: f64,
    /// Set when `r` rounds to 1 in double precision; `r` is then the largest
    /// double below 1 and only `one_minus_r` is meaningful.
    pub clamped: bool,
}

/// `r_k = (1 - e^{-Lk})/(1 + e^{-Lk}) = tanh(Lk/2)`.
pub fn annulus_radius(l: f64, k: u32) -> Result<AnnulusRadius> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(invalid("L", "must be positive and finite"));
    }
    let q = (-l * k as f64).exp();
    let one_minus_r = 2.0 * q / (1.0 + q);
    let r = (1.0 - q) / (1.0 + q);
    if r >= 1.0 {
        Ok(AnnulusRadius {
            r: 1.0 - f64::EPSILON / 2.0,
            one_minus_r,
            clamped: true,
        })
    } else {
        Ok(AnnulusRadius {
            r,
            one_minus_r,
            clamped: false,
        })
    }
}

/// The annuli `A_k = D(0, r_k) \ D(0, r_{k-1})`, `k = 1..=k_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnulusFamily {
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub l: f64,
    pub k_max: u32,
}

impl AnnulusFamily {
    pub fn new(l: f64, k_max: u32) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(invalid("L", "must be positive and finite"));
        }
        if k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        Ok(Self { l, k_max })
    }

    pub fn radius(&self, k: u32) -> AnnulusRadius {
        annulus_radius(self.l, k).expect("validated L")
    }

    /// `-log(1 - r_k^2) = Lk - log 4 + 2 log(1 + e^{-Lk})`.
    pub fn level(&self, k: u32) -> RadialLevel {
        let x = self.l * k as f64;
        let lambda = if k == 0 {
            0.0
        } else {
            x - 2.0 * LN_2 + 2.0 * (-x).exp().ln_1p()
        };
        RadialLevel {
            r: self.radius(k).r,
            lambda,
        }
    }

    /// `log((1+r_k)/(1-r_k))`, the hyperbolic distance from 0 to `T(0, r_k)`.
    pub fn radial_coordinate(&self, k: u32) -> f64 {
        self.l * k as f64
    }

    /// Hyperbolic width of `A_k`; equal to `L`.
    pub fn hyperbolic_width(&self, k: u32) -> f64 {
        self.radial_coordinate(k) - self.radial_coordinate(k.saturating_sub(1))
    }

    /// `|A_k|_{A_-1} = log((1 - r_{k-1}^2)/(1 - r_k^2))`.
    pub fn weighted_area(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let x = self.l * k as f64;
        let y = self.l * (k - 1) as f64;
        self.l + 2.0 * ((-x).exp().ln_1p() - (-y).exp().ln_1p())
    }

    pub fn region(&self, k: u32) -> Region {
        Region::Annulus {
            inner: self.level(k.saturating_sub(1)),
            outer: self.level(k),
        }
    }

    /// `n_k = ceil(2 pi e^{Lk} / L)`.
    pub fn box_count(&self, k: u32) -> Result<usize> {
        let count = (TAU * (self.l * k as f64).exp() / self.l).ceil();
        if !count.is_finite() || count > u32::MAX as f64 {
            return Err(Error::TooManyBoxes { count });
        }
        Ok(count as usize)
    }

    /// The boxes `Q_{k,l}` tiling `A_k` with the default count.
    pub fn box_grid(&self, k: u32) -> Result<Vec<HypBox>> {
        let n = self.box_count(k)?;
        self.box_grid_with_count(k, n)
    }

    /// Same tiling with an explicit box count.
    pub fn box_grid_with_count(&self, k: u32, n: usize) -> Result<Vec<HypBox>> {
        if k == 0 {
            return Err(invalid("k", "annuli are indexed from 1"));
        }
        if n == 0 {
            return Err(invalid("n_boxes", "must be positive"));
        }
        let inner = self.level(k - 1);
        let outer = self.level(k);
        let width = TAU / n as f64;
        Ok((0..n)
            .map(|l| {
                HypBox::Disk(DiskBox {
                    k,
                    l: l as u32,
                    inner,
                    outer,
                    theta_lo: width * l as f64,
                    theta_hi: if l + 1 == n { TAU } else { width * (l + 1) as f64 },
                })
            })
            .collect())
    }

    /// The `l`-th box of the default tiling without materializing the grid.
    pub fn box_at(&self, k: u32, l: usize) -> Result<HypBox> {
        let n = self.box_count(k)?;
        if k == 0 || l >= n {
            return Err(invalid("l", "box index out of range"));
        }
        let width = TAU / n as f64;
        Ok(HypBox::Disk(DiskBox {
            k,
            l: l as u32,
            inner: self.level(k - 1),
            outer: self.level(k),
            theta_lo: width * l as f64,
            theta_hi: if l + 1 == n { TAU } else { width * (l + 1) as f64 },
        }))
    }

    pub fn describe(&self, eps: f64) -> Result<GridDescription> {
        let mut annuli = Vec::with_capacity(self.k_max as usize);
        for k in 1..=self.k_max {
            annuli.push(AnnulusDescription {
                k,
                r_lo: self.radius(k - 1).r,
                r_hi: self.radius(k).r,
                n_boxes: self.box_count(k)? as u64,
            });
        }
        Ok(GridDescription {
            l: self.l,
            k_max: self.k_max,
            eps,
            annuli,
        })
    }
}

/// Serializable summary of an annulus/box grid.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridDescription {
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub l: f64,
    pub k_max: u32,
    pub eps: f64,
    pub annuli: Vec<AnnulusDescription>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnulusDescription {
    pub k: u32,
    pub r_lo: f64,
    pub r_hi: f64,
    pub n_boxes: u64,
}

/// Polar box `Q_{k,l}` in the disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskBox {
    pub k: u32,
    pub l: u32,
    pub inner: RadialLevel,
    pub outer: RadialLevel,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl DiskBox {
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        if !(r > self.inner.r && r < self.outer.r) {
            return false;
        }
        let th = z.arg();
        let t = self.theta_lo + (th - self.theta_lo).rem_euclid(TAU);
        t < self.theta_hi
    }

    /// The box as a rectangle in logarithmic coordinates `z = e^{i pi zeta}`.
    pub fn to_log_rect(&self) -> Result<HalfPlaneRect> {
        if self.inner.r <= 0.0 {
            return Err(Error::OriginHasNoLogCoordinate);
        }
        Ok(HalfPlaneRect {
            x_lo: self.theta_lo / PI,
            x_hi: self.theta_hi / PI,
            y_lo: -self.outer.r.ln() / PI,
            y_hi: -self.inner.r.ln() / PI,
        })
    }

    pub fn from_log_rect(k: u32, l: u32, rect: &HalfPlaneRect) -> Self {
        let level = |y: f64| {
            let r = (-PI * y).exp();
            RadialLevel {
                r,
                lambda: -(-(-2.0 * PI * y).exp_m1()).ln(),
            }
        };
        Self {
            k,
            l,
            inner: level(rect.y_hi),
            outer: level(rect.y_lo),
            theta_lo: PI * rect.x_lo,
            theta_hi: PI * rect.x_hi,
        }
    }

    pub fn region(&self) -> Region {
        Region::DiskBox {
            inner: self.inner,
            outer: self.outer,
            theta_lo: self.theta_lo,
            theta_hi: self.theta_hi,
        }
    }

    pub fn weighted_area(&self) -> f64 {
        (self.outer.lambda - self.inner.lambda) * (self.theta_hi - self.theta_lo) / TAU
    }

    pub fn center(&self) -> Complex64 {
        let lambda = 0.5 * (self.inner.lambda + self.outer.lambda);
        let r = crate::quadrature::radius_of_level(lambda);
        Complex64::from_polar(r, 0.5 * (self.theta_lo + self.theta_hi))
    }
}

/// Rectangle `(x_lo, x_hi) x (y_lo, y_hi)` in the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlaneRect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl HalfPlaneRect {
    /// `{0 < Re zeta < L, e^{-L} < Im zeta < 1}`.
    pub fn prototype(l: f64) -> Self {
        Self {
            x_lo: 0.0,
            x_hi: l,
            y_lo: (-l).exp(),
            y_hi: 1.0,
        }
    }

    /// The prototype translated by `x0` and dilated by `scale`.
    pub fn scaled_prototype(l: f64, x0: f64, scale: f64) -> Self {
        Self {
            x_lo: scale * x0,
            x_hi: scale * (x0 + l),
            y_lo: scale * (-l).exp(),
            y_hi: scale,
        }
    }

    /// Hyperbolic height `log(y_hi / y_lo)`.
    pub fn size(&self) -> f64 {
        (self.y_hi / self.y_lo).ln()
    }

    pub fn weighted_area(&self) -> f64 {
        (self.x_hi - self.x_lo) * self.size() / PI
    }

    pub fn contains(&self, zeta: Complex64) -> bool {
        zeta.re > self.x_lo && zeta.re < self.x_hi && zeta.im > self.y_lo && zeta.im < self.y_hi
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x_lo + self.x_hi), (self.y_lo * self.y_hi).sqrt())
    }

    pub fn region(&self) -> Region {
        Region::HalfPlaneBox {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            y_lo: self.y_lo,
            y_hi: self.y_hi,
        }
    }
}

/// A box of the grid, in either model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HypBox {
    Disk(DiskBox),
    HalfPlane(HalfPlaneRect),
}

impl HypBox {
    pub fn region(&self) -> Region {
        match self {
            HypBox::Disk(b) => b.region(),
            HypBox::HalfPlane(b) => b.region(),
        }
    }

    pub fn weighted_area(&self) -> f64 {
        match self {
            HypBox::Disk(b) => b.weighted_area(),
            HypBox::HalfPlane(b) => b.weighted_area(),
        }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        match self {
            HypBox::Disk(b) => b.contains(p),
            HypBox::HalfPlane(b) => b.contains(p),
        }
    }
}

/// The concentric trim `(1-eps)Q`: each horizontal side loses `eps` of the
/// width and the vertical extent loses `eps` of its logarithmic height at
/// either end. For the prototype this is
/// `{eps L < Re < (1-eps) L, e^{-(1-eps) L} < Im < e^{-eps L}}`.
/// Disk boxes are trimmed in logarithmic coordinates.
pub fn shrink_box(q: &HypBox, eps: f64) -> Result<HypBox> {
    if !(eps >= 0.0) || eps >= 0.5 {
        return Err(Error::EmptyBox { eps });
    }
    let trim = |r: &HalfPlaneRect| {
        let dx = eps * (r.x_hi - r.x_lo);
        let h = r.size();
        HalfPlaneRect {
            x_lo: r.x_lo + dx,
            x_hi: r.x_hi - dx,
            y_lo: r.y_lo * (eps * h).exp(),
            y_hi: r.y_hi * (-eps * h).exp(),
        }
    };
    match q {
        HypBox::HalfPlane(r) => {
            if eps == 0.0 {
                return Ok(*q);
            }
            Ok(HypBox::HalfPlane(trim(r)))
        }
        HypBox::Disk(b) => {
            if eps == 0.0 {
                return Ok(*q);
            }
            let rect = trim(&b.to_log_rect()?);
            Ok(HypBox::Disk(DiskBox::from_log_rect(b.k, b.l, &rect)))
        }
    }
}

/// `zeta` with `z = e^{i pi zeta}`, `Im zeta > 0`, `Re zeta in (-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogCoord(Complex64);

impl LogCoord {
    pub fn new(zeta: Complex64) -> Result<Self> {
        if !(zeta.im > 0.0) || !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::OutsideHalfPlane(zeta));
        }
        // Reduce Re zeta into (-1, 1].
        let mut x = zeta.re - 2.0 * (zeta.re / 2.0).round();
        if x <= -1.0 {
            x += 2.0;
        }
        Ok(Self(Complex64::new(x, zeta.im)))
    }

    pub fn from_disk(z: DiskPoint) -> Result<Self> {
        let z = z.0;
        if z.norm_sqr() == 0.0 {
            return Err(Error::OriginHasNoLogCoordinate);
        }
        Ok(Self(Complex64::new(z.arg() / PI, -z.norm().ln() / PI)))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn to_disk(self) -> DiskPoint {
        let z = (Complex64::i() * PI * self.0).exp();
        DiskPoint(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_points_on_or_outside_circle() {
        assert!(DiskPoint::new(c(1.0, 0.0)).is_err());
        assert!(DiskPoint::new(c(0.8, 0.7)).is_err());
        assert!(DiskPoint::new(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn distance_examples() {
        let o = DiskPoint::origin();
        assert_eq!(hyperbolic_distance(o, o), 0.0);
        let p = DiskPoint::new(c(0.5f64.tanh(), 0.0)).unwrap();
        assert!((hyperbolic_distance(o, p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_near_rim_keeps_precision() {
        // d(0, r) = log((1+r)/(1-r)) = Lk for r = r_k
        let fam = AnnulusFamily::new(3.0, 10).unwrap();
        let r = fam.radius(10).r;
        let d = hyperbolic_distance(DiskPoint::origin(), DiskPoint::new(c(r, 0.0)).unwrap());
        assert!((d - 30.0).abs() < 1e-3);
    }

    #[test]
    fn mobius_inverse_and_compose() {
        let g = MobiusMap::new(c(0.3, -0.4), c(0.0, 1.0)).unwrap();
        let h = MobiusMap::new(c(-0.1, 0.6), c(0.6, 0.8)).unwrap();
        let gi = g.inverse();
        let gh = g.compose(&h);
        for z in [c(0.0, 0.0), c(0.5, 0.1), c(-0.7, -0.2)] {
            assert!((gi.apply(g.apply(z)) - z).norm() < 1e-14);
            assert!((gh.apply(z) - g.apply(h.apply(z))).norm() < 1e-14);
        }
        let z = DiskPoint::new(c(0.2, 0.5)).unwrap();
        let s = MobiusMap::swap(z);
        assert!(s.apply(z.value()).norm() < 1e-15);
        assert!((s.apply(c(0.0, 0.0)) - z.value()).norm() < 1e-15);
    }

    #[test]
    fn radii_and_widths() {
        let r = annulus_radius(1.0, 1).unwrap();
        assert!((r.r - 0.462_117_157_260_009_8).abs() < 1e-15);
        assert_eq!(annulus_radius(1.0, 0).unwrap().r, 0.0);
        let fam = AnnulusFamily::new(2.0, 5).unwrap();
        let w = |r: f64| ((1.0 + r) / (1.0 - r)).ln();
        let width = w(fam.radius(3).r) - w(fam.radius(2).r);
        assert!((width - 2.0).abs() < 1e-12);
        assert_eq!(fam.hyperbolic_width(3), 2.0);
    }

    #[test]
    fn huge_radius_is_clamped_and_flagged() {
        let r = annulus_radius(10.0, 60).unwrap();
        assert!(r.clamped);
        assert!(r.r < 1.0);
        assert!(r.one_minus_r > 0.0);
    }

    #[test]
    fn weighted_area_matches_log_formula() {
        let fam = AnnulusFamily::new(5.0, 3).unwrap();
        let r1 = (2.5f64).tanh();
        assert!((fam.weighted_area(1) - (1.0 / (1.0 - r1 * r1)).ln()).abs() < 1e-12);
        assert!((fam.weighted_area(3) - 5.0).abs() < 5.0 * (-10.0f64).exp());
        let total: f64 = (1..=3).map(|k| fam.weighted_area(k)).sum();
        assert!((total - fam.level(3).lambda).abs() < 1e-12);
    }

    #[test]
    fn box_counts() {
        let fam = AnnulusFamily::new(2.0, 3).unwrap();
        assert_eq!(fam.box_count(1).unwrap(), 24);
        let grid = fam.box_grid(1).unwrap();
        assert_eq!(grid.len(), 24);
        let total: f64 = grid.iter().map(HypBox::weighted_area).sum();
        assert!((total - fam.weighted_area(1)).abs() < 1e-12);
        let huge = AnnulusFamily::new(2.0, 40).unwrap();
        assert!(matches!(huge.box_count(40), Err(Error::TooManyBoxes { .. })));
    }

    #[test]
    fn shrink_prototype() {
        let q = HypBox::HalfPlane(HalfPlaneRect::prototype(10.0));
        assert!((q.weighted_area() - 100.0 / PI).abs() < 1e-12);
        let s = shrink_box(&q, 0.1).unwrap();
        assert!((s.weighted_area() - 64.0 / PI).abs() < 1e-12);
        assert_eq!(shrink_box(&q, 0.0).unwrap(), q);
        assert!(matches!(shrink_box(&q, 0.5), Err(Error::EmptyBox { .. })));
    }

    #[test]
    fn log_coordinate_examples() {
        let z = DiskPoint::new(c((-PI).exp(), 0.0)).unwrap();
        let zeta = LogCoord::from_disk(z).unwrap().value();
        assert!((zeta - c(0.0, 1.0)).norm() < 1e-15);
        let z = DiskPoint::new(c(0.0, (-PI).exp())).unwrap();
        let zeta = LogCoord::from_disk(z).unwrap().value();
        assert!((zeta - c(0.5, 1.0)).norm() < 1e-15);
        assert!(matches!(
            LogCoord::from_disk(DiskPoint::origin()),
            Err(Error::OriginHasNoLogCoordinate)
        ));
        let w = LogCoord::new(c(3.5, 0.2)).unwrap();
        assert!((w.value().re + 0.5).abs() < 1e-15);
    }
}
