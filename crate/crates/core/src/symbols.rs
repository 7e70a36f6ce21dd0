//! Bounded symbols `mu` on the disk and their Bergman projections.
//!
//! `P mu(z) = int_D mu(w) (1 - z conj(w))^-2 dA(w)` and
//! `(P mu)'(z) = 2 int_D conj(w) mu(w) (1 - z conj(w))^-3 dA(w)`.
//!
//! Every closed-form symbol kind decomposes into polar cells
//! `c e^{i m theta} 1[r_lo < |w| < r_hi] 1[theta in arcs]`. For a cell the
//! radial integral is done in closed form. The angular integral is closed
//! form too for full circles and for `m = 0`; otherwise it is numerical, and
//! since near `|z| = 1` the integrand peaks at `theta = arg z`, an arc
//! containing the peak is integrated as (full circle) minus (complementary
//! arc). Inside `|z| <= 0.9` the Taylor series with exact moments is used
//! instead. Symbols with no cell decomposition fall back to a 2-D adaptive
//! rule refined around the kernel peak.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{DiskBox, DiskPoint, HalfPlaneRect, HypBox, LogCoord};
use crate::holo::Holomorphic;
use crate::quadrature::{
    integrate_arc, integrate_region_focused, integrate_region_split, integrate_under_graph, Breaks,
    Focus, Measure, QuadratureSpec, Region,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Radius up to which the projection is evaluated from its Taylor series.
pub const SERIES_RADIUS: f64 = 0.9;

/// A union of closed arcs of the unit circle, or the whole circle.
#[derive(Clone, Debug, PartialEq)]
pub enum Angular {
    Full,
    /// Disjoint arcs `[lo, hi]` with `0 <= lo < hi <= 2 pi`.
    Arcs(Vec<(f64, f64)>),
}

impl Angular {
    /// The arc from `lo` to `hi` (counterclockwise), reduced mod 2 pi.
    pub fn sector(lo: f64, hi: f64) -> Self {
        let width = hi - lo;
        if width >= TAU {
            return Angular::Full;
        }
        if !(width > 0.0) {
            return Angular::Arcs(Vec::new());
        }
        let a = lo.rem_euclid(TAU);
        let b = a + width;
        if b <= TAU {
            Angular::Arcs(alloc::vec![(a, b)])
        } else {
            Angular::Arcs(alloc::vec![(0.0, b - TAU), (a, TAU)])
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        match self {
            Angular::Full => true,
            Angular::Arcs(arcs) => {
                let t = theta.rem_euclid(TAU);
                arcs.iter().any(|&(a, b)| t >= a && t < b)
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Angular::Arcs(a) if a.is_empty())
    }

    pub fn intersect(&self, other: &Angular) -> Angular {
        match (self, other) {
            (Angular::Full, x) | (x, Angular::Full) => x.clone(),
            (Angular::Arcs(p), Angular::Arcs(q)) => {
                let mut out = Vec::new();
                for &(a, b) in p {
                    for &(c, d) in q {
                        let lo = a.max(c);
                        let hi = b.min(d);
                        if hi > lo {
                            out.push((lo, hi));
                        }
                    }
                }
                out.sort_by(|x, y| x.0.total_cmp(&y.0));
                Angular::Arcs(out)
            }
        }
    }

    /// `int e^{i j theta} d theta` over the set.
    fn harmonic_integral(&self, j: i64) -> Complex64 {
        match self {
            Angular::Full => {
                if j == 0 {
                    Complex64::new(TAU, 0.0)
                } else {
                    ZERO
                }
            }
            Angular::Arcs(arcs) => {
                let mut acc = ZERO;
                for &(a, b) in arcs {
                    acc += Self::harmonic_integral_on(a, b, j);
                }
                acc
            }
        }
    }

    fn harmonic_integral_on(a: f64, b: f64, j: i64) -> Complex64 {
        if j == 0 {
            Complex64::new(b - a, 0.0)
        } else {
            let jf = j as f64;
            let d = Complex64::from_polar(1.0, jf * b) - Complex64::from_polar(1.0, jf * a);
            d / Complex64::new(0.0, jf)
        }
    }
}

/// `coeff * e^{i m theta}` on `{r_lo <= |w| < r_hi, theta in angular}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarCell {
    pub coeff: Complex64,
    pub m: i32,
    pub r_lo: f64,
    pub r_hi: f64,
    pub angular: Angular,
}

impl PolarCell {
    fn full(coeff: Complex64, m: i32, r_lo: f64, r_hi: f64) -> Self {
        Self {
            coeff,
            m,
            r_lo,
            r_hi,
            angular: Angular::Full,
        }
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        let r = w.norm();
        if r < self.r_lo || r >= self.r_hi {
            return ZERO;
        }
        let th = w.arg();
        if !self.angular.contains(th) {
            return ZERO;
        }
        if self.m == 0 {
            self.coeff
        } else {
            self.coeff * Complex64::from_polar(1.0, self.m as f64 * th)
        }
    }

    fn product(&self, other: &PolarCell) -> Option<PolarCell> {
        let r_lo = self.r_lo.max(other.r_lo);
        let r_hi = self.r_hi.min(other.r_hi);
        if !(r_hi > r_lo) {
            return None;
        }
        let angular = self.angular.intersect(&other.angular);
        if angular.is_empty() {
            return None;
        }
        Some(PolarCell {
            coeff: self.coeff * other.coeff,
            m: self.m + other.m,
            r_lo,
            r_hi,
            angular,
        })
    }

    /// `int conj(w)^k mu(w) dA(w)`.
    fn moment(&self, k: usize) -> Complex64 {
        let p = (k + 2) as i32;
        let radial = (self.r_hi.powi(p) - self.r_lo.powi(p)) / (k + 2) as f64;
        self.coeff * FRAC_1_PI * radial * self.angular.harmonic_integral(self.m as i64 - k as i64)
    }

    /// Full-circle means of `e^{i m theta} R2` and `e^{i(m-1) theta} R3`.
    fn full_circle_means(&self, z: Complex64) -> [Complex64; 2] {
        let m = self.m;
        let shell = |p: i32| self.r_hi.powi(p) - self.r_lo.powi(p);
        let v = if m >= 0 {
            z.powi(m) * ((m + 1) as f64 * shell(m + 2) / (m + 2) as f64)
        } else {
            ZERO
        };
        let d = if m >= 1 {
            z.powi(m - 1) * ((m * (m + 1)) as f64 / 2.0 * shell(m + 2) / (m + 2) as f64)
        } else {
            ZERO
        };
        [v, d]
    }

    /// `(P cell)(z)` and `(P cell)'(z)`.
    fn project(&self, z: Complex64, spec: &QuadratureSpec) -> Result<(Complex64, Complex64)> {
        let means = match &self.angular {
            Angular::Full => self.full_circle_means(z),
            Angular::Arcs(arcs) if (0..=MAX_CLOSED_M).contains(&self.m) => {
                let mut acc = [ZERO; 2];
                for &(a, b) in arcs {
                    let hi = arc_means(z, self.r_hi, self.m, a, b);
                    let lo = arc_means(z, self.r_lo, self.m, a, b);
                    acc[0] += hi[0] - lo[0];
                    acc[1] += hi[1] - lo[1];
                }
                acc
            }
            Angular::Arcs(arcs) => {
                let focus = if z.norm_sqr() > 0.0 { Some(Focus::at(z)) } else { None };
                let m = self.m as f64;
                let (lo, hi) = (self.r_lo, self.r_hi);
                let integrand = |w: Complex64| {
                    // integrate_arc hands us r e^{i theta} with r = 1
                    let e = w;
                    let a = z * e.conj();
                    let (r2, r3) = radial_kernels(a, lo, hi);
                    let th = e.arg();
                    let rot = Complex64::from_polar(1.0, m * th);
                    [rot * r2, rot * e.conj() * r3]
                };
                let mut acc = [ZERO; 2];
                for &(a, b) in arcs {
                    let peak_inside = focus.is_some() && Angular::sector(a, b).contains(z.arg());
                    if peak_inside {
                        let full = self.full_circle_means(z);
                        let comp = integrate_arc(integrand, 1.0, b, a + TAU, focus, spec)?;
                        if !comp.converged {
                            return Err(not_converged(comp.value[0], comp.err_estimate));
                        }
                        acc[0] += full[0] - comp.value[0];
                        acc[1] += full[1] - comp.value[1];
                    } else {
                        let res = integrate_arc(integrand, 1.0, a, b, focus, spec)?;
                        if !res.converged {
                            return Err(not_converged(res.value[0], res.err_estimate));
                        }
                        acc[0] += res.value[0];
                        acc[1] += res.value[1];
                    }
                }
                acc
            }
        };
        Ok((self.coeff * 2.0 * means[0], self.coeff * 4.0 * means[1]))
    }
}

fn not_converged(value: Complex64, err_estimate: f64) -> Error {
    Error::NotConverged {
        value: value.norm(),
        err_estimate,
    }
}

/// Largest harmonic order of an arc cell handled in closed form.
const MAX_CLOSED_M: i32 = 12;

/// `(1/2pi) int_{th_a}^{th_b} e^{i m theta} G2(z e^{-i theta}, u) d theta` and
/// the same for `e^{i (m-1) theta} G3`, where `G2(a, u) = int_0^u s/(1-as)^2 ds`
/// and `G3(a, u) = int_0^u s^2/(1-as)^3 ds`.
fn arc_means(z: Complex64, u: f64, m: i32, th_a: f64, th_b: f64) -> [Complex64; 2] {
    let hi = corner_means(z, u, m, th_b);
    let lo = corner_means(z, u, m, th_a);
    [hi[0] - lo[0], hi[1] - lo[1]]
}

/// An antiderivative in `theta` of the integrands of [`arc_means`]
/// (`0 <= m <= MAX_CLOSED_M`). The integration constant depends on `(z, u)`
/// only, so differences at equal `u` are exact.
///
/// With `zeta = e^{i theta}`, `c = z u`, `w = zeta - c` and
/// `l = log(1 - c/zeta)` both integrands become `zeta^p`, `zeta^p / w`,
/// `zeta^p / w^2` and `zeta^p l` in `d zeta`; `log w` is unwrapped as
/// `i theta + l`, continuous because `|c| < 1`. Small `|c|` loses digits to
/// cancellation, so there the power series in `c` is integrated termwise.
fn corner_means(z: Complex64, u: f64, m: i32, th: f64) -> [Complex64; 2] {
    corner_terms(z, u, m, th, true)
}

/// [`corner_means`]; the derivative entry is left zero unless `deriv`.
fn corner_terms(z: Complex64, u: f64, m: i32, th: f64, deriv: bool) -> [Complex64; 2] {
    if u == 0.0 {
        return [ZERO; 2];
    }
    let c = z * u;
    // F_j(theta) = int e^{i j theta}
    let f = |j: i64| {
        if j == 0 {
            Complex64::new(th, 0.0)
        } else {
            Complex64::from_polar(1.0, j as f64 * th) / Complex64::new(0.0, j as f64)
        }
    };
    if c.norm() < 0.25 {
        // G2 = sum (k+1) a^k u^{k+2}/(k+2), G3 = sum C(k+2,2) a^k u^{k+3}/(k+3)
        let m = m as i64;
        let (mut v, mut d) = (ZERO, ZERO);
        let mut zk = ONE;
        let mut uk = u * u;
        for k in 0..80i64 {
            let kf = k as f64;
            v += zk * uk * ((kf + 1.0) / (kf + 2.0)) * f(m - k);
            if deriv {
                d += zk * uk * u * ((kf + 1.0) * (kf + 2.0) / 2.0 / (kf + 3.0)) * f(m - k - 1);
            }
            if k > 3 && zk.norm() * uk < 1e-18 {
                break;
            }
            zk *= z;
            uk *= u;
        }
        return [v / TAU, d / TAU];
    }
    let n = (m + 1) as usize;
    let zeta = Complex64::from_polar(1.0, th);
    let w = zeta - c;
    let l = (ONE - c / zeta).ln();
    let big_l = Complex64::new(0.0, th) + l;
    let binom = |p: usize, k: usize| -> f64 {
        let mut b = 1.0;
        for j in 0..k {
            b = b * (p - j) as f64 / (j + 1) as f64;
        }
        b
    };
    // S_p = int zeta^p / w, U_p = int zeta^p / w^2, via zeta = w + c
    let s_p = |p: usize| {
        let mut acc = c.powi(p as i32) * big_l;
        let mut wk = ONE;
        for k in 1..=p {
            wk *= w;
            acc += binom(p, k) * c.powi((p - k) as i32) * wk / k as f64;
        }
        acc
    };
    let u_p = |p: usize| {
        let mut acc = -c.powi(p as i32) / w + p as f64 * c.powi(p as i32 - 1) * big_l;
        let mut wk = ONE;
        for k in 2..=p {
            wk *= w;
            acc += binom(p, k) * c.powi((p - k) as i32) * wk / (k - 1) as f64;
        }
        acc
    };
    let nf = n as f64;
    let zn1 = zeta.powi(n as i32 + 1) / (nf + 1.0);
    let sn = s_p(n);
    // int zeta^n l = zeta^{n+1} l/(n+1) - c S_n/(n+1)
    let int_l = zn1 * l - c * sn / (nf + 1.0);
    let h2 = int_l + c * sn;
    let i = Complex64::new(0.0, 1.0);
    let z2 = z * z;
    if !deriv {
        return [h2 / (i * z2 * TAU), ZERO];
    }
    let h3 = 0.5 * u_p(n + 2) - 2.0 * s_p(n + 1) - int_l + 1.5 * zn1;
    [h2 / (i * z2 * TAU), h3 / (i * z2 * z * TAU)]
}

/// Arc cells of harmonic order `0..=MAX_CLOSED_M` rewritten as signed corner
/// terms `weight * F(u, theta)` of [`corner_means`]; adjacent cells share
/// corners, which are merged.
#[derive(Clone, Debug, Default, PartialEq)]
struct CornerSum {
    corners: Vec<(f64, f64, i32, Complex64)>,
}

impl CornerSum {
    fn accepts(cell: &PolarCell) -> bool {
        matches!(cell.angular, Angular::Arcs(_)) && (0..=MAX_CLOSED_M).contains(&cell.m)
    }

    fn build<'a>(cells: impl Iterator<Item = &'a PolarCell>) -> Self {
        let mut corners = Vec::new();
        for cell in cells {
            if let Angular::Arcs(arcs) = &cell.angular {
                for &(a, b) in arcs {
                    for (u, sign) in [(cell.r_hi, 1.0), (cell.r_lo, -1.0)] {
                        if u > 0.0 {
                            corners.push((u, b, cell.m, cell.coeff * sign));
                            corners.push((u, a, cell.m, -cell.coeff * sign));
                        }
                    }
                }
            }
        }
        corners.sort_by(|x, y| x.2.cmp(&y.2).then(x.0.total_cmp(&y.0)).then(x.1.total_cmp(&y.1)));
        let mut merged: Vec<(f64, f64, i32, Complex64)> = Vec::with_capacity(corners.len());
        for c in corners {
            match merged.last_mut() {
                Some(last) if last.0 == c.0 && last.1 == c.1 && last.2 == c.2 => last.3 += c.3,
                _ => merged.push(c),
            }
        }
        merged.retain(|c| c.3 != ZERO);
        Self { corners: merged }
    }

    /// Contribution to `(P mu(z), (P mu)'(z))`.
    fn project(&self, z: Complex64, deriv: bool) -> (Complex64, Complex64) {
        let (mut v, mut d) = (ZERO, ZERO);
        for &(u, th, m, wgt) in &self.corners {
            let [a, b] = corner_terms(z, u, m, th, deriv);
            v += wgt * a;
            d += wgt * b;
        }
        (2.0 * v, 4.0 * d)
    }
}

/// `int_lo^hi u/(1-au)^2 du` and `int_lo^hi u^2/(1-au)^3 du` for `|a| hi < 1`.
pub(crate) fn radial_kernels(a: Complex64, lo: f64, hi: f64) -> (Complex64, Complex64) {
    if a.norm() * hi <= 0.5 {
        let mut r2 = ZERO;
        let mut r3 = ZERO;
        let mut ak = ONE;
        let (mut h2, mut l2) = (hi * hi, lo * lo);
        let (mut h3, mut l3) = (h2 * hi, l2 * lo);
        for k in 0..200usize {
            let kf = k as f64;
            let t2 = ak * ((kf + 1.0) * (h2 - l2) / (kf + 2.0));
            let t3 = ak * ((kf + 1.0) * (kf + 2.0) / 2.0 * (h3 - l3) / (kf + 3.0));
            r2 += t2;
            r3 += t3;
            if k > 2 && t2.norm() <= 1e-18 * r2.norm() && t3.norm() <= 1e-18 * r3.norm() {
                break;
            }
            ak *= a;
            if ak.norm_sqr() == 0.0 {
                break;
            }
            h2 *= hi;
            l2 *= lo;
            h3 *= hi;
            l3 *= lo;
        }
        (r2, r3)
    } else {
        let f2 = |u: f64| {
            let v = ONE - a * u;
            v.inv() + v.ln()
        };
        let f3 = |u: f64| {
            let v = ONE - a * u;
            let vi = v.inv();
            0.5 * vi * vi - 2.0 * vi - v.ln()
        };
        let a2 = a * a;
        let r2 = (f2(hi) - f2(lo)) / a2;
        let r3 = (f3(hi) - f3(lo)) / (a2 * a);
        (r2, r3)
    }
}

/// Polar grid of cell values: `n_r` equal radial bands times `n_theta`
/// equal sectors, stored row-major by radial band.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub values: Vec<Complex64>,
}

impl SampledGrid {
    pub fn new(n_r: usize, n_theta: usize, values: Vec<Complex64>) -> Result<Self> {
        let g = Self {
            n_r,
            n_theta,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    /// Assigns each sample `(x, y, value)` to the cell containing `(x, y)`.
    /// Every cell must receive exactly one sample.
    pub fn from_samples(n_r: usize, n_theta: usize, samples: &[(f64, f64, Complex64)]) -> Result<Self> {
        if n_r == 0 || n_theta == 0 {
            return Err(Error::InvalidSymbol(format!("polar grid {n_r} x {n_theta} is empty")));
        }
        let mut values = alloc::vec![None; n_r * n_theta];
        for (row, &(x, y, v)) in samples.iter().enumerate() {
            let w = Complex64::new(x, y);
            let r = w.norm();
            if !(r < 1.0) {
                return Err(Error::InvalidSymbol(format!("sample {row} at ({x}, {y}) lies outside the disk")));
            }
            let idx = Self::cell_of(n_r, n_theta, w);
            if values[idx].is_some() {
                return Err(Error::InvalidSymbol(format!(
                    "sample {row} at ({x}, {y}) falls in an already filled cell"
                )));
            }
            values[idx] = Some(v);
        }
        let mut out = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(v) => out.push(v),
                None => {
                    return Err(Error::InvalidSymbol(format!(
                        "cell (band {}, sector {}) has no sample",
                        i / n_theta,
                        i % n_theta
                    )))
                }
            }
        }
        Self::new(n_r, n_theta, out)
    }

    fn cell_of(n_r: usize, n_theta: usize, w: Complex64) -> usize {
        let i = ((w.norm() * n_r as f64) as usize).min(n_r - 1);
        let j = ((w.arg().rem_euclid(TAU) / TAU * n_theta as f64) as usize).min(n_theta - 1);
        i * n_theta + j
    }

    /// Center of cell `(i, j)`.
    pub fn cell_center(&self, i: usize, j: usize) -> Complex64 {
        let r = (i as f64 + 0.5) / self.n_r as f64;
        let th = (j as f64 + 0.5) * TAU / self.n_theta as f64;
        Complex64::from_polar(r, th)
    }

    fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_theta == 0 {
            return Err(Error::InvalidSymbol(format!("polar grid {} x {} is empty", self.n_r, self.n_theta)));
        }
        if self.values.len() != self.n_r * self.n_theta {
            return Err(Error::InvalidSymbol(format!(
                "polar grid {} x {} needs {} values, got {}",
                self.n_r,
                self.n_theta,
                self.n_r * self.n_theta,
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidSymbol("sampled values must be finite".into()));
        }
        Ok(())
    }

    fn eval(&self, w: Complex64) -> Complex64 {
        if !(w.norm() < 1.0) {
            return ZERO;
        }
        self.values[Self::cell_of(self.n_r, self.n_theta, w)]
    }

    fn cells(&self) -> Vec<PolarCell> {
        let mut out = Vec::new();
        for i in 0..self.n_r {
            for j in 0..self.n_theta {
                let v = self.values[i * self.n_theta + j];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let lo = TAU * j as f64 / self.n_theta as f64;
                let hi = if j + 1 == self.n_theta {
                    TAU
                } else {
                    TAU * (j + 1) as f64 / self.n_theta as f64
                };
                out.push(PolarCell {
                    coeff: v,
                    m: 0,
                    r_lo: i as f64 / self.n_r as f64,
                    r_hi: (i + 1) as f64 / self.n_r as f64,
                    angular: if self.n_theta == 1 {
                        Angular::Full
                    } else {
                        Angular::Arcs(alloc::vec![(lo, hi)])
                    },
                });
            }
        }
        out
    }
}

/// A bounded measurable coefficient on the disk.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields))]
pub enum Symbol {
    Constant {
        #[cfg_attr(feature = "serde", serde(with = "scalar"))]
        c: Complex64,
    },
    /// `1` on `D(0, s)`.
    DiskIndicator { s: f64 },
    /// `1` on the polar box `r_lo < |w| < r_hi`, `theta_lo < arg w < theta_hi`.
    BoxIndicator {
        r_lo: f64,
        r_hi: f64,
        theta_lo: f64,
        theta_hi: f64,
    },
    /// `(w/|w|)^m`.
    AngularHarmonic { m: i32 },
    /// `conj(K)/|K|` with `K(w) = conj(w)/(1 - z0 conj(w))^3`; the symbol that
    /// saturates the derivative bound at `z0`.
    KernelPhase {
        #[cfg_attr(feature = "serde", serde(with = "scalar"))]
        z0: Complex64,
    },
    Product { factors: Vec<Symbol> },
    /// `base * (1 - 1_Q)` for the polar box `Q`.
    Excluding {
        base: Box<Symbol>,
        r_lo: f64,
        r_hi: f64,
        theta_lo: f64,
        theta_hi: f64,
    },
    Sampled(SampledGrid),
}

impl Symbol {
    pub fn constant(c: f64) -> Self {
        Symbol::Constant {
            c: Complex64::new(c, 0.0),
        }
    }

    pub fn product(factors: Vec<Symbol>) -> Self {
        Symbol::Product { factors }
    }

    /// `self * (1 - 1_Q)`.
    pub fn excluding(self, q: &DiskBox) -> Self {
        Symbol::Excluding {
            base: Box::new(self),
            r_lo: q.inner.r,
            r_hi: q.outer.r,
            theta_lo: q.theta_lo,
            theta_hi: q.theta_hi,
        }
    }

    /// `self * 1_Q`.
    pub fn restricted(self, q: &DiskBox) -> Self {
        Symbol::product(alloc::vec![
            self,
            Symbol::BoxIndicator {
                r_lo: q.inner.r,
                r_hi: q.outer.r,
                theta_lo: q.theta_lo,
                theta_hi: q.theta_hi,
            },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidSymbol(msg));
        match self {
            Symbol::Constant { c } => {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return bad(format!("constant {c} is not finite"));
                }
            }
            Symbol::DiskIndicator { s } => {
                if !(*s > 0.0 && *s <= 1.0) {
                    return bad(format!("disk-indicator radius {s} must lie in (0, 1]"));
                }
            }
            Symbol::BoxIndicator {
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            }
            | Symbol::Excluding {
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
                ..
            } => {
                if !(*r_lo >= 0.0 && r_hi > r_lo && *r_hi <= 1.0) {
                    return bad(format!("box radii ({r_lo}, {r_hi}) must satisfy 0 <= r_lo < r_hi <= 1"));
                }
                if !(theta_hi > theta_lo) || !theta_lo.is_finite() || !theta_hi.is_finite() {
                    return bad(format!("box angles ({theta_lo}, {theta_hi}) must satisfy theta_lo < theta_hi"));
                }
                if let Symbol::Excluding { base, .. } = self {
                    base.validate()?;
                }
            }
            Symbol::AngularHarmonic { .. } => {}
            Symbol::KernelPhase { z0 } => {
                DiskPoint::new(*z0).map_err(|_| Error::InvalidSymbol(format!("kernel-phase center {z0} must lie in the disk")))?;
            }
            Symbol::Product { factors } => {
                if factors.is_empty() {
                    return bad("product needs at least one factor".into());
                }
                for f in factors {
                    f.validate()?;
                }
            }
            Symbol::Sampled(g) => g.validate()?,
        }
        Ok(())
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        match self {
            Symbol::Constant { c } => *c,
            Symbol::DiskIndicator { s } => {
                if w.norm() < *s {
                    ONE
                } else {
                    ZERO
                }
            }
            Symbol::BoxIndicator {
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => {
                let r = w.norm();
                if r >= *r_lo && r < *r_hi && Angular::sector(*theta_lo, *theta_hi).contains(w.arg()) {
                    ONE
                } else {
                    ZERO
                }
            }
            Symbol::AngularHarmonic { m } => {
                if w.norm_sqr() == 0.0 {
                    ZERO
                } else {
                    Complex64::from_polar(1.0, *m as f64 * w.arg())
                }
            }
            Symbol::KernelPhase { z0 } => {
                let d = ONE - z0 * w.conj();
                let k = w.conj() / (d * d * d);
                let n = k.norm();
                if n == 0.0 || !n.is_finite() {
                    ZERO
                } else {
                    k.conj() / n
                }
            }
            Symbol::Product { factors } => factors.iter().fold(ONE, |acc, f| acc * f.eval(w)),
            Symbol::Excluding {
                base,
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => {
                let r = w.norm();
                let inside = r >= *r_lo && r < *r_hi && Angular::sector(*theta_lo, *theta_hi).contains(w.arg());
                if inside {
                    ZERO
                } else {
                    base.eval(w)
                }
            }
            Symbol::Sampled(g) => g.eval(w),
        }
    }

    /// Certificate for `||mu||_inf`: exact for closed-form kinds, the sample
    /// maximum for sampled grids.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Symbol::Constant { c } => c.norm(),
            Symbol::DiskIndicator { .. }
            | Symbol::BoxIndicator { .. }
            | Symbol::AngularHarmonic { .. }
            | Symbol::KernelPhase { .. } => 1.0,
            Symbol::Product { factors } => factors.iter().map(Symbol::sup_bound).product(),
            Symbol::Excluding { base, .. } => base.sup_bound(),
            Symbol::Sampled(g) => g.values.iter().fold(0.0, |m, v| m.max(v.norm())),
        }
    }

    /// Decomposition into polar cells, when the kind admits one.
    pub fn cells(&self) -> Option<Vec<PolarCell>> {
        match self {
            Symbol::Constant { c } => Some(alloc::vec![PolarCell::full(*c, 0, 0.0, 1.0)]),
            Symbol::DiskIndicator { s } => Some(alloc::vec![PolarCell::full(ONE, 0, 0.0, *s)]),
            Symbol::BoxIndicator {
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => Some(alloc::vec![PolarCell {
                coeff: ONE,
                m: 0,
                r_lo: *r_lo,
                r_hi: *r_hi,
                angular: Angular::sector(*theta_lo, *theta_hi),
            }]),
            Symbol::AngularHarmonic { m } => Some(alloc::vec![PolarCell::full(ONE, *m, 0.0, 1.0)]),
            Symbol::KernelPhase { .. } => None,
            Symbol::Product { factors } => {
                let mut acc = alloc::vec![PolarCell::full(ONE, 0, 0.0, 1.0)];
                for f in factors {
                    let cells = f.cells()?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &cells {
                            if let Some(p) = a.product(b) {
                                next.push(p);
                            }
                        }
                    }
                    acc = next;
                }
                Some(acc)
            }
            Symbol::Excluding {
                base,
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => {
                let base = base.cells()?;
                let hole = PolarCell {
                    coeff: -ONE,
                    m: 0,
                    r_lo: *r_lo,
                    r_hi: *r_hi,
                    angular: Angular::sector(*theta_lo, *theta_hi),
                };
                let mut out = base.clone();
                out.extend(base.iter().filter_map(|c| c.product(&hole)));
                Some(out)
            }
            Symbol::Sampled(g) => Some(g.cells()),
        }
    }

    /// Radii and angles across which the symbol may jump.
    pub fn discontinuities(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut radii, mut angles) = (Vec::new(), Vec::new());
        self.collect_discontinuities(&mut radii, &mut angles);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        (radii, angles)
    }

    fn collect_discontinuities(&self, radii: &mut Vec<f64>, angles: &mut Vec<f64>) {
        match self {
            Symbol::Constant { .. } | Symbol::AngularHarmonic { .. } | Symbol::KernelPhase { .. } => {}
            Symbol::DiskIndicator { s } => radii.push(*s),
            Symbol::BoxIndicator {
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => {
                radii.extend([*r_lo, *r_hi]);
                angles.extend([theta_lo.rem_euclid(TAU), theta_hi.rem_euclid(TAU)]);
            }
            Symbol::Excluding {
                base,
                r_lo,
                r_hi,
                theta_lo,
                theta_hi,
            } => {
                base.collect_discontinuities(radii, angles);
                radii.extend([*r_lo, *r_hi]);
                angles.extend([theta_lo.rem_euclid(TAU), theta_hi.rem_euclid(TAU)]);
            }
            Symbol::Product { factors } => {
                for f in factors {
                    f.collect_discontinuities(radii, angles);
                }
            }
            Symbol::Sampled(g) => {
                radii.extend((1..g.n_r).map(|i| i as f64 / g.n_r as f64));
                if g.n_theta > 1 {
                    angles.extend((0..g.n_theta).map(|j| TAU * j as f64 / g.n_theta as f64));
                }
            }
        }
    }

    /// The standard catalog used by the invariant checks.
    pub fn catalog() -> Vec<(&'static str, Symbol)> {
        use core::f64::consts::FRAC_PI_2;
        let checker = {
            let (n_r, n_t) = (6, 12);
            let mut v = Vec::with_capacity(n_r * n_t);
            for i in 0..n_r {
                for j in 0..n_t {
                    v.push(if (i + j) % 2 == 0 { ONE } else { -ONE });
                }
            }
            SampledGrid {
                n_r,
                n_theta: n_t,
                values: v,
            }
        };
        alloc::vec![
            ("constant-one", Symbol::constant(1.0)),
            ("constant-phase", Symbol::Constant { c: Complex64::new(-0.6, 0.8) }),
            ("disk-half", Symbol::DiskIndicator { s: 0.5 }),
            (
                "box",
                Symbol::BoxIndicator {
                    r_lo: 0.5,
                    r_hi: 0.9,
                    theta_lo: 0.0,
                    theta_hi: FRAC_PI_2,
                }
            ),
            (
                "upper-half",
                Symbol::BoxIndicator {
                    r_lo: 0.0,
                    r_hi: 1.0,
                    theta_lo: 0.0,
                    theta_hi: PI,
                }
            ),
            (
                "rim-sector",
                Symbol::BoxIndicator {
                    r_lo: 0.8,
                    r_hi: 1.0,
                    theta_lo: -0.5,
                    theta_hi: 1.0,
                }
            ),
            ("harmonic-1", Symbol::AngularHarmonic { m: 1 }),
            ("harmonic-2", Symbol::AngularHarmonic { m: 2 }),
            ("harmonic-3", Symbol::AngularHarmonic { m: 3 }),
            (
                "harmonic-sector",
                Symbol::product(alloc::vec![
                    Symbol::AngularHarmonic { m: 2 },
                    Symbol::BoxIndicator {
                        r_lo: 0.3,
                        r_hi: 1.0,
                        theta_lo: 0.0,
                        theta_hi: 1.5 * PI,
                    },
                ])
            ),
            (
                "excluding",
                Symbol::Excluding {
                    base: Box::new(Symbol::constant(1.0)),
                    r_lo: 0.6,
                    r_hi: 1.0,
                    theta_lo: 1.0,
                    theta_hi: 2.0,
                }
            ),
            ("checker", Symbol::Sampled(checker)),
        ]
    }
}

#[cfg(feature = "serde")]
mod scalar {
    //! A complex coefficient written either as a number or as `[re, im]`.
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        if c.im == 0.0 {
            s.serialize_f64(c.re)
        } else {
            [c.re, c.im].serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => Complex64::new(x, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        })
    }
}

/// `g = P mu`, evaluated on demand.
#[derive(Clone, Debug)]
pub struct ProjectedFunc {
    symbol: Symbol,
    cells: Option<Vec<PolarCell>>,
    /// Closed-form arc cells in corner form; `cells` keeps the rest.
    corners: CornerSum,
    taylor: Vec<Complex64>,
    spec: QuadratureSpec,
}

impl ProjectedFunc {
    pub fn new(symbol: Symbol, spec: &QuadratureSpec) -> Result<Self> {
        symbol.validate()?;
        spec.validate()?;
        let cells = symbol.cells();
        let taylor = match &cells {
            Some(cells) => taylor_coefficients(cells, series_terms(SERIES_RADIUS)),
            None => Vec::new(),
        };
        let (corners, cells) = match cells {
            Some(cells) => {
                let corners = CornerSum::build(cells.iter().filter(|c| CornerSum::accepts(c)));
                let rest = cells.into_iter().filter(|c| !CornerSum::accepts(c)).collect();
                (corners, Some(rest))
            }
            None => (CornerSum::default(), None),
        };
        Ok(Self {
            symbol,
            cells,
            corners,
            taylor,
            spec: *spec,
        })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    /// Taylor coefficients `(k+1) int conj(w)^k mu dA` of `P mu`, when known.
    pub fn taylor(&self) -> &[Complex64] {
        &self.taylor
    }

    fn series(&self, z: Complex64) -> (Complex64, Complex64) {
        let (mut p, mut dp) = (ZERO, ZERO);
        for &c in self.taylor.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Value and derivative by the angular (cell) route, bypassing the series.
    pub fn by_cells(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.cell_sum(z, true)
    }

    fn cell_sum(&self, z: Complex64, deriv: bool) -> Result<(Complex64, Complex64)> {
        let cells = self
            .cells
            .as_ref()
            .ok_or_else(|| Error::InvalidSymbol("symbol has no polar-cell decomposition".into()))?;
        let (mut v, mut d) = self.corners.project(z, deriv);
        for c in cells {
            let (cv, cd) = c.project(z, &self.spec)?;
            v += cv;
            d += cd;
        }
        Ok((v, d))
    }

    /// Value and derivative by the 2-D quadrature route.
    pub fn by_area_quadrature(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (radii, angles) = self.symbol.discontinuities();
        let known = Breaks {
            radii: &radii,
            angles: &angles,
            angles_at: None,
        };
        project_field_split(|w| self.symbol.eval(w), z, &known, &self.spec)
    }
}

impl Holomorphic for ProjectedFunc {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        DiskPoint::new(z)?;
        if self.cells.is_some() && z.norm() > SERIES_RADIUS {
            return Ok(self.cell_sum(z, false)?.0);
        }
        Ok(self.value_and_deriv(z)?.0)
    }

    fn deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.value_and_deriv(z)?.1)
    }

    fn value_and_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        DiskPoint::new(z)?;
        if self.cells.is_some() {
            if z.norm() <= SERIES_RADIUS {
                Ok(self.series(z))
            } else {
                self.by_cells(z)
            }
        } else {
            self.by_area_quadrature(z)
        }
    }
}

/// Number of Taylor terms so the derivative tail is below 1e-16 on `|z| <= rho`
/// (coefficients are bounded by `2 ||mu||_inf`).
fn series_terms(rho: f64) -> usize {
    let mut k = 1usize;
    while 2.0 * (k + 1) as f64 * rho.powi(k as i32) / ((1.0 - rho) * (1.0 - rho)) > 1e-16 {
        k += 1;
    }
    k
}

fn taylor_coefficients(cells: &[PolarCell], terms: usize) -> Vec<Complex64> {
    (0..=terms)
        .map(|k| {
            let m: Complex64 = cells.iter().map(|c| c.moment(k)).sum();
            m * (k + 1) as f64
        })
        .collect()
}

/// `(P mu)(z)` and `(P mu)'(z)` for an arbitrary bounded field by 2-D
/// adaptive quadrature, refined toward the kernel peak at `z/|z|`.
pub fn project_field<F: Fn(Complex64) -> Complex64>(
    mu: F,
    z: Complex64,
    spec: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    project_field_split(mu, z, &Breaks::default(), spec)
}

/// [`project_field`] with known jump radii and angles of `mu`.
pub fn project_field_split<F: Fn(Complex64) -> Complex64>(
    mu: F,
    z: Complex64,
    known: &Breaks,
    spec: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    DiskPoint::new(z)?;
    let focus = if z.norm_sqr() > 0.0 { Some(Focus::at(z)) } else { None };
    let res = integrate_region_split(
        |w: Complex64| {
            let m = mu(w);
            let d = (ONE - z * w.conj()).inv();
            let d2 = d * d;
            [m * d2, m * 2.0 * w.conj() * d2 * d]
        },
        &Region::Disk { radius: 1.0 },
        Measure::Area,
        focus,
        known,
        spec,
    )?;
    if !res.converged {
        return Err(not_converged(res.value[0], res.err_estimate));
    }
    Ok((res.value[0], res.value[1]))
}

/// `P mu (z)`.
pub fn bergman_project(mu: &Symbol, z: DiskPoint, spec: &QuadratureSpec) -> Result<Complex64> {
    ProjectedFunc::new(mu.clone(), spec)?.value(z.value())
}

/// `(P mu)'(z)`.
pub fn bergman_project_deriv(mu: &Symbol, z: DiskPoint, spec: &QuadratureSpec) -> Result<Complex64> {
    ProjectedFunc::new(mu.clone(), spec)?.deriv(z.value())
}

/// `(P mu)'(z)` through the Möbius change of variables `w = phi(xi)`,
/// `phi(xi) = (z - xi)/(1 - conj(z) xi)`:
/// `2/(1-|z|^2) int (conj(z) - conj(xi))/(1 - conj(z) xi)^2 mu(phi(xi)) dA(xi)`.
///
/// The integration runs in polar coordinates of `xi`; the jump circles and
/// rays of `mu` pull back under `phi` to circles or lines, whose crossings
/// with each integration circle are handed to the rule as breakpoints.
pub fn conjugated_deriv(mu: &Symbol, z: DiskPoint, spec: &QuadratureSpec) -> Result<Complex64> {
    mu.validate()?;
    let zv = z.value();
    let zc = zv.conj();
    let phi = |xi: Complex64| (zv - xi) / (ONE - zc * xi);
    let (radii, angles) = mu.discontinuities();
    let mut curves = Vec::new();
    for &r in radii.iter().filter(|&&r| r > 0.0 && r < 1.0) {
        let w = |k: f64| Complex64::from_polar(r, k * TAU / 3.0);
        curves.push(Curve::through(phi(w(0.0)), phi(w(1.0)), phi(w(2.0))));
    }
    for &a in &angles {
        let e = Complex64::from_polar(1.0, a);
        curves.push(Curve::through(zv, phi(e), phi(-e)));
    }
    let mut curve_radii = Vec::new();
    for c in &curves {
        c.tangent_radii(&mut curve_radii);
    }
    let crossings = |rho: f64| {
        let mut out = Vec::new();
        for c in &curves {
            c.crossings(rho, &mut out);
        }
        out
    };
    let known = Breaks {
        radii: &curve_radii,
        angles: &[],
        angles_at: Some(&crossings),
    };
    let focus = if zv.norm_sqr() > 0.0 { Some(Focus::at(zv)) } else { None };
    let res = integrate_region_split(
        |xi: Complex64| {
            let d = ONE - zc * xi;
            let phi = (zv - xi) / d;
            (zc - xi.conj()) / (d * d) * mu.eval(phi)
        },
        &Region::Disk { radius: 1.0 },
        Measure::Area,
        focus,
        &known,
        spec,
    )?;
    let v = res.require()?;
    Ok(v * (2.0 / z.defect()))
}

/// A circle or a straight line in the plane.
#[derive(Clone, Copy, Debug)]
enum Curve {
    Circle { center: Complex64, radius: f64 },
    Line { point: Complex64, dir: Complex64 },
}

impl Curve {
    /// The circle (or line) through three points.
    fn through(a: Complex64, b: Complex64, c: Complex64) -> Curve {
        let (ab, ac) = (b - a, c - a);
        let cross = ab.re * ac.im - ab.im * ac.re;
        let scale = ab.norm() * ac.norm();
        if cross.abs() <= 1e-12 * scale {
            let d = if ab.norm() > ac.norm() { ab } else { ac };
            return Curve::Line {
                point: a,
                dir: d / d.norm(),
            };
        }
        // circumcenter relative to a
        let (b2, c2) = (ab.norm_sqr(), ac.norm_sqr());
        let ux = (ac.im * b2 - ab.im * c2) / (2.0 * cross);
        let uy = (ab.re * c2 - ac.re * b2) / (2.0 * cross);
        let u = Complex64::new(ux, uy);
        Curve::Circle {
            center: a + u,
            radius: u.norm(),
        }
    }

    /// Radii `rho` at which `|xi| = rho` is tangent to the curve.
    fn tangent_radii(&self, out: &mut Vec<f64>) {
        match *self {
            Curve::Circle { center, radius } => {
                let d = center.norm();
                out.extend([(d - radius).abs(), d + radius]);
            }
            Curve::Line { point, dir } => {
                let q = point - dir * (point.re * dir.re + point.im * dir.im);
                out.push(q.norm());
            }
        }
    }

    /// Angles where the curve crosses `|xi| = rho`.
    fn crossings(&self, rho: f64, out: &mut Vec<f64>) {
        match *self {
            Curve::Circle { center, radius } => {
                let d = center.norm();
                if d == 0.0 || !(d < rho + radius && rho < d + radius && radius < d + rho) {
                    return;
                }
                let cos = (rho * rho + d * d - radius * radius) / (2.0 * rho * d);
                let half = cos.clamp(-1.0, 1.0).acos();
                let base = center.arg();
                out.extend([base - half, base + half]);
            }
            Curve::Line { point, dir } => {
                let q = point - dir * (point.re * dir.re + point.im * dir.im);
                let h = q.norm();
                if h >= rho {
                    return;
                }
                let t = (rho * rho - h * h).sqrt();
                out.extend([(q + dir * t).arg(), (q - dir * t).arg()]);
            }
        }
    }
}

/// Truncated Perälä series `2 sum_k [(3/2)_k]^2 / ((3/2 + k)(k!)^2) x^k` with
/// its tail bound, and the closed bound `8 pi^-1 / (1 - x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeralaBound {
    pub x: f64,
    pub series_value: f64,
    pub tail_bound: f64,
    pub closed_bound: f64,
    pub terms: usize,
}

/// Evaluates the series majorant of `int |w| |1 - z conj(w)|^-3 dA` at
/// `x = |z|^2`. The term ratio `rho_k x` decreases in `k`, so once it drops
/// below 1 the remaining terms are dominated by a geometric series.
pub fn perala_series_bound(x: f64) -> Result<PeralaBound> {
    if !(x >= 0.0 && x < 1.0) {
        return Err(crate::error::invalid("x", "need 0 <= x < 1"));
    }
    const MAX_TERMS: usize = 200_000_000;
    let ratio = |k: f64| {
        let q = (k + 1.5) / (k + 1.0);
        q * q * (k + 1.5) / (k + 2.5)
    };
    let mut coeff = 2.0 / 3.0;
    let mut xk = 1.0;
    let mut sum = 0.0;
    let mut carry = 0.0;
    let mut k = 0usize;
    loop {
        let term = coeff * xk;
        let t = sum + term;
        carry += (sum - t) + term;
        sum = t;
        let next_ratio = ratio(k as f64) * x;
        let next = term * next_ratio;
        let total = sum + carry;
        if next <= 1e-17 * total {
            let following = ratio(k as f64 + 1.0) * x;
            if following < 1.0 {
                let tail = next / (1.0 - following);
                let closed_bound = 8.0 / PI / (1.0 - x);
                let series_value = 2.0 * total;
                if series_value > closed_bound * (1.0 + 1e-12) {
                    return Err(Error::InvariantViolation(format!(
                        "Perala series {series_value} exceeds closed bound {closed_bound} at x = {x}"
                    )));
                }
                return Ok(PeralaBound {
                    x,
                    series_value,
                    tail_bound: 2.0 * tail,
                    closed_bound,
                    terms: k + 1,
                });
            }
        }
        if k >= MAX_TERMS || next == 0.0 && x > 0.0 {
            return Err(Error::NotConverged {
                value: 2.0 * total,
                err_estimate: f64::INFINITY,
            });
        }
        if x == 0.0 {
            return Ok(PeralaBound {
                x,
                series_value: 2.0 * total,
                tail_bound: 0.0,
                closed_bound: 8.0 / PI,
                terms: 1,
            });
        }
        coeff *= ratio(k as f64);
        xk *= x;
        // keep the running product in range
        if xk < 1e-200 {
            coeff *= xk;
            xk = 1.0;
        }
        k += 1;
    }
}

/// `2 int_{rho < |xi| < 1} |1 - conj(z) xi|^-1 dA(xi)`.
pub fn localization_bound(z: DiskPoint, rho: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(crate::error::invalid("rho", "need 0 < rho < 1"));
    }
    let zc = z.value().conj();
    let focus = if zc.norm_sqr() > 0.0 { Some(Focus::at(z.value())) } else { None };
    let res = integrate_region_focused(
        |xi: Complex64| (ONE - zc * xi).norm().recip(),
        &Region::annulus(rho, 1.0),
        Measure::Area,
        focus,
        spec,
    )?;
    Ok(2.0 * res.require()?)
}

/// Per-`rho` supremum of the localization integral over `|z|` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationRow {
    pub rho: f64,
    pub sup_value: f64,
    pub argmax_radius: f64,
    /// `sup_value / ((1 - rho) log(1/(1 - rho)))`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationFit {
    pub rows: Vec<LocalizationRow>,
    /// Smallest constant `C` with `value <= C (1-rho) log(1/(1-rho))` on
    /// every sample.
    pub constant: f64,
}

/// Sweeps `rho` and `|z|` (the integral depends on `|z|` only) and fits the
/// constant of the `(1 - rho) log(1/(1 - rho))` law.
pub fn fit_localization_constant(rhos: &[f64], radii: &[f64], spec: &QuadratureSpec) -> Result<LocalizationFit> {
    let mut rows = Vec::with_capacity(rhos.len());
    let mut constant: f64 = 0.0;
    for &rho in rhos {
        let scale = (1.0 - rho) * (1.0 - rho).recip().ln();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &r in radii {
            let v = localization_bound(DiskPoint::new(Complex64::new(r, 0.0))?, rho, spec)?;
            if v > best.0 {
                best = (v, r);
            }
        }
        constant = constant.max(best.0 / scale);
        rows.push(LocalizationRow {
            rho,
            sup_value: best.0,
            argmax_radius: best.1,
            normalized: best.0 / scale,
        });
    }
    Ok(LocalizationFit { rows, constant })
}

/// Result of probing `(1-|z|^2) |(P mu_{Q^c})'(z)|` over the shrunken box.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedBound {
    pub sup: f64,
    pub argmax: Complex64,
    /// Hyperbolic size `L` of the box.
    pub size: f64,
    /// `sup / (L e^{-eps L})`.
    pub ratio: f64,
    pub samples: usize,
    /// Neighbouring samples differ by more than 10%.
    pub coarse: bool,
}

/// Supremum over a sample grid in `(1-eps)Q` of `(1-|z|^2)|(P mu_{Q^c})'(z)|`
/// where `mu_{Q^c} = mu (1 - 1_Q)`. `eps = 1/2` degenerates to the center of
/// `Q` (the log-midpoint), which is the only point at distance `L/2` from the
/// complement.
pub fn localized_box_deriv_bound(
    q: &DiskBox,
    mu: &Symbol,
    eps: f64,
    samples_per_side: usize,
    spec: &QuadratureSpec,
) -> Result<LocalizedBound> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(crate::error::invalid("eps", "need 0 < eps <= 1/2"));
    }
    let rect = q.to_log_rect()?;
    let size = rect.size();
    let g = ProjectedFunc::new(mu.clone().excluding(q), spec)?;
    let points: Vec<Vec<Complex64>> = if eps == 0.5 {
        alloc::vec![alloc::vec![rect.center()]]
    } else {
        let inner = match crate::geometry::shrink_box(&HypBox::HalfPlane(rect), eps)? {
            HypBox::HalfPlane(r) => r,
            HypBox::Disk(_) => unreachable!("half-plane boxes shrink to half-plane boxes"),
        };
        let n = samples_per_side.max(2);
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                let y = inner.y_lo * (inner.y_hi / inner.y_lo).powf(s);
                (0..n)
                    .map(|j| {
                        let x = inner.x_lo + (inner.x_hi - inner.x_lo) * j as f64 / (n - 1) as f64;
                        Complex64::new(x, y)
                    })
                    .collect()
            })
            .collect()
    };
    let mut values = Vec::with_capacity(points.len());
    let mut best = (f64::NEG_INFINITY, ZERO);
    for row in &points {
        let mut vals = Vec::with_capacity(row.len());
        for &zeta in row {
            let z = LogCoord::new(zeta)?.to_disk();
            let v = crate::holo::bloch_density(&g, z.value())?;
            if v > best.0 {
                best = (v, z.value());
            }
            vals.push(v);
        }
        values.push(vals);
    }
    let mut coarse = false;
    let differs = |a: f64, b: f64| (a - b).abs() > 0.1 * a.abs().max(b.abs());
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if j + 1 < row.len() && differs(v, row[j + 1]) {
                coarse = true;
            }
            if i + 1 < values.len() && differs(v, values[i + 1][j]) {
                coarse = true;
            }
        }
    }
    let n = points.iter().map(Vec::len).sum();
    Ok(LocalizedBound {
        sup: best.0,
        argmax: best.1,
        size,
        ratio: best.0 / (size * (-eps * size).exp()),
        samples: n,
        coarse,
    })
}

/// The reduced half-plane kernel against the exact disk value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlaneComparison {
    pub zeta: Complex64,
    /// `-4 pi^3 Im(zeta) int_{D ∩ upper half-disk} (i pi (zeta - conj(xi)))^-3 mu(e^{i pi xi}) dA(xi)`.
    pub reduced: Complex64,
    /// `(1 - |z|^2) (P mu)'(z)` at `z = e^{i pi zeta}`.
    pub exact: Complex64,
    pub discrepancy: f64,
}

/// Compares the leading singular part of `(1-|z|^2)(P mu)'(z)` in logarithmic
/// coordinates with the exact value. The area element is normalized
/// (`dA = dx dy / pi`) and carries the Jacobian `pi^2 |w|^2` of `w = e^{i pi xi}`,
/// which gives the prefactor `-4 pi^3`.
pub fn halfplane_kernel_deriv(mu: &Symbol, zeta: LogCoord, spec: &QuadratureSpec) -> Result<HalfPlaneComparison> {
    let zv = zeta.value();
    if zv.norm() > 0.5 {
        return Err(crate::error::invalid("zeta", "the reduction holds for |zeta| <= 1/2"));
    }
    mu.validate()?;
    let ipi = Complex64::new(0.0, PI);
    let res = integrate_under_graph(
        |xi: Complex64| {
            let x = ipi * (zv - xi.conj());
            let w = (ipi * xi).exp();
            mu.eval(w) / (x * x * x)
        },
        -1.0,
        1.0,
        |x: f64| (1.0 - x * x).max(0.0).sqrt(),
        zv.re,
        zv.im,
        spec,
    )?;
    if !res.converged {
        return Err(not_converged(res.value, res.err_estimate));
    }
    // dx dy = pi dA
    let reduced = res.value * (-4.0 * PI * PI * zv.im);
    let z = zeta.to_disk();
    let g = ProjectedFunc::new(mu.clone(), spec)?;
    let exact = g.deriv(z.value())? * z.defect();
    Ok(HalfPlaneComparison {
        zeta: zv,
        reduced,
        exact,
        discrepancy: (reduced - exact).norm(),
    })
}

/// A box of hyperbolic size `l` in the disk: the log-coordinate image of the
/// prototype dilated by `scale` and centered at angle `center_angle`.
pub fn disk_box_of_size(l: f64, scale: f64, center_angle: f64) -> Result<DiskBox> {
    if !(l > 0.0 && scale > 0.0) {
        return Err(crate::error::invalid("l", "box size and scale must be positive"));
    }
    let width = scale * l;
    if width >= 2.0 {
        return Err(crate::error::invalid("scale", "box wider than the circle"));
    }
    let x0 = center_angle / PI - 0.5 * width;
    let rect = HalfPlaneRect {
        x_lo: x0,
        x_hi: x0 + width,
        y_lo: scale * (-l).exp(),
        y_hi: scale,
    };
    Ok(DiskBox::from_log_rect(0, 0, &rect))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn pt(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn radial_kernels_agree_across_branch() {
        // series branch vs closed branch at the switch radius
        for a in [Complex64::new(0.49, 0.0), Complex64::new(0.3, 0.39), Complex64::new(0.0, -0.5)] {
            let (s2, s3) = radial_kernels(a, 0.2, 1.0);
            let b = a * 1.000_000_1;
            let (c2, c3) = radial_kernels(b, 0.2, 1.0);
            assert!((s2 - c2).norm() < 1e-6, "{s2} {c2}");
            assert!((s3 - c3).norm() < 1e-6, "{s3} {c3}");
        }
    }

    #[test]
    fn closed_form_arcs_match_quadrature() {
        let tight = QuadratureSpec::with_tol(1e-13);
        for m in [0, 1, 2, 5] {
            for z in [Complex64::new(0.95, 0.2), Complex64::new(-0.1, 0.3), Complex64::new(0.0, -0.999)] {
                for (lo, hi) in [(0.0, 1.0), (0.1, 0.5), (0.6, 0.999)] {
                    for (a, b) in [(0.3, 2.0), (4.0, 6.2), (1.0, 1.0 + 1e-3)] {
                        let q = integrate_arc(
                            |e: Complex64| {
                                let (r2, r3) = radial_kernels(z * e.conj(), lo, hi);
                                let rot = e.powi(m);
                                [rot * r2, rot * e.conj() * r3]
                            },
                            1.0,
                            a,
                            b,
                            Some(Focus::at(z)),
                            &tight,
                        )
                        .unwrap();
                        let h = arc_means(z, hi, m, a, b);
                        let l = arc_means(z, lo, m, a, b);
                        let scale = q.value[1].norm().max(1.0);
                        let (dv, dd) = (h[0] - l[0] - q.value[0], h[1] - l[1] - q.value[1]);
                        assert!(dv.norm() < 1e-11 * scale, "m={m} {z} {lo} {hi} {a} {b}: {dv}");
                        assert!(dd.norm() < 1e-11 * scale, "m={m} {z} {lo} {hi} {a} {b}: {dd}");
                    }
                }
            }
        }
    }

    #[test]
    fn corner_form_matches_cell_sum() {
        for (name, mu) in Symbol::catalog() {
            let g = ProjectedFunc::new(mu.clone(), &spec()).unwrap();
            for z in [Complex64::new(0.93, 0.2), Complex64::new(-0.4, -0.91)] {
                let (v, d) = g.by_cells(z).unwrap();
                let (mut v2, mut d2) = (ZERO, ZERO);
                for c in mu.cells().unwrap() {
                    let (a, b) = c.project(z, &spec()).unwrap();
                    v2 += a;
                    d2 += b;
                }
                assert!((v - v2).norm() < 1e-12 && (d - d2).norm() < 1e-11 * d.norm().max(1.0), "{name}");
            }
        }
    }

    #[test]
    fn constants_are_fixed() {
        let one = Symbol::constant(1.0);
        for z in [pt(0.0, 0.0), pt(0.5, -0.3), pt(0.95, 0.0)] {
            let v = bergman_project(&one, z, &spec()).unwrap();
            assert!((v - ONE).norm() < 1e-12);
            let d = bergman_project_deriv(&one, z, &spec()).unwrap();
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn disk_indicator_projects_to_constant() {
        let s = 0.7;
        let mu = Symbol::DiskIndicator { s };
        for z in [pt(0.1, 0.2), pt(-0.93, 0.1)] {
            let v = bergman_project(&mu, z, &spec()).unwrap();
            assert!((v - s * s).norm() < 1e-10);
        }
    }

    #[test]
    fn conjugated_route_at_origin() {
        let mu = Symbol::AngularHarmonic { m: 1 };
        let d = conjugated_deriv(&mu, DiskPoint::origin(), &QuadratureSpec::with_tol(1e-9)).unwrap();
        assert!((d - Complex64::new(4.0 / 3.0, 0.0)).norm() < 1e-8, "{d}");
    }

    #[test]
    fn perala_at_zero() {
        let b = perala_series_bound(0.0).unwrap();
        assert!((b.series_value - 4.0 / 3.0).abs() < 1e-15);
        assert!((b.closed_bound - 8.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn perala_rejects_boundary() {
        assert!(perala_series_bound(1.0).is_err());
        assert!(perala_series_bound(-0.1).is_err());
    }

    #[test]
    fn localization_at_origin() {
        for rho in [0.3, 0.9] {
            let v = localization_bound(DiskPoint::origin(), rho, &spec()).unwrap();
            assert!((v - 2.0 * (1.0 - rho * rho)).abs() < 1e-10);
        }
    }

    #[test]
    fn localized_bound_vanishes_when_mu_lives_in_q() {
        let q = disk_box_of_size(6.0, 0.1, 1.0).unwrap();
        let mu = Symbol::constant(1.0).restricted(&q);
        let b = localized_box_deriv_bound(&q, &mu, 0.25, 3, &spec()).unwrap();
        assert!(b.sup < 1e-12, "{}", b.sup);
    }

    #[test]
    fn arcs_wrap_around_zero() {
        let a = Angular::sector(-0.5, 0.5);
        assert!(a.contains(0.0));
        assert!(a.contains(TAU - 0.1));
        assert!(!a.contains(1.0));
        let b = Angular::sector(0.25, 3.0);
        match a.intersect(&b) {
            Angular::Arcs(v) => assert_eq!(v, alloc::vec![(0.25, 0.5)]),
            Angular::Full => panic!(),
        }
    }

    #[test]
    fn sampled_grid_requires_every_cell() {
        let samples = [(0.25, 0.0, ONE)];
        assert!(SampledGrid::from_samples(2, 2, &samples).is_err());
        let g = SampledGrid::new(1, 1, alloc::vec![ONE]).unwrap();
        assert_eq!(Symbol::Sampled(g).eval(Complex64::new(0.3, 0.3)), ONE);
    }

    #[test]
    fn halfplane_rejects_far_points() {
        let z = LogCoord::new(Complex64::new(0.6, 0.1)).unwrap();
        assert!(halfplane_kernel_deriv(&Symbol::constant(1.0), z, &spec()).is_err());
    }
}
