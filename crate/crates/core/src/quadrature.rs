//! Adaptive integration over circles, disks, annuli and boxes.
//!
//! Every rule here is built from one primitive: a 16-point Gauss–Legendre
//! panel that is bisected adaptively. A panel carries its coarse value and
//! the value on its two halves; the difference is the error estimate. The
//! panel with the largest estimate is split first (global strategy), and the
//! final value is summed in ascending panel position with Neumaier
//! compensation, so results do not depend on refinement order.
//!
//! All measures are normalized: `ds` has total mass 1 on the unit circle and
//! `dA = dx dy / pi` has total mass 1 on the unit disk. The weighted measure
//! `dA/(1-|z|^2)` is integrated in the variable `tau = -log(1-u^2)`, in which
//! `2u du / (1-u^2) = d tau`, so the weight never has to be evaluated near
//! `|z| = 1`.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights of order 16 on [-1, 1] (positive half).
const GL16: [(f64, f64); 8] = [
    (0.989_400_934_991_649_932_6, 0.027_152_459_411_754_094_852),
    (0.944_575_023_073_232_576_08, 0.062_253_523_938_647_892_863),
    (0.865_631_202_387_831_743_88, 0.095_158_511_682_492_784_81),
    (0.755_404_408_355_003_033_9, 0.124_628_971_255_533_872_05),
    (0.617_876_244_402_643_748_45, 0.149_595_988_816_576_732_08),
    (0.458_016_777_657_227_386_34, 0.169_156_519_395_002_538_19),
    (0.281_603_550_779_258_913_23, 0.182_603_415_044_923_588_87),
    (0.095_012_509_837_637_440_185, 0.189_450_610_455_068_496_29),
];

/// Nodes and weights of the 16-point Gauss–Legendre rule on `[a, b]`.
pub(crate) fn gauss_legendre16(a: f64, b: f64) -> [(f64, f64); 16] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 16];
    for (i, &(x, w)) in GL16.iter().enumerate() {
        out[2 * i] = (c - h * x, h * w);
        out[2 * i + 1] = (c + h * x, h * w);
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Values that can be integrated: reals, complex numbers and fixed-size
/// arrays of either (several integrands sharing one set of evaluations).
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn plus(self, other: Self) -> Self;
    fn minus(self, other: Self) -> Self;
    fn scaled(self, factor: f64) -> Self;
    /// Largest absolute component.
    fn magnitude(&self) -> f64;
    fn all_finite(&self) -> bool;
    /// Neumaier step: `sum + carry` tracks the exact running total.
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self);
}

fn neumaier(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *carry += (*sum - t) + x;
    } else {
        *carry += (x - t) + *sum;
    }
    *sum = t;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn minus(self, other: Self) -> Self {
        self - other
    }
    fn scaled(self, factor: f64) -> Self {
        self * factor
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self) {
        neumaier(sum, carry, x);
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn minus(self, other: Self) -> Self {
        self - other
    }
    fn scaled(self, factor: f64) -> Self {
        self * factor
    }
    fn magnitude(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self) {
        neumaier(&mut sum.re, &mut carry.re, x.re);
        neumaier(&mut sum.im, &mut carry.im, x.im);
    }
}

impl<T: QuadValue, const N: usize> QuadValue for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn plus(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.plus(b);
        }
        self
    }
    fn minus(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.minus(b);
        }
        self
    }
    fn scaled(mut self, factor: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scaled(factor);
        }
        self
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.magnitude()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(QuadValue::all_finite)
    }
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self) {
        for i in 0..N {
            T::compensated_add(&mut sum[i], &mut carry[i], x[i]);
        }
    }
}

/// Accumulates a deterministic compensated sum.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: QuadValue> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: QuadValue> CompensatedSum<T> {
    pub fn add(&mut self, x: T) {
        T::compensated_add(&mut self.sum, &mut self.carry, x);
    }

    pub fn total(&self) -> T {
        self.sum.plus(self.carry)
    }
}

/// Tolerances and refinement budget for the adaptive rules.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth of any panel.
    pub max_subdivisions: u32,
    /// Maximum number of live panels in a single 1-D integration.
    pub max_panels: usize,
    /// Ratio of the geometric breakpoints placed toward `|z| = 1` and
    /// around kernel peaks.
    pub boundary_ratio: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 40,
            max_panels: 4000,
            boundary_ratio: 0.5,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(crate::error::invalid("tolerance", "must be positive"));
        }
        if !(self.boundary_ratio > 0.0 && self.boundary_ratio < 1.0) {
            return Err(crate::error::invalid("boundary_ratio", "must lie in (0, 1)"));
        }
        if self.max_panels < 1 || self.max_subdivisions < 1 {
            return Err(crate::error::invalid("max_subdivisions", "budget must be positive"));
        }
        Ok(())
    }

    /// Tolerances handed to the inner integral of a nested rule whose outer
    /// variable has total weight `outer_weight`.
    pub(crate) fn inner(&self, outer_weight: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * 0.1 / outer_weight.max(1.0),
            rel_tol: self.rel_tol * 0.1,
            ..*self
        }
    }

    fn target(&self, value_magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value_magnitude)
    }
}

/// Value of an integral together with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralResult<T> {
    pub value: T,
    pub err_estimate: f64,
    pub cells_used: usize,
    pub converged: bool,
}

impl<T: QuadValue> IntegralResult<T> {
    fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value.scaled(factor),
            err_estimate: self.err_estimate * factor.abs(),
            ..self
        }
    }
}

impl IntegralResult<f64> {
    /// The value, or an error when the budget ran out first.
    pub fn require(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NotConverged {
                value: self.value,
                err_estimate: self.err_estimate,
            })
        }
    }
}

impl IntegralResult<Complex64> {
    pub fn require(self) -> Result<Complex64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NotConverged {
                value: self.value.norm(),
                err_estimate: self.err_estimate,
            })
        }
    }
}

struct Panel<T> {
    a: f64,
    b: f64,
    depth: u32,
    left: T,
    right: T,
    err: f64,
}

impl<T: QuadValue> Panel<T> {
    fn value(&self) -> T {
        self.left.plus(self.right)
    }
}

struct ByError<T>(Panel<T>);

impl<T> PartialEq for ByError<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for ByError<T> {}
impl<T> PartialOrd for ByError<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for ByError<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .total_cmp(&other.0.err)
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

fn gauss16<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
) -> core::result::Result<T, f64> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = T::zero();
    for &(x, w) in GL16.iter() {
        let lo = f(c - h * x);
        let hi = f(c + h * x);
        if !lo.all_finite() {
            return Err(c - h * x);
        }
        if !hi.all_finite() {
            return Err(c + h * x);
        }
        acc = acc.plus(lo.plus(hi).scaled(w));
    }
    Ok(acc.scaled(h))
}

fn make_panel<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
    depth: u32,
    coarse: T,
) -> core::result::Result<Panel<T>, f64> {
    let m = 0.5 * (a + b);
    let left = gauss16(f, a, m)?;
    let right = gauss16(f, m, b)?;
    let err = left.plus(right).minus(coarse).magnitude();
    Ok(Panel {
        a,
        b,
        depth,
        left,
        right,
        err,
    })
}

/// Global adaptive Gauss–Legendre integration over the sorted breakpoints.
/// On a non-finite integrand value the offending abscissa is returned.
pub(crate) fn adaptive<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> core::result::Result<IntegralResult<T>, f64> {
    let mut heap: BinaryHeap<ByError<T>> = BinaryHeap::new();
    let mut frozen: Vec<Panel<T>> = Vec::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let coarse = gauss16(&mut f, a, b)?;
        let p = make_panel(&mut f, a, b, 0, coarse)?;
        total = total.plus(p.value());
        total_err += p.err;
        heap.push(ByError(p));
    }
    let mut cells = heap.len();
    let mut exhausted = false;
    while let Some(ByError(worst)) = heap.pop() {
        if total_err <= spec.target(total.magnitude()) {
            heap.push(ByError(worst));
            break;
        }
        if worst.depth >= spec.max_subdivisions {
            exhausted = true;
            frozen.push(worst);
            continue;
        }
        if cells >= spec.max_panels {
            exhausted = true;
            heap.push(ByError(worst));
            break;
        }
        let m = 0.5 * (worst.a + worst.b);
        let lp = make_panel(&mut f, worst.a, m, worst.depth + 1, worst.left)?;
        let rp = make_panel(&mut f, m, worst.b, worst.depth + 1, worst.right)?;
        total = total.minus(worst.value()).plus(lp.value()).plus(rp.value());
        total_err += lp.err + rp.err - worst.err;
        cells += 1;
        heap.push(ByError(lp));
        heap.push(ByError(rp));
    }
    let mut panels: Vec<Panel<T>> = heap.into_iter().map(|p| p.0).collect();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = CompensatedSum::default();
    let mut err = CompensatedSum::<f64>::default();
    for p in &panels {
        value.add(p.value());
        err.add(p.err);
    }
    let value = value.total();
    let err_estimate = err.total();
    let converged = !exhausted || err_estimate <= spec.target(value.magnitude());
    Ok(IntegralResult {
        value,
        err_estimate,
        cells_used: panels.len(),
        converged: converged && err_estimate <= spec.target(value.magnitude()),
    })
}

/// Integrates `f` over `[a, b]` (plus optional interior breakpoints).
pub fn integrate_interval<T: QuadValue, F: FnMut(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    interior: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    let mut breaks = Vec::with_capacity(interior.len() + 2);
    breaks.push(a);
    breaks.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    adaptive(f, &breaks, spec).map_err(|x| Error::NonFinite {
        at: Complex64::new(x, 0.0),
    })
}

/// A direction and radius around which an integrand is sharply peaked, e.g.
/// the point `z` for the kernel `(1 - z conj(w))^-2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Focus {
    pub angle: f64,
    pub radius: f64,
}

impl Focus {
    pub fn at(z: Complex64) -> Self {
        Self {
            angle: z.arg(),
            radius: z.norm(),
        }
    }

    /// Angular width of the peak seen on a circle of radius `r`.
    fn width_on(&self, r: f64) -> f64 {
        let gap = (1.0 - self.radius * r).abs();
        gap.max(1e-15)
    }
}

/// Adds `center +- width * ratio^-j` for j = 0, 1, ... inside `(lo, hi)`.
fn push_geometric_around(
    breaks: &mut Vec<f64>,
    center: f64,
    width: f64,
    ratio: f64,
    lo: f64,
    hi: f64,
) {
    let mut d = width;
    let span = hi - lo;
    while d < span {
        for x in [center - d, center + d] {
            if x > lo && x < hi {
                breaks.push(x);
            }
        }
        d /= ratio;
    }
}

fn finish_breaks(mut breaks: Vec<f64>) -> Vec<f64> {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    breaks
}

/// Circle mean `(1/2pi) int_0^{2pi} f(r e^{i theta}) d theta`, i.e. the
/// integral against normalized arc length on `T(0, r)`.
pub fn integrate_circle<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: F,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    integrate_arc(f, r, 0.0, TAU, None, spec)
}

/// Circle mean of an integrand that is smooth (real-analytic) on the circle,
/// e.g. built from holomorphic functions. The periodic trapezoid rule
/// converges geometrically there, so the node count is doubled from 32 until
/// two successive estimates agree to the tolerance.
pub fn integrate_circle_smooth<T: QuadValue, F: FnMut(Complex64) -> T>(
    mut f: F,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(crate::error::invalid("r", "radius must be finite and nonnegative"));
    }
    const MAX_NODES: usize = 1 << 16;
    let mut eval = |theta: f64| -> Result<T> {
        let v = f(Complex64::from_polar(r, theta));
        if v.all_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                at: Complex64::from_polar(r, theta),
            })
        }
    };
    let mut n = 32usize;
    let mut sum = T::zero();
    let mut carry = T::zero();
    for j in 0..n {
        T::compensated_add(&mut sum, &mut carry, eval(TAU * j as f64 / n as f64)?);
    }
    let mut estimate = sum.plus(carry).scaled(1.0 / n as f64);
    loop {
        // the new nodes sit halfway between the old ones
        for j in 0..n {
            T::compensated_add(&mut sum, &mut carry, eval(TAU * (j as f64 + 0.5) / n as f64)?);
        }
        n *= 2;
        let next = sum.plus(carry).scaled(1.0 / n as f64);
        let err = next.minus(estimate).magnitude();
        estimate = next;
        let done = err <= spec.target(next.magnitude());
        if done || n >= MAX_NODES {
            return Ok(IntegralResult {
                value: next,
                err_estimate: err,
                cells_used: n,
                converged: done,
            });
        }
    }
}

/// Disk integral (normalized area measure) of an integrand that is smooth
/// on every circle; inner circle means use [`integrate_circle_smooth`].
pub fn integrate_disk_smooth<T: QuadValue, F: FnMut(Complex64) -> T>(
    mut f: F,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(crate::error::invalid("r", "radius must lie in (0, 1]"));
    }
    polar_with(&mut f, Radial::Area { lo: 0.0, hi: r }, 0.0, TAU, None, &Breaks::default(), spec, true)
}

/// `(1/2pi) int_{theta_lo}^{theta_hi} f(r e^{i theta}) d theta`. When a focus
/// is given, breakpoints are placed geometrically around its direction.
pub fn integrate_arc<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: F,
    r: f64,
    theta_lo: f64,
    theta_hi: f64,
    focus: Option<Focus>,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    arc_impl(f, r, theta_lo, theta_hi, focus, &[], spec)
}

fn arc_impl<T: QuadValue, F: FnMut(Complex64) -> T>(
    mut f: F,
    r: f64,
    theta_lo: f64,
    theta_hi: f64,
    focus: Option<Focus>,
    angles: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(crate::error::invalid("r", "radius must be finite and nonnegative"));
    }
    let width = theta_hi - theta_lo;
    if !(width >= 0.0) {
        return Err(crate::error::invalid("theta_hi", "arc must have theta_hi >= theta_lo"));
    }
    if width == 0.0 {
        return Ok(IntegralResult {
            value: T::zero(),
            err_estimate: 0.0,
            cells_used: 0,
            converged: true,
        });
    }
    let full = width >= TAU * (1.0 - 1e-15);
    let (lo, hi, breaks) = match focus {
        Some(fc) if full => {
            // Rotate so the peak sits on the seam; both ends get refined.
            let lo = fc.angle;
            let hi = fc.angle + TAU;
            let mut b = Vec::new();
            for j in 0..=8 {
                b.push(lo + TAU * j as f64 / 8.0);
            }
            let w = fc.width_on(r);
            push_geometric_around(&mut b, lo, w, spec.boundary_ratio, lo, hi);
            push_geometric_around(&mut b, hi, w, spec.boundary_ratio, lo, hi);
            (lo, hi, b)
        }
        _ => {
            let n = ((8.0 * width / TAU).ceil() as usize).max(1);
            let mut b: Vec<f64> = (0..=n)
                .map(|j| theta_lo + width * j as f64 / n as f64)
                .collect();
            if let Some(fc) = focus {
                // Representative of the focus angle closest to the arc.
                let mid = 0.5 * (theta_lo + theta_hi);
                let c = fc.angle + TAU * ((mid - fc.angle) / TAU).round();
                if c > theta_lo && c < theta_hi {
                    b.push(c);
                }
                let w = fc.width_on(r);
                push_geometric_around(&mut b, c, w, spec.boundary_ratio, theta_lo, theta_hi);
            }
            (theta_lo, theta_hi, b)
        }
    };
    let mut breaks = breaks;
    for &a in angles {
        let t = lo + (a - lo).rem_euclid(TAU);
        if t > lo && t < hi {
            breaks.push(t);
        }
    }
    let breaks = finish_breaks(breaks);
    let res = adaptive(|th| f(Complex64::from_polar(r, th)), &breaks, spec)
        .map_err(|th| Error::NonFinite {
            at: Complex64::from_polar(r, th),
        })?;
    Ok(res.scale(1.0 / TAU))
}

/// Which of the three normalized measures to integrate against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Measure {
    /// `ds`, normalized arc length.
    ArcLength,
    /// `dA = dx dy / pi`.
    Area,
    /// `dA / (1 - |z|^2)` on the disk, `dA / Im zeta` on the half-plane.
    WeightedArea,
}

impl Measure {
    fn name(self) -> &'static str {
        match self {
            Measure::ArcLength => "ds",
            Measure::Area => "dA",
            Measure::WeightedArea => "dA_-1",
        }
    }
}

/// `-log(1 - r^2)`, the weighted area of `D(0, r)`.
pub fn weighted_level(r: f64) -> f64 {
    -((1.0 - r) * (1.0 + r)).ln()
}

/// Radius `u` with `-log(1 - u^2) = tau`.
pub fn radius_of_level(tau: f64) -> f64 {
    (-(-tau).exp_m1()).sqrt()
}

/// A circle radius paired with its weighted level `-log(1-r^2)`, which can
/// be supplied exactly when `r` itself has lost precision near 1.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialLevel {
    pub r: f64,
    pub lambda: f64,
}

impl RadialLevel {
    pub fn from_radius(r: f64) -> Self {
        Self {
            r,
            lambda: weighted_level(r),
        }
    }

    pub fn from_lambda(lambda: f64) -> Self {
        Self {
            r: radius_of_level(lambda),
            lambda,
        }
    }
}

/// Integration domains in the disk model and in the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Disk {
        radius: f64,
    },
    Annulus {
        inner: RadialLevel,
        outer: RadialLevel,
    },
    /// Polar box `inner < |z| < outer`, `theta_lo < arg z < theta_hi`.
    DiskBox {
        inner: RadialLevel,
        outer: RadialLevel,
        theta_lo: f64,
        theta_hi: f64,
    },
    /// Rectangle `x_lo < Re zeta < x_hi`, `y_lo < Im zeta < y_hi` in H.
    HalfPlaneBox {
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
    },
}

impl Region {
    pub fn annulus(r_lo: f64, r_hi: f64) -> Self {
        Region::Annulus {
            inner: RadialLevel::from_radius(r_lo),
            outer: RadialLevel::from_radius(r_hi),
        }
    }

    pub fn disk_box(r_lo: f64, r_hi: f64, theta_lo: f64, theta_hi: f64) -> Self {
        Region::DiskBox {
            inner: RadialLevel::from_radius(r_lo),
            outer: RadialLevel::from_radius(r_hi),
            theta_lo,
            theta_hi,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Region::Disk { .. } => "disk",
            Region::Annulus { .. } => "annulus",
            Region::DiskBox { .. } => "disk-box",
            Region::HalfPlaneBox { .. } => "half-plane-box",
        }
    }

    /// Closed-form mass of the region under `measure`.
    pub fn mass(&self, measure: Measure) -> Result<f64> {
        let unsupported = || Error::UnsupportedMeasure {
            measure: measure.name(),
            region: self.name(),
        };
        match (*self, measure) {
            (Region::Disk { .. }, Measure::ArcLength) => Ok(1.0),
            (Region::Disk { radius }, Measure::Area) => Ok(radius * radius),
            (Region::Disk { radius }, Measure::WeightedArea) => {
                if radius >= 1.0 {
                    Err(Error::Divergent { radius })
                } else {
                    Ok(weighted_level(radius))
                }
            }
            (Region::Annulus { inner, outer }, Measure::Area) => {
                Ok((outer.r - inner.r) * (outer.r + inner.r))
            }
            (Region::Annulus { inner, outer }, Measure::WeightedArea) => {
                Ok(outer.lambda - inner.lambda)
            }
            (
                Region::DiskBox {
                    inner,
                    outer,
                    theta_lo,
                    theta_hi,
                },
                m,
            ) => {
                let frac = (theta_hi - theta_lo) / TAU;
                match m {
                    Measure::Area => Ok((outer.r - inner.r) * (outer.r + inner.r) * frac),
                    Measure::WeightedArea => Ok((outer.lambda - inner.lambda) * frac),
                    Measure::ArcLength => Err(unsupported()),
                }
            }
            (
                Region::HalfPlaneBox {
                    x_lo,
                    x_hi,
                    y_lo,
                    y_hi,
                },
                m,
            ) => match m {
                Measure::Area => Ok((x_hi - x_lo) * (y_hi - y_lo) / PI),
                Measure::WeightedArea => Ok((x_hi - x_lo) * (y_hi / y_lo).ln() / PI),
                Measure::ArcLength => Err(unsupported()),
            },
            _ => Err(unsupported()),
        }
    }
}

/// Integral of `f` over the disk `D(0, r)` (or the circle `T(0, r)` for
/// arc length).
pub fn integrate_disk<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: F,
    r: f64,
    measure: Measure,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    integrate_region_focused(f, &Region::Disk { radius: r }, measure, None, spec)
}

pub fn integrate_region<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: F,
    region: &Region,
    measure: Measure,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    integrate_region_focused(f, region, measure, None, spec)
}

/// Outer variable of a polar product rule.
#[derive(Clone, Copy)]
enum Radial {
    /// `u` itself with weight `2u du`.
    Area { lo: f64, hi: f64 },
    /// `tau = -log(1-u^2)` with weight `d tau`.
    Level { lo: f64, hi: f64 },
}

/// Radii and angles where the integrand is known to jump; used as fixed
/// breakpoints by the polar rules. `angles_at(r)` adds breakpoints that
/// depend on the circle `|z| = r`.
#[derive(Clone, Copy, Default)]
pub struct Breaks<'a> {
    pub radii: &'a [f64],
    pub angles: &'a [f64],
    pub angles_at: Option<&'a dyn Fn(f64) -> Vec<f64>>,
}

/// Region integral with refinement around a focus point (kernel peak).
pub fn integrate_region_focused<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: F,
    region: &Region,
    measure: Measure,
    focus: Option<Focus>,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    integrate_region_split(f, region, measure, focus, &Breaks::default(), spec)
}

/// As [`integrate_region_focused`], with known discontinuities of the
/// integrand (ignored on half-plane boxes).
pub fn integrate_region_split<T: QuadValue, F: FnMut(Complex64) -> T>(
    mut f: F,
    region: &Region,
    measure: Measure,
    focus: Option<Focus>,
    known: &Breaks,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    let unsupported = || Error::UnsupportedMeasure {
        measure: measure.name(),
        region: region.name(),
    };
    match *region {
        Region::Disk { radius } => {
            if !(radius > 0.0 && radius <= 1.0) {
                return Err(crate::error::invalid("r", "radius must lie in (0, 1]"));
            }
            match measure {
                Measure::ArcLength => arc_impl(f, radius, 0.0, TAU, focus, known.angles, spec),
                Measure::Area => polar(&mut f, Radial::Area { lo: 0.0, hi: radius }, 0.0, TAU, focus, known, spec),
                Measure::WeightedArea => {
                    if radius >= 1.0 {
                        return Err(Error::Divergent { radius });
                    }
                    let hi = weighted_level(radius);
                    polar(&mut f, Radial::Level { lo: 0.0, hi }, 0.0, TAU, focus, known, spec)
                }
            }
        }
        Region::Annulus { inner, outer } => {
            check_levels(inner, outer)?;
            match measure {
                Measure::Area => polar(&mut f, Radial::Area { lo: inner.r, hi: outer.r }, 0.0, TAU, focus, known, spec),
                Measure::WeightedArea => polar(
                    &mut f,
                    Radial::Level { lo: inner.lambda, hi: outer.lambda },
                    0.0,
                    TAU,
                    focus,
                    known,
                    spec,
                ),
                Measure::ArcLength => Err(unsupported()),
            }
        }
        Region::DiskBox {
            inner,
            outer,
            theta_lo,
            theta_hi,
        } => {
            check_levels(inner, outer)?;
            if !(theta_hi >= theta_lo) || theta_hi - theta_lo > TAU * (1.0 + 1e-15) {
                return Err(crate::error::invalid("theta", "need theta_lo <= theta_hi <= theta_lo + 2pi"));
            }
            match measure {
                Measure::Area => polar(
                    &mut f,
                    Radial::Area { lo: inner.r, hi: outer.r },
                    theta_lo,
                    theta_hi,
                    focus,
                    known,
                    spec,
                ),
                Measure::WeightedArea => polar(
                    &mut f,
                    Radial::Level { lo: inner.lambda, hi: outer.lambda },
                    theta_lo,
                    theta_hi,
                    focus,
                    known,
                    spec,
                ),
                Measure::ArcLength => Err(unsupported()),
            }
        }
        Region::HalfPlaneBox {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        } => {
            if !(y_lo > 0.0 && y_hi > y_lo && x_hi > x_lo) {
                return Err(crate::error::invalid("box", "need 0 < y_lo < y_hi and x_lo < x_hi"));
            }
            match measure {
                Measure::Area => {
                    nested(&mut f, y_lo, y_hi, x_lo, x_hi, false, spec).map(|r| r.scale(1.0 / PI))
                }
                Measure::WeightedArea => {
                    nested(&mut f, y_lo, y_hi, x_lo, x_hi, true, spec).map(|r| r.scale(1.0 / PI))
                }
                Measure::ArcLength => Err(unsupported()),
            }
        }
    }
}

fn check_levels(inner: RadialLevel, outer: RadialLevel) -> Result<()> {
    if !(inner.r >= 0.0 && outer.r > inner.r && outer.lambda >= inner.lambda) {
        return Err(crate::error::invalid("annulus", "need 0 <= r_lo < r_hi"));
    }
    if outer.r > 1.0 {
        return Err(crate::error::invalid("annulus", "outer radius exceeds 1"));
    }
    Ok(())
}

/// Polar product rule: outer radial variable, inner arc mean.
fn polar<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: &mut F,
    radial: Radial,
    theta_lo: f64,
    theta_hi: f64,
    focus: Option<Focus>,
    known: &Breaks,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    polar_with(f, radial, theta_lo, theta_hi, focus, known, spec, false)
}

/// `smooth` selects the periodic trapezoid rule for the (full) circles.
#[allow(clippy::too_many_arguments)]
fn polar_with<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: &mut F,
    radial: Radial,
    theta_lo: f64,
    theta_hi: f64,
    focus: Option<Focus>,
    known: &Breaks,
    spec: &QuadratureSpec,
    smooth: bool,
) -> Result<IntegralResult<T>> {
    let (lo, hi, weight_total) = match radial {
        Radial::Area { lo, hi } => (lo, hi, hi * hi - lo * lo),
        Radial::Level { lo, hi } => {
            if !hi.is_finite() {
                return Err(Error::Divergent { radius: 1.0 });
            }
            (lo, hi, hi - lo)
        }
    };
    let inner_spec = spec.inner(weight_total);
    let mut breaks = Vec::new();
    breaks.push(lo);
    breaks.push(hi);
    let ratio = spec.boundary_ratio;
    match radial {
        Radial::Area { .. } => {
            // Geometric refinement toward the outer rim.
            let mut d = (hi - lo) * ratio;
            for _ in 0..12 {
                breaks.push(hi - d);
                d *= ratio;
            }
            if lo == 0.0 {
                // u log u type behaviour at the centre
                let mut d = hi * ratio;
                for _ in 0..12 {
                    d *= ratio;
                    breaks.push(d);
                }
            }
            if let Some(fc) = focus {
                if fc.radius > lo && fc.radius < hi {
                    breaks.push(fc.radius);
                }
                let w = (1.0 - fc.radius).max(1e-15);
                push_geometric_around(&mut breaks, fc.radius, w, ratio, lo, hi);
            }
        }
        Radial::Level { .. } => {
            let mut x = lo.floor() + 1.0;
            while x < hi {
                breaks.push(x);
                x += 1.0;
            }
            if lo == 0.0 {
                // sqrt-type behaviour of u(tau) at tau = 0
                let mut d = 0.5;
                for _ in 0..8 {
                    if d < hi {
                        breaks.push(d);
                    }
                    d *= 0.5;
                }
            }
            if let Some(fc) = focus {
                if fc.radius > 0.0 && fc.radius < 1.0 {
                    let t = weighted_level(fc.radius);
                    if t > lo && t < hi {
                        breaks.push(t);
                    }
                }
            }
        }
    }
    for &r in known.radii {
        let s = match radial {
            Radial::Area { .. } => r,
            Radial::Level { .. } if r < 1.0 => weighted_level(r),
            Radial::Level { .. } => continue,
        };
        if s > lo && s < hi {
            breaks.push(s);
        }
    }
    let breaks = finish_breaks(breaks);
    let mut inner_failure: Option<Error> = None;
    let mut inner_unconverged = false;
    let mut inner_err_max: f64 = 0.0;
    let outer = adaptive(
        |s| {
            let (u, w) = match radial {
                Radial::Area { .. } => (s, 2.0 * s),
                Radial::Level { .. } => (radius_of_level(s), 1.0),
            };
            let extra;
            let angles = match known.angles_at {
                Some(at) => {
                    let mut a = at(u);
                    a.extend_from_slice(known.angles);
                    extra = a;
                    &extra[..]
                }
                None => known.angles,
            };
            let res = if smooth {
                integrate_circle_smooth(&mut *f, u, &inner_spec)
            } else {
                arc_impl(&mut *f, u, theta_lo, theta_hi, focus, angles, &inner_spec)
            };
            match res {
                Ok(res) => {
                    if !res.converged {
                        inner_unconverged = true;
                    }
                    inner_err_max = inner_err_max.max(res.err_estimate * w);
                    res.value.scaled(w)
                }
                Err(e) => {
                    if inner_failure.is_none() {
                        inner_failure = Some(e);
                    }
                    T::zero().scaled(f64::NAN)
                }
            }
        },
        &breaks,
        spec,
    );
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let outer = outer.map_err(|s| Error::NonFinite {
        at: Complex64::new(s, 0.0),
    })?;
    let span = match radial {
        Radial::Area { .. } => hi - lo,
        Radial::Level { .. } => hi - lo,
    };
    Ok(IntegralResult {
        err_estimate: outer.err_estimate + inner_err_max * span,
        converged: outer.converged && !inner_unconverged,
        ..outer
    })
}

/// Cartesian nested rule on a half-plane rectangle: outer over `y` (or over
/// `s = -log y` when `log_y`), inner over `x`. Returns the integral against
/// `dx dy` (resp. `dx dy / y`).
fn nested<T: QuadValue, F: FnMut(Complex64) -> T>(
    f: &mut F,
    y_lo: f64,
    y_hi: f64,
    x_lo: f64,
    x_hi: f64,
    log_y: bool,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>> {
    let (lo, hi) = if log_y {
        (-y_hi.ln(), -y_lo.ln())
    } else {
        (y_lo, y_hi)
    };
    let inner_spec = spec.inner((hi - lo) * (x_hi - x_lo));
    let mut breaks = Vec::new();
    let n = ((hi - lo).ceil() as usize).clamp(1, 4096);
    for j in 0..=n {
        breaks.push(lo + (hi - lo) * j as f64 / n as f64);
    }
    let xn = 8;
    let xbreaks: Vec<f64> = (0..=xn)
        .map(|j| x_lo + (x_hi - x_lo) * j as f64 / xn as f64)
        .collect();
    let mut inner_failure: Option<Error> = None;
    let mut inner_unconverged = false;
    let mut inner_err_max: f64 = 0.0;
    let outer = adaptive(
        |s| {
            let y = if log_y { (-s).exp() } else { s };
            match adaptive(|x| f(Complex64::new(x, y)), &xbreaks, &inner_spec) {
                Ok(res) => {
                    if !res.converged {
                        inner_unconverged = true;
                    }
                    inner_err_max = inner_err_max.max(res.err_estimate);
                    res.value
                }
                Err(x) => {
                    if inner_failure.is_none() {
                        inner_failure = Some(Error::NonFinite {
                            at: Complex64::new(x, y),
                        });
                    }
                    T::zero().scaled(f64::NAN)
                }
            }
        },
        &breaks,
        spec,
    );
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let outer = outer.map_err(|s| Error::NonFinite {
        at: Complex64::new(x_lo, s),
    })?;
    Ok(IntegralResult {
        err_estimate: outer.err_estimate + inner_err_max * (hi - lo),
        converged: outer.converged && !inner_unconverged,
        ..outer
    })
}

/// General nested 1-D rule over `{(x, y): x in [x_lo, x_hi], y in [0, top(x)]}`
/// with refinement of `y` toward 0 at scale `y_scale` and an `x` breakpoint
/// at `x_focus`. Returns the integral against `dx dy`.
pub(crate) fn integrate_under_graph<T: QuadValue, F, G>(
    mut f: F,
    x_lo: f64,
    x_hi: f64,
    top: G,
    x_focus: f64,
    y_scale: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<T>>
where
    F: FnMut(Complex64) -> T,
    G: Fn(f64) -> f64,
{
    let inner_spec = spec.inner(x_hi - x_lo);
    let mut xb = Vec::new();
    for j in 0..=8 {
        xb.push(x_lo + (x_hi - x_lo) * j as f64 / 8.0);
    }
    if x_focus > x_lo && x_focus < x_hi {
        xb.push(x_focus);
        push_geometric_around(&mut xb, x_focus, y_scale, spec.boundary_ratio, x_lo, x_hi);
    }
    let xb = finish_breaks(xb);
    let mut inner_failure: Option<Error> = None;
    let mut inner_unconverged = false;
    let mut inner_err_max: f64 = 0.0;
    let outer = adaptive(
        |x| {
            let h = top(x);
            if h <= 0.0 {
                return T::zero();
            }
            let mut yb = Vec::new();
            yb.push(0.0);
            yb.push(h);
            let mut d = y_scale;
            while d < h {
                yb.push(d);
                d /= spec.boundary_ratio;
            }
            let yb = finish_breaks(yb);
            match adaptive(|y| f(Complex64::new(x, y)), &yb, &inner_spec) {
                Ok(res) => {
                    if !res.converged {
                        inner_unconverged = true;
                    }
                    inner_err_max = inner_err_max.max(res.err_estimate);
                    res.value
                }
                Err(y) => {
                    if inner_failure.is_none() {
                        inner_failure = Some(Error::NonFinite {
                            at: Complex64::new(x, y),
                        });
                    }
                    T::zero().scaled(f64::NAN)
                }
            }
        },
        &xb,
        spec,
    );
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let outer = outer.map_err(|x| Error::NonFinite {
        at: Complex64::new(x, 0.0),
    })?;
    Ok(IntegralResult {
        err_estimate: outer.err_estimate + inner_err_max * (x_hi - x_lo),
        converged: outer.converged && !inner_unconverged,
        ..outer
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn smooth_rules_match_series() {
        // |1 + z/2|^2 has circle mean 1 + r^2/4 and disk mean 1 + 1/8
        let f = |z: Complex64| (1.0 + 0.5 * z).norm_sqr();
        let c = integrate_circle_smooth(f, 0.8, &spec()).unwrap();
        assert!(c.converged && (c.value - 1.16).abs() < 1e-14);
        let d = integrate_disk_smooth(f, 1.0, &spec()).unwrap();
        assert!(d.converged && (d.value - 1.125).abs() < 1e-12);
        // log weight: int_D |z|^2 log(1/|z|^2) dA = 1/4
        let d = integrate_disk_smooth(|z: Complex64| { let s = z.norm_sqr(); if s > 0.0 { -s * s.ln() } else { 0.0 } }, 1.0, &spec()).unwrap();
        assert!((d.value - 0.25).abs() < 1e-10, "{}", d.value);
    }

    #[test]
    fn gauss_panel_is_exact_for_degree_31() {
        let res = integrate_interval(|x: f64| x.powi(31) + x.powi(30), 0.0, 1.0, &[], &spec()).unwrap();
        assert!((res.value - (1.0 / 32.0 + 1.0 / 31.0)).abs() < 1e-15);
    }

    #[test]
    fn circle_normalization() {
        for r in [0.1, 0.5, 0.99] {
            let one = integrate_circle(|_| 1.0, r, &spec()).unwrap();
            assert!((one.value - 1.0).abs() < 1e-14);
            let sq = integrate_circle(|z: Complex64| z.norm_sqr(), r, &spec()).unwrap();
            assert!((sq.value - r * r).abs() < 1e-14);
            let re = integrate_circle(|z: Complex64| z.re, r, &spec()).unwrap();
            assert!(re.value.abs() < 1e-14);
        }
    }

    #[test]
    fn disk_area_moments() {
        let one = integrate_disk(|_| 1.0, 1.0, Measure::Area, &spec()).unwrap();
        assert!((one.value - 1.0).abs() < 1e-13);
        let m = integrate_disk(|z: Complex64| z.norm(), 1.0, Measure::Area, &spec()).unwrap();
        assert!((m.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_disk_mass() {
        for r in [0.5, 0.9, 0.999, 1.0 - 1e-6] {
            let res = integrate_disk(|_| 1.0, r, Measure::WeightedArea, &spec()).unwrap();
            assert!((res.value - weighted_level(r)).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn weighted_measure_diverges_on_full_disk() {
        let err = integrate_disk(|_| 1.0, 1.0, Measure::WeightedArea, &spec()).unwrap_err();
        assert!(matches!(err, Error::Divergent { .. }));
    }

    #[test]
    fn nan_reports_location() {
        let err = integrate_circle(|z: Complex64| if z.im > 0.5 { f64::NAN } else { 1.0 }, 0.9, &spec())
            .unwrap_err();
        match err {
            Error::NonFinite { at } => {
                assert!(at.im > 0.5);
                assert!((at.norm() - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let tight = QuadratureSpec {
            max_panels: 3,
            ..QuadratureSpec::with_tol(1e-14)
        };
        let res = integrate_interval(|x: f64| x.abs().sqrt(), -1.0, 1.0, &[], &tight).unwrap();
        assert!(!res.converged);
        assert!(res.clone().require().is_err());
    }

    #[test]
    fn half_plane_prototype_mass() {
        let l = 3.0;
        let q = Region::HalfPlaneBox {
            x_lo: 0.0,
            x_hi: l,
            y_lo: (-l).exp(),
            y_hi: 1.0,
        };
        let res = integrate_region(|_| 1.0, &q, Measure::WeightedArea, &spec()).unwrap();
        assert!((res.value - l * l / PI).abs() < 1e-10);
    }

    #[test]
    fn focused_kernel_peak() {
        // Poisson kernel mean over the circle is 1 for any |z| < 1.
        let z = Complex64::from_polar(1.0 - 1e-7, 1.0);
        let poisson = |w: Complex64| (1.0 - z.norm_sqr()) / (w - z).norm_sqr();
        let res = integrate_arc(poisson, 1.0, 0.0, TAU, Some(Focus::at(z)), &spec()).unwrap();
        assert!((res.value - 1.0).abs() < 1e-9, "{}", res.value);
    }
}
