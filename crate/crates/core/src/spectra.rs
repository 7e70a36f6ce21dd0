//! Integral means, the Littlewood–Paley identity and the averages built on
//! the annulus/box grid.
//!
//! Conventions: `ds` and `dA` are normalized, `dA_-1 = dA / (1 - |z|^2)`,
//! and `|e^{tg}| = e^{Re(t g)}` for complex `t`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{shrink_box, AnnulusFamily, HypBox};
use crate::holo::{Dilated, Exponential, Holomorphic};
use crate::quadrature::{
    gauss_legendre16, integrate_circle, integrate_circle_smooth, integrate_disk, integrate_disk_smooth, integrate_region, integrate_region_split, Breaks, CompensatedSum, IntegralResult,
    Measure, QuadValue, QuadratureSpec, RadialLevel, Region,
};

/// `|t|` up to which the disk-mean bound `<= 4` is guaranteed.
pub const T_GUARANTEED: f64 = PI / 16.0;

/// Runs an integrator on a fallible integrand, surfacing the first
/// integrand error instead of the integrator's generic non-finite report.
fn guarded<V, H, I>(mut h: H, nan: V, integrate: I) -> Result<IntegralResult<V>>
where
    V: QuadValue,
    H: FnMut(Complex64) -> Result<V>,
    I: FnOnce(&mut dyn FnMut(Complex64) -> V) -> Result<IntegralResult<V>>,
{
    let mut failure: Option<Error> = None;
    let res = integrate(&mut |z| match h(z) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            nan
        }
    });
    match failure {
        Some(e) => Err(e),
        None => res,
    }
}

fn converged<V: QuadValue>(res: IntegralResult<V>) -> Result<IntegralResult<V>> {
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NotConverged {
            value: res.value.magnitude(),
            err_estimate: res.err_estimate,
        })
    }
}

fn check_radius(r: f64, allow_one: bool) -> Result<()> {
    let ok = if allow_one { r > 0.0 && r <= 1.0 } else { r > 0.0 && r < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(crate::error::invalid("r", "radius out of range"))
    }
}

// ---------------------------------------------------------------------------
// Littlewood–Paley

/// The three expressions of the Littlewood–Paley identity on the unit disk:
/// `lhs = int_T |f|^2 ds`, `mid = |f(0)|^2 + int |f'|^2 log(1/|z|^2) dA`,
/// `rhs = int |f|^2 dA + int |f'|^2 (1 - |z|^2) dA`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LittlewoodPaley {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    /// Sum of the quadrature error estimates of the three values.
    pub err_estimate: f64,
}

impl LittlewoodPaley {
    /// `(max - min) / max(|lhs|, 1e-300)`.
    pub fn relative_spread(&self) -> f64 {
        let hi = self.lhs.max(self.mid).max(self.rhs);
        let lo = self.lhs.min(self.mid).min(self.rhs);
        (hi - lo) / self.lhs.abs().max(1e-300)
    }

    /// Whether the three values agree within the combined error estimate
    /// plus `rel_tol` relative slack.
    pub fn agrees(&self, rel_tol: f64) -> bool {
        let hi = self.lhs.max(self.mid).max(self.rhs);
        let lo = self.lhs.min(self.mid).min(self.rhs);
        hi - lo <= self.err_estimate + rel_tol * self.lhs.abs()
    }
}

/// Evaluates all three expressions; `f` must be holomorphic on a
/// neighbourhood of the closed disk.
pub fn littlewood_paley_check<F: Holomorphic + ?Sized>(f: &F, spec: &QuadratureSpec) -> Result<LittlewoodPaley> {
    let lhs = converged(guarded(
        |z| Ok(f.value(z)?.norm_sqr()),
        f64::NAN,
        |h| integrate_circle_smooth(h, 1.0, spec),
    )?)?;
    let f0 = f.value(Complex64::new(0.0, 0.0))?.norm_sqr();
    // one pass for the three area integrands
    let area = converged(guarded(
        |z| {
            let (v, d) = f.value_and_deriv(z)?;
            let s = z.norm_sqr();
            let d2 = d.norm_sqr();
            let log = if s > 0.0 { -s.ln() } else { 0.0 };
            Ok([d2 * log, v.norm_sqr(), d2 * (1.0 - s)])
        },
        [f64::NAN; 3],
        |h| integrate_disk_smooth(h, 1.0, spec),
    )?)?;
    let [dlog, v2, dw] = area.value;
    Ok(LittlewoodPaley {
        lhs: lhs.value,
        mid: f0 + dlog,
        rhs: v2 + dw,
        err_estimate: lhs.err_estimate + 2.0 * area.err_estimate,
    })
}

/// `f = exp((t/2) g_r)`, the test function for which the identity turns into
/// the integral-means inequality.
pub fn half_exponential<G: Holomorphic>(g: G, t: Complex64, r: f64) -> Exponential<Dilated<G>> {
    Exponential {
        g: Dilated { g, r },
        s: 0.5 * t,
    }
}

/// Both sides of
/// `int_T |e^{t g_r}| ds <= 4 + (|t|^2/4) int_{D(0,r)} N_g |e^{tg}| dA_-1`
/// (the first term on the right is bounded by the disk mean of
/// [`disk_mean_exp`]).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpChain {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn exp_chain_check<G: Holomorphic + ?Sized>(
    g: &G,
    t: Complex64,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<ExpChain> {
    check_radius(r, false)?;
    let lhs = integral_means(g, r, t, spec)?.value;
    let res = converged(guarded(
        |z| {
            let (v, d) = g.value_and_deriv(z)?;
            let w = (1.0 - z.norm()) * (1.0 + z.norm());
            Ok(w * w * d.norm_sqr() * (t * v).re.exp())
        },
        f64::NAN,
        |h| integrate_disk(h, r, Measure::WeightedArea, spec),
    )?)?;
    let rhs = 4.0 + 0.25 * t.norm_sqr() * res.value;
    Ok(ExpChain {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-9) + res.err_estimate,
    })
}

// ---------------------------------------------------------------------------
// Integral means

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanSample {
    pub r: f64,
    /// `log(1/(1-r^2))`
    pub lambda: f64,
    pub value: f64,
    pub err: f64,
}

/// `I(r,t) = int_T |e^{t g(r zeta)}| ds(zeta)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeansCurve {
    pub t: Complex64,
    pub samples: Vec<MeanSample>,
    /// `|t| > pi/16`: the bounds of this module are not guaranteed.
    pub outside_guaranteed_regime: bool,
}

/// `I(r,t)`; exactly 1 for `t = 0`.
pub fn integral_means<G: Holomorphic + ?Sized>(g: &G, r: f64, t: Complex64, spec: &QuadratureSpec) -> Result<MeanSample> {
    let [s] = integral_means_many(g, RadialLevel::from_radius(r), [t], spec)?;
    Ok(s)
}

/// `I(r, t_i)` for several `t` from one set of evaluations of `g`.
pub fn integral_means_many<G: Holomorphic + ?Sized, const N: usize>(
    g: &G,
    level: RadialLevel,
    ts: [Complex64; N],
    spec: &QuadratureSpec,
) -> Result<[MeanSample; N]> {
    let r = level.r;
    check_radius(r, true)?;
    let nonzero = ts.iter().any(|t| *t != Complex64::new(0.0, 0.0));
    let (values, err) = if nonzero {
        let res = converged(guarded(
            |z| {
                let v = g.value(z)?;
                Ok(ts.map(|t| (t * v).re.exp()))
            },
            [f64::NAN; N],
            |h| integrate_circle(h, r, spec),
        )?)?;
        (res.value, res.err_estimate)
    } else {
        ([1.0; N], 0.0)
    };
    let mut out = [MeanSample {
        r,
        lambda: level.lambda,
        value: 1.0,
        err: 0.0,
    }; N];
    for i in 0..N {
        if ts[i] != Complex64::new(0.0, 0.0) {
            out[i].value = values[i];
            out[i].err = err;
        }
    }
    Ok(out)
}

pub fn means_curve<G: Holomorphic + ?Sized>(
    g: &G,
    t: Complex64,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<MeansCurve> {
    let samples = radii
        .iter()
        .map(|&r| integral_means(g, r, t, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeansCurve {
        t,
        samples,
        outside_guaranteed_regime: t.norm() > T_GUARANTEED,
    })
}

/// `int_D |e^{tg}| dA`.
pub fn disk_mean_exp<G: Holomorphic + ?Sized>(g: &G, t: Complex64, spec: &QuadratureSpec) -> Result<IntegralResult<f64>> {
    disk_mean_exp_split(g, t, &Breaks::default(), spec)
}

/// [`disk_mean_exp`] with the jump radii and angles of the symbol behind `g`
/// as breakpoints; `g` has logarithmic singularities where they meet the rim.
pub fn disk_mean_exp_split<G: Holomorphic + ?Sized>(
    g: &G,
    t: Complex64,
    known: &Breaks,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<f64>> {
    if t == Complex64::new(0.0, 0.0) {
        return Ok(IntegralResult {
            value: 1.0,
            err_estimate: 0.0,
            cells_used: 0,
            converged: true,
        });
    }
    converged(guarded(
        |z| Ok((t * g.value(z)?).re.exp()),
        f64::NAN,
        |h| integrate_region_split(h, &Region::Disk { radius: 1.0 }, Measure::Area, None, known, spec),
    )?)
}

/// [`disk_mean_exp`] for `g = P mu`, `||mu|| <= 1`, `|t| <= pi/16`, with the
/// bound `<= 4` enforced.
pub fn disk_mean_exp_checked<G: Holomorphic + ?Sized>(
    g: &G,
    t: Complex64,
    known: &Breaks,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if t.norm() > T_GUARANTEED * (1.0 + 1e-12) {
        return Err(crate::error::invalid("t", "the bound needs |t| <= pi/16"));
    }
    let res = disk_mean_exp_split(g, t, known, spec)?;
    if res.value > 4.0 + res.err_estimate + 1e-9 {
        return Err(Error::InvariantViolation(alloc::format!(
            "disk mean of |e^(tg)| is {} > 4",
            res.value
        )));
    }
    Ok(res.value)
}

// ---------------------------------------------------------------------------
// Averages over annuli and boxes

/// `<h>_A = |A|_{A_-1}^{-1} int_A h dA_-1` over the annulus `A_k`.
pub fn annular_average<V, H>(h: H, family: &AnnulusFamily, k: u32, nan: V, spec: &QuadratureSpec) -> Result<V>
where
    V: QuadValue,
    H: FnMut(Complex64) -> Result<V>,
{
    if k == 0 || k > family.k_max {
        return Err(crate::error::invalid("k", "annulus index out of range"));
    }
    let res = converged(guarded(h, nan, |f| {
        integrate_region(f, &family.region(k), Measure::WeightedArea, spec)
    })?)?;
    Ok(res.value.scaled(1.0 / family.weighted_area(k)))
}

/// `<h>_Q` over a disk or half-plane box.
pub fn box_average<V, H>(h: H, q: &HypBox, nan: V, spec: &QuadratureSpec) -> Result<V>
where
    V: QuadValue,
    H: FnMut(Complex64) -> Result<V>,
{
    let res = converged(guarded(h, nan, |f| integrate_region(f, &q.region(), Measure::WeightedArea, spec))?)?;
    Ok(res.value.scaled(1.0 / q.weighted_area()))
}

/// Averages of `N_g`, `|e^{tg}|` and their product on one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AverageRow {
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    pub l_size: f64,
    pub k: u32,
    /// Box index, `None` for the whole annulus.
    pub box_index: Option<u32>,
    pub weighted_area: f64,
    pub avg_ng: f64,
    pub avg_exp: f64,
    pub avg_prod: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AverageTable {
    pub rows: Vec<AverageRow>,
}

impl AverageTable {
    /// `sigma_g(L)^2 = max_{k >= k0} <N_g>_{A_k}` over the annulus rows.
    pub fn sigma_at_scale(&self, k0: u32) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.box_index.is_none() && r.k >= k0)
            .map(|r| r.avg_ng)
            .reduce(f64::max)
    }
}

fn triple<G: Holomorphic + ?Sized>(g: &G, t: Complex64) -> impl FnMut(Complex64) -> Result<[f64; 3]> + '_ {
    move |z| {
        let (v, d) = g.value_and_deriv(z)?;
        let w = (1.0 - z.norm()) * (1.0 + z.norm());
        let ng = w * w * d.norm_sqr();
        let e = (t * v).re.exp();
        Ok([ng, e, ng * e])
    }
}

/// Indices of `m` boxes evenly spread over `0..n`.
pub fn spread_indices(n: usize, m: usize) -> Vec<usize> {
    if m == 0 || n == 0 {
        return Vec::new();
    }
    if m >= n {
        return (0..n).collect();
    }
    (0..m).map(|j| j * n / m).collect()
}

/// Annulus rows for `k = 1..=k_max` and box rows for at most
/// `boxes_per_annulus` boxes per annulus, each trimmed to `(1-eps)Q`.
pub fn average_table<G: Holomorphic + ?Sized>(
    g: &G,
    t: Complex64,
    family: &AnnulusFamily,
    eps: f64,
    boxes_per_annulus: usize,
    spec: &QuadratureSpec,
) -> Result<AverageTable> {
    let mut rows = Vec::new();
    for k in 1..=family.k_max {
        let [ng, e, p] = annular_average(triple(g, t), family, k, [f64::NAN; 3], spec)?;
        rows.push(AverageRow {
            l_size: family.l,
            k,
            box_index: None,
            weighted_area: family.weighted_area(k),
            avg_ng: ng,
            avg_exp: e,
            avg_prod: p,
        });
        let n = family.box_count(k)?;
        for l in spread_indices(n, boxes_per_annulus) {
            let q = shrink_box(&family.box_at(k, l)?, eps)?;
            let [ng, e, p] = box_average(triple(g, t), &q, [f64::NAN; 3], spec)?;
            rows.push(AverageRow {
                l_size: family.l,
                k,
                box_index: Some(l as u32),
                weighted_area: q.weighted_area(),
                avg_ng: ng,
                avg_exp: e,
                avg_prod: p,
            });
        }
    }
    Ok(AverageTable { rows })
}

/// The annulus average of `h` against the area-weighted mean of its box
/// averages over a tiling with `n_boxes` boxes.
pub fn partition_consistency<H>(
    mut h: H,
    family: &AnnulusFamily,
    k: u32,
    n_boxes: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)>
where
    H: FnMut(Complex64) -> Result<f64>,
{
    let whole = annular_average(&mut h, family, k, f64::NAN, spec)?;
    let mut acc = CompensatedSum::default();
    let mut area = CompensatedSum::default();
    for q in family.box_grid_with_count(k, n_boxes)? {
        let a = q.weighted_area();
        acc.add(a * box_average(&mut h, &q, f64::NAN, spec)?);
        area.add(a);
    }
    Ok((whole, acc.total() / area.total()))
}

/// Largest relative gap between `<N_g |e^{tg}|>_Q` and
/// `<N_g>_Q <|e^{tg}|>_Q` over sampled boxes of `A_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decorrelation {
    pub t: Complex64,
    pub max_relative_gap: f64,
    pub worst_box: u32,
    pub boxes_sampled: usize,
}

pub fn decorrelation_diagnostic<G: Holomorphic + ?Sized>(
    g: &G,
    family: &AnnulusFamily,
    k: u32,
    t: Complex64,
    eps: f64,
    max_boxes: usize,
    spec: &QuadratureSpec,
) -> Result<Decorrelation> {
    if t.norm() > T_GUARANTEED * (1.0 + 1e-12) {
        return Err(crate::error::invalid("t", "need |t| <= pi/16"));
    }
    let n = family.box_count(k)?;
    let picks = spread_indices(n, max_boxes);
    let mut out = Decorrelation {
        t,
        max_relative_gap: 0.0,
        worst_box: picks.first().copied().unwrap_or(0) as u32,
        boxes_sampled: picks.len(),
    };
    if t == Complex64::new(0.0, 0.0) {
        return Ok(out);
    }
    for l in picks {
        let q = shrink_box(&family.box_at(k, l)?, eps)?;
        let [ng, e, p] = box_average(triple(g, t), &q, [f64::NAN; 3], spec)?;
        let gap = (p - ng * e).abs() / (ng * e).max(1e-12);
        if gap > out.max_relative_gap {
            out.max_relative_gap = gap;
            out.worst_box = l as u32;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Asymptotic variance

/// Least-squares line through `(x_i, y_i)`: slope, intercept, RMS residual.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(crate::error::invalid("samples", "need at least two (x, y) pairs"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(crate::error::invalid("samples", "abscissae must not all coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceRow {
    pub r: f64,
    pub lambda: f64,
    /// `int_T |g_r|^2 ds`
    pub circle_l2: f64,
    /// `circle_l2 / lambda`
    pub ratio: f64,
}

/// The ratio sequence `int_T |g_r|^2 ds / log(1/(1-r^2))` and a slope fit
/// of the numerator against `lambda` over the last decade of `1 - r^2`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub slope: f64,
    pub intercept: f64,
    pub fit_residual: f64,
    pub fit_points: usize,
    /// Successive numerators decreased by more than their error bars.
    pub noisy: bool,
}

pub fn asymptotic_variance<G: Holomorphic + ?Sized>(g: &G, radii: &[f64], spec: &QuadratureSpec) -> Result<VarianceReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(crate::error::invalid("r_list", "need at least two increasing radii"));
    }
    if radii[radii.len() - 1] > 1.0 - 1e-8 {
        return Err(crate::error::invalid("r_list", "radii must not exceed 1 - 1e-8"));
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut errs = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r, false)?;
        let res = converged(guarded(
            |z| Ok(g.value(z)?.norm_sqr()),
            f64::NAN,
            |h| integrate_circle(h, r, spec),
        )?)?;
        let lambda = crate::quadrature::weighted_level(r);
        rows.push(VarianceRow {
            r,
            lambda,
            circle_l2: res.value,
            ratio: res.value / lambda,
        });
        errs.push(res.err_estimate);
    }
    // circle means of |g|^2 are nondecreasing in r (subharmonicity)
    let noisy = rows
        .windows(2)
        .zip(errs.windows(2))
        .any(|(w, e)| w[1].circle_l2 < w[0].circle_l2 - e[0] - e[1] - 1e-12 * w[0].circle_l2);
    let lambda_max = rows[rows.len() - 1].lambda;
    let tail: Vec<&VarianceRow> = rows.iter().filter(|r| r.lambda >= lambda_max - core::f64::consts::LN_10).collect();
    let tail: Vec<&VarianceRow> = if tail.len() >= 2 { tail } else { rows[rows.len() - 2..].iter().collect() };
    let xs: Vec<f64> = tail.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.circle_l2).collect();
    let (slope, intercept, fit_residual) = linear_fit(&xs, &ys)?;
    Ok(VarianceReport {
        fit_points: xs.len(),
        rows,
        slope,
        intercept,
        fit_residual,
        noisy,
    })
}

/// The identity `int_{D(0,r)} |g'|^2 (1-|z|^2) dA = r int_{T(0,r)} |g|^2 ds -
/// int_{D(0,r)} |g|^2 dA` evaluated side by side, together with the
/// dilation-consistent form
/// `int_{D(0,r)} |g'|^2 (r^2-|z|^2) dA = r^2 int_{T(0,r)} |g|^2 ds - int_{D(0,r)} |g|^2 dA`,
/// which holds exactly for `g(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceIdentity {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub consistent_lhs: f64,
    pub consistent_rhs: f64,
}

impl VarianceIdentity {
    pub fn discrepancy(&self) -> f64 {
        self.lhs - self.rhs
    }
}

pub fn variance_lp_crosscheck<G: Holomorphic + ?Sized>(g: &G, r: f64, spec: &QuadratureSpec) -> Result<VarianceIdentity> {
    check_radius(r, true)?;
    let circle = converged(guarded(
        |z| Ok(g.value(z)?.norm_sqr()),
        f64::NAN,
        |h| integrate_circle(h, r, spec),
    )?)?
    .value;
    let r2 = r * r;
    let [dw, dc, v2] = converged(guarded(
        |z| {
            let (v, d) = g.value_and_deriv(z)?;
            let s = z.norm_sqr();
            let d2 = d.norm_sqr();
            Ok([d2 * (1.0 - s), d2 * (r2 - s), v.norm_sqr()])
        },
        [f64::NAN; 3],
        |h| integrate_disk(h, r, Measure::Area, spec),
    )?)?
    .value;
    Ok(VarianceIdentity {
        r,
        lhs: dw,
        rhs: r * circle - v2,
        consistent_lhs: dc,
        consistent_rhs: r2 * circle - v2,
    })
}

/// `sum_k |A_k|_{A_-1} <N_g>_{A_k}` for `k = 1..=k_max` against the single
/// integral `int_{D(0, r_kmax)} |g'|^2 (1-|z|^2) dA`.
pub fn partition_sum<G: Holomorphic + ?Sized>(g: &G, family: &AnnulusFamily, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let ng = |z: Complex64| -> Result<f64> {
        let w = (1.0 - z.norm()) * (1.0 + z.norm());
        Ok(w * w * g.deriv(z)?.norm_sqr())
    };
    let mut acc = CompensatedSum::default();
    for k in 1..=family.k_max {
        acc.add(family.weighted_area(k) * annular_average(ng, family, k, f64::NAN, spec)?);
    }
    let r = family.radius(family.k_max).r;
    let direct = converged(guarded(
        |z| {
            let s = z.norm_sqr();
            Ok(g.deriv(z)?.norm_sqr() * (1.0 - s))
        },
        f64::NAN,
        |h| integrate_disk(h, r, Measure::Area, spec),
    )?)?;
    Ok((acc.total(), direct.value))
}

// ---------------------------------------------------------------------------
// Growth iteration

/// Composite 16-point Gauss rule in `tau = log(1/(1-u^2))` on
/// `[0, tau_max]`, with panel endpoints as the sample radii.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRule {
    pub edges: Vec<f64>,
}

impl LevelRule {
    pub fn new(tau_max: f64, panel_width: f64) -> Result<Self> {
        if !(tau_max > 0.0 && tau_max.is_finite()) || !(panel_width > 0.0) {
            return Err(crate::error::invalid("tau_max", "need tau_max > 0 and panel_width > 0"));
        }
        let n = (tau_max / panel_width).ceil().max(1.0) as usize;
        let edges = (0..=n).map(|i| tau_max * i as f64 / n as f64).collect();
        Ok(Self { edges })
    }

    pub fn up_to_radius(r: f64, panel_width: f64) -> Result<Self> {
        check_radius(r, false)?;
        Self::new(crate::quadrature::weighted_level(r), panel_width)
    }

    /// Every level at which a curve is evaluated: edges and Gauss nodes.
    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.edges.len() * 17);
        out.push(self.edges[0]);
        for w in self.edges.windows(2) {
            out.extend(gauss_legendre16(w[0], w[1]).iter().map(|p| p.0));
            out.push(w[1]);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRow {
    pub r: f64,
    pub lambda: f64,
    pub value: f64,
    /// `4 + eta |t|^2/4 int_0^r I(u) 2u du/(1-u^2)`
    pub premise_bound: f64,
    /// `4 (1-r^2)^{-eta |t|^2 / 4}`
    pub conclusion_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IterationOutcome {
    Holds,
    PremiseFailed,
    ConclusionFailed,
}

/// Result of checking the integral inequality (premise) and the power
/// bound it implies (conclusion) on the samples of a [`LevelRule`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationCheck {
    pub rows: Vec<IterationRow>,
    pub outcome: IterationOutcome,
    /// `min (premise_bound - I) / premise_bound`.
    pub premise_margin: f64,
    /// `min (conclusion_bound - I) / conclusion_bound`.
    pub margin: f64,
}

/// Relative slack in both comparisons.
pub const ITERATION_TOL: f64 = 1e-9;

/// Checks a curve given at every level of `rule` (as produced by
/// [`LevelRule::levels`]).
pub fn iteration_bound_check_sampled(values: &[f64], rule: &LevelRule, eta: f64, t: Complex64) -> Result<IterationCheck> {
    let levels = rule.levels();
    if values.len() != levels.len() {
        return Err(crate::error::invalid("values", "one value per rule level expected"));
    }
    if !(eta >= 0.0) {
        return Err(crate::error::invalid("eta", "must be nonnegative"));
    }
    let c = 0.25 * eta * t.norm_sqr();
    let mut cum = CompensatedSum::default();
    let mut rows = Vec::with_capacity(rule.edges.len());
    let row = |tau: f64, value: f64, integral: f64| IterationRow {
        r: crate::quadrature::radius_of_level(tau),
        lambda: tau,
        value,
        premise_bound: 4.0 + c * integral,
        conclusion_bound: 4.0 * (c * tau).exp(),
    };
    rows.push(row(rule.edges[0], values[0], 0.0));
    let mut idx = 1;
    for w in rule.edges.windows(2) {
        for (_, wt) in gauss_legendre16(w[0], w[1]) {
            cum.add(wt * values[idx]);
            idx += 1;
        }
        rows.push(row(w[1], values[idx], cum.total()));
        idx += 1;
    }
    let premise_margin = rows
        .iter()
        .map(|r| (r.premise_bound - r.value) / r.premise_bound)
        .fold(f64::INFINITY, f64::min);
    let margin = rows
        .iter()
        .map(|r| (r.conclusion_bound - r.value) / r.conclusion_bound)
        .fold(f64::INFINITY, f64::min);
    let outcome = if premise_margin < -ITERATION_TOL {
        IterationOutcome::PremiseFailed
    } else if margin < -ITERATION_TOL {
        IterationOutcome::ConclusionFailed
    } else {
        IterationOutcome::Holds
    };
    Ok(IterationCheck {
        rows,
        outcome,
        premise_margin,
        margin,
    })
}

/// As [`iteration_bound_check_sampled`], evaluating `curve` at each level.
pub fn iteration_bound_check<F>(mut curve: F, rule: &LevelRule, eta: f64, t: Complex64) -> Result<IterationCheck>
where
    F: FnMut(RadialLevel) -> Result<f64>,
{
    let values = rule
        .levels()
        .into_iter()
        .map(|tau| curve(RadialLevel::from_lambda(tau)))
        .collect::<Result<Vec<_>>>()?;
    iteration_bound_check_sampled(&values, rule, eta, t)
}

/// `I(r, t_i)` at every level of `rule`, one column per `t`.
pub fn means_on_rule<G: Holomorphic + ?Sized, const N: usize>(
    g: &G,
    rule: &LevelRule,
    ts: [Complex64; N],
    spec: &QuadratureSpec,
) -> Result<[Vec<f64>; N]> {
    let levels = rule.levels();
    let mut out: [Vec<f64>; N] = core::array::from_fn(|_| Vec::with_capacity(levels.len()));
    for tau in levels {
        let level = if tau == 0.0 {
            RadialLevel { r: 0.0, lambda: 0.0 }
        } else {
            RadialLevel::from_lambda(tau)
        };
        let row = if tau == 0.0 {
            let v = g.value(Complex64::new(0.0, 0.0))?;
            ts.map(|t| (t * v).re.exp())
        } else {
            integral_means_many(g, level, ts, spec)?.map(|s| s.value)
        };
        for i in 0..N {
            out[i].push(row[i]);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Growth exponents

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthFitRow {
    pub t: Complex64,
    /// Slope of `log I(r,t)` against `log(1/(1-r^2))`.
    pub beta: f64,
    /// `4 beta / |t|^2`
    pub normalized: f64,
    pub residual: f64,
    /// Residual above [`FIT_RESIDUAL_FLAG`].
    pub flagged: bool,
}

pub const FIT_RESIDUAL_FLAG: f64 = 1e-2;

pub fn growth_exponent_fit<G: Holomorphic + ?Sized>(
    g: &G,
    ts: &[Complex64],
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<(Vec<GrowthFitRow>, Vec<MeansCurve>)> {
    if ts.iter().any(|t| t.norm() > T_GUARANTEED * (1.0 + 1e-12)) {
        return Err(crate::error::invalid("t", "need |t| <= pi/16"));
    }
    let mut rows = Vec::with_capacity(ts.len());
    let mut curves = Vec::with_capacity(ts.len());
    for &t in ts {
        let curve = means_curve(g, t, radii, spec)?;
        let xs: Vec<f64> = curve.samples.iter().map(|s| s.lambda).collect();
        let ys: Vec<f64> = curve.samples.iter().map(|s| s.value.ln()).collect();
        let (beta, _, residual) = linear_fit(&xs, &ys)?;
        let t2 = t.norm_sqr();
        rows.push(GrowthFitRow {
            t,
            beta,
            normalized: if t2 > 0.0 { 4.0 * beta / t2 } else { 0.0 },
            residual,
            flagged: residual > FIT_RESIDUAL_FLAG,
        });
        curves.push(curve);
    }
    Ok((rows, curves))
}
