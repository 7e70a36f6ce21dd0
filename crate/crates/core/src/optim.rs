//! Derivative-free minimization: Nelder–Mead with dimension-adapted
//! coefficients (Gao & Han) and restarts from the incumbent.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods live in core only on recent toolchains
use num_traits::Float;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimplexConfig {
    /// Function evaluations per call, across internal restarts.
    pub max_evals: usize,
    /// Stop when the simplex values span less than `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// ... and its vertices lie within `x_tol` of the best one.
    pub x_tol: f64,
    /// Rebuild the simplex around the incumbent up to this many times.
    pub restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            f_tol: 1e-12,
            x_tol: 1e-9,
            restarts: 3,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(crate::error::invalid("max_evals", "must be positive"));
        }
        if !(self.f_tol >= 0.0) || !(self.x_tol >= 0.0) {
            return Err(crate::error::invalid("f_tol", "tolerances must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Tolerances were met before the evaluation budget ran out.
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial steps `step[i]` along each axis.
/// Non-finite values are treated as `+inf`. The result is never worse than
/// `f(x0)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    cfg: &SimplexConfig,
) -> Result<SimplexResult> {
    cfg.validate()?;
    let n = x0.len();
    if step.len() != n {
        return Err(crate::error::invalid("step", "one step per coordinate"));
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    if n == 0 {
        return Ok(SimplexResult {
            x: best_x,
            value: best_f,
            evals,
            converged: true,
        });
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut converged = false;
    for round in 0..=cfg.restarts {
        if evals >= cfg.max_evals {
            break;
        }
        let shrink = if round == 0 { 1.0 } else { 0.5f64.powi(round as i32) };
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
        pts.push(best_x.clone());
        vals.push(best_f);
        for i in 0..n {
            let mut p = best_x.clone();
            let h = if step[i] != 0.0 { step[i] } else { 1e-3 };
            p[i] += h * shrink;
            vals.push(eval(&p, &mut evals));
            pts.push(p);
        }
        let before = best_f;
        converged = false;
        while evals < cfg.max_evals {
            // order: ascending by value, ties by index for determinism
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
            pts = idx.iter().map(|&i| pts[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let spread_f = vals[n] - vals[0];
            let spread_x = pts[1..]
                .iter()
                .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread_f <= cfg.f_tol * (1.0 + vals[0].abs()) && spread_x <= cfg.x_tol {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for p in &pts[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < vals[0] {
                let xe = along(beta);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let x = along(gamma);
                    let v = eval(&x, &mut evals);
                    (x, v)
                } else {
                    let x = along(-gamma);
                    let v = eval(&x, &mut evals);
                    (x, v)
                };
                if fc < vals[n].min(fr) {
                    pts[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + delta * (x - b)).collect();
                        vals[i] = eval(&p, &mut evals);
                        pts[i] = p;
                    }
                }
            }
        }
        let i_best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap_or(0);
        if vals[i_best] < best_f {
            best_f = vals[i_best];
            best_x = pts[i_best].clone();
        }
        // a restart that gains nothing means the incumbent is stable
        if round > 0 && !(best_f < before - cfg.f_tol * (1.0 + before.abs())) {
            break;
        }
    }
    Ok(SimplexResult {
        x: best_x,
        value: best_f,
        evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], &SimplexConfig::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rosenbrock_in_four_dimensions() {
        let f = |x: &[f64]| {
            x.windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum::<f64>()
        };
        let cfg = SimplexConfig {
            max_evals: 20000,
            restarts: 6,
            ..Default::default()
        };
        let r = nelder_mead(f, &[-1.0, 1.0, -1.0, 1.0], &[0.5; 4], &cfg).unwrap();
        assert!(r.value < 1e-8, "{r:?}");
    }

    #[test]
    fn never_worse_than_the_start() {
        let f = |x: &[f64]| if x[0] == 3.0 { -1.0 } else { 0.0 };
        let r = nelder_mead(f, &[3.0], &[1.0], &SimplexConfig::default()).unwrap();
        assert_eq!(r.value, -1.0);
        assert_eq!(r.x, vec![3.0]);
    }

    #[test]
    fn non_finite_values_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.1).powi(2) };
        let r = nelder_mead(f, &[1.0], &[0.5], &SimplexConfig::default()).unwrap();
        assert!((r.x[0] - 0.1).abs() < 1e-6);
    }
}
