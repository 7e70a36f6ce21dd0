//! Subcommands. Work is spread over the current rayon pool; results are
//! collected in input order, so output files do not depend on the thread
//! count.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use blochpack_core::geometry::{AnnulusFamily, HypBox};
use blochpack_core::holo::Holomorphic;
use blochpack_core::quadrature::weighted_level;
use blochpack_core::spectra::{asymptotic_variance, growth_exponent_fit, integral_means, partition_sum, GrowthFitRow, T_GUARANTEED};
use blochpack_core::symbols::ProjectedFunc;
use blochpack_core::zeropack::{
    optimal_constant, optimize_packing_with, packing_column_with, packing_ratio, refine_start, summarize_sweep,
    PackingConfig, PackingOutcome, PackingPolynomial, PackingSweep,
};
use blochpack_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{fmt_f64, write_json, Table};

fn projections(cfg: &RunConfig) -> Result<Vec<(String, ProjectedFunc)>> {
    cfg.resolve_symbols()?
        .into_iter()
        .map(|(name, mu)| {
            let g = ProjectedFunc::new(mu, &cfg.quadrature).with_context(|| format!("symbol `{name}`"))?;
            Ok((name, g))
        })
        .collect()
}

fn project_points(cfg: &RunConfig) -> Vec<Complex64> {
    let p = cfg.project;
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for i in 1..=p.n_r {
        let r = p.max_radius * i as f64 / p.n_r as f64;
        for j in 0..p.n_theta {
            pts.push(Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / p.n_theta as f64));
        }
    }
    pts
}

/// `P mu`, `(P mu)'` and `N_g` on the polar grid.
pub fn cmd_project(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let pts = project_points(cfg);
    let mut table = Table::create(out, "project.csv", &["symbol", "x", "y", "re_p", "im_p", "re_dp", "im_dp", "n_g"])?;
    for (name, g) in projections(cfg)? {
        let rows: Vec<(Complex64, Complex64)> = pts
            .par_iter()
            .map(|&z| g.value_and_deriv(z))
            .collect::<blochpack_core::Result<_>>()
            .with_context(|| format!("projecting `{name}`"))?;
        for (&z, (v, d)) in pts.iter().zip(rows) {
            let w = (1.0 - z.norm()) * (1.0 + z.norm());
            let ng = w * w * d.norm_sqr();
            table.row([
                name.clone(),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(d.re),
                fmt_f64(d.im),
                fmt_f64(ng),
            ])?;
        }
    }
    Ok(vec![table.finish()?])
}

#[derive(Serialize)]
struct FitEntry {
    symbol: String,
    rows: Vec<GrowthFitRow>,
}

/// Integral means over `t_list x r_list` and the growth-exponent fit.
pub fn cmd_ims(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let gs = projections(cfg)?;
    let ts: Vec<Complex64> = cfg.t_list.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let jobs: Vec<(usize, Complex64)> = (0..gs.len()).flat_map(|i| ts.iter().map(move |&t| (i, t))).collect();
    let curves: Vec<Vec<(f64, f64, f64, f64)>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            cfg.r_list
                .iter()
                .map(|&r| {
                    let s = integral_means(&gs[i].1, r, t, &cfg.quadrature)?;
                    Ok((s.r, s.lambda, s.value, s.err))
                })
                .collect::<blochpack_core::Result<Vec<_>>>()
                .with_context(|| format!("integral means of `{}` at t = {}", gs[i].0, t.re))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::create(out, "ims.csv", &["symbol", "t", "r", "lambda", "value", "err"])?;
    for (&(i, t), rows) in jobs.iter().zip(&curves) {
        for &(r, lambda, value, err) in rows {
            table.row([gs[i].0.clone(), fmt_f64(t.re), fmt_f64(r), fmt_f64(lambda), fmt_f64(value), fmt_f64(err)])?;
        }
    }
    // the fit is only meaningful inside the guaranteed regime
    let fit_ts: Vec<Complex64> = ts.iter().copied().filter(|t| t.norm() <= T_GUARANTEED).collect();
    let fits: Vec<FitEntry> = if cfg.r_list.len() >= 2 {
        gs.par_iter()
            .map(|(name, g)| {
                let (rows, _) = growth_exponent_fit(g, &fit_ts, &cfg.r_list, &cfg.quadrature)
                    .with_context(|| format!("growth fit of `{name}`"))?;
                Ok(FitEntry {
                    symbol: name.clone(),
                    rows,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(vec![table.finish()?, write_json(out, "ims_fit.json", &fits)?])
}

#[derive(Serialize)]
struct VarianceEntry {
    symbol: String,
    slope: f64,
    intercept: f64,
    fit_residual: f64,
    fit_points: usize,
    noisy: bool,
    partition_sum: f64,
    direct_integral: f64,
}

/// Circle `L^2` norms against `log(1/(1-r^2))`, the variance slope, and the
/// partition-sum identity over the annulus family.
pub fn cmd_variance(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let gs = projections(cfg)?;
    let family = AnnulusFamily::new(cfg.grid.l, cfg.grid.k_max)?;
    let radii: Vec<f64> = cfg.r_list.iter().copied().filter(|&r| r <= 1.0 - 1e-8).collect();
    let results: Vec<_> = gs
        .par_iter()
        .map(|(name, g)| {
            let rep = asymptotic_variance(g, &radii, &cfg.quadrature).with_context(|| format!("variance of `{name}`"))?;
            let (sum, direct) = partition_sum(g, &family, &cfg.quadrature).with_context(|| format!("partition sum of `{name}`"))?;
            Ok((rep, sum, direct))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::create(out, "variance.csv", &["symbol", "r", "lambda", "circle_l2", "ratio"])?;
    let mut entries = Vec::with_capacity(gs.len());
    for ((name, _), (rep, sum, direct)) in gs.iter().zip(results) {
        for row in &rep.rows {
            table.row([name.clone(), fmt_f64(row.r), fmt_f64(row.lambda), fmt_f64(row.circle_l2), fmt_f64(row.ratio)])?;
        }
        entries.push(VarianceEntry {
            symbol: name.clone(),
            slope: rep.slope,
            intercept: rep.intercept,
            fit_residual: rep.fit_residual,
            fit_points: rep.fit_points,
            noisy: rep.noisy,
            partition_sum: sum,
            direct_integral: direct,
        });
    }
    Ok(vec![table.finish()?, write_json(out, "variance.json", &entries)?])
}

/// One degree of a packing column, restarts in parallel.
pub fn optimize_parallel(d: usize, lambda: f64, warm: Option<&PackingPolynomial>, cfg: &PackingConfig) -> blochpack_core::Result<PackingOutcome> {
    optimize_packing_with(d, lambda, warm, cfg, |rule, starts| {
        starts
            .par_iter()
            .enumerate()
            .map(|(i, x)| refine_start(rule, i, x, cfg))
            .collect()
    })
}

/// The sweep over `Lambda_list x degrees`, columns in parallel.
pub fn packing_sweep_parallel(degrees: &[usize], lambdas: &[f64], cfg: &PackingConfig) -> blochpack_core::Result<PackingSweep> {
    let columns = lambdas
        .par_iter()
        .map(|&l| packing_column_with(degrees, l, cfg, |d, warm, col| optimize_parallel(d, l, warm, col)))
        .collect::<blochpack_core::Result<Vec<_>>>()?;
    summarize_sweep(columns)
}

#[derive(Serialize)]
struct ClosedForm {
    #[serde(rename = "Lambda")]
    lambda: f64,
    constant: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct RunningMin {
    #[serde(rename = "Lambda")]
    lambda: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct ZeropackSummary<'a> {
    note: &'static str,
    running_min: Vec<RunningMin>,
    trend_slope: Option<f64>,
    degree_zero_closed_form: Vec<ClosedForm>,
    stalled_cells: Vec<(f64, usize)>,
    sweep: &'a PackingSweep,
}

fn coeffs_json(f: &PackingPolynomial) -> String {
    let pairs: Vec<[f64; 2]> = f.coeffs.iter().map(|c| [c.re, c.im]).collect();
    serde_json::to_string(&pairs).expect("coefficients serialize")
}

/// Optimized packing ratios; rows labelled `sentinel` hold `f = 0`.
pub fn cmd_zeropack(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut pcfg = cfg.packing;
    pcfg.seed = cfg.seed;
    let sweep = packing_sweep_parallel(&cfg.degrees, &cfg.lambda_list, &pcfg)?;
    let mut table = Table::create(out, "zeropack.csv", &["Lambda", "r", "degree", "ratio", "stall_flag", "coeffs_json", "row"])?;
    for (&lambda, col) in cfg.lambda_list.iter().zip(&sweep.columns) {
        let zero = PackingPolynomial::zero(0);
        let s = packing_ratio(&zero, lambda, &pcfg.quadrature)?;
        table.row([fmt_f64(lambda), fmt_f64(s.r), "0".into(), fmt_f64(s.ratio), "false".into(), coeffs_json(&zero), "sentinel".to_string()])?;
        for o in col {
            table.row([
                fmt_f64(lambda),
                fmt_f64(o.best.r),
                o.degree.to_string(),
                fmt_f64(o.best.ratio),
                o.stalled.to_string(),
                coeffs_json(&o.best.f),
                "optimized".to_string(),
            ])?;
        }
    }
    let summary = ZeropackSummary {
        note: "finite-degree, finite-radius upper bounds on the inner infimum over polynomials; \
               not estimates of the packing density itself",
        running_min: sweep
            .running_min
            .iter()
            .map(|&(lambda, ratio)| RunningMin { lambda, ratio })
            .collect(),
        trend_slope: sweep.trend_slope,
        degree_zero_closed_form: cfg
            .lambda_list
            .iter()
            .map(|&lambda| {
                let (constant, ratio) = optimal_constant(lambda);
                ClosedForm { lambda, constant, ratio }
            })
            .collect(),
        stalled_cells: sweep
            .columns
            .iter()
            .flatten()
            .filter(|o| o.stalled)
            .map(|o| (o.best.lambda, o.degree))
            .collect(),
        sweep: &sweep,
    };
    Ok(vec![table.finish()?, write_json(out, "zeropack.json", &summary)?])
}

#[derive(Serialize)]
struct GridChecks {
    description: blochpack_core::geometry::GridDescription,
    /// `max_k |width(A_k) - L|`
    width_error: f64,
    /// `max_k | |A_k|_{A_-1} - log((1-r_{k-1}^2)/(1-r_k^2)) |`
    weighted_area_error: f64,
    listed_annuli: Vec<u32>,
}

/// The annulus/box grid: a JSON description and the boxes of every annulus
/// small enough to list.
pub fn cmd_grid(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let family = AnnulusFamily::new(cfg.grid.l, cfg.grid.k_max)?;
    let description = family.describe(cfg.grid.eps)?;
    let mut width_error: f64 = 0.0;
    let mut area_error: f64 = 0.0;
    for k in 1..=family.k_max {
        width_error = width_error.max((family.hyperbolic_width(k) - family.l).abs());
        let (lo, hi) = (family.radius(k - 1), family.radius(k));
        let log_form = weighted_level(hi.r) - weighted_level(lo.r);
        if !hi.clamped {
            area_error = area_error.max((family.weighted_area(k) - log_form).abs());
        }
    }
    let mut table = Table::create(out, "grid.csv", &["k", "l", "r_lo", "r_hi", "theta_lo", "theta_hi", "weighted_area"])?;
    let mut listed = Vec::new();
    for a in &description.annuli {
        if a.n_boxes as usize > cfg.grid.max_listed_boxes {
            continue;
        }
        listed.push(a.k);
        for b in family.box_grid(a.k)? {
            if let HypBox::Disk(b) = b {
                table.row([
                    b.k.to_string(),
                    b.l.to_string(),
                    fmt_f64(b.inner.r),
                    fmt_f64(b.outer.r),
                    fmt_f64(b.theta_lo),
                    fmt_f64(b.theta_hi),
                    fmt_f64(b.weighted_area()),
                ])?;
            }
        }
    }
    let checks = GridChecks {
        description,
        width_error,
        weighted_area_error: area_error,
        listed_annuli: listed,
    };
    Ok(vec![table.finish()?, write_json(out, "grid.json", &checks)?])
}

