//! Sampled symbols as CSV: a `# polar n_r=<n> n_theta=<m>` line, then a
//! header `x,y,re,im` and one row per polar cell, at any point of the cell.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use blochpack_core::symbols::SampledGrid;
use blochpack_core::Complex64;

use crate::output::fmt_f64;

fn parse_shape(line: &str) -> Result<(usize, usize)> {
    let rest = line.trim_start_matches('#').trim();
    let mut words = rest.split_whitespace();
    if words.next() != Some("polar") {
        bail!("expected `# polar n_r=<n> n_theta=<m>`, found `{line}`");
    }
    let (mut n_r, mut n_theta) = (None, None);
    for w in words {
        match w.split_once('=') {
            Some(("n_r", v)) => n_r = Some(v.parse().with_context(|| format!("bad n_r `{v}`"))?),
            Some(("n_theta", v)) => n_theta = Some(v.parse().with_context(|| format!("bad n_theta `{v}`"))?),
            _ => bail!("unexpected `{w}` in grid line"),
        }
    }
    match (n_r, n_theta) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => bail!("grid line needs both n_r and n_theta"),
    }
}

pub fn parse_sampled_csv(text: &str) -> Result<SampledGrid> {
    let shape_line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .context("empty sampled grid")?;
    let (n_r, n_theta) = parse_shape(shape_line)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "re", "im"] {
        bail!("expected header `x,y,re,im`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse()
                .with_context(|| format!("row {}: `{}` is not a number", i + 1, &rec[j]))
        };
        samples.push((num(0)?, num(1)?, Complex64::new(num(2)?, num(3)?)));
    }
    Ok(SampledGrid::from_samples(n_r, n_theta, &samples)?)
}

pub fn read_sampled_csv(path: &Path) -> Result<SampledGrid> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_sampled_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes cell centers, the inverse of [`parse_sampled_csv`].
pub fn write_sampled_csv<W: Write>(grid: &SampledGrid, mut out: W) -> Result<()> {
    writeln!(out, "# polar n_r={} n_theta={}", grid.n_r, grid.n_theta)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "re", "im"])?;
    for i in 0..grid.n_r {
        for j in 0..grid.n_theta {
            let c = grid.cell_center(i, j);
            let v = grid.values[i * grid.n_theta + j];
            w.write_record([fmt_f64(c.re), fmt_f64(c.im), fmt_f64(v.re), fmt_f64(v.im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let values = (0..6).map(|k| Complex64::new(k as f64, -0.5)).collect();
        let g = SampledGrid::new(2, 3, values).unwrap();
        let mut buf = Vec::new();
        write_sampled_csv(&g, &mut buf).unwrap();
        let back = parse_sampled_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_cells_are_reported() {
        let text = "# polar n_r=1 n_theta=2\nx,y,re,im\n0.5,0.1,1,0\n";
        let err = parse_sampled_csv(text).unwrap_err();
        assert!(format!("{err:#}").contains("no sample"), "{err:#}");
    }

    #[test]
    fn shape_line_is_required() {
        assert!(parse_sampled_csv("x,y,re,im\n0.1,0.1,1,0\n").is_err());
    }
}
