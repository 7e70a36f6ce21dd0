//! JSON run configuration. Every field has a default, so `{}` is a valid
//! config; unknown fields are rejected with their path.

use std::path::{Path, PathBuf};

use blochpack_core::bloch::BlochGridSpec;
use blochpack_core::quadrature::QuadratureSpec;
use blochpack_core::symbols::Symbol;
use blochpack_core::zeropack::PackingConfig;
use serde::{Deserialize, Serialize};

use crate::sampled::read_sampled_csv;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Symbols to process; empty means the built-in catalog.
    pub symbols: Vec<SymbolEntry>,
    pub grid: GridConfig,
    pub project: ProjectGrid,
    /// Real parameters `t` for integral means.
    pub t_list: Vec<f64>,
    /// Radii for integral means and variance curves.
    pub r_list: Vec<f64>,
    /// Zero-packing levels `log(1/(1-r^2))`.
    #[serde(rename = "Lambda_list")]
    pub lambda_list: Vec<f64>,
    pub degrees: Vec<usize>,
    pub quadrature: QuadratureSpec,
    pub bloch: BlochGridSpec,
    /// Optimizer settings; its `seed` is replaced by the run seed.
    pub packing: PackingConfig,
    pub output: OutputConfig,
    pub seed: u64,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            symbols: Vec::new(),
            grid: GridConfig::default(),
            project: ProjectGrid::default(),
            t_list: vec![0.0, 0.02, 0.05, 0.1],
            r_list: (1..=12).map(|j| 1.0 - 10f64.powf(-(j as f64) / 2.0)).collect(),
            lambda_list: vec![4.0, 8.0, 12.0, 16.0],
            degrees: (0..=8).collect(),
            quadrature: QuadratureSpec::default(),
            bloch: BlochGridSpec::default(),
            packing: PackingConfig::default(),
            output: OutputConfig::default(),
            seed: 0x5eed,
            verify: VerifyConfig::default(),
        }
    }
}

/// A named symbol, given inline or as a sampled polar grid in CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub eps: f64,
    pub k_max: u32,
    /// Boxes are listed individually only for annuli with at most this many.
    pub max_listed_boxes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            l: 2.0,
            eps: 0.25,
            k_max: 4,
            max_listed_boxes: 10_000,
        }
    }
}

/// Polar evaluation grid for `project`: the origin plus `n_r` radii up to
/// `max_radius` times `n_theta` angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub max_radius: f64,
}

impl Default for ProjectGrid {
    fn default() -> Self {
        Self {
            n_r: 10,
            n_theta: 16,
            max_radius: 0.99,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Adds `1.5 x kernel-phase(0.9)`, which must fail the derivative bound.
    pub inject_bad_symbol: bool,
    /// Points of the hyperbolic-uniform grid for pointwise checks.
    pub points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            inject_bad_symbol: false,
            points: 2000,
        }
    }
}

/// Configuration errors; the CLI maps these to exit code 2.
#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, field: String, message: String },
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            ConfigError::Parse { path, field, message } => {
                write!(f, "{}: at `{field}`: {message}", path.display())
            }
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        // an empty file means "all defaults"
        let text = if text.trim().is_empty() { "{}" } else { text };
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::Parse {
                path: origin.to_path_buf(),
                field,
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text, path)?;
        // sampled grids are resolved relative to the config file
        if let Some(dir) = path.parent() {
            for s in &mut cfg.symbols {
                if let Some(p) = &mut s.sampled_csv {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.quadrature.validate().map_err(|e| ConfigError::Invalid(format!("quadrature: {e}")))?;
        self.bloch.validate().map_err(|e| ConfigError::Invalid(format!("bloch: {e}")))?;
        self.packing.simplex.validate().map_err(|e| ConfigError::Invalid(format!("packing.simplex: {e}")))?;
        if self.r_list.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return bad("r_list entries must lie in (0, 1)".into());
        }
        if self.lambda_list.windows(2).any(|w| !(w[0] < w[1])) || self.lambda_list.iter().any(|l| !(*l > 0.0)) {
            return bad("Lambda_list must be positive and strictly increasing".into());
        }
        if self.degrees.windows(2).any(|w| w[0] >= w[1]) {
            return bad("degrees must be strictly increasing".into());
        }
        if !(self.project.max_radius > 0.0 && self.project.max_radius < 1.0) {
            return bad("project.max_radius must lie in (0, 1)".into());
        }
        for s in &self.symbols {
            match (&s.symbol, &s.sampled_csv) {
                (Some(mu), None) => mu
                    .validate()
                    .map_err(|e| ConfigError::Invalid(format!("symbol `{}`: {e}", s.name)))?,
                (None, Some(_)) => {}
                _ => return bad(format!("symbol `{}` needs exactly one of `symbol`, `sampled_csv`", s.name)),
            }
        }
        Ok(())
    }

    /// The symbols to process, with sampled grids read from disk.
    pub fn resolve_symbols(&self) -> anyhow::Result<Vec<(String, Symbol)>> {
        if self.symbols.is_empty() {
            return Ok(Symbol::catalog().into_iter().map(|(n, s)| (n.to_string(), s)).collect());
        }
        self.symbols
            .iter()
            .map(|e| {
                let mu = match (&e.symbol, &e.sampled_csv) {
                    (Some(mu), _) => mu.clone(),
                    (None, Some(p)) => Symbol::Sampled(read_sampled_csv(p)?),
                    (None, None) => anyhow::bail!("symbol `{}` has no source", e.name),
                };
                Ok((e.name.clone(), mu))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_json("", Path::new("x")).unwrap(), RunConfig::default());
        assert_eq!(RunConfig::from_json("{}", Path::new("x")).unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.symbols.push(SymbolEntry {
            name: "h".into(),
            symbol: Some(Symbol::AngularHarmonic { m: 2 }),
            sampled_csv: None,
        });
        let back = RunConfig::from_json(&cfg.to_json(), Path::new("x")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let err = RunConfig::from_json(r#"{"grid": {"L": "wide"}}"#, Path::new("c.json")).unwrap_err();
        match err {
            ConfigError::Parse { field, .. } => assert_eq!(field, "grid.L"),
            e => panic!("{e}"),
        }
        let err = RunConfig::from_json(r#"{"packing": {"simplex": {"bogus": 1}}}"#, Path::new("c.json")).unwrap_err();
        assert!(err.to_string().contains("packing.simplex"), "{err}");
    }
}
