//! Experiment configuration: defaults, flat key-value config files, and
//! command-line overrides applied on top.
//!
//! Config files are plain text, one `key value` pair per line, `#` starting
//! a comment. Every key also exists as a command-line flag; flags win over
//! the file, the file wins over defaults. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use crate::CliError;
use deconcave::{ConcaveCdf, NoiseKernel};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimators {
    Mle,
    Lse,
    Both,
}

impl Estimators {
    pub fn wants_mle(self) -> bool {
        matches!(self, Estimators::Mle | Estimators::Both)
    }
    pub fn wants_lse(self) -> bool {
        matches!(self, Estimators::Lse | Estimators::Both)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Keys set by a file or a flag, as opposed to resting at their default;
    /// lets `fit` prefer a sample's sidecar kernel over the default.
    pub seen: std::collections::BTreeSet<String>,
    pub kernel: String,
    pub truth: String,
    pub n: usize,
    pub seed: u64,
    pub estimators: Estimators,
    pub tol: f64,
    pub max_iter: usize,
    pub out_dir: PathBuf,
    pub recip_h: f64,
    /// reach of the tabulated reciprocal; defaults to just past the data
    pub recip_horizon: Option<f64>,
    pub grid_points: usize,
    pub x0: f64,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub eps: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seen: Default::default(),
            kernel: "exponential".into(),
            truth: "sqrt5".into(),
            n: 100,
            seed: 42,
            estimators: Estimators::Both,
            tol: 1e-8,
            max_iter: 500,
            out_dir: PathBuf::from("out"),
            recip_h: 1e-3,
            recip_horizon: None,
            grid_points: 512,
            x0: 1.0,
            sizes: vec![200, 800, 3200],
            replications: 100,
            eps: vec![0.05, 0.02, 0.01],
        }
    }
}

impl ExperimentConfig {
    /// Applies one `key value` pair; unknown keys and malformed values are
    /// validation errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::usage(format!("config key {key}: {what}: {value}"));
        match key {
            "kernel" => self.kernel = value.to_string(),
            "truth" => self.truth = value.to_string(),
            "n" => self.n = value.parse().map_err(|_| bad("not a count"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("not a seed"))?,
            "estimators" => {
                self.estimators = match value {
                    "mle" => Estimators::Mle,
                    "lse" => Estimators::Lse,
                    "both" => Estimators::Both,
                    _ => return Err(bad("expected mle, lse or both")),
                }
            }
            "tol" => self.tol = value.parse().map_err(|_| bad("not a number"))?,
            "max_iter" => self.max_iter = value.parse().map_err(|_| bad("not a count"))?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "recip_h" => self.recip_h = value.parse().map_err(|_| bad("not a number"))?,
            "recip_horizon" => {
                self.recip_horizon = Some(value.parse().map_err(|_| bad("not a number"))?)
            }
            "grid_points" => self.grid_points = value.parse().map_err(|_| bad("not a count"))?,
            "x0" => self.x0 = value.parse().map_err(|_| bad("not a number"))?,
            "sizes" => {
                self.sizes = value
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("expected comma-separated counts"))?
            }
            "replications" => {
                self.replications = value.parse().map_err(|_| bad("not a count"))?
            }
            "eps" => {
                self.eps = value
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("expected comma-separated numbers"))?
            }
            _ => return Err(CliError::usage(format!("unknown config key: {key}"))),
        }
        self.seen.insert(key.to_string());
        Ok(())
    }

    /// Loads a config file on top of the current values.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
                CliError::usage(format!(
                    "config {} line {}: expected `key value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Structural validation after all sources are merged.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::usage("n must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::usage(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CliError::usage("max_iter must be at least 1"));
        }
        if !(self.recip_h > 0.0 && self.recip_h.is_finite()) {
            return Err(CliError::usage(format!(
                "recip_h must be positive, got {}",
                self.recip_h
            )));
        }
        if self.grid_points < 2 {
            return Err(CliError::usage("grid_points must be at least 2"));
        }
        Ok(())
    }

    pub fn resolve_kernel(&self) -> Result<NoiseKernel, CliError> {
        parse_kernel(&self.kernel)
    }

    pub fn resolve_truth(&self) -> Result<ConcaveCdf, CliError> {
        parse_truth(&self.truth)
    }
}

/// Kernel specs: `exponential`, `uniform01`, `triangular`, or
/// `custom:<path>` where the file holds a `k0` line and `kappa x value`
/// lines describing the reciprocal-equation forcing table.
pub fn parse_kernel(spec: &str) -> Result<NoiseKernel, CliError> {
    match spec {
        "exponential" => Ok(NoiseKernel::Exponential),
        "uniform01" => Ok(NoiseKernel::Uniform01),
        "triangular" => Ok(NoiseKernel::Triangular),
        _ => {
            let Some(path) = spec.strip_prefix("custom:") else {
                return Err(CliError::usage(format!(
                    "unknown kernel `{spec}` (expected exponential, uniform01, triangular or custom:<path>)"
                )));
            };
            load_custom_kernel(Path::new(path))
        }
    }
}

fn load_custom_kernel(path: &Path) -> Result<NoiseKernel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("kernel table {}: {e}", path.display())))?;
    let mut k0 = None;
    let mut table = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let err = |what: &str| {
            CliError::usage(format!("kernel table {} line {}: {what}", path.display(), lineno + 1))
        };
        match parts.next() {
            Some("k0") => {
                let v = parts.next().ok_or_else(|| err("missing value"))?;
                k0 = Some(v.parse().map_err(|_| err("bad k0"))?);
            }
            Some("kappa") => {
                let x: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing x"))?
                    .parse()
                    .map_err(|_| err("bad x"))?;
                let v: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad value"))?;
                table.push((x, v));
            }
            _ => return Err(err("expected `k0 <v>` or `kappa <x> <v>`")),
        }
    }
    let k0 = k0.ok_or_else(|| CliError::usage(format!("kernel table {}: no k0", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    NoiseKernel::custom(name, k0, &table).map_err(CliError::from)
}

/// Truth specs: `sqrt5`, `sqrt:<scale>`, or `mixture:w@theta,w@theta,...`.
pub fn parse_truth(spec: &str) -> Result<ConcaveCdf, CliError> {
    if spec == "sqrt5" {
        return Ok(ConcaveCdf::sqrt_benchmark());
    }
    if let Some(scale) = spec.strip_prefix("sqrt:") {
        let scale: f64 = scale
            .parse()
            .map_err(|_| CliError::usage(format!("bad sqrt scale in `{spec}`")))?;
        return ConcaveCdf::sqrt_scaled(scale).map_err(CliError::from);
    }
    if let Some(body) = spec.strip_prefix("mixture:") {
        let mut weights = Vec::new();
        let mut thetas = Vec::new();
        for part in body.split(',') {
            let (w, t) = part
                .split_once('@')
                .ok_or_else(|| CliError::usage(format!("bad mixture component `{part}`")))?;
            weights.push(
                w.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad weight in `{part}`")))?,
            );
            thetas.push(
                t.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad support point in `{part}`")))?,
            );
        }
        return ConcaveCdf::mixture(&thetas, &weights).map_err(CliError::from);
    }
    Err(CliError::usage(format!(
        "unknown truth `{spec}` (expected sqrt5, sqrt:<scale> or mixture:w@theta,...)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_then_file_then_flags() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.n, 100);
        cfg.set("n", "25").unwrap();
        cfg.set("estimators", "lse").unwrap();
        cfg.set("sizes", "10, 20,40").unwrap();
        assert_eq!(cfg.n, 25);
        assert_eq!(cfg.estimators, Estimators::Lse);
        assert_eq!(cfg.sizes, vec![10, 20, 40]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("kernell", "exponential").is_err());
    }

    #[test]
    fn zero_n_fails_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("n", "0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn truth_specs_round_trip() {
        let m = parse_truth("mixture:0.5@1,0.5@2").unwrap();
        assert_eq!(m.describe(), "mixture:0.5@1,0.5@2");
        let s = parse_truth("sqrt5").unwrap();
        assert_eq!(s.describe(), "sqrt5");
        let s2 = parse_truth("sqrt:2.5").unwrap();
        assert_eq!(s2.describe(), "sqrt:2.5");
        assert!(parse_truth("cauchy").is_err());
    }

    #[test]
    fn kernel_specs_resolve() {
        assert_eq!(parse_kernel("triangular").unwrap().name(), "triangular");
        assert!(parse_kernel("gaussian").is_err());
    }
}
