//! File formats for samples, fitted estimates and curve tables.
//!
//! Everything is plain text. Floats are written with Rust's shortest
//! round-trip formatting, so parsing a file back yields bit-identical
//! values and reruns with the same seed produce byte-identical files.
//! Writes go through a temp file in the target directory followed by a
//! rename, so a crash cannot leave a half-written artifact behind.

use crate::CliError;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("create {}: {e}", dir.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::usage(format!("write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::usage(format!("rename to {}: {e}", path.display())))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("read {}: {e}", path.display())))
}

// ---- samples -------------------------------------------------------------

/// One observation per line, ascending.
pub fn write_sample(path: &Path, sample: &[f64]) -> Result<(), CliError> {
    let mut out = String::new();
    for z in sample {
        writeln!(out, "{z}").unwrap();
    }
    write_atomic(path, &out)
}

pub fn read_sample(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut sample = Vec::new();
    for (lineno, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let z: f64 = line.parse().map_err(|_| {
            CliError::usage(format!(
                "{} line {}: not an observation: {line}",
                path.display(),
                lineno + 1
            ))
        })?;
        sample.push(z);
    }
    if sample.is_empty() {
        return Err(CliError::usage(format!("{}: empty sample", path.display())));
    }
    Ok(sample)
}

/// Sidecar describing how a sample was produced, stored next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub kernel: String,
    pub truth: String,
    pub n: usize,
    pub seed: u64,
}

pub fn meta_path(sample_path: &Path) -> std::path::PathBuf {
    let mut os = sample_path.as_os_str().to_owned();
    os.push(".meta");
    os.into()
}

pub fn write_meta(path: &Path, meta: &SampleMeta) -> Result<(), CliError> {
    let text = format!(
        "kernel {}\ntruth {}\nn {}\nseed {}\n",
        meta.kernel, meta.truth, meta.n, meta.seed
    );
    write_atomic(path, &text)
}

pub fn read_meta(path: &Path) -> Result<SampleMeta, CliError> {
    let mut kernel = None;
    let mut truth = None;
    let mut n = None;
    let mut seed = None;
    for (lineno, raw) in read(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |what: &str| {
            CliError::usage(format!("{} line {}: {what}", path.display(), lineno + 1))
        };
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err("expected `key value`"))?;
        let value = value.trim();
        match key {
            "kernel" => kernel = Some(value.to_string()),
            "truth" => truth = Some(value.to_string()),
            "n" => n = Some(value.parse().map_err(|_| err("bad n"))?),
            "seed" => seed = Some(value.parse().map_err(|_| err("bad seed"))?),
            _ => return Err(err("unknown key")),
        }
    }
    let missing = |what: &str| CliError::usage(format!("{}: missing {what}", path.display()));
    Ok(SampleMeta {
        kernel: kernel.ok_or_else(|| missing("kernel"))?,
        truth: truth.ok_or_else(|| missing("truth"))?,
        n: n.ok_or_else(|| missing("n"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    })
}

// ---- fitted estimates ----------------------------------------------------

/// A fitted mixture together with the run settings and its
/// characterization table, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub estimator: String,
    pub kernel: String,
    pub n: usize,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `("loglik", v)` for the likelihood fit, `("objective", v)` for the
    /// least-squares fit.
    pub criterion: (String, f64),
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
    /// slack rows for the likelihood fit, defect rows for least squares
    pub table_kind: String,
    pub table: Vec<(f64, f64)>,
}

pub fn write_fit(path: &Path, fit: &FitRecord) -> Result<(), CliError> {
    let mut out = String::new();
    writeln!(out, "estimator {}", fit.estimator).unwrap();
    writeln!(out, "kernel {}", fit.kernel).unwrap();
    writeln!(out, "n {}", fit.n).unwrap();
    writeln!(out, "tol {}", fit.tol).unwrap();
    writeln!(out, "converged {}", fit.converged).unwrap();
    writeln!(out, "iterations {}", fit.iterations).unwrap();
    writeln!(out, "{} {}", fit.criterion.0, fit.criterion.1).unwrap();
    for (theta, weight) in fit.support.iter().zip(&fit.weights) {
        writeln!(out, "component {theta} {weight}").unwrap();
    }
    for (theta, value) in &fit.table {
        writeln!(out, "{} {theta} {value}", fit.table_kind).unwrap();
    }
    write_atomic(path, &out)
}

pub fn read_fit(path: &Path) -> Result<FitRecord, CliError> {
    let mut fit = FitRecord {
        estimator: String::new(),
        kernel: String::new(),
        n: 0,
        tol: 0.0,
        converged: false,
        iterations: 0,
        criterion: (String::new(), 0.0),
        support: Vec::new(),
        weights: Vec::new(),
        table_kind: String::new(),
        table: Vec::new(),
    };
    for (lineno, raw) in read(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |what: &str| {
            CliError::usage(format!("{} line {}: {what}", path.display(), lineno + 1))
        };
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        match key {
            "estimator" => fit.estimator = parts.next().ok_or_else(|| err("missing value"))?.into(),
            "kernel" => fit.kernel = parts.next().ok_or_else(|| err("missing value"))?.into(),
            "n" => {
                fit.n = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad n"))?
            }
            "tol" => {
                fit.tol = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad tol"))?
            }
            "converged" => {
                fit.converged = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad flag"))?
            }
            "iterations" => {
                fit.iterations = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad count"))?
            }
            "loglik" | "objective" => {
                let v = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad value"))?;
                fit.criterion = (key.into(), v);
            }
            "component" => {
                let theta: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing support point"))?
                    .parse()
                    .map_err(|_| err("bad support point"))?;
                let weight: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing weight"))?
                    .parse()
                    .map_err(|_| err("bad weight"))?;
                fit.support.push(theta);
                fit.weights.push(weight);
            }
            "slack" | "defect" => {
                let theta: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing point"))?
                    .parse()
                    .map_err(|_| err("bad point"))?;
                let value: f64 = parts
                    .next()
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad value"))?;
                fit.table_kind = key.into();
                fit.table.push((theta, value));
            }
            _ => return Err(err("unknown key")),
        }
    }
    if fit.estimator.is_empty() {
        return Err(CliError::usage(format!("{}: missing estimator", path.display())));
    }
    if fit.support.is_empty() {
        return Err(CliError::usage(format!("{}: no components", path.display())));
    }
    Ok(fit)
}

// ---- curve tables ----------------------------------------------------------

/// Tab-separated `x<TAB>y` rows.
pub fn write_curve(path: &Path, points: &[(f64, f64)]) -> Result<(), CliError> {
    let mut out = String::new();
    for (x, y) in points {
        writeln!(out, "{x}\t{y}").unwrap();
    }
    write_atomic(path, &out)
}

// parser counterpart of `write_curve`; keeps the round-trip property testable
#[cfg_attr(not(test), allow(dead_code))]
pub fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut points = Vec::new();
    for (lineno, raw) in read(path)?.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |what: &str| {
            CliError::usage(format!("{} line {}: {what}", path.display(), lineno + 1))
        };
        let (x, y) = line.split_once('\t').ok_or_else(|| err("expected two columns"))?;
        points.push((
            x.trim().parse().map_err(|_| err("bad x"))?,
            y.trim().parse().map_err(|_| err("bad y"))?,
        ));
    }
    Ok(points)
}
