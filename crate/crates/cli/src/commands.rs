//! The six subcommands. Each takes a merged [`ExperimentConfig`] plus any
//! subcommand-specific paths and reports through the process exit status:
//! 0 success, 1 failed verification, 2 usage/validation, 3 non-convergence.

use crate::config::{parse_kernel, ExperimentConfig};
use crate::io::{self, FitRecord, SampleMeta};
use crate::svg::{self, LineStyle, Panel, Series};
use crate::CliError;
use deconcave::{
    characterization_slack, fit_lse_from, fit_mle, lse_characterization, lse_limit_constants,
    minimax_bound_cdf, minimax_bound_density, rate_study, solve_reciprocal, ConcaveCdf,
    LocalQuantities, LseFit, MleFit, NoiseKernel, RateStudyConfig, Sample, UnProcess,
};
use std::path::{Path, PathBuf};

// ---- gen -------------------------------------------------------------------

pub fn gen(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let kernel = cfg.resolve_kernel()?;
    let truth = cfg.resolve_truth()?;
    let sample = deconcave::draw_sample(&truth, &kernel, cfg.n, cfg.seed)?;
    let path = cfg.out_dir.join("sample.txt");
    io::write_sample(&path, sample.observations())?;
    let meta = SampleMeta {
        kernel: kernel.name().to_string(),
        truth: truth.describe(),
        n: cfg.n,
        seed: cfg.seed,
    };
    io::write_meta(&io::meta_path(&path), &meta)?;
    println!(
        "wrote {} ({} observations, kernel {}, truth {}, seed {})",
        path.display(),
        cfg.n,
        meta.kernel,
        meta.truth,
        cfg.seed
    );
    Ok(())
}

// ---- fit -------------------------------------------------------------------

/// Evaluation grid for a fitted or true CDF: evenly spaced on `[0, xmax]`
/// with every kink included exactly.
fn cdf_curve(cdf: &ConcaveCdf, xmax: f64, grid_points: usize) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> =
        (0..grid_points).map(|i| xmax * i as f64 / (grid_points - 1) as f64).collect();
    if let Some((support, _)) = cdf.as_mixture() {
        xs.extend(support.iter().copied().filter(|t| *t <= xmax));
    }
    let end = cdf.right_endpoint();
    if end.is_finite() && end <= xmax {
        xs.push(end);
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    xs.into_iter().map(|x| (x, cdf.cdf(x))).collect()
}

/// Kernel used for fitting/verifying a sample: an explicit spec must agree
/// with the sidecar; otherwise the sidecar decides; otherwise the default.
fn kernel_for_sample(
    cfg: &ExperimentConfig,
    meta: Option<&SampleMeta>,
) -> Result<NoiseKernel, CliError> {
    if cfg.seen.contains("kernel") {
        let kernel = cfg.resolve_kernel()?;
        if let Some(meta) = meta {
            if meta.kernel != kernel.name() {
                return Err(CliError::usage(format!(
                    "sample was generated with kernel {} but {} was requested",
                    meta.kernel,
                    kernel.name()
                )));
            }
        }
        return Ok(kernel);
    }
    match meta {
        Some(meta) => parse_kernel(&meta.kernel).map_err(|_| {
            CliError::usage(format!(
                "sample was generated with kernel {}; pass --kernel custom:<path> to supply its table",
                meta.kernel
            ))
        }),
        None => cfg.resolve_kernel(),
    }
}

fn mle_record(fit: &MleFit, kernel: &NoiseKernel, n: usize, tol: f64) -> FitRecord {
    let (support, weights) = fit.estimate.as_mixture().expect("fit is a mixture");
    FitRecord {
        estimator: "mle".into(),
        kernel: kernel.name().to_string(),
        n,
        tol,
        converged: fit.converged,
        iterations: fit.iterations,
        criterion: ("loglik".into(), fit.loglik),
        support: support.to_vec(),
        weights: weights.to_vec(),
        table_kind: "slack".into(),
        table: fit.slack.clone(),
    }
}

fn lse_record(fit: &LseFit, kernel: &NoiseKernel, n: usize, tol: f64) -> FitRecord {
    let (support, weights) = fit.estimate.as_mixture().expect("fit is a mixture");
    FitRecord {
        estimator: "lse".into(),
        kernel: kernel.name().to_string(),
        n,
        tol,
        converged: fit.converged,
        iterations: fit.iterations,
        criterion: ("objective".into(), fit.objective),
        support: support.to_vec(),
        weights: weights.to_vec(),
        table_kind: "defect".into(),
        table: fit.char_table.clone(),
    }
}

pub fn fit(cfg: &ExperimentConfig, sample_path: &Path) -> Result<(), CliError> {
    let observations = io::read_sample(sample_path)?;
    let meta_path = io::meta_path(sample_path);
    let meta = if meta_path.exists() { Some(io::read_meta(&meta_path)?) } else { None };
    let kernel = kernel_for_sample(cfg, meta.as_ref())?;
    let sample = Sample::from_observations(observations)?;
    let mut stalled = Vec::new();

    if cfg.estimators.wants_mle() {
        let fit = fit_mle(&sample, &kernel, cfg.tol, cfg.max_iter)?;
        let record = mle_record(&fit, &kernel, sample.len(), cfg.tol);
        io::write_fit(&cfg.out_dir.join("fit_mle.txt"), &record)?;
        let curve = cdf_curve(&fit.estimate, sample.max() + 1.0, cfg.grid_points);
        io::write_curve(&cfg.out_dir.join("mle_curve.tsv"), &curve)?;
        println!(
            "mle: loglik {} with {} components after {} iterations{}",
            fit.loglik,
            record.support.len(),
            fit.iterations,
            if fit.converged { "" } else { " (NOT CONVERGED)" }
        );
        if !fit.converged {
            stalled.push(format!("mle stalled after {} iterations", fit.iterations));
        }
    }

    if cfg.estimators.wants_lse() {
        let horizon = cfg.recip_horizon.unwrap_or_else(|| sample.max());
        let recip = solve_reciprocal(&kernel, cfg.recip_h, horizon)?;
        let un = UnProcess::new(&sample, recip)?;
        let fit = fit_lse_from(&un, cfg.tol, cfg.max_iter, None)?;
        let record = lse_record(&fit, &kernel, sample.len(), cfg.tol);
        io::write_fit(&cfg.out_dir.join("fit_lse.txt"), &record)?;
        let curve = cdf_curve(&fit.estimate, sample.max() + 1.0, cfg.grid_points);
        io::write_curve(&cfg.out_dir.join("lse_curve.tsv"), &curve)?;
        println!(
            "lse: objective {} with {} components after {} iterations{}",
            fit.objective,
            record.support.len(),
            fit.iterations,
            if fit.converged { "" } else { " (NOT CONVERGED)" }
        );
        if !fit.converged {
            stalled.push(format!("lse stalled after {} iterations", fit.iterations));
        }
    }

    if stalled.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(stalled.join("; ")))
    }
}

// ---- verify ----------------------------------------------------------------

pub struct VerifyArgs {
    pub fits: Vec<PathBuf>,
    pub sample: Option<PathBuf>,
    pub kernel: Option<String>,
    pub mle_tol: f64,
    pub lse_tol: f64,
    pub recip_h: f64,
}

/// Recomputes the characterization of each stored fit from the sample and
/// the fitted weights (the stored tables are not trusted) and reports
/// PASS/FAIL per inequality. Returns whether everything passed.
pub fn verify(args: &VerifyArgs) -> Result<bool, CliError> {
    if !(args.mle_tol > 0.0 && args.lse_tol > 0.0) {
        return Err(CliError::usage("verification tolerances must be positive"));
    }
    let sample_path = match &args.sample {
        Some(p) => p.clone(),
        None => {
            let first = args.fits.first().ok_or_else(|| CliError::usage("no fit files given"))?;
            first.parent().unwrap_or_else(|| Path::new(".")).join("sample.txt")
        }
    };
    let sample = Sample::from_observations(io::read_sample(&sample_path)?)?;
    let mut all_pass = true;
    let mut check = |label: String, pass: bool| {
        println!("{label}: {}", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    for path in &args.fits {
        let fit = io::read_fit(path)?;
        let kernel = match &args.kernel {
            Some(spec) => {
                let kernel = parse_kernel(spec)?;
                if kernel.name() != fit.kernel {
                    return Err(CliError::usage(format!(
                        "{}: fit used kernel {} but {} was requested",
                        path.display(),
                        fit.kernel,
                        kernel.name()
                    )));
                }
                kernel
            }
            None => parse_kernel(&fit.kernel).map_err(|_| {
                CliError::usage(format!(
                    "{}: fit used kernel {}; pass --kernel custom:<path> to supply its table",
                    path.display(),
                    fit.kernel
                ))
            })?,
        };

        let mass: f64 = fit.weights.iter().sum();
        check(
            format!("{}: weights sum to {mass}", path.display()),
            (mass - 1.0).abs() <= 1e-9,
        );
        // renormalize so a broken-mass file still gets a characterization
        // verdict for its shape
        let weights: Vec<f64> = fit.weights.iter().map(|w| w / mass).collect();
        let cdf = ConcaveCdf::mixture(&fit.support, &weights)?;
        let (support, _) = cdf.as_mixture().expect("mixture");
        let support = support.to_vec();

        match fit.estimator.as_str() {
            "mle" => {
                let rows = characterization_slack(&cdf, &sample, &kernel, &support)?;
                let worst =
                    rows.iter().cloned().fold((0.0, f64::NEG_INFINITY), |acc, r| {
                        if r.1 > acc.1 {
                            r
                        } else {
                            acc
                        }
                    });
                check(
                    format!(
                        "{}: max mle slack {} at candidate {} (bound 1 + {})",
                        path.display(),
                        worst.1,
                        worst.0,
                        args.mle_tol
                    ),
                    worst.1 <= 1.0 + args.mle_tol,
                );
                let eq = support
                    .iter()
                    .map(|t| {
                        let row = rows.iter().find(|r| r.0 == *t).expect("support in table");
                        (row.0, (row.1 - 1.0).abs())
                    })
                    .fold((0.0, 0.0), |acc, r| if r.1 > acc.1 { r } else { acc });
                check(
                    format!(
                        "{}: max |slack - 1| over support {} at {} (bound {})",
                        path.display(),
                        eq.1,
                        eq.0,
                        args.mle_tol
                    ),
                    eq.1 <= args.mle_tol,
                );
            }
            "lse" => {
                let recip = solve_reciprocal(&kernel, args.recip_h, sample.max())?;
                let un = UnProcess::new(&sample, recip)?;
                let mut thetas = un.candidates();
                thetas.extend(support.iter().copied());
                thetas.sort_by(|a, b| a.total_cmp(b));
                thetas.dedup();
                let rows = lse_characterization(&cdf, &un, &thetas)?;
                let worst = rows.iter().cloned().fold((0.0, f64::INFINITY), |acc, r| {
                    if r.1 < acc.1 {
                        r
                    } else {
                        acc
                    }
                });
                check(
                    format!(
                        "{}: min lse defect {} at candidate {} (bound -{})",
                        path.display(),
                        worst.1,
                        worst.0,
                        args.lse_tol
                    ),
                    worst.1 >= -args.lse_tol,
                );
                let eq = support
                    .iter()
                    .map(|t| {
                        let row = rows.iter().find(|r| r.0 == *t).expect("kink in table");
                        (row.0, row.1.abs())
                    })
                    .fold((0.0, 0.0), |acc, r| if r.1 > acc.1 { r } else { acc });
                check(
                    format!(
                        "{}: max |defect| over kinks {} at {} (bound {})",
                        path.display(),
                        eq.1,
                        eq.0,
                        args.lse_tol
                    ),
                    eq.1 <= args.lse_tol,
                );
            }
            other => {
                return Err(CliError::usage(format!(
                    "{}: unknown estimator `{other}`",
                    path.display()
                )))
            }
        }
    }
    println!("verify: {}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}

// ---- figures ---------------------------------------------------------------

struct FigureCase {
    sample: Sample,
    mle: MleFit,
    lse: LseFit,
}

fn figure_case(
    truth: &ConcaveCdf,
    kernel: &NoiseKernel,
    n: usize,
    seed: u64,
    max_iter: usize,
) -> Result<FigureCase, CliError> {
    // tighter than the default so plotted characterization curves sit
    // cleanly on the feasible side of their bounds
    let tol = 1e-10;
    let sample = deconcave::draw_sample(truth, kernel, n, seed)?;
    let mle = fit_mle(&sample, kernel, tol, max_iter)?;
    let recip = solve_reciprocal(kernel, 1e-3, sample.max())?;
    let un = UnProcess::new(&sample, recip)?;
    let lse = fit_lse_from(&un, tol, max_iter, None)?;
    if !(mle.converged && lse.converged) {
        return Err(CliError::NotConverged(format!(
            "figure fit for kernel {} at n = {n} did not converge",
            kernel.name()
        )));
    }
    Ok(FigureCase { sample, mle, lse })
}

/// One overlay figure (two sample sizes side by side) plus its six curve
/// files, named `{stem}_{true|mle|lse}_n{size}.tsv`.
fn overlay_figure(
    cfg: &ExperimentConfig,
    stem: &str,
    truth: &ConcaveCdf,
    kernel: &NoiseKernel,
    cases: &[&FigureCase],
    sizes: &[usize],
) -> Result<(), CliError> {
    let mut panels = Vec::new();
    for (case, n) in cases.iter().zip(sizes) {
        let xmax = case.sample.max() + 1.0;
        let curves = [
            ("true", truth, LineStyle::Truth),
            ("mle", &case.mle.estimate, LineStyle::Mle),
            ("lse", &case.lse.estimate, LineStyle::Lse),
        ];
        let mut series = Vec::new();
        for (label, cdf, style) in curves {
            let points = cdf_curve(cdf, xmax, cfg.grid_points);
            io::write_curve(&cfg.out_dir.join(format!("{stem}_{label}_n{n}.tsv")), &points)?;
            series.push(Series {
                label: match label {
                    "true" => "true".to_string(),
                    "mle" => "MLE".to_string(),
                    _ => "LSE".to_string(),
                },
                style,
                points,
            });
        }
        panels.push(Panel {
            title: format!("kernel {}, n = {n}", kernel.name()),
            x_label: "x".into(),
            y_label: "F(x)".into(),
            series,
        });
    }
    io::write_atomic(&cfg.out_dir.join(format!("{stem}.svg")), &svg::render(&panels))?;
    Ok(())
}

/// Characterization figure for the small exponential case: the likelihood
/// slack curve over a dense grid (its bound holds at every point) and the
/// least squares defect at the candidate kinks (where its bound applies).
fn characterization_figure(
    cfg: &ExperimentConfig,
    kernel: &NoiseKernel,
    case: &FigureCase,
) -> Result<(), CliError> {
    let zmax = case.sample.max();
    let (mle_support, _) = case.mle.estimate.as_mixture().expect("mixture");
    let mut grid: Vec<f64> =
        (1..=cfg.grid_points).map(|i| zmax * i as f64 / cfg.grid_points as f64).collect();
    grid.extend(mle_support.iter().copied());
    let slack = characterization_slack(&case.mle.estimate, &case.sample, kernel, &grid)?;
    io::write_curve(&cfg.out_dir.join("fig3_mle_slack.tsv"), &slack)?;

    let recip = solve_reciprocal(kernel, 1e-3, zmax)?;
    let un = UnProcess::new(&case.sample, recip)?;
    let (lse_support, _) = case.lse.estimate.as_mixture().expect("mixture");
    let mut thetas = un.candidates();
    thetas.extend(lse_support.iter().copied());
    thetas.sort_by(|a, b| a.total_cmp(b));
    thetas.dedup();
    let defect = lse_characterization(&case.lse.estimate, &un, &thetas)?;
    io::write_curve(&cfg.out_dir.join("fig3_lse_defect.tsv"), &defect)?;

    let bound = |y: f64, pts: &[(f64, f64)]| Series {
        label: "bound".into(),
        style: LineStyle::Reference,
        points: vec![(pts.first().unwrap().0, y), (pts.last().unwrap().0, y)],
    };
    let panels = vec![
        Panel {
            title: format!("likelihood characterization, n = {}", case.sample.len()),
            x_label: "t".into(),
            y_label: "mean density ratio".into(),
            series: vec![
                bound(1.0, &slack),
                Series { label: "MLE slack".into(), style: LineStyle::Mle, points: slack.clone() },
            ],
        },
        Panel {
            title: format!("least squares characterization, n = {}", case.sample.len()),
            x_label: "t".into(),
            y_label: "defect".into(),
            series: vec![
                bound(0.0, &defect),
                Series { label: "H - Y".into(), style: LineStyle::Lse, points: defect.clone() },
            ],
        },
    ];
    io::write_atomic(&cfg.out_dir.join("fig3.svg"), &svg::render(&panels))?;
    Ok(())
}

pub fn figures(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let truth = ConcaveCdf::sqrt_benchmark();
    let sizes = [10usize, 100];
    let exponential = NoiseKernel::Exponential;
    let triangular = NoiseKernel::Triangular;

    let exp_cases = [
        figure_case(&truth, &exponential, sizes[0], cfg.seed, cfg.max_iter)?,
        figure_case(&truth, &exponential, sizes[1], cfg.seed, cfg.max_iter)?,
    ];
    overlay_figure(cfg, "fig1", &truth, &exponential, &[&exp_cases[0], &exp_cases[1]], &sizes)?;

    let tri_cases = [
        figure_case(&truth, &triangular, sizes[0], cfg.seed, cfg.max_iter)?,
        figure_case(&truth, &triangular, sizes[1], cfg.seed, cfg.max_iter)?,
    ];
    overlay_figure(cfg, "fig2", &truth, &triangular, &[&tri_cases[0], &tri_cases[1]], &sizes)?;

    characterization_figure(cfg, &exponential, &exp_cases[0])?;

    for name in ["fig1.svg", "fig2.svg", "fig3.svg"] {
        println!("wrote {}", cfg.out_dir.join(name).display());
    }
    Ok(())
}

// ---- rates -----------------------------------------------------------------

/// Least squares slope of y on x plus a two-standard-error half width.
fn slope_with_band(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    (slope, 2.0 * (rss / dof / sxx).sqrt())
}

pub fn rates(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let study = RateStudyConfig {
        truth: cfg.resolve_truth()?,
        kernel: cfg.resolve_kernel()?,
        x0: cfg.x0,
        sizes: cfg.sizes.clone(),
        replications: cfg.replications,
        base_seed: cfg.seed,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let result = rate_study(&study)?;

    let mut table = String::new();
    for (i, &n) in result.sizes.iter().enumerate() {
        use std::fmt::Write as _;
        writeln!(
            table,
            "{n}\t{}\t{}\t{}\t{}",
            result.value_errors[i], result.derivative_errors[i], result.replications,
            result.failures[i]
        )
        .unwrap();
    }
    {
        use std::fmt::Write as _;
        writeln!(table, "slopes\t{}\t{}", result.value_slope, result.derivative_slope).unwrap();
    }
    let table_path = cfg.out_dir.join("rate_table.tsv");
    io::write_atomic(&table_path, &table)?;

    let xs: Vec<f64> = result.sizes.iter().map(|&n| (n as f64).log10()).collect();
    let value_pts: Vec<(f64, f64)> =
        xs.iter().zip(&result.value_errors).map(|(&x, &e)| (x, e.log10())).collect();
    let deriv_pts: Vec<(f64, f64)> =
        xs.iter().zip(&result.derivative_errors).map(|(&x, &e)| (x, e.log10())).collect();
    let (_, value_band) = slope_with_band(
        &xs,
        &result.value_errors.iter().map(|e| e.log10()).collect::<Vec<_>>(),
    );
    let (_, deriv_band) = slope_with_band(
        &xs,
        &result.derivative_errors.iter().map(|e| e.log10()).collect::<Vec<_>>(),
    );

    let panel = Panel {
        title: "median error against sample size".into(),
        x_label: "log10 n".into(),
        y_label: "log10 median error".into(),
        series: vec![
            Series { label: "value".into(), style: LineStyle::Mle, points: value_pts },
            Series { label: "derivative".into(), style: LineStyle::Lse, points: deriv_pts },
        ],
    };
    io::write_atomic(&cfg.out_dir.join("rates.svg"), &svg::render(&[panel]))?;

    println!("wrote {}", table_path.display());
    println!(
        "value slope {} +- {} (2 se); derivative slope {} +- {} (2 se)",
        result.value_slope, value_band, result.derivative_slope, deriv_band
    );
    for (i, &n) in result.sizes.iter().enumerate() {
        if result.failures[i] > 0 {
            println!(
                "note: {} of {} replications at n = {n} did not converge and were excluded",
                result.failures[i], result.replications
            );
        }
    }
    Ok(())
}

// ---- bounds ----------------------------------------------------------------

pub fn bounds(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let truth = cfg.resolve_truth()?;
    let kernel = cfg.resolve_kernel()?;
    let local = LocalQuantities::evaluate(&truth, &kernel, cfg.x0)?;
    println!("model: truth {}, kernel {}, x0 = {}", truth.describe(), kernel.name(), cfg.x0);
    println!("f(x0) = {}, f'(x0) = {}, g(x0) = {}", local.f0, local.f0_prime, local.g0);
    println!(
        "minimax lower bound for the distribution function: {} * n^(-2/5)",
        minimax_bound_cdf(&local, &kernel)
    );
    println!(
        "minimax lower bound for the density: {} * n^(-1/5)",
        minimax_bound_density(&local, &kernel)
    );
    match lse_limit_constants(&local, &kernel) {
        Ok(c) => {
            println!(
                "least squares limit scales: value {} (rate n^(-2/5)), slope {} (rate n^(-1/5))",
                c.value_scale, c.derivative_scale
            );
        }
        Err(e) => println!("least squares limit scales: unavailable ({e})"),
    }
    Ok(())
}
