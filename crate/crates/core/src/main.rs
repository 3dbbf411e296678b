//! Command-line front end: simulate spectra, run the estimator, select
//! bandwidths, drive the replicated studies, and verify invariants.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpdeconv::bandwidth::oracle_j_curve;
use fpdeconv::dbm::{Backend, SpectralSample};
use fpdeconv::error::{Error, Result};
use fpdeconv::harness::output;
use fpdeconv::harness::verify;
use fpdeconv::harness::{
    run_estimate, run_fluctuation_study, run_mise_study, run_variance_study, ExperimentConfig,
    PartialConfig,
};

#[derive(Parser)]
#[command(
    name = "fpdeconv",
    version,
    about = "Initial-density estimation from Dyson Brownian motion spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key-value config file (TOML syntax).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset: `default` or `paper-sec5`.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (0 = available parallelism). Results are identical for
    /// any thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Import eigenvalues from a CSV instead of simulating.
    #[arg(long)]
    eigenvalues: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one spectrum and write sample.csv.
    Simulate(CommonArgs),
    /// Run the full estimator pipeline and write estimate.csv.
    Estimate(EstimateArgs),
    /// Run bandwidth cross-validation and write cv.csv.
    Cv(EstimateArgs),
    /// Error-rate study over the configured n list.
    Mise(CommonArgs),
    /// Fixed-point fluctuation study over the configured z points.
    Fluct(CommonArgs),
    /// Replicate-variance study at fixed bandwidth.
    Var(CommonArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Cv(args) => cmd_cv(&args),
        Command::Mise(args) => cmd_mise(&args),
        Command::Fluct(args) => cmd_fluct(&args),
        Command::Var(args) => cmd_var(&args),
        Command::Verify { seed } => return cmd_verify(seed),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut partial = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config '{}': {e}", path.display()))
            })?;
            PartialConfig::from_toml(&text)?
        }
        None => PartialConfig::default(),
    };
    if common.preset.is_some() {
        partial.preset = common.preset.clone();
    }
    if common.seed.is_some() {
        partial.seed = common.seed;
    }
    if common.threads.is_some() {
        partial.threads = common.threads;
    }
    let cfg = ExperimentConfig::resolve(&partial)?;
    if cfg.threads > 0 {
        // Ignore the error if a pool already exists (tests, repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    Ok(cfg)
}

fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let sample = fpdeconv::harness::studies::simulate_replicate(&cfg, cfg.n, 0)?;
    ensure_finite(&sample.eigenvalues, "simulated spectrum")?;
    output::write_file(&args.out, "sample.csv", &output::sample_csv(&sample))?;
    let extras = vec![(
        "eta_star".to_string(),
        sample
            .eta_star
            .map(|e| format!("\"{e}\""))
            .unwrap_or_else(|| "\"none\"".into()),
    )];
    output::write_file(&args.out, "meta", &output::meta_document(&cfg, &extras))?;
    output::write_file(
        &args.out,
        "plotspec",
        &output::plotspec("sample.csv", "index", &["lambda_t"], "scatter"),
    )?;
    println!(
        "wrote {} eigenvalues to {}",
        sample.n,
        args.out.join("sample.csv").display()
    );
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let run = match &args.eigenvalues {
        Some(path) => {
            let sample = import_sample(path, &cfg)?;
            fpdeconv::harness::studies::estimate_from_sample(
                &cfg,
                sample,
                0,
                std::time::Instant::now(),
            )?
        }
        None => run_estimate(&cfg)?,
    };
    ensure_finite(&run.estimate.values, "density estimate")?;

    let density = cfg.law.density(0.0).map(|_| {
        let law = cfg.law.clone();
        move |x: f64| law.density(x).unwrap()
    });
    let p0_fn: Option<&dyn Fn(f64) -> f64> = density.as_ref().map(|f| f as &dyn Fn(f64) -> f64);
    let out = &args.common.out;
    output::write_file(out, "estimate.csv", &output::estimate_csv(&run.estimate, p0_fn))?;
    output::write_file(out, "metrics.csv", &output::metrics_csv(std::slice::from_ref(&run.metrics)))?;
    if let Some(cv) = &run.cv {
        output::write_file(out, "cv.csv", &output::cv_csv(cv, None))?;
    }
    let extras = vec![
        ("selected_h".to_string(), format!("{}", run.estimate.h)),
        (
            "ise".to_string(),
            run.metrics
                .ise
                .map(|v| v.to_string())
                .unwrap_or_else(|| "\"none\"".into()),
        ),
        (
            "max_im_residual".to_string(),
            format!("{}", run.estimate.max_im_residual),
        ),
    ];
    output::write_file(out, "meta", &output::meta_document(&cfg, &extras))?;
    output::write_file(
        out,
        "plotspec",
        &output::plotspec("estimate.csv", "x", &["p0", "p0_hat"], "line"),
    )?;
    println!(
        "estimate at h = {} written to {}",
        run.estimate.h,
        out.join("estimate.csv").display()
    );
    Ok(())
}

fn cmd_cv(args: &EstimateArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let sample = match &args.eigenvalues {
        Some(path) => import_sample(path, &cfg)?,
        None => fpdeconv::harness::studies::simulate_replicate(&cfg, cfg.n, 0)?,
    };
    let report = fpdeconv::bandwidth::cv_select(&sample, &cfg.cv_config(), &cfg.deconv_config()?)?;
    let j = match cfg.law.density(0.0) {
        Some(_) => Some(oracle_j_curve(
            &sample,
            &report.bandwidths,
            |x| cfg.law.density(x).unwrap(),
            &cfg.deconv_config()?,
        )?),
        None => None,
    };
    let out = &args.common.out;
    output::write_file(out, "cv.csv", &output::cv_csv(&report, j.as_deref()))?;
    let extras = vec![("selected_h".to_string(), format!("{}", report.selected))];
    output::write_file(out, "meta", &output::meta_document(&cfg, &extras))?;
    output::write_file(
        out,
        "plotspec",
        &output::plotspec("cv.csv", "h", &["crit", "j_oracle"], "line"),
    )?;
    println!("selected h = {}", report.selected);
    Ok(())
}

fn cmd_mise(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let study = run_mise_study(&cfg)?;
    output::write_file(&args.out, "mise.csv", &output::mise_csv(&study.rows))?;
    output::write_file(&args.out, "metrics.csv", &output::metrics_csv(&study.metrics))?;
    let extras = vec![("failed_replicates".to_string(), study.failed.to_string())];
    output::write_file(&args.out, "meta", &output::meta_document(&cfg, &extras))?;
    output::write_file(
        &args.out,
        "plotspec",
        &output::plotspec("mise.csv", "n", &["mean_ise"], "loglog"),
    )?;
    for row in &study.rows {
        println!(
            "n = {:6}  mean ISE = {:.6e}  sd = {:.3e}  ({} replicates)",
            row.n, row.mean_ise, row.sd_ise, row.replicates
        );
    }
    Ok(())
}

fn cmd_fluct(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let rows = run_fluctuation_study(&cfg)?;
    output::write_file(&args.out, "fluct.csv", &output::fluct_csv(&rows))?;
    output::write_file(&args.out, "meta", &output::meta_document(&cfg, &[]))?;
    output::write_file(
        &args.out,
        "plotspec",
        &output::plotspec("fluct.csv", "n", &["n_mean_sq"], "line"),
    )?;
    for row in &rows {
        println!(
            "n = {:6}  z = {}+{}i  E|dw|^2 = {:.4e}  n*E = {:.4}",
            row.n, row.z_re, row.z_im, row.mean_sq, row.n_mean_sq
        );
    }
    Ok(())
}

fn cmd_var(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let rows = run_variance_study(&cfg)?;
    output::write_file(&args.out, "var.csv", &output::var_csv(&rows))?;
    output::write_file(&args.out, "meta", &output::meta_document(&cfg, &[]))?;
    output::write_file(
        &args.out,
        "plotspec",
        &output::plotspec("var.csv", "n", &["var_proxy"], "line"),
    )?;
    for row in &rows {
        println!("n = {:6}  variance proxy = {:.6e}", row.n, row.var_proxy);
    }
    if rows.len() == 2 {
        println!("ratio = {:.3}", rows[1].var_proxy / rows[0].var_proxy);
    }
    Ok(())
}

fn cmd_verify(seed: u64) -> ExitCode {
    let results = verify::run_all(seed);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut all_pass = true;
    for r in &results {
        all_pass &= r.pass;
        println!(
            "{:<width$}  {}  {}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail,
            width = width
        );
    }
    if all_pass {
        println!("all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.into(),
        });
    }
    Ok(())
}

/// Read eigenvalues from a CSV file: either the `index,lambda_t,lambda_0`
/// schema written by `simulate`, or one bare numeric column. No cleaning.
fn import_sample(path: &Path, cfg: &ExperimentConfig) -> Result<SpectralSample> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read eigenvalues '{}': {e}", path.display()))
    })?;
    let mut lambda_col = 0usize;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if i == 0 && fields[0].parse::<f64>().is_err() {
            // Header row: locate the eigenvalue column.
            lambda_col = fields
                .iter()
                .position(|f| f.trim() == "lambda_t")
                .unwrap_or(0);
            continue;
        }
        let field = fields.get(lambda_col).ok_or_else(|| {
            Error::Config(format!("line {} of '{}' is too short", i + 1, path.display()))
        })?;
        let v: f64 = field.trim().parse().map_err(|_| {
            Error::Config(format!(
                "line {} of '{}': cannot parse '{field}'",
                i + 1,
                path.display()
            ))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Config(format!(
            "no eigenvalues found in '{}'",
            path.display()
        )));
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SpectralSample {
        n: values.len(),
        t: cfg.t,
        eigenvalues: values,
        initial_values: Vec::new(),
        seed: cfg.seed,
        backend: Backend::Imported,
        eta_star: None,
    })
}
