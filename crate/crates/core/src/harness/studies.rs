//! Replicated experiment drivers: single estimates, error-rate studies,
//! fixed-point fluctuation studies, and variance-scaling studies.
//!
//! Replicates are pure functions of (config, stream index); they run in
//! parallel and are reduced in index order, so output never depends on
//! thread count. A failing replicate is excluded and counted; a study fails
//! outright once failures exceed 10%.

use rayon::prelude::*;

use crate::bandwidth::{cv_select, theoretical_bandwidth, CVReport};
use crate::dbm::{simulate_dyson_matrix, simulate_dyson_sde, Backend, SpectralSample};
use crate::deconv::{
    assemble_estimate, convolved_curve, forward_transform, ise, DensityEstimate,
};
use crate::error::{Error, Result};
use crate::harness::config::{BandwidthMode, ExperimentConfig};
use crate::seeding::stream_seed;
use crate::subordination::{solve_empirical, solve_oracle, SolverOptions};
use crate::transforms::UpperHalfPoint;

/// Flat per-evaluation record for metrics.csv. The runtime column is the one
/// field exempt from byte determinism.
#[derive(Clone, Debug)]
pub struct MetricsRow {
    pub experiment: String,
    pub replicate: usize,
    pub n: usize,
    pub h: f64,
    pub gamma: f64,
    pub ise: Option<f64>,
    pub runtime_s: f64,
    pub solver_iters_total: u64,
    pub solver_iters_max: usize,
    pub max_im_residual: f64,
}

impl MetricsRow {
    pub const HEADER: &'static str =
        "experiment,replicate,n,h,gamma,ise,runtime_s,solver_iters_total,solver_iters_max,max_im_residual";

    pub fn to_csv_line(&self) -> String {
        let ise = self.ise.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.replicate,
            self.n,
            self.h,
            self.gamma,
            ise,
            self.runtime_s,
            self.solver_iters_total,
            self.solver_iters_max,
            self.max_im_residual
        )
    }
}

/// Simulate one replicate on its own stream.
pub fn simulate_replicate(
    cfg: &ExperimentConfig,
    n: usize,
    stream: u64,
) -> Result<SpectralSample> {
    let seed = stream_seed(cfg.seed, stream);
    match cfg.backend {
        Backend::Matrix => simulate_dyson_matrix(&cfg.law, n, cfg.t, seed),
        Backend::Sde => simulate_dyson_sde(&cfg.law, n, cfg.t, cfg.sde_steps, seed),
        Backend::Imported => Err(Error::Config(
            "imported samples cannot be simulated".into(),
        )),
    }
}

/// Bandwidth for a sample of size n under the configured mode. CV mode runs
/// the full selection on the sample.
pub fn bandwidth_for(
    cfg: &ExperimentConfig,
    sample: &SpectralSample,
) -> Result<(f64, Option<CVReport>)> {
    match &cfg.bandwidth {
        BandwidthMode::Fixed(h) => Ok((*h, None)),
        BandwidthMode::Theoretical(sc) => {
            Ok((theoretical_bandwidth(sc, cfg.gamma, sample.n)?, None))
        }
        BandwidthMode::Cv => {
            let report = cv_select(sample, &cfg.cv_config(), &cfg.deconv_config()?)?;
            let h = report.selected;
            Ok((h, Some(report)))
        }
    }
}

/// Result of a single end-to-end estimate run.
#[derive(Clone, Debug)]
pub struct EstimateRun {
    pub sample: SpectralSample,
    pub estimate: DensityEstimate,
    pub cv: Option<CVReport>,
    pub metrics: MetricsRow,
}

/// simulate -> (optional CV) -> estimate -> metrics, on stream 0.
pub fn run_estimate(cfg: &ExperimentConfig) -> Result<EstimateRun> {
    let started = std::time::Instant::now();
    let sample = simulate_replicate(cfg, cfg.n, 0)?;
    estimate_from_sample(cfg, sample, 0, started)
}

/// Same pipeline on an externally supplied sample (CSV import path).
pub fn estimate_from_sample(
    cfg: &ExperimentConfig,
    sample: SpectralSample,
    replicate: usize,
    started: std::time::Instant,
) -> Result<EstimateRun> {
    let dcfg = cfg.deconv_config()?;
    let (h, cv) = bandwidth_for(cfg, &sample)?;
    let measure = sample.empirical_measure();
    let (curve, stats) = convolved_curve(&measure, &dcfg)?;
    let fwd = forward_transform(&curve, &dcfg);
    let estimate = assemble_estimate(&fwd, h, sample.n, &dcfg)?;
    let ise_value = cfg
        .law
        .density(0.0)
        .map(|_| ise(&estimate, |x| cfg.law.density(x).unwrap()));
    let metrics = MetricsRow {
        experiment: "estimate".into(),
        replicate,
        n: sample.n,
        h,
        gamma: cfg.gamma,
        ise: ise_value,
        runtime_s: started.elapsed().as_secs_f64(),
        solver_iters_total: stats.total_iterations,
        solver_iters_max: stats.max_iterations,
        max_im_residual: estimate.max_im_residual,
    };
    Ok(EstimateRun {
        sample,
        estimate,
        cv,
        metrics,
    })
}

/// Run `total` replicates in parallel; collect successes and count failures,
/// enforcing the 10% cap.
fn run_replicates<T: Send>(
    total: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Result<(Vec<T>, usize)> {
    let outcomes: Vec<Result<T>> = (0..total).into_par_iter().map(&f).collect();
    let mut ok = Vec::with_capacity(total);
    let mut failed = 0usize;
    let mut first_failure: Option<String> = None;
    for outcome in outcomes {
        match outcome {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed * 10 > total {
        return Err(Error::TooManyFailures {
            failed,
            total,
            first: first_failure.unwrap_or_default(),
        });
    }
    Ok((ok, failed))
}

#[derive(Clone, Debug)]
pub struct MiseRow {
    pub n: usize,
    pub mean_ise: f64,
    pub sd_ise: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug)]
pub struct MiseStudy {
    pub rows: Vec<MiseRow>,
    pub metrics: Vec<MetricsRow>,
    pub failed: usize,
}

/// Monte Carlo error-rate study over the configured n values. Needs a law
/// with a density (simulation mode; the truth enters the error).
pub fn run_mise_study(cfg: &ExperimentConfig) -> Result<MiseStudy> {
    if cfg.law.density(0.0).is_none() {
        return Err(Error::Config(
            "error-rate studies need an initial law with a density".into(),
        ));
    }
    let reps = cfg.replicates;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut failed_total = 0usize;
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let (results, failed) = run_replicates(reps, |r| {
            let started = std::time::Instant::now();
            let stream = (ni * reps + r) as u64;
            let sample = simulate_replicate(cfg, n, stream)?;
            let run = estimate_from_sample(cfg, sample, r, started)?;
            let ise_value = run.metrics.ise.ok_or_else(|| Error::NonFinite {
                context: "ise in error-rate study".into(),
            })?;
            let mut row = run.metrics;
            row.experiment = "mise".into();
            Ok((ise_value, row))
        })?;
        failed_total += failed;
        let ises: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
        metrics.extend(results.into_iter().map(|(_, m)| m));
        let (mean, sd) = crate::stats::mean_sd(&ises);
        rows.push(MiseRow {
            n,
            mean_ise: mean,
            sd_ise: sd,
            replicates: ises.len(),
        });
    }
    Ok(MiseStudy {
        rows,
        metrics,
        failed: failed_total,
    })
}

#[derive(Clone, Debug)]
pub struct FluctRow {
    pub n: usize,
    pub z_re: f64,
    pub z_im: f64,
    pub mean_sq: f64,
    pub n_mean_sq: f64,
}

/// Fixed-point fluctuation study: Monte Carlo of |w_hat(z) - w(z)|^2 per
/// (n, z), normalized by n. Needs a law with a closed-form time-t transform
/// so the limit point is computable.
pub fn run_fluctuation_study(cfg: &ExperimentConfig) -> Result<Vec<FluctRow>> {
    let probe = cfg
        .law
        .cauchy_transform_at_time(num_complex::Complex64::new(0.0, 10.0), cfg.t);
    if probe.is_none() {
        return Err(Error::Config(
            "fluctuation studies need a law with a transform oracle (cauchy or point_mass)".into(),
        ));
    }
    if cfg.fluct_z.is_empty() {
        return Err(Error::Config("fluct_z_re/fluct_z_im are empty".into()));
    }
    let solver = cfg.solver_options();
    let oracle_opts = SolverOptions {
        acceleration: crate::subordination::Acceleration::None,
        ..solver
    };

    // Deterministic limit point per z.
    let mut z_points = Vec::new();
    let mut oracles = Vec::new();
    for &(re, im) in &cfg.fluct_z {
        let z = UpperHalfPoint::new(re, im)?;
        let w = solve_oracle(
            |v| cfg.law.cauchy_transform_at_time(v, cfg.t).unwrap(),
            &z,
            cfg.t,
            &oracle_opts,
        )?;
        z_points.push(z);
        oracles.push(w.w);
    }

    let reps = cfg.replicates;
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let (per_replicate, _failed) = run_replicates(reps, |r| {
            let stream = (ni * reps + r) as u64;
            let sample = simulate_replicate(cfg, n, stream)?;
            let measure = sample.empirical_measure();
            let mut sq = Vec::with_capacity(z_points.len());
            for (z, w_limit) in z_points.iter().zip(&oracles) {
                let hat = solve_empirical(&measure, z, cfg.t, &solver)?;
                sq.push((hat.w - w_limit).norm_sqr());
            }
            Ok(sq)
        })?;
        let used = per_replicate.len().max(1);
        for (zi, z) in z_points.iter().enumerate() {
            let mean_sq =
                per_replicate.iter().map(|sq| sq[zi]).sum::<f64>() / used as f64;
            rows.push(FluctRow {
                n,
                z_re: z.re(),
                z_im: z.im(),
                mean_sq,
                n_mean_sq: n as f64 * mean_sq,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct VarRow {
    pub n: usize,
    pub var_proxy: f64,
}

/// Variance-scaling study at fixed bandwidth: the replicate-dispersion proxy
/// E ||p_hat - mean(p_hat)||^2 per n.
pub fn run_variance_study(cfg: &ExperimentConfig) -> Result<Vec<VarRow>> {
    let h = match cfg.bandwidth {
        BandwidthMode::Fixed(h) => h,
        _ => {
            return Err(Error::Config(
                "variance studies need bandwidth_mode = \"fixed\"".into(),
            ))
        }
    };
    let dcfg = cfg.deconv_config()?;
    let grid = dcfg.spatial;
    let reps = cfg.replicates;
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let (values, _failed) = run_replicates(reps, |r| {
            let stream = (ni * reps + r) as u64;
            let sample = simulate_replicate(cfg, n, stream)?;
            let measure = sample.empirical_measure();
            let (curve, _) = convolved_curve(&measure, &dcfg)?;
            let fwd = forward_transform(&curve, &dcfg);
            Ok(assemble_estimate(&fwd, h, n, &dcfg)?.values)
        })?;
        if values.is_empty() {
            return Err(Error::TooManyFailures {
                failed: reps,
                total: reps,
                first: "all replicates failed".into(),
            });
        }
        let m = grid.len();
        let used = values.len() as f64;
        let mut mean = vec![0.0; m];
        for v in &values {
            for (slot, x) in mean.iter_mut().zip(v) {
                *slot += x / used;
            }
        }
        let proxy = values
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&mean)
                    .map(|(x, mu)| (x - mu) * (x - mu))
                    .sum::<f64>()
                    * grid.dx()
            })
            .sum::<f64>()
            / used;
        rows.push(VarRow { n, var_proxy: proxy });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PartialConfig;

    fn tiny_config() -> ExperimentConfig {
        let partial = PartialConfig {
            n: Some(60),
            n_list: Some(vec![40, 80]),
            grid_points: Some(121),
            freq_points: Some(201),
            xi_max: Some(2.5),
            bandwidth_mode: Some("fixed".into()),
            h: Some(0.8),
            replicates: Some(3),
            seed: Some(11),
            ..Default::default()
        };
        ExperimentConfig::resolve(&partial).unwrap()
    }

    #[test]
    fn estimate_run_is_deterministic() {
        let cfg = tiny_config();
        let a = run_estimate(&cfg).unwrap();
        let b = run_estimate(&cfg).unwrap();
        assert_eq!(a.estimate.values, b.estimate.values);
        assert_eq!(a.sample.eigenvalues, b.sample.eigenvalues);
        assert_eq!(a.metrics.h, b.metrics.h);
    }

    #[test]
    fn mise_study_emits_one_row_per_n() {
        let cfg = ExperimentConfig {
            replicates: 1,
            ..tiny_config()
        };
        let study = run_mise_study(&cfg).unwrap();
        assert_eq!(study.rows.len(), 2);
        assert!(study.rows.iter().all(|r| r.mean_ise.is_finite()));
        assert_eq!(study.failed, 0);
    }

    #[test]
    fn variance_study_smoke() {
        let cfg = ExperimentConfig {
            replicates: 2,
            ..tiny_config()
        };
        let rows = run_variance_study(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.var_proxy.is_finite() && r.var_proxy >= 0.0));
    }

    #[test]
    fn variance_study_requires_fixed_bandwidth() {
        let mut cfg = tiny_config();
        cfg.bandwidth = BandwidthMode::Cv;
        assert!(matches!(
            run_variance_study(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fluctuation_study_requires_oracle_law() {
        let mut cfg = tiny_config();
        cfg.law = crate::dbm::InitialLaw::Gaussian { sd: 1.0 };
        assert!(matches!(
            run_fluctuation_study(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fluctuation_study_point_mass_closed_form() {
        // For a point mass at 0 the limit is w = z + t/z; the study's oracle
        // solve must land on it.
        let mut cfg = tiny_config();
        cfg.law = crate::dbm::InitialLaw::PointMass { center: 0.0 };
        cfg.n_list = vec![50];
        cfg.fluct_z = vec![(0.0, 3.0)];
        cfg.replicates = 2;
        let rows = run_fluctuation_study(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].mean_sq.is_finite());
        // Independent closed form has to agree with the internal oracle:
        // the replicate error is bounded by |w_hat - z - t/z| + solver tol.
        assert!(rows[0].mean_sq < 1.0);
    }

    #[test]
    fn replicate_failure_cap() {
        let outcome = run_replicates(10, |r| {
            if r < 2 {
                Err(Error::NonFinite {
                    context: "synthetic".into(),
                })
            } else {
                Ok(r)
            }
        });
        assert!(matches!(outcome, Err(Error::TooManyFailures { .. })));
        let (ok, failed) = run_replicates(10, |r| {
            if r == 0 {
                Err(Error::NonFinite {
                    context: "synthetic".into(),
                })
            } else {
                Ok(r)
            }
        })
        .unwrap();
        assert_eq!(ok.len(), 9);
        assert_eq!(failed, 1);
    }
}
