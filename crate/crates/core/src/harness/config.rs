//! Flat key-value experiment configuration with a preset inclusion
//! mechanism. Files are TOML restricted to scalar keys and arrays, so they
//! stay diff-able and hand-editable; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::bandwidth::{equispaced, CVConfig, SmoothnessClass};
use crate::dbm::{Backend, InitialLaw};
use crate::deconv::{DeconvConfig, FrequencyGrid, Kernel, SpatialGrid};
use crate::error::{Error, Result};
use crate::seeding::stream_seed;
use crate::subordination::{Acceleration, SolverOptions};

/// Raw, partially specified configuration as read from a file or flags.
/// Every field is optional; resolution fills the gaps from a preset.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub preset: Option<String>,
    pub law: Option<String>,
    pub law_scale: Option<f64>,
    pub law_sd: Option<f64>,
    pub law_center: Option<f64>,
    pub law_a1: Option<f64>,
    pub law_a2: Option<f64>,
    pub law_p: Option<f64>,
    pub law_points: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub t: Option<f64>,
    pub gamma: Option<f64>,
    pub kernel: Option<String>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub xi_max: Option<f64>,
    pub freq_points: Option<usize>,
    pub bandwidth_mode: Option<String>,
    pub h: Option<f64>,
    pub smooth_a: Option<f64>,
    pub smooth_r: Option<f64>,
    pub smooth_l: Option<f64>,
    pub cv_h_min: Option<f64>,
    pub cv_h_max: Option<f64>,
    pub cv_h_count: Option<usize>,
    pub cv_partitions: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub sde_steps: Option<usize>,
    pub solver_tol: Option<f64>,
    pub solver_max_iter: Option<usize>,
    pub acceleration: Option<String>,
    pub threads: Option<usize>,
    pub fluct_z_re: Option<Vec<f64>>,
    pub fluct_z_im: Option<Vec<f64>>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }
}

/// How the bandwidth is chosen for an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandwidthMode {
    Fixed(f64),
    Cv,
    Theoretical(SmoothnessClass),
}

impl BandwidthMode {
    pub fn label(&self) -> String {
        match self {
            BandwidthMode::Fixed(h) => format!("fixed({h})"),
            BandwidthMode::Cv => "cv".to_string(),
            BandwidthMode::Theoretical(sc) => {
                format!("theoretical(a={},r={},L={})", sc.a, sc.r, sc.big_l)
            }
        }
    }
}

/// Fully resolved experiment description. Everything a run needs is here;
/// (config, seed) determines every emitted value.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub preset: String,
    pub law: InitialLaw,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub t: f64,
    pub gamma: f64,
    pub kernel: Kernel,
    pub x_min: f64,
    pub x_max: f64,
    pub grid_points: usize,
    pub xi_max: f64,
    pub freq_points: usize,
    pub bandwidth: BandwidthMode,
    pub cv_h_min: f64,
    pub cv_h_max: f64,
    pub cv_h_count: usize,
    pub cv_partitions: usize,
    pub replicates: usize,
    pub seed: u64,
    pub backend: Backend,
    pub sde_steps: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub acceleration: Acceleration,
    pub threads: usize,
    pub fluct_z: Vec<(f64, f64)>,
}

fn preset_base(name: &str) -> Result<PartialConfig> {
    let mut p = PartialConfig {
        law: Some("cauchy".into()),
        law_scale: Some(5.0),
        n: Some(1000),
        n_list: Some(vec![500, 1000, 2000, 4000]),
        t: Some(1.0),
        kernel: Some("sinc".into()),
        // Wide quadrature window: the convolved density has Cauchy tails, and
        // truncating the forward transform too early leaves a deterministic
        // high-frequency residue that the exp(gamma |xi|) amplification blows
        // up at small bandwidths.
        x_min: Some(-120.0),
        x_max: Some(120.0),
        grid_points: Some(4801),
        xi_max: Some(4.0),
        freq_points: Some(2001),
        bandwidth_mode: Some("cv".into()),
        cv_h_min: Some(0.25),
        cv_h_max: Some(2.7),
        cv_h_count: Some(50),
        cv_partitions: Some(10),
        replicates: Some(10),
        seed: Some(1),
        backend: Some("matrix".into()),
        sde_steps: Some(100_000),
        solver_tol: Some(1e-12),
        solver_max_iter: Some(10_000),
        acceleration: Some("newton".into()),
        threads: Some(0),
        fluct_z_re: Some(vec![-5.0, 5.0, 0.0]),
        fluct_z_im: Some(vec![2.010201, 2.010201, 2.5]),
        ..PartialConfig::default()
    };
    match name {
        "default" => {}
        // Simulation-study configuration: n = 4000, t = 1, Cauchy(5) initial
        // law, gamma = 2 sqrt(t) + 0.01, sinc kernel, 50 bandwidths on
        // [0.25, 2.7], 10 random half-splits.
        "paper-sec5" => {
            p.n = Some(4000);
            p.gamma = Some(2.01);
            p.replicates = Some(1);
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (available: default, paper-sec5)"
            )))
        }
    }
    p.preset = Some(name.to_string());
    Ok(p)
}

fn overlay(base: &mut PartialConfig, over: &PartialConfig) {
    macro_rules! take {
        ($($field:ident),*) => {
            $(if over.$field.is_some() { base.$field = over.$field.clone(); })*
        };
    }
    take!(
        law, law_scale, law_sd, law_center, law_a1, law_a2, law_p, law_points, n, n_list, t,
        gamma, kernel, x_min, x_max, grid_points, xi_max, freq_points, bandwidth_mode, h,
        smooth_a, smooth_r, smooth_l, cv_h_min, cv_h_max, cv_h_count, cv_partitions, replicates,
        seed, backend, sde_steps, solver_tol, solver_max_iter, acceleration, threads, fluct_z_re,
        fluct_z_im
    );
}

impl ExperimentConfig {
    /// Resolve a partial configuration against its preset and validate it.
    pub fn resolve(partial: &PartialConfig) -> Result<Self> {
        let preset_name = partial.preset.clone().unwrap_or_else(|| "default".into());
        let mut merged = preset_base(&preset_name)?;
        overlay(&mut merged, partial);
        Self::from_full(&merged, &preset_name)
    }

    fn from_full(p: &PartialConfig, preset: &str) -> Result<Self> {
        let get = |name: &str| Error::Config(format!("missing config key '{name}'"));

        let law = match p.law.as_deref().ok_or_else(|| get("law"))? {
            "cauchy" => InitialLaw::Cauchy {
                scale: p.law_scale.unwrap_or(5.0),
            },
            "gaussian" => InitialLaw::Gaussian {
                sd: p.law_sd.unwrap_or(1.0),
            },
            "point_mass" => InitialLaw::PointMass {
                center: p.law_center.unwrap_or(0.0),
            },
            "two_point" => InitialLaw::TwoPointMixture {
                a1: p.law_a1.unwrap_or(-1.0),
                a2: p.law_a2.unwrap_or(1.0),
                p: p.law_p.unwrap_or(0.5),
            },
            "deterministic" => InitialLaw::Deterministic {
                points: p
                    .law_points
                    .clone()
                    .ok_or_else(|| Error::Config("deterministic law needs law_points".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown law '{other}' (available: cauchy, gaussian, point_mass, two_point, deterministic)"
                )))
            }
        };
        law.validate()
            .map_err(|e| Error::Config(format!("invalid law: {e}")))?;

        let t = p.t.ok_or_else(|| get("t"))?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("t must be positive, got {t}")));
        }
        let gamma = p.gamma.unwrap_or(2.0 * t.sqrt() + 0.01);
        if !(gamma > 2.0 * t.sqrt()) {
            return Err(Error::Config(format!(
                "gamma = {gamma} must exceed 2*sqrt(t) = {}",
                2.0 * t.sqrt()
            )));
        }

        let kernel = match p.kernel.as_deref().ok_or_else(|| get("kernel"))? {
            "sinc" => Kernel::Sinc,
            other => {
                return Err(Error::Config(format!(
                    "unknown kernel '{other}' (available: sinc)"
                )))
            }
        };

        let bandwidth = match p
            .bandwidth_mode
            .as_deref()
            .ok_or_else(|| get("bandwidth_mode"))?
        {
            "fixed" => BandwidthMode::Fixed(p.h.ok_or_else(|| {
                Error::Config("bandwidth_mode = \"fixed\" needs an h key".into())
            })?),
            "cv" => BandwidthMode::Cv,
            "theoretical" => BandwidthMode::Theoretical(
                SmoothnessClass::new(
                    p.smooth_a.unwrap_or(1.0),
                    p.smooth_r.unwrap_or(1.0),
                    p.smooth_l.unwrap_or(1.0),
                )
                .map_err(|e| Error::Config(format!("{e}")))?,
            ),
            other => {
                return Err(Error::Config(format!(
                    "unknown bandwidth_mode '{other}' (available: fixed, cv, theoretical)"
                )))
            }
        };

        let backend = match p.backend.as_deref().ok_or_else(|| get("backend"))? {
            "matrix" => Backend::Matrix,
            "sde" => Backend::Sde,
            other => {
                return Err(Error::Config(format!(
                    "unknown backend '{other}' (available: matrix, sde)"
                )))
            }
        };

        let acceleration = match p
            .acceleration
            .as_deref()
            .ok_or_else(|| get("acceleration"))?
        {
            "none" => Acceleration::None,
            "newton" => Acceleration::Newton,
            other => {
                return Err(Error::Config(format!(
                    "unknown acceleration '{other}' (available: none, newton)"
                )))
            }
        };

        let z_re = p.fluct_z_re.clone().unwrap_or_default();
        let z_im = p.fluct_z_im.clone().unwrap_or_default();
        if z_re.len() != z_im.len() {
            return Err(Error::Config(
                "fluct_z_re and fluct_z_im must have matching lengths".into(),
            ));
        }
        let fluct_z: Vec<(f64, f64)> = z_re.into_iter().zip(z_im).collect();

        let cfg = Self {
            preset: preset.to_string(),
            law,
            n: p.n.ok_or_else(|| get("n"))?,
            n_list: p.n_list.clone().ok_or_else(|| get("n_list"))?,
            t,
            gamma,
            kernel,
            x_min: p.x_min.ok_or_else(|| get("x_min"))?,
            x_max: p.x_max.ok_or_else(|| get("x_max"))?,
            grid_points: p.grid_points.ok_or_else(|| get("grid_points"))?,
            xi_max: p.xi_max.ok_or_else(|| get("xi_max"))?,
            freq_points: p.freq_points.ok_or_else(|| get("freq_points"))?,
            bandwidth,
            cv_h_min: p.cv_h_min.ok_or_else(|| get("cv_h_min"))?,
            cv_h_max: p.cv_h_max.ok_or_else(|| get("cv_h_max"))?,
            cv_h_count: p.cv_h_count.ok_or_else(|| get("cv_h_count"))?,
            cv_partitions: p.cv_partitions.ok_or_else(|| get("cv_partitions"))?,
            replicates: p.replicates.ok_or_else(|| get("replicates"))?,
            seed: p.seed.ok_or_else(|| get("seed"))?,
            backend,
            sde_steps: p.sde_steps.ok_or_else(|| get("sde_steps"))?,
            solver_tol: p.solver_tol.ok_or_else(|| get("solver_tol"))?,
            solver_max_iter: p.solver_max_iter.ok_or_else(|| get("solver_max_iter"))?,
            acceleration,
            threads: p.threads.unwrap_or(0),
            fluct_z,
        };

        if cfg.n == 0 || cfg.replicates == 0 {
            return Err(Error::Config(
                "n and replicates must both be at least 1".into(),
            ));
        }
        if cfg.n_list.is_empty() || cfg.n_list.contains(&0) {
            return Err(Error::Config("n_list must hold positive sizes".into()));
        }
        // Grid constructibility is part of config validation.
        cfg.spatial_grid()?;
        cfg.frequency_grid()?;
        Ok(cfg)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.x_min, self.x_max, self.grid_points)
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.xi_max, self.freq_points)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            acceleration: self.acceleration,
        }
    }

    pub fn deconv_config(&self) -> Result<DeconvConfig> {
        Ok(DeconvConfig {
            gamma: self.gamma,
            t: self.t,
            spatial: self.spatial_grid()?,
            frequency: self.frequency_grid()?,
            kernel: self.kernel.clone(),
            solver: self.solver_options(),
        })
    }

    /// Split seeds live on a dedicated stream so they never collide with
    /// replicate simulation streams.
    pub fn cv_config(&self) -> CVConfig {
        CVConfig {
            bandwidths: equispaced(self.cv_h_min, self.cv_h_max, self.cv_h_count),
            partitions: self.cv_partitions,
            seed: stream_seed(self.seed, u64::MAX - 7),
        }
    }

    /// Fully resolved flat document for metadata sidecars.
    pub fn to_partial(&self) -> PartialConfig {
        let mut p = PartialConfig {
            preset: Some(self.preset.clone()),
            n: Some(self.n),
            n_list: Some(self.n_list.clone()),
            t: Some(self.t),
            gamma: Some(self.gamma),
            kernel: Some(self.kernel.name().to_string()),
            x_min: Some(self.x_min),
            x_max: Some(self.x_max),
            grid_points: Some(self.grid_points),
            xi_max: Some(self.xi_max),
            freq_points: Some(self.freq_points),
            cv_h_min: Some(self.cv_h_min),
            cv_h_max: Some(self.cv_h_max),
            cv_h_count: Some(self.cv_h_count),
            cv_partitions: Some(self.cv_partitions),
            replicates: Some(self.replicates),
            seed: Some(self.seed),
            backend: Some(self.backend.as_str().to_string()),
            sde_steps: Some(self.sde_steps),
            solver_tol: Some(self.solver_tol),
            solver_max_iter: Some(self.solver_max_iter),
            acceleration: Some(
                match self.acceleration {
                    Acceleration::None => "none",
                    Acceleration::Newton => "newton",
                }
                .to_string(),
            ),
            threads: Some(self.threads),
            fluct_z_re: Some(self.fluct_z.iter().map(|z| z.0).collect()),
            fluct_z_im: Some(self.fluct_z.iter().map(|z| z.1).collect()),
            ..PartialConfig::default()
        };
        match &self.law {
            InitialLaw::Cauchy { scale } => {
                p.law = Some("cauchy".into());
                p.law_scale = Some(*scale);
            }
            InitialLaw::Gaussian { sd } => {
                p.law = Some("gaussian".into());
                p.law_sd = Some(*sd);
            }
            InitialLaw::PointMass { center } => {
                p.law = Some("point_mass".into());
                p.law_center = Some(*center);
            }
            InitialLaw::TwoPointMixture { a1, a2, p: prob } => {
                p.law = Some("two_point".into());
                p.law_a1 = Some(*a1);
                p.law_a2 = Some(*a2);
                p.law_p = Some(*prob);
            }
            InitialLaw::Deterministic { points } => {
                p.law = Some("deterministic".into());
                p.law_points = Some(points.clone());
            }
        }
        match self.bandwidth {
            BandwidthMode::Fixed(h) => {
                p.bandwidth_mode = Some("fixed".into());
                p.h = Some(h);
            }
            BandwidthMode::Cv => {
                p.bandwidth_mode = Some("cv".into());
            }
            BandwidthMode::Theoretical(sc) => {
                p.bandwidth_mode = Some("theoretical".into());
                p.smooth_a = Some(sc.a);
                p.smooth_r = Some(sc.r);
                p.smooth_l = Some(sc.big_l);
            }
        }
        p
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_partial()).expect("resolved config serializes")
    }
}
