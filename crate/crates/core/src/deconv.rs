//! Classical deconvolution stage: Riemann-sum Fourier analysis, kernel
//! regularization in frequency, and assembly of the final density estimate.
//!
//! Both transform directions share one quadrature routine so linearity tests
//! are exact, and no FFT is used: the quadrature is the contract. The
//! exp(gamma |xi|) amplification is tamed only by the kernel cutoff, which is
//! the regularization itself.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::subordination::{solve_empirical, SolverOptions};
use crate::transforms::{UpperHalfPoint, WeightedAtomMeasure};

/// Uniform spatial grid with m points on [x_min, x_max].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    m: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, m: usize) -> Result<Self> {
        if m < 2 || !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spatial grid needs m >= 2 and x_min < x_max, got ({x_min}, {x_max}, {m})"
            )));
        }
        Ok(Self { x_min, x_max, m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.m - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.point(i)).collect()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }
}

/// Symmetric uniform frequency grid on [-xi_max, xi_max].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    xi_max: f64,
    m: usize,
}

impl FrequencyGrid {
    pub fn new(xi_max: f64, m: usize) -> Result<Self> {
        if m < 2 || !(xi_max > 0.0) || !xi_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frequency grid needs m >= 2 and xi_max > 0, got ({xi_max}, {m})"
            )));
        }
        Ok(Self { xi_max, m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn dxi(&self) -> f64 {
        2.0 * self.xi_max / (self.m - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.xi_max + i as f64 * self.dxi()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.point(i)).collect()
    }
}

/// Regularizing kernel, given through its Fourier transform. The transform is
/// forced to vanish outside [-1, 1] and to stay within the stated bound, so a
/// custom kernel cannot silently break the estimator's finiteness.
#[derive(Clone)]
pub enum Kernel {
    /// K*(xi) = 1 on [-1, 1] (closed), 0 outside.
    Sinc,
    Custom {
        ft: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bound: f64,
    },
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Sinc => write!(f, "Kernel::Sinc"),
            Kernel::Custom { bound, .. } => write!(f, "Kernel::Custom {{ bound: {bound} }}"),
        }
    }
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Sinc => "sinc",
            Kernel::Custom { .. } => "custom",
        }
    }
}

/// Fourier transform of the kernel at xi. Support convention is closed:
/// K*(+-1) keeps its interior value.
pub fn kernel_ft(k: &Kernel, xi: f64) -> f64 {
    if xi.abs() > 1.0 {
        return 0.0;
    }
    match k {
        Kernel::Sinc => 1.0,
        Kernel::Custom { ft, bound } => ft(xi).clamp(-*bound, *bound),
    }
}

/// Everything the estimator pipeline needs besides the data and bandwidth.
#[derive(Clone, Debug)]
pub struct DeconvConfig {
    pub gamma: f64,
    pub t: f64,
    pub spatial: SpatialGrid,
    pub frequency: FrequencyGrid,
    pub kernel: Kernel,
    pub solver: SolverOptions,
}

impl DeconvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time must be positive, got {}",
                self.t
            )));
        }
        let min_gamma = 2.0 * self.t.sqrt();
        if !(self.gamma > min_gamma) {
            return Err(Error::Config(format!(
                "gamma = {} must exceed 2*sqrt(t) = {min_gamma}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Real-valued density estimate on a spatial grid, with provenance.
#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
    pub h: f64,
    pub gamma: f64,
    pub t: f64,
    pub n: usize,
    /// Largest |imaginary part| dropped when taking real parts; diagnostic.
    pub max_im_residual: f64,
}

/// Solver effort accumulated over a curve evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CurveStats {
    pub total_iterations: u64,
    pub max_iterations: usize,
}

/// Shared oscillatory Riemann quadrature:
/// delta * sum_j values[j] * exp(i * sign * abscissae[j] * omega).
fn riemann_osc_sum(
    values: &[Complex64],
    abscissa: impl Fn(usize) -> f64,
    delta: f64,
    sign: f64,
    omega: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in values.iter().enumerate() {
        let phase = sign * abscissa(j) * omega;
        acc += v * Complex64::new(phase.cos(), phase.sin());
    }
    delta * acc
}

/// Forward transform of grid samples: dx * sum f(x_j) exp(i x_j xi).
pub fn riemann_fourier(samples: &[f64], grid: &SpatialGrid, xi: f64) -> Complex64 {
    assert_eq!(samples.len(), grid.len());
    let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    riemann_osc_sum(&complex, |j| grid.point(j), grid.dx(), 1.0, xi)
}

/// Inverse transform with the 1/(2 pi) normalization:
/// (dxi / 2 pi) * sum q(xi_k) exp(-i x xi_k).
pub fn riemann_inverse_fourier(samples: &[Complex64], grid: &FrequencyGrid, x: f64) -> Complex64 {
    assert_eq!(samples.len(), grid.len());
    riemann_osc_sum(samples, |k| grid.point(k), grid.dxi(), -1.0, x)
        / (2.0 * std::f64::consts::PI)
}

/// Convolved-density curve x -> (gamma - Im w(x + i gamma)) / (pi t) over the
/// spatial grid. One independent fixed-point solve per grid point.
pub fn convolved_curve(
    m: &WeightedAtomMeasure,
    cfg: &DeconvConfig,
) -> Result<(Vec<f64>, CurveStats)> {
    cfg.validate()?;
    let results: Result<Vec<(f64, usize)>> = (0..cfg.spatial.len())
        .into_par_iter()
        .map(|i| {
            let x = cfg.spatial.point(i);
            let z = UpperHalfPoint::new(x, cfg.gamma)?;
            let r = solve_empirical(m, &z, cfg.t, &cfg.solver)?;
            let value = (cfg.gamma - r.w.im) / (std::f64::consts::PI * cfg.t);
            Ok((value, r.iterations))
        })
        .collect();
    let results = results?;
    let mut stats = CurveStats::default();
    let mut values = Vec::with_capacity(results.len());
    for (v, it) in results {
        stats.total_iterations += it as u64;
        stats.max_iterations = stats.max_iterations.max(it);
        values.push(v);
    }
    Ok((values, stats))
}

/// Forward transform of a curve at every frequency grid point.
pub fn forward_transform(curve: &[f64], cfg: &DeconvConfig) -> Vec<Complex64> {
    let complex: Vec<Complex64> = curve.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    (0..cfg.frequency.len())
        .into_par_iter()
        .map(|k| {
            riemann_osc_sum(
                &complex,
                |j| cfg.spatial.point(j),
                cfg.spatial.dx(),
                1.0,
                cfg.frequency.point(k),
            )
        })
        .collect()
}

/// Final assembly: multiply the transformed curve by
/// exp(gamma |xi|) K*(h xi), invert, and take real parts.
pub fn assemble_estimate(
    fwd: &[Complex64],
    h: f64,
    n: usize,
    cfg: &DeconvConfig,
) -> Result<DensityEstimate> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    let needed = 1.0 / h;
    if cfg.frequency.xi_max() < needed {
        return Err(Error::FrequencyCutoff {
            xi_max: cfg.frequency.xi_max(),
            needed,
        });
    }
    let weighted: Vec<Complex64> = (0..cfg.frequency.len())
        .map(|k| {
            let xi = cfg.frequency.point(k);
            let factor = (cfg.gamma * xi.abs()).exp() * kernel_ft(&cfg.kernel, h * xi);
            factor * fwd[k]
        })
        .collect();

    let complex_values: Vec<Complex64> = (0..cfg.spatial.len())
        .into_par_iter()
        .map(|j| riemann_inverse_fourier(&weighted, &cfg.frequency, cfg.spatial.point(j)))
        .collect();

    let mut max_im: f64 = 0.0;
    let mut values = Vec::with_capacity(complex_values.len());
    for v in &complex_values {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite {
                context: "density estimate assembly".into(),
            });
        }
        max_im = max_im.max(v.im.abs());
        values.push(v.re);
    }
    Ok(DensityEstimate {
        grid: cfg.spatial,
        values,
        h,
        gamma: cfg.gamma,
        t: cfg.t,
        n,
        max_im_residual: max_im,
    })
}

/// Full estimator pipeline on an eigenvalue measure.
pub fn estimate_p0(
    m: &WeightedAtomMeasure,
    h: f64,
    cfg: &DeconvConfig,
) -> Result<DensityEstimate> {
    let (curve, _) = convolved_curve(m, cfg)?;
    let fwd = forward_transform(&curve, cfg);
    assemble_estimate(&fwd, h, m.len(), cfg)
}

/// Riemann squared norm over the grid.
pub fn norm_sq(values: &[f64], grid: &SpatialGrid) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() * grid.dx()
}

/// Riemann inner product over the grid.
pub fn inner_product(a: &[f64], b: &[f64], grid: &SpatialGrid) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.dx()
}

/// Integrated squared error against a reference density, over the grid.
pub fn ise(est: &DensityEstimate, p0: impl Fn(f64) -> f64) -> f64 {
    let dx = est.grid.dx();
    est.values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let d = v - p0(est.grid.point(j));
            d * d
        })
        .sum::<f64>()
        * dx
}

/// Presentation helper: clip negative values and renormalize to unit mass
/// over the grid. The core estimator itself is signed; this never feeds back
/// into error accounting.
pub fn clip_and_renormalize(est: &DensityEstimate) -> Vec<f64> {
    let clipped: Vec<f64> = est.values.iter().map(|v| v.max(0.0)).collect();
    let mass = clipped.iter().sum::<f64>() * est.grid.dx();
    if mass > 0.0 {
        clipped.iter().map(|v| v / mass).collect()
    } else {
        clipped
    }
}
