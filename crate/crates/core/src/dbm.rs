//! Observation-model simulator: diagonal initial condition plus a Hermitian
//! Brownian increment, observed through its spectrum at a single time.
//!
//! The matrix backend is canonical (exact in distribution at any fixed time);
//! an Euler-Maruyama integrator of the interacting eigenvalue system is kept
//! as an independent cross-check for small n.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::transforms::{semicircle_cauchy_raw, WeightedAtomMeasure};

/// Gap below which an SDE step is rejected and retried with a halved dt.
pub const COLLISION_FLOOR: f64 = 1e-9;
/// Local halvings allowed before the SDE integrator gives up.
pub const MAX_HALVINGS: u32 = 60;

/// Family of initial distributions. `Deterministic` is the extension point:
/// a fixed initial configuration used verbatim when its length matches n
/// (the SDE cross-checks need controlled initial gaps).
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    Cauchy { scale: f64 },
    Gaussian { sd: f64 },
    PointMass { center: f64 },
    TwoPointMixture { a1: f64, a2: f64, p: f64 },
    Deterministic { points: Vec<f64> },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            InitialLaw::Cauchy { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return bad(format!("Cauchy scale must be positive, got {scale}"));
                }
            }
            InitialLaw::Gaussian { sd } => {
                if !(*sd > 0.0) || !sd.is_finite() {
                    return bad(format!("Gaussian sd must be positive, got {sd}"));
                }
            }
            InitialLaw::PointMass { center } => {
                if !center.is_finite() {
                    return bad("point mass center must be finite".into());
                }
            }
            InitialLaw::TwoPointMixture { a1, a2, p } => {
                if !a1.is_finite() || !a2.is_finite() || !(0.0..=1.0).contains(p) {
                    return bad(format!(
                        "two-point mixture needs finite atoms and p in [0,1], got ({a1}, {a2}, {p})"
                    ));
                }
            }
            InitialLaw::Deterministic { points } => {
                if points.is_empty() || points.iter().any(|x| !x.is_finite()) {
                    return bad("deterministic initial configuration must be nonempty and finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn sample_one(&self, rng: &mut impl Rng) -> f64 {
        match self {
            InitialLaw::Cauchy { scale } => {
                // Inverse CDF; scale * tan(pi (u - 1/2)).
                let u: f64 = rng.gen();
                scale * (std::f64::consts::PI * (u - 0.5)).tan()
            }
            InitialLaw::Gaussian { sd } => {
                let g: f64 = StandardNormal.sample(rng);
                sd * g
            }
            InitialLaw::PointMass { center } => *center,
            InitialLaw::TwoPointMixture { a1, a2, p } => {
                let u: f64 = rng.gen();
                if u < *p {
                    *a1
                } else {
                    *a2
                }
            }
            InitialLaw::Deterministic { points } => points[rng.gen_range(0..points.len())],
        }
    }

    /// Lebesgue density, where one exists.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            InitialLaw::Cauchy { scale } => Some(cauchy_pdf(x, *scale)),
            InitialLaw::Gaussian { sd } => {
                let z = x / sd;
                Some((-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()))
            }
            _ => None,
        }
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        match self {
            InitialLaw::Cauchy { scale } => {
                Some(0.5 + (x / scale).atan() / std::f64::consts::PI)
            }
            InitialLaw::Gaussian { sd } => {
                Some(0.5 * libm::erfc(-x / (sd * std::f64::consts::SQRT_2)))
            }
            _ => None,
        }
    }

    /// Closed-form transform of the time-t spectral law, when the family
    /// admits one. The Cauchy family is stable under the semicircle flow
    /// (shift by i*scale); a point mass shifts the semicircle itself.
    pub fn cauchy_transform_at_time(&self, z: Complex64, t: f64) -> Option<Complex64> {
        match self {
            InitialLaw::Cauchy { scale } => {
                Some(semicircle_cauchy_raw(z + Complex64::new(0.0, *scale), t))
            }
            InitialLaw::PointMass { center } => Some(semicircle_cauchy_raw(z - center, t)),
            _ => None,
        }
    }

    /// Density of (law) * Cauchy(alpha), classical convolution, when closed.
    pub fn convolved_density_with_cauchy(&self, x: f64, alpha: f64) -> Option<f64> {
        match self {
            InitialLaw::Cauchy { scale } => Some(cauchy_pdf(x, scale + alpha)),
            InitialLaw::PointMass { center } => Some(cauchy_pdf(x - center, alpha)),
            InitialLaw::TwoPointMixture { a1, a2, p } => {
                Some(p * cauchy_pdf(x - a1, alpha) + (1.0 - p) * cauchy_pdf(x - a2, alpha))
            }
            InitialLaw::Deterministic { points } => {
                let s: f64 = points.iter().map(|a| cauchy_pdf(x - a, alpha)).sum();
                Some(s / points.len() as f64)
            }
            InitialLaw::Gaussian { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialLaw::Cauchy { scale } => format!("cauchy(scale={scale})"),
            InitialLaw::Gaussian { sd } => format!("gaussian(sd={sd})"),
            InitialLaw::PointMass { center } => format!("point_mass(center={center})"),
            InitialLaw::TwoPointMixture { a1, a2, p } => {
                format!("two_point(a1={a1},a2={a2},p={p})")
            }
            InitialLaw::Deterministic { points } => {
                format!("deterministic({} points)", points.len())
            }
        }
    }
}

fn cauchy_pdf(x: f64, s: f64) -> f64 {
    s / (std::f64::consts::PI * (s * s + x * x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Matrix,
    Sde,
    Imported,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Matrix => "matrix",
            Backend::Sde => "sde",
            Backend::Imported => "imported",
        }
    }
}

/// Spectrum of the observation at time t, with enough provenance to
/// reproduce or audit it.
#[derive(Clone, Debug)]
pub struct SpectralSample {
    pub n: usize,
    pub t: f64,
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    /// The raw i.i.d. draws, in sample order (diagnostics only).
    pub initial_values: Vec<f64>,
    pub seed: u64,
    pub backend: Backend,
    /// Spectral radius of the Brownian increment; matrix backend only.
    pub eta_star: Option<f64>,
}

impl SpectralSample {
    pub fn empirical_measure(&self) -> WeightedAtomMeasure {
        WeightedAtomMeasure::uniform(self.eigenvalues.clone())
            .expect("spectral sample eigenvalues are finite and nonempty")
    }

    pub fn sorted_initial(&self) -> Vec<f64> {
        let mut v = self.initial_values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Interlacing of the time-t spectrum between lambda_j(0) +- eta_star.
    /// Exact inequality; only checkable when the backend recorded eta_star.
    pub fn validate_interlacing(&self) -> Result<()> {
        let eta = match self.eta_star {
            Some(e) => e,
            None => return Ok(()),
        };
        let lam0 = self.sorted_initial();
        for (j, (&lt, &l0)) in self.eigenvalues.iter().zip(&lam0).enumerate() {
            if !(l0 - eta <= lt && lt <= l0 + eta) {
                return Err(Error::InterlacingViolation {
                    index: j,
                    lambda_t: lt,
                    lambda_0: l0,
                    eta,
                });
            }
        }
        Ok(())
    }

    /// CSV body: `index,lambda_t,lambda_0`. Imported samples have no initial
    /// draws; their third column stays blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda_t,lambda_0\n");
        for (i, lt) in self.eigenvalues.iter().enumerate() {
            match self.initial_values.get(i) {
                Some(l0) => out.push_str(&format!("{i},{lt},{l0}\n")),
                None => out.push_str(&format!("{i},{lt},\n")),
            }
        }
        out
    }

    /// Key-value metadata sidecar.
    pub fn metadata(&self, law_label: &str) -> String {
        let eta = match self.eta_star {
            Some(e) => format!("{e}"),
            None => "none".to_string(),
        };
        format!(
            "n = {}\nt = {}\nseed = {}\nbackend = \"{}\"\nlaw = \"{}\"\neta_star = \"{}\"\n",
            self.n,
            self.t,
            self.seed,
            self.backend.as_str(),
            law_label,
            eta
        )
    }
}

/// Free-function form of the empirical measure (uniform weights 1/n).
pub fn empirical_measure(sample: &SpectralSample) -> WeightedAtomMeasure {
    sample.empirical_measure()
}

/// n i.i.d. draws, unordered (sample order preserved).
pub fn sample_initial_unordered(
    law: &InitialLaw,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    law.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    if let InitialLaw::Deterministic { points } = law {
        if points.len() != n {
            return Err(Error::InvalidParameter(format!(
                "deterministic initial configuration has {} points but n = {n}",
                points.len()
            )));
        }
        return Ok(points.clone());
    }
    Ok((0..n).map(|_| law.sample_one(rng)).collect())
}

/// Ordered statistics of n i.i.d. draws.
pub fn sample_initial(law: &InitialLaw, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut v = sample_initial_unordered(law, n, rng)?;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Hermitian Brownian motion at time t: independent complex Gaussian entries
/// scaled by 1/sqrt(2n) off the diagonal and 1/sqrt(n) on it. The draw order
/// (row-major upper triangle, diagonal first in each row) is part of the
/// reproducibility contract.
pub(crate) fn hermitian_bm_at(n: usize, t: f64, rng: &mut impl Rng) -> faer::Mat<faer::c64> {
    let off = (t / (2.0 * n as f64)).sqrt();
    let diag = (t / n as f64).sqrt();
    let mut h = faer::Mat::<faer::c64>::zeros(n, n);
    for k in 0..n {
        let g: f64 = StandardNormal.sample(rng);
        h[(k, k)] = faer::c64::new(diag * g, 0.0);
        for l in (k + 1)..n {
            let g1: f64 = StandardNormal.sample(rng);
            let g2: f64 = StandardNormal.sample(rng);
            h[(k, l)] = faer::c64::new(off * g1, off * g2);
            h[(l, k)] = faer::c64::new(off * g1, -off * g2);
        }
    }
    h
}

/// Eigenvalues of a Hermitian matrix, ascending. Runs the solver
/// sequentially so results do not depend on thread count.
pub(crate) fn hermitian_eigenvalues(m: &faer::Mat<faer::c64>) -> Result<Vec<f64>> {
    static SEQ: std::sync::Once = std::sync::Once::new();
    SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    let n = m.nrows();
    let mut ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver {
            n,
            detail: format!("{e:?}"),
        })?;
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver {
            n,
            detail: "non-finite eigenvalue".into(),
        });
    }
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

/// Matrix backend: diagonalize X(0) + H(t). Records eta_star = max |eig(H)|
/// and verifies the interlacing bound before returning.
pub fn simulate_dyson_matrix(
    law: &InitialLaw,
    n: usize,
    t: f64,
    seed: u64,
) -> Result<SpectralSample> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be positive, got {t}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let initial = sample_initial_unordered(law, n, &mut rng)?;
    let mut sorted0 = initial.clone();
    sorted0.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut m = hermitian_bm_at(n, t, &mut rng);
    let ev_h = hermitian_eigenvalues(&m)?;
    let eta = ev_h[0].abs().max(ev_h[n - 1].abs());

    for (k, d) in sorted0.iter().enumerate() {
        let cur = m[(k, k)];
        m[(k, k)] = faer::c64::new(cur.re + d, 0.0);
    }
    let eigenvalues = hermitian_eigenvalues(&m)?;

    let sample = SpectralSample {
        n,
        t,
        eigenvalues,
        initial_values: initial,
        seed,
        backend: Backend::Matrix,
        eta_star: Some(eta),
    };
    sample.validate_interlacing()?;
    Ok(sample)
}

/// Euler-Maruyama backend for the interacting eigenvalue system, used only
/// to cross-validate the matrix route at small n. Near-collisions reject the
/// step and halve dt locally, up to [`MAX_HALVINGS`] times.
pub fn simulate_dyson_sde(
    law: &InitialLaw,
    n: usize,
    t: f64,
    steps: usize,
    seed: u64,
) -> Result<SpectralSample> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be positive, got {t}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let initial = sample_initial_unordered(law, n, &mut rng)?;
    let mut state = initial.clone();
    state.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let dt = t / steps as f64;
    if n >= 2 {
        let min_gap = state
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let limit = min_gap * min_gap / 4.0;
        if !(dt < limit) {
            return Err(Error::StepTooCoarse { dt, limit });
        }
    }

    let mut time = 0.0;
    for _ in 0..steps {
        advance(&mut state, n, dt, time, 0, &mut rng)?;
        time += dt;
    }

    Ok(SpectralSample {
        n,
        t,
        eigenvalues: state,
        initial_values: initial,
        seed,
        backend: Backend::Sde,
        eta_star: None,
    })
}

fn advance(
    state: &mut Vec<f64>,
    n: usize,
    dt: f64,
    time: f64,
    depth: u32,
    rng: &mut impl Rng,
) -> Result<()> {
    let mut proposal = vec![0.0; n];
    let noise_scale = (dt / n as f64).sqrt();
    for i in 0..n {
        let mut drift = 0.0;
        for j in 0..n {
            if j != i {
                drift += 1.0 / (state[i] - state[j]);
            }
        }
        let g: f64 = StandardNormal.sample(rng);
        proposal[i] = state[i] + drift * dt / n as f64 + noise_scale * g;
    }
    let min_gap = if n >= 2 {
        proposal
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    if min_gap >= COLLISION_FLOOR {
        *state = proposal;
        return Ok(());
    }
    if depth >= MAX_HALVINGS {
        return Err(Error::ParticleCollision {
            time,
            gap: min_gap,
            halvings: depth,
        });
    }
    let half = dt / 2.0;
    advance(state, n, half, time, depth + 1, rng)?;
    advance(state, n, half, time + half, depth + 1, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;
    use crate::stats::{ks_critical, ks_statistic, mean_sd};

    #[test]
    fn point_mass_initial_is_constant() {
        let mut rng = stream_rng(1, 0);
        let v = sample_initial(&InitialLaw::PointMass { center: 0.0 }, 3, &mut rng).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn initial_sample_is_sorted() {
        let mut rng = stream_rng(2, 0);
        let v = sample_initial(&InitialLaw::Cauchy { scale: 5.0 }, 500, &mut rng).unwrap();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cauchy_median_concentrates() {
        // Median of 1e5 draws from Cauchy(5) sits near 0.
        let mut rng = stream_rng(3, 0);
        let v = sample_initial(&InitialLaw::Cauchy { scale: 5.0 }, 100_000, &mut rng).unwrap();
        let median = v[v.len() / 2];
        assert!(median.abs() < 0.1, "median = {median}");
    }

    #[test]
    fn invalid_law_parameters_rejected() {
        assert!(InitialLaw::Cauchy { scale: -1.0 }.validate().is_err());
        assert!(InitialLaw::Gaussian { sd: 0.0 }.validate().is_err());
        assert!(InitialLaw::TwoPointMixture { a1: 0.0, a2: 1.0, p: 1.5 }
            .validate()
            .is_err());
        assert!(InitialLaw::Deterministic { points: vec![] }.validate().is_err());
    }

    #[test]
    fn sampler_matches_density_ks() {
        // Level 0.001 one-sample KS at n = 1e5 for the closed-form CDFs.
        let n = 100_000;
        for (idx, law) in [
            InitialLaw::Cauchy { scale: 5.0 },
            InitialLaw::Gaussian { sd: 1.0 },
        ]
        .iter()
        .enumerate()
        {
            let mut rng = stream_rng(40, idx as u64);
            let sorted = sample_initial(law, n, &mut rng).unwrap();
            let d = ks_statistic(&sorted, |x| law.cdf(x).unwrap());
            assert!(
                d < ks_critical(0.001, n),
                "{}: D = {d}",
                law.label()
            );
        }
    }

    #[test]
    fn hermitian_entry_variances() {
        // Off-diagonal complex entries carry variance t/n, the diagonal t/n
        // real; Monte Carlo at n = 50 over 1e4 draws, 5% relative.
        let n = 50;
        let t = 1.0;
        let reps = 10_000;
        let mut rng = stream_rng(41, 0);
        let mut off_sq = 0.0;
        let mut diag_sq = 0.0;
        for _ in 0..reps {
            let h = hermitian_bm_at(n, t, &mut rng);
            let z = h[(0, 1)];
            off_sq += z.re * z.re + z.im * z.im;
            let d = h[(3, 3)];
            diag_sq += d.re * d.re;
        }
        let expect = t / n as f64;
        off_sq /= reps as f64;
        diag_sq /= reps as f64;
        assert!((off_sq - expect).abs() < 0.05 * expect, "off {off_sq}");
        assert!((diag_sq - expect).abs() < 0.05 * expect, "diag {diag_sq}");
    }

    #[test]
    fn matrix_backend_n1_is_heat_kernel() {
        // n = 1 collapses to a Brownian point: mean of a + sqrt(t) N(0,1).
        let a = 1.5;
        let t = 0.25;
        let reps = 10_000;
        let law = InitialLaw::PointMass { center: a };
        let vals: Vec<f64> = (0..reps)
            .map(|r| {
                simulate_dyson_matrix(&law, 1, t, crate::seeding::stream_seed(42, r))
                    .unwrap()
                    .eigenvalues[0]
            })
            .collect();
        let (mean, _) = mean_sd(&vals);
        let bound = 4.0 * (t / reps as f64).sqrt();
        assert!((mean - a).abs() < bound, "mean = {mean}");
    }

    #[test]
    fn matrix_backend_deterministic_per_seed() {
        let law = InitialLaw::Cauchy { scale: 5.0 };
        let s1 = simulate_dyson_matrix(&law, 60, 1.0, 9).unwrap();
        let s2 = simulate_dyson_matrix(&law, 60, 1.0, 9).unwrap();
        assert_eq!(s1.eigenvalues, s2.eigenvalues);
        assert_eq!(s1.initial_values, s2.initial_values);
        assert_eq!(s1.eta_star, s2.eta_star);
        let s3 = simulate_dyson_matrix(&law, 60, 1.0, 10).unwrap();
        assert_ne!(s1.eigenvalues, s3.eigenvalues);
    }

    #[test]
    fn matrix_backend_interlacing_holds() {
        for seed in 0..20 {
            let s = simulate_dyson_matrix(&InitialLaw::Gaussian { sd: 2.0 }, 40, 0.5, seed)
                .unwrap();
            s.validate_interlacing().unwrap();
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn empirical_measure_uniform_weights() {
        let s = SpectralSample {
            n: 3,
            t: 1.0,
            eigenvalues: vec![1.0, 2.0, 3.0],
            initial_values: vec![0.0, 0.0, 0.0],
            seed: 0,
            backend: Backend::Matrix,
            eta_star: None,
        };
        let m = empirical_measure(&s);
        assert_eq!(m.atoms(), &[1.0, 2.0, 3.0]);
        assert!(m.weights().iter().all(|&w| w == 1.0 / 3.0));
        assert!((m.total_weight() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sde_two_particles_repel() {
        // Deterministic start {-1, +1}; gaps stay positive and widen on
        // average under the repulsion drift.
        let law = InitialLaw::Deterministic {
            points: vec![-1.0, 1.0],
        };
        let mut gaps = Vec::new();
        for seed in 0..50 {
            let s = simulate_dyson_sde(&law, 2, 0.01, 10_000, seed).unwrap();
            let gap = s.eigenvalues[1] - s.eigenvalues[0];
            assert!(gap >= 0.0);
            gaps.push(gap);
        }
        let (mean_gap, _) = mean_sd(&gaps);
        assert!(mean_gap >= 2.0, "mean gap = {mean_gap}");
    }

    #[test]
    fn sde_step_size_guard() {
        let law = InitialLaw::Deterministic {
            points: vec![0.0, 1e-3],
        };
        // dt = 1e-2 >> (1e-3)^2/4.
        let err = simulate_dyson_sde(&law, 2, 1.0, 100, 0).unwrap_err();
        assert!(matches!(err, Error::StepTooCoarse { .. }));
    }

    #[test]
    fn sde_n1_matches_matrix_in_distribution() {
        // Both backends at n = 1 are Brownian points; KS at level 0.001.
        let law = InitialLaw::PointMass { center: 0.0 };
        let t = 1.0;
        let reps = 10_000u64;
        let mut sde: Vec<f64> = (0..reps)
            .map(|r| {
                simulate_dyson_sde(&law, 1, t, 32, crate::seeding::stream_seed(50, r))
                    .unwrap()
                    .eigenvalues[0]
            })
            .collect();
        sde.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = ks_statistic(&sde, |x| 0.5 * libm::erfc(-x / (t.sqrt() * std::f64::consts::SQRT_2)));
        assert!(d < ks_critical(0.001, reps as usize), "D = {d}");
    }

    #[test]
    fn log_moment_condition_bounded() {
        // (1/n) sum log(lambda_i(0)^2 + 1) stays bounded in n for the
        // built-in laws.
        for law in [
            InitialLaw::Cauchy { scale: 5.0 },
            InitialLaw::Gaussian { sd: 1.0 },
            InitialLaw::PointMass { center: 0.0 },
        ] {
            for (i, n) in [100usize, 1_000, 10_000, 100_000].iter().enumerate() {
                let mut rng = stream_rng(60, i as u64);
                let v = sample_initial_unordered(&law, *n, &mut rng).unwrap();
                let stat = v.iter().map(|x| (x * x + 1.0).ln()).sum::<f64>() / *n as f64;
                assert!(stat < 25.0, "{} at n={n}: {stat}", law.label());
            }
        }
    }

    #[test]
    fn csv_roundtrip_shape() {
        let s = simulate_dyson_matrix(&InitialLaw::Gaussian { sd: 1.0 }, 5, 1.0, 3).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("index,lambda_t,lambda_0\n"));
        assert_eq!(csv.lines().count(), 6);
        let meta = s.metadata("gaussian(sd=1)");
        assert!(meta.contains("backend = \"matrix\""));
        assert!(meta.contains("eta_star"));
    }
}
