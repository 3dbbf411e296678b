//! Subordination fixed points.
//!
//! Two solvers live here: the empirical map w -> z + t*G_emp(w) on eigenvalue
//! data, and the oracle map built from a closed-form time-t transform. Both
//! are plain self-map iterations on C_{Im(z)/2}; their convergence and the
//! output bounds Im(w) >= Im(z)/2, |w - z| <= sqrt(t) come from the map's
//! range, not from tolerance juggling. A guarded Newton acceleration is
//! available as an option; it finishes with one plain map application so the
//! returned point always lies in the map's range.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::{reciprocal_f, semicircle_cauchy_raw, UpperHalfPoint, WeightedAtomMeasure};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Acceleration {
    /// Plain fixed-point iteration (the constructive argument's route).
    #[default]
    None,
    /// Damped-free Newton on w - z - t G(w), falling back to a plain step
    /// whenever the Newton proposal leaves the admissible region.
    Newton,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub acceleration: Acceleration,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            acceleration: Acceleration::None,
        }
    }
}

impl SolverOptions {
    pub fn with_acceleration(acceleration: Acceleration) -> Self {
        Self {
            acceleration,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "solver needs tol > 0 and max_iter >= 1, got ({}, {})",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Fixed-point value with iteration diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct SubordinationResult {
    /// Query point.
    pub z: Complex64,
    /// The fixed point w(z).
    pub w: Complex64,
    pub iterations: usize,
    /// |map(w) - w| at the returned point.
    pub residual: f64,
    pub t: f64,
}

fn check_domain(z: &UpperHalfPoint, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be positive, got {t}"
        )));
    }
    let min_im = 2.0 * t.sqrt();
    if z.im() <= min_im {
        return Err(Error::OutsideFixedPointDomain {
            im_z: z.im(),
            min_im,
        });
    }
    Ok(())
}

/// One application of the empirical map w -> z + t * G_emp(w). Exposed so
/// property tests can walk the iteration themselves.
pub fn empirical_map_step(
    m: &WeightedAtomMeasure,
    z: Complex64,
    t: f64,
    w: Complex64,
) -> Complex64 {
    z + t * m.cauchy_raw(w)
}

/// Unique fixed point of the empirical subordination equation for
/// Im(z) > 2 sqrt(t), starting from w = z.
pub fn solve_empirical(
    m: &WeightedAtomMeasure,
    z: &UpperHalfPoint,
    t: f64,
    opts: &SolverOptions,
) -> Result<SubordinationResult> {
    check_domain(z, t)?;
    opts.validate()?;
    let zc = z.as_complex();
    let half_im = z.im() / 2.0;
    let sqrt_t = t.sqrt();

    let mut w = zc;
    let mut iterations = 0usize;
    let mut last_step = f64::INFINITY;
    while iterations < opts.max_iter {
        let w_next = match opts.acceleration {
            Acceleration::None => empirical_map_step(m, zc, t, w),
            Acceleration::Newton => {
                let (g, dg) = m.cauchy_and_derivative(w);
                let plain = zc + t * g;
                if iterations == 0 {
                    // First move is always the plain map: it lands inside the
                    // invariant ball |w - z| <= sqrt(t).
                    plain
                } else {
                    let f = plain - w;
                    let fp = t * dg - 1.0;
                    let candidate = w - f / fp;
                    let ok = candidate.re.is_finite()
                        && candidate.im.is_finite()
                        && candidate.im > half_im
                        && (candidate - zc).norm() <= sqrt_t;
                    if ok {
                        candidate
                    } else {
                        plain
                    }
                }
            }
        };
        iterations += 1;
        last_step = (w_next - w).norm();
        w = w_next;
        if last_step <= opts.tol {
            // Land on the map's range so the output bounds hold by
            // construction even when the last move was a Newton step.
            if opts.acceleration == Acceleration::Newton {
                w = empirical_map_step(m, zc, t, w);
                iterations += 1;
            }
            let residual = (empirical_map_step(m, zc, t, w) - w).norm();
            return Ok(SubordinationResult {
                z: zc,
                w,
                iterations,
                residual,
                t,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations,
        residual: last_step,
    })
}

/// Fixed point of the oracle map
/// w -> z + t * G_semicircle(w + 1/G_mu_t(w) - z), for a closed-form
/// transform of the time-t law. Used when the initial family admits an
/// explicit transform (free-convolution oracles).
pub fn solve_oracle<G>(
    g_mu_t: G,
    z: &UpperHalfPoint,
    t: f64,
    opts: &SolverOptions,
) -> Result<SubordinationResult>
where
    G: Fn(Complex64) -> Complex64,
{
    check_domain(z, t)?;
    opts.validate()?;
    let zc = z.as_complex();

    let step = |w: Complex64| -> Result<Complex64> {
        let g = g_mu_t(w);
        if !g.re.is_finite() || !g.im.is_finite() {
            return Err(Error::NonFinite {
                context: "oracle transform evaluation".into(),
            });
        }
        let f = reciprocal_f(g)?;
        let v = w + f - zc;
        if v.im <= 0.0 {
            // The shifted reciprocal must stay in the upper half-plane for a
            // genuine Cauchy transform on this domain.
            return Err(Error::NotATransform { im: v.im });
        }
        Ok(zc + t * semicircle_cauchy_raw(v, t))
    };

    let mut w = zc;
    let mut iterations = 0usize;
    let mut last_step = f64::INFINITY;
    while iterations < opts.max_iter {
        let w_next = step(w)?;
        iterations += 1;
        last_step = (w_next - w).norm();
        w = w_next;
        if last_step <= opts.tol {
            let residual = (step(w)? - w).norm();
            return Ok(SubordinationResult {
                z: zc,
                w,
                iterations,
                residual,
                t,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations,
        residual: last_step,
    })
}

/// Recovery of the initial transform from the fixed point:
/// G_0(z) = (w - z)/t.
pub fn recover_initial_transform(r: &SubordinationResult) -> Complex64 {
    (r.w - r.z) / r.t
}

/// Value of the density of (initial law) * Cauchy(gamma) at x, read off the
/// imaginary part of the empirical fixed point at x + i gamma:
/// (gamma - Im w) / (pi t).
pub fn convolved_density_at(
    m: &WeightedAtomMeasure,
    x: f64,
    gamma: f64,
    t: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let z = UpperHalfPoint::new(x, gamma)?;
    let r = solve_empirical(m, &z, t, opts)?;
    Ok((gamma - r.w.im) / (std::f64::consts::PI * t))
}
