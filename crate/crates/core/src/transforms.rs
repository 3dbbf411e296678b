//! Complex-analytic core: principal square root, the semicircle law, and
//! Cauchy transforms (closed-form, empirical, Cauchy-family).
//!
//! Every transform maps the upper half-plane into the open lower half-plane
//! and satisfies |G(z)| <= 1/Im(z). All functions here are pure and safe to
//! call from any number of threads.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point `z` with `Im(z) > 0`. Construction rejects anything else,
/// including non-finite coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperHalfPoint {
    re: f64,
    im: f64,
}

impl UpperHalfPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || im <= 0.0 {
            return Err(Error::NotUpperHalfPlane { im });
        }
        Ok(Self { re, im })
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl TryFrom<Complex64> for UpperHalfPoint {
    type Error = Error;

    fn try_from(z: Complex64) -> Result<Self> {
        UpperHalfPoint::new(z.re, z.im)
    }
}

/// Square root with the branch fixed by `Im(result) >= 0`.
///
/// For z = u + iv the root is a + ib with a = sqrt((|z| + u)/2) and
/// b = sqrt((|z| - u)/2); the sign of the real part follows the sign of v so
/// that the root still squares back to z below the real axis. The function is
/// total: grid points grazing the branch cut never fault.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let (u, v) = (z.re, z.im);
    let modulus = z.norm();
    if modulus == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // Evaluate the numerically stable component first, derive the other from
    // 2ab = |v| to avoid cancellation when z sits near the real axis.
    let (a, b) = if u >= 0.0 {
        let a = ((modulus + u) * 0.5).sqrt();
        (a, v.abs() / (2.0 * a))
    } else {
        let b = ((modulus - u) * 0.5).sqrt();
        (v.abs() / (2.0 * b), b)
    };
    if v < 0.0 {
        Complex64::new(-a, b)
    } else {
        Complex64::new(a, b)
    }
}

/// Semicircle distribution with variance parameter `t`, supported on
/// `[-2*sqrt(t), 2*sqrt(t)]`.
#[derive(Clone, Copy, Debug)]
pub struct SemicircleLaw {
    t: f64,
}

impl SemicircleLaw {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "semicircle parameter must be positive, got t = {t}"
            )));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn support(&self) -> (f64, f64) {
        let edge = 2.0 * self.t.sqrt();
        (-edge, edge)
    }

    pub fn density(&self, x: f64) -> f64 {
        semicircle_density(x, self.t)
    }

    pub fn cauchy_transform(&self, z: &UpperHalfPoint) -> Complex64 {
        semicircle_cauchy(z, self.t)
    }
}

/// Density of the semicircle law: sqrt(4t - x^2) / (2 pi t) on the support,
/// zero outside.
pub fn semicircle_density(x: f64, t: f64) -> f64 {
    assert!(t > 0.0, "semicircle parameter must be positive");
    let s = 4.0 * t - x * x;
    if s <= 0.0 {
        0.0
    } else {
        s.sqrt() / (2.0 * std::f64::consts::PI * t)
    }
}

/// Closed-form Cauchy transform of the semicircle law:
/// `(z - sqrt(z^2 - 4t)) / (2t)`.
pub fn semicircle_cauchy(z: &UpperHalfPoint, t: f64) -> Complex64 {
    assert!(t > 0.0, "semicircle parameter must be positive");
    semicircle_cauchy_raw(z.as_complex(), t)
}

/// Same formula without the domain-enforcing wrapper; used by the fixed-point
/// maps whose intermediate points stay in the upper half-plane by
/// construction rather than by type.
pub(crate) fn semicircle_cauchy_raw(z: Complex64, t: f64) -> Complex64 {
    (z - principal_sqrt(z * z - 4.0 * t)) / (2.0 * t)
}

/// Finitely supported measure: atoms with nonnegative weights summing to one.
/// Spectra enter the pipeline as the uniform case (weight 1/n each).
#[derive(Clone, Debug)]
pub struct WeightedAtomMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedAtomMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "measure needs matching nonempty atoms/weights, got {} atoms and {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("atoms must be finite".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total = neumaier_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform weights 1/n on the given atoms.
    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "measure needs at least one atom".into(),
            ));
        }
        let w = 1.0 / n as f64;
        Self::new(atoms, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Compensated total weight; equals 1 within 1e-12 by construction.
    pub fn total_weight(&self) -> f64 {
        neumaier_sum(&self.weights)
    }

    /// Direct O(n) evaluation of sum_j w_j / (z - a_j).
    pub(crate) fn cauchy_raw(&self, z: Complex64) -> Complex64 {
        let (u, v) = (z.re, z.im);
        let mut re = 0.0;
        let mut im = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            let du = u - a;
            let denom = du * du + v * v;
            re += w * du / denom;
            im -= w * v / denom;
        }
        Complex64::new(re, im)
    }

    /// Transform together with its derivative -sum_j w_j / (z - a_j)^2,
    /// sharing one pass over the atoms.
    pub(crate) fn cauchy_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            let d = z - a;
            let inv = 1.0 / d;
            let winv = w * inv;
            g += winv;
            dg -= winv * inv;
        }
        (g, dg)
    }
}

/// Empirical Cauchy transform of an atom measure at `z` in the upper
/// half-plane: sum_j w_j / (z - a_j).
pub fn empirical_cauchy(m: &WeightedAtomMeasure, z: &UpperHalfPoint) -> Complex64 {
    m.cauchy_raw(z.as_complex())
}

/// Cauchy transform of the centered Cauchy distribution with scale `s`:
/// `1 / (z + i s)`.
pub fn cauchy_law_transform(z: &UpperHalfPoint, s: f64) -> Complex64 {
    assert!(s > 0.0, "Cauchy scale must be positive");
    1.0 / (z.as_complex() + Complex64::new(0.0, s))
}

/// Reciprocal `F = 1/G`. Genuine transforms on the upper half-plane never
/// vanish, so a near-zero denominator only ever signals a caller bug.
pub fn reciprocal_f(g: Complex64) -> Result<Complex64> {
    let magnitude = g.norm();
    if magnitude < 1e-300 {
        return Err(Error::ZeroDenominator { magnitude });
    }
    Ok(1.0 / g)
}

/// Neumaier-compensated sum.
pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
