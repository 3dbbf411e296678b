//! Bandwidth selection: the data-driven cross-validation rule on sample
//! splits, the known-density oracle criterion, and the closed-form
//! smoothness-driven bandwidths with their triangular coefficient recursions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dbm::SpectralSample;
use crate::deconv::{
    assemble_estimate, convolved_curve, forward_transform, inner_product, ise, norm_sq,
    DeconvConfig,
};
use crate::error::{Error, Result};
use crate::seeding::{rng_from_seed, stream_seed};
use crate::transforms::WeightedAtomMeasure;

/// Cross-validation setup: bandwidth grid, number of random half-splits, and
/// the seed the splits derive from.
#[derive(Clone, Debug)]
pub struct CVConfig {
    pub bandwidths: Vec<f64>,
    pub partitions: usize,
    pub seed: u64,
}

impl CVConfig {
    /// 50 equispaced bandwidths on [0.25, 2.7], 10 partitions.
    pub fn default_grid(seed: u64) -> Self {
        Self {
            bandwidths: equispaced(0.25, 2.7, 50),
            partitions: 10,
            seed,
        }
    }

    pub fn validate(&self, n_even: usize) -> Result<()> {
        if self.bandwidths.len() < 2 {
            return Err(Error::InvalidParameter(
                "bandwidth grid needs at least two points".into(),
            ));
        }
        if self.bandwidths[0] <= 0.0
            || self.bandwidths.windows(2).any(|w| !(w[0] < w[1]))
            || self.bandwidths.iter().any(|h| !h.is_finite())
        {
            return Err(Error::InvalidParameter(
                "bandwidth grid must be strictly increasing and positive".into(),
            ));
        }
        if self.partitions < 2 {
            return Err(Error::InvalidParameter(
                "cross-validation needs at least two partitions".into(),
            ));
        }
        if let Some(max) = central_binomial(n_even) {
            if self.partitions as u128 > max {
                return Err(Error::InvalidParameter(format!(
                    "{} partitions exceed the {} distinct half-splits of n = {n_even}",
                    self.partitions, max
                )));
            }
        }
        Ok(())
    }
}

pub fn equispaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// C(n, n/2) when it fits; None means "astronomically large".
fn central_binomial(n: usize) -> Option<u128> {
    if n > 60 {
        return None;
    }
    let k = n / 2;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    Some(acc)
}

/// Per-bandwidth criterion values and the selected minimizer.
#[derive(Clone, Debug)]
pub struct CVReport {
    pub bandwidths: Vec<f64>,
    pub criterion: Vec<f64>,
    pub selected: f64,
    pub selected_index: usize,
    pub partition_seeds: Vec<u64>,
}

/// Data-driven bandwidth selection on random balanced half-splits of the
/// eigenvalue sample. For each split, estimates are built on both halves and
/// the criterion pairs bandwidth h on one half against the best h' on the
/// other; the selected bandwidth minimizes the split-averaged criterion.
///
/// Odd samples drop one eigenvalue uniformly at random (seeded) first.
pub fn cv_select(
    sample: &SpectralSample,
    cfg: &CVConfig,
    est: &DeconvConfig,
) -> Result<CVReport> {
    est.validate()?;
    let mut values = sample.eigenvalues.clone();
    if values.len() < 2 {
        return Err(Error::InvalidParameter(
            "cross-validation needs at least two eigenvalues".into(),
        ));
    }
    if values.len() % 2 == 1 {
        let mut rng = rng_from_seed(stream_seed(cfg.seed, 0));
        let drop = rng.gen_range(0..values.len());
        values.swap_remove(drop);
    }
    cfg.validate(values.len())?;

    let half = values.len() / 2;
    let n_h = cfg.bandwidths.len();
    let v = cfg.partitions;
    let partition_seeds: Vec<u64> = (1..=v as u64).map(|j| stream_seed(cfg.seed, j)).collect();

    // norms[j][hi] and cross[j][hi][hj] accumulated per split.
    let mut norms = vec![vec![0.0; n_h]; v];
    let mut cross = vec![vec![vec![0.0; n_h]; n_h]; v];

    for (j, &pseed) in partition_seeds.iter().enumerate() {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.shuffle(&mut rng_from_seed(pseed));
        let side_a: Vec<f64> = idx[..half].iter().map(|&i| values[i]).collect();
        let side_b: Vec<f64> = idx[half..].iter().map(|&i| values[i]).collect();

        let est_a = estimates_for_all_bandwidths(side_a, cfg, est)?;
        let est_b = estimates_for_all_bandwidths(side_b, cfg, est)?;

        for (hi, row) in cross[j].iter_mut().enumerate() {
            norms[j][hi] = norm_sq(&est_a[hi], &est.spatial);
            for (hj, slot) in row.iter_mut().enumerate() {
                *slot = inner_product(&est_a[hi], &est_b[hj], &est.spatial);
            }
        }
    }

    let mut criterion = Vec::with_capacity(n_h);
    for hi in 0..n_h {
        let mut best = f64::INFINITY;
        for hj in (0..n_h).filter(|&hj| hj != hi) {
            let avg = (0..v)
                .map(|j| norms[j][hi] - 2.0 * cross[j][hi][hj])
                .sum::<f64>()
                / v as f64;
            best = best.min(avg);
        }
        criterion.push(best);
    }

    let selected_index = criterion
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    Ok(CVReport {
        bandwidths: cfg.bandwidths.clone(),
        criterion,
        selected: cfg.bandwidths[selected_index],
        selected_index,
        partition_seeds,
    })
}

fn estimates_for_all_bandwidths(
    atoms: Vec<f64>,
    cfg: &CVConfig,
    est: &DeconvConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = atoms.len();
    let m = WeightedAtomMeasure::uniform(atoms)?;
    let (curve, _) = convolved_curve(&m, est)?;
    let fwd = forward_transform(&curve, est);
    cfg.bandwidths
        .iter()
        .map(|&h| Ok(assemble_estimate(&fwd, h, n, est)?.values))
        .collect()
}

/// Known-density criterion J(h) = ||p_hat||^2 - 2 <p_hat, p0>; equals the
/// grid ISE up to the constant ||p0||^2.
pub fn oracle_j(
    sample: &SpectralSample,
    h: f64,
    p0: impl Fn(f64) -> f64,
    est: &DeconvConfig,
) -> Result<f64> {
    Ok(oracle_j_curve(sample, &[h], &p0, est)?[0])
}

/// J over a whole bandwidth grid, sharing the fixed-point curve and forward
/// transform across bandwidths.
pub fn oracle_j_curve(
    sample: &SpectralSample,
    bandwidths: &[f64],
    p0: impl Fn(f64) -> f64,
    est: &DeconvConfig,
) -> Result<Vec<f64>> {
    est.validate()?;
    let m = sample.empirical_measure();
    let (curve, _) = convolved_curve(&m, est)?;
    let fwd = forward_transform(&curve, est);
    let truth: Vec<f64> = est.spatial.points().iter().map(|&x| p0(x)).collect();
    bandwidths
        .iter()
        .map(|&h| {
            let e = assemble_estimate(&fwd, h, sample.n, est)?;
            Ok(norm_sq(&e.values, &est.spatial)
                - 2.0 * inner_product(&e.values, &truth, &est.spatial))
        })
        .collect()
}

/// Grid ISE of the estimate built at bandwidth h (known density).
pub fn oracle_ise(
    sample: &SpectralSample,
    h: f64,
    p0: impl Fn(f64) -> f64 + Copy,
    est: &DeconvConfig,
) -> Result<f64> {
    let m = sample.empirical_measure();
    let e = crate::deconv::estimate_p0(&m, h, est)?;
    Ok(ise(&e, p0))
}

/// Smoothness class of densities whose Fourier transform decays like
/// exp(-a |xi|^r), with envelope constant L.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessClass {
    pub a: f64,
    pub r: f64,
    pub big_l: f64,
}

impl SmoothnessClass {
    pub fn new(a: f64, r: f64, big_l: f64) -> Result<Self> {
        if !(a > 0.0) || !(r > 0.0) || !(big_l > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness class needs positive (a, r, L), got ({a}, {r}, {big_l})"
            )));
        }
        Ok(Self { a, r, big_l })
    }
}

/// Convergence-rate regime as a function of the transform decay exponent r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateRegime {
    /// r = 1: polynomial rate n^(-a/(a+gamma)).
    Polynomial { exponent: f64 },
    /// r < 1: bias dominates the variance.
    BiasDominated,
    /// r > 1: variance dominates the bias.
    VarianceDominated,
}

pub fn predicted_rate(sc: &SmoothnessClass, gamma: f64) -> RateRegime {
    if sc.r == 1.0 {
        RateRegime::Polynomial {
            exponent: sc.a / (sc.a + gamma),
        }
    } else if sc.r < 1.0 {
        RateRegime::BiasDominated
    } else {
        RateRegime::VarianceDominated
    }
}

/// Expansion order k with k/(k+1) < min(r, 1/r) <= (k+1)/(k+2). Defined for
/// r != 1 (the polynomial regime needs no expansion).
pub fn expansion_order(r: f64) -> usize {
    let rho = r.min(1.0 / r);
    debug_assert!(rho < 1.0, "expansion order is undefined at r = 1");
    let mut k = 0usize;
    while !(rho <= (k + 1) as f64 / (k + 2) as f64) {
        k += 1;
        assert!(k < 10_000, "expansion order runaway for r = {r}");
    }
    k
}

/// Coefficients solving the triangular system that kills the expansion
/// residuals M_0..M_k: c_0 = -front and
/// c_i = -front * sum_{j<i} [pow(pow-1)...(pow-j)/(j+1)!] *
///        sum_{p_0+..+p_j = i-j-1} c_{p_0}...c_{p_j}.
fn star_coefficients(front: f64, pow: f64, k: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; k + 1];
    c[0] = -front;
    for i in 1..=k {
        let mut total = 0.0;
        let mut falling = 1.0; // pow (pow-1) ... (pow-j)
        let mut factorial = 1.0; // (j+1)!
        for j in 0..i {
            falling *= pow - j as f64;
            factorial *= (j + 1) as f64;
            total += falling / factorial * composition_sum(&c, j + 1, i - j - 1);
        }
        c[i] = -front * total;
    }
    c
}

/// sum over ordered tuples (p_1..p_m) of nonnegative integers with sum q of
/// the products c_{p_1} ... c_{p_m}.
fn composition_sum(c: &[f64], m: usize, q: usize) -> f64 {
    // Convolution powers of the coefficient sequence.
    let mut layer: Vec<f64> = c[..=q].to_vec();
    for _ in 1..m {
        let mut next = vec![0.0; q + 1];
        for (total, slot) in next.iter_mut().enumerate() {
            for p in 0..=total {
                *slot += c[p] * layer[total - p];
            }
        }
        layer = next;
    }
    layer[q]
}

/// Coefficients b_i* of the bias-dominated (r < 1) bandwidth expansion.
pub fn bstar_coefficients(a: f64, r: f64, gamma: f64, k: usize) -> Vec<f64> {
    star_coefficients(2.0 * a / (2.0 * gamma).powf(r), r, k)
}

/// Coefficients d_i* of the variance-dominated (r > 1) bandwidth expansion.
pub fn dstar_coefficients(a: f64, r: f64, gamma: f64, k: usize) -> Vec<f64> {
    star_coefficients(2.0 * gamma / (2.0 * a).powf(1.0 / r), 1.0 / r, k)
}

/// Closed-form bandwidth for the three smoothness regimes.
pub fn theoretical_bandwidth(sc: &SmoothnessClass, gamma: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "bandwidth formulas need n >= 3, got {n}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let (a, r) = (sc.a, sc.r);
    let ln_n = (n as f64).ln();
    let lln_n = ln_n.ln();
    let h = if r == 1.0 {
        2.0 * (a + gamma) / ln_n
    } else if r < 1.0 {
        let k = expansion_order(r);
        let b = bstar_coefficients(a, r, gamma, k);
        let mut denom = ln_n + (r - 1.0) * lln_n;
        for (i, bi) in b.iter().enumerate() {
            denom += bi * ln_n.powf(r + i as f64 * (r - 1.0));
        }
        2.0 * gamma / denom
    } else {
        let k = expansion_order(r);
        let d = dstar_coefficients(a, r, gamma, k);
        let mut denom = ln_n + (r - 1.0) / r * lln_n;
        for (i, di) in d.iter().enumerate() {
            denom += di * ln_n.powf(1.0 / r - i as f64 * (r - 1.0) / r);
        }
        (2.0 * a / denom).powf(1.0 / r)
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth expansion degenerates at n = {n} for (a, r, gamma) = ({a}, {r}, {gamma}); n is too small for this regime"
        )));
    }
    Ok(h)
}
