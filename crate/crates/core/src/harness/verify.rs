//! Runtime invariant suite behind the `verify` subcommand: quick versions of
//! the library's mathematical invariants, sized to finish in seconds. The
//! full-scale statistical gates live in the acceptance test suite.

use num_complex::Complex64;
use rand::Rng;

use crate::bandwidth::{
    bstar_coefficients, cv_select, dstar_coefficients, equispaced, expansion_order, oracle_j,
    theoretical_bandwidth, CVConfig, SmoothnessClass,
};
use crate::dbm::{simulate_dyson_matrix, simulate_dyson_sde, InitialLaw};
use crate::deconv::{
    estimate_p0, inner_product, ise, kernel_ft, norm_sq, riemann_fourier, DeconvConfig,
    FrequencyGrid, Kernel, SpatialGrid,
};
use crate::seeding::{stream_rng, stream_seed};
use crate::stats::{ks_critical, ks_statistic, wasserstein1};
use crate::subordination::{
    empirical_map_step, solve_empirical, solve_oracle, Acceleration, SolverOptions,
};
use crate::transforms::{
    cauchy_law_transform, empirical_cauchy, principal_sqrt, reciprocal_f, semicircle_cauchy,
    semicircle_density, UpperHalfPoint, WeightedAtomMeasure,
};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(name: &'static str, body: impl FnOnce() -> Check) -> CheckResult {
    match body() {
        Ok(detail) => CheckResult {
            name,
            pass: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            pass: false,
            detail,
        },
    }
}

/// Run the whole suite; deterministic given the seed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        run("principal-sqrt-branch", || sqrt_branch(seed)),
        run("semicircle-identities", || semicircle_identities(seed)),
        run("semicircle-mass", semicircle_mass),
        run("transform-bounds", || transform_bounds(seed)),
        run("fixed-point-invariants", || fixed_point_invariants(seed)),
        run("fixed-point-uniqueness", || fixed_point_uniqueness(seed)),
        run("solver-cross-agreement", || solver_cross_agreement(seed)),
        run("recovery-oracle-chain", recovery_oracle_chain),
        run("simulator-determinism", || simulator_determinism(seed)),
        run("simulator-interlacing", || simulator_interlacing(seed)),
        run("heat-reduction-n1", || heat_reduction(seed)),
        run("sde-matrix-agreement", || sde_matrix_agreement(seed)),
        run("fourier-closed-forms", fourier_closed_forms),
        run("estimator-symmetry-cutoff", estimator_symmetry_cutoff),
        run("bandwidth-recursions", bandwidth_recursions),
        run("cv-determinism", || cv_determinism(seed)),
        run("criterion-identity", || criterion_identity(seed)),
    ]
}

fn sqrt_branch(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 1);
    for _ in 0..2000 {
        let z = Complex64::new(rng.gen_range(-1e4..1e4), rng.gen_range(-1e4..1e4));
        let r = principal_sqrt(z);
        ensure(r.im >= 0.0, format!("negative branch at {z}"))?;
        ensure(
            (r * r - z).norm() <= 1e-12 * z.norm().max(1.0),
            format!("square mismatch at {z}"),
        )?;
    }
    Ok("branch and square hold on 2000 points".into())
}

fn semicircle_identities(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 2);
    for _ in 0..500 {
        let t: f64 = rng.gen_range(0.25..4.0);
        let z = UpperHalfPoint::new(
            rng.gen_range(-20.0..20.0),
            2.0 * t.sqrt() + 0.1 + rng.gen_range(0.0..10.0),
        )
        .map_err(|e| e.to_string())?;
        let g = semicircle_cauchy(&z, t);
        let zc = z.as_complex();
        ensure(
            (t * g * g - zc * g + 1.0).norm() <= 1e-10,
            "quadratic identity failed",
        )?;
        let f = reciprocal_f(g).map_err(|e| e.to_string())?;
        ensure((zc - f - t * g).norm() <= 1e-10, "reciprocal identity failed")?;
    }
    Ok("quadratic and reciprocal identities on 500 points".into())
}

fn semicircle_mass() -> Check {
    let t: f64 = 1.3;
    let edge = 2.0 * t.sqrt();
    // The edge square-root singularity slows Simpson to O(dx^1.5); this many
    // points keeps the error under the 1e-8 gate.
    let m = 400_001;
    let dx = 2.0 * edge / (m - 1) as f64;
    let mut acc = 0.0;
    for i in 0..m {
        let x = -edge + i as f64 * dx;
        let w = if i == 0 || i == m - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * semicircle_density(x, t);
    }
    let mass = acc * dx / 3.0;
    ensure((mass - 1.0).abs() <= 1e-8, format!("mass = {mass}"))?;
    Ok(format!("density mass = {mass:.10}"))
}

fn transform_bounds(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 3);
    for _ in 0..2000 {
        let n = rng.gen_range(1..50);
        let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let m = WeightedAtomMeasure::uniform(atoms).map_err(|e| e.to_string())?;
        let z1 = UpperHalfPoint::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.05..8.0))
            .map_err(|e| e.to_string())?;
        let z2 = UpperHalfPoint::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.05..8.0))
            .map_err(|e| e.to_string())?;
        let alpha = z1.im().min(z2.im());
        let g1 = empirical_cauchy(&m, &z1);
        let g2 = empirical_cauchy(&m, &z2);
        ensure(g1.im < 0.0, "transform not in lower half-plane")?;
        ensure(g1.norm() <= 1.0 / z1.im(), "magnitude bound failed")?;
        ensure(
            (g1 - g2).norm() <= (z1.as_complex() - z2.as_complex()).norm() / (alpha * alpha),
            "Lipschitz bound failed",
        )?;
    }
    Ok("magnitude and Lipschitz bounds on 2000 cases".into())
}

fn fixed_point_invariants(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 4);
    let opts = SolverOptions::default();
    for _ in 0..500 {
        let n = rng.gen_range(1..40);
        let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let m = WeightedAtomMeasure::uniform(atoms).map_err(|e| e.to_string())?;
        let t: f64 = rng.gen_range(0.1..3.0);
        let z = UpperHalfPoint::new(
            rng.gen_range(-8.0..8.0),
            2.0 * t.sqrt() + rng.gen_range(0.05..2.0),
        )
        .map_err(|e| e.to_string())?;
        let r = solve_empirical(&m, &z, t, &opts).map_err(|e| e.to_string())?;
        ensure(r.w.im >= z.im() / 2.0, "half-plane bound failed")?;
        ensure((r.w - z.as_complex()).norm() <= t.sqrt(), "ball bound failed")?;
        ensure(r.residual <= 1e-10, "residual too large")?;
    }
    Ok("both fixed-point bounds exact on 500 solves".into())
}

fn fixed_point_uniqueness(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 5);
    let atoms: Vec<f64> = (0..30).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let m = WeightedAtomMeasure::uniform(atoms).map_err(|e| e.to_string())?;
    let z = Complex64::new(0.3, 2.4);
    let t = 1.0;
    let tol = 1e-12;
    let mut limits = Vec::new();
    for _ in 0..20 {
        let mut w = Complex64::new(rng.gen_range(-4.0..4.0), z.im / 2.0 + rng.gen_range(0.01..4.0));
        for _ in 0..100_000 {
            let next = empirical_map_step(&m, z, t, w);
            let step = (next - w).norm();
            w = next;
            if step <= tol {
                break;
            }
        }
        limits.push(w);
    }
    for w in &limits {
        ensure(
            (w - limits[0]).norm() <= 10.0 * tol,
            format!("distinct limits {} vs {}", w, limits[0]),
        )?;
    }
    Ok("20 admissible starts share one limit".into())
}

fn solver_cross_agreement(seed: u64) -> Check {
    // The empirical fixed point also solves the oracle map driven by the
    // same empirical transform; both solvers must land on the same point.
    let mut rng = stream_rng(seed, 6);
    let atoms: Vec<f64> = (0..500).map(|_| rng.gen_range(-2.5..2.5)).collect();
    let m = WeightedAtomMeasure::uniform(atoms).map_err(|e| e.to_string())?;
    let z = UpperHalfPoint::new(0.0, 3.0).map_err(|e| e.to_string())?;
    let t = 1.0;
    let opts = SolverOptions::default();
    let emp = solve_empirical(&m, &z, t, &opts).map_err(|e| e.to_string())?;
    let orc = solve_oracle(|w| m.cauchy_raw(w), &z, t, &opts).map_err(|e| e.to_string())?;
    ensure(
        (emp.w - orc.w).norm() <= 1e-9,
        format!("solvers disagree: {} vs {}", emp.w, orc.w),
    )?;
    Ok(format!("|empirical - oracle| = {:.2e}", (emp.w - orc.w).norm()))
}

fn recovery_oracle_chain() -> Check {
    let t = 1.0;
    let opts = SolverOptions::default();
    // Point mass at zero: w = z + t/z.
    let z = UpperHalfPoint::new(0.0, 3.0).map_err(|e| e.to_string())?;
    let r = solve_oracle(
        |w| crate::transforms::semicircle_cauchy_raw(w, t),
        &z,
        t,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (r.w - Complex64::new(0.0, 3.0 - 1.0 / 3.0)).norm() <= 1e-10,
        "delta_0 fixed point off",
    )?;
    // Cauchy(5): recovered transform equals 1/(z + 5i).
    for x in [-10.0, 0.0, 10.0] {
        let z = UpperHalfPoint::new(x, 2.01).map_err(|e| e.to_string())?;
        let r = solve_oracle(
            |w| crate::transforms::semicircle_cauchy_raw(w + Complex64::new(0.0, 5.0), t),
            &z,
            t,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let rec = crate::subordination::recover_initial_transform(&r);
        let expect = cauchy_law_transform(&z, 5.0);
        ensure(
            (rec - expect).norm() <= 1e-6,
            format!("recovery off at x = {x}"),
        )?;
    }
    Ok("delta and Cauchy recovery chains hold".into())
}

fn simulator_determinism(seed: u64) -> Check {
    let law = InitialLaw::Cauchy { scale: 5.0 };
    let s1 = simulate_dyson_matrix(&law, 200, 1.0, stream_seed(seed, 7)).map_err(|e| e.to_string())?;
    let s2 = simulate_dyson_matrix(&law, 200, 1.0, stream_seed(seed, 7)).map_err(|e| e.to_string())?;
    ensure(s1.eigenvalues == s2.eigenvalues, "eigenvalues differ")?;
    ensure(s1.initial_values == s2.initial_values, "draws differ")?;
    ensure(s1.eta_star == s2.eta_star, "eta differs")?;
    Ok("bit-identical resimulation at n = 200".into())
}

fn simulator_interlacing(seed: u64) -> Check {
    for k in 0..10 {
        let s = simulate_dyson_matrix(
            &InitialLaw::Gaussian { sd: 1.5 },
            150,
            0.7,
            stream_seed(seed, 100 + k),
        )
        .map_err(|e| e.to_string())?;
        s.validate_interlacing().map_err(|e| e.to_string())?;
        ensure(
            s.eigenvalues.windows(2).all(|w| w[0] <= w[1]),
            "spectrum not sorted",
        )?;
    }
    Ok("interlacing exact on 10 samples at n = 150".into())
}

fn heat_reduction(seed: u64) -> Check {
    let t = 1.0;
    let law = InitialLaw::PointMass { center: 0.0 };
    let reps = 2000;
    let mut vals: Vec<f64> = (0..reps)
        .map(|r| {
            simulate_dyson_matrix(&law, 1, t, stream_seed(seed, 200 + r as u64))
                .map(|s| s.eigenvalues[0])
        })
        .collect::<crate::error::Result<_>>()
        .map_err(|e| e.to_string())?;
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = ks_statistic(&vals, |x| {
        0.5 * libm::erfc(-x / (t.sqrt() * std::f64::consts::SQRT_2))
    });
    let crit = ks_critical(0.001, reps);
    ensure(d < crit, format!("KS = {d:.4} >= {crit:.4}"))?;
    Ok(format!("KS = {d:.4} < {crit:.4} on {reps} replicates"))
}

fn sde_matrix_agreement(seed: u64) -> Check {
    let n = 30;
    let t = 0.5;
    let points: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
    let law = InitialLaw::Deterministic { points };
    let reps = 20u64;
    let mut pool_m = Vec::new();
    let mut pool_s = Vec::new();
    for r in 0..reps {
        pool_m.extend(
            simulate_dyson_matrix(&law, n, t, stream_seed(seed, 300 + r))
                .map_err(|e| e.to_string())?
                .eigenvalues,
        );
        pool_s.extend(
            simulate_dyson_sde(&law, n, t, 20_000, stream_seed(seed, 400 + r))
                .map_err(|e| e.to_string())?
                .eigenvalues,
        );
    }
    let w1 = wasserstein1(&pool_m, &pool_s);
    ensure(w1 <= 0.2, format!("W1 = {w1:.3}"))?;
    Ok(format!("pooled W1 = {w1:.3} over {reps} replicates"))
}

fn fourier_closed_forms() -> Check {
    let sg = SpatialGrid::new(-2.0, 2.0, 4001).map_err(|e| e.to_string())?;
    let f: Vec<f64> = sg
        .points()
        .iter()
        .map(|x| if x.abs() <= 1.0 { 1.0 } else { 0.0 })
        .collect();
    ensure(
        (riemann_fourier(&f, &sg, 0.0) - Complex64::new(2.0, 0.0)).norm() <= 2e-3,
        "indicator transform at 0",
    )?;
    ensure(
        riemann_fourier(&f, &sg, std::f64::consts::PI).norm() <= 2e-3,
        "indicator transform at pi",
    )?;
    ensure(kernel_ft(&Kernel::Sinc, 0.5) == 1.0, "kernel interior")?;
    ensure(kernel_ft(&Kernel::Sinc, 1.0) == 1.0, "kernel boundary")?;
    ensure(kernel_ft(&Kernel::Sinc, 1.5) == 0.0, "kernel exterior")?;
    Ok("indicator transforms and kernel conventions hold".into())
}

fn estimator_symmetry_cutoff() -> Check {
    let atoms = vec![-1.5, -0.4, 0.4, 1.5];
    let m = WeightedAtomMeasure::uniform(atoms).map_err(|e| e.to_string())?;
    let cfg = DeconvConfig {
        gamma: 2.01,
        t: 1.0,
        spatial: SpatialGrid::new(-8.0, 8.0, 161).map_err(|e| e.to_string())?,
        frequency: FrequencyGrid::new(2.0, 401).map_err(|e| e.to_string())?,
        kernel: Kernel::Sinc,
        solver: SolverOptions::with_acceleration(Acceleration::Newton),
    };
    let est = estimate_p0(&m, 0.8, &cfg).map_err(|e| e.to_string())?;
    let mm = est.values.len();
    for j in 0..mm / 2 {
        ensure(
            (est.values[j] - est.values[mm - 1 - j]).abs() <= 1e-10,
            format!("asymmetry at index {j}"),
        )?;
    }
    let wide = DeconvConfig {
        frequency: FrequencyGrid::new(3.0, 601).map_err(|e| e.to_string())?,
        ..cfg.clone()
    };
    let est2 = estimate_p0(&m, 0.8, &wide).map_err(|e| e.to_string())?;
    for (a, b) in est.values.iter().zip(&est2.values) {
        ensure((a - b).abs() <= 1e-10, "cutoff invariance failed")?;
    }
    ensure(
        est.max_im_residual <= 0.1 * est.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        "imaginary residue too large",
    )?;
    Ok("symmetry, cutoff invariance, imaginary residue bounded".into())
}

fn bandwidth_recursions() -> Check {
    fn tuples(c: &[f64], m: usize, q: usize) -> f64 {
        if m == 1 {
            return c[q];
        }
        (0..=q).map(|p| c[p] * tuples(c, m - 1, q - p)).sum()
    }
    for (a, r, gamma) in [(1.0, 0.5, 2.01), (0.8, 0.75, 1.4), (1.0, 2.0, 2.01), (1.3, 3.0, 1.1)] {
        let k = expansion_order(r).min(4);
        let (front, pow, c) = if r < 1.0 {
            (2.0 * a / (2.0f64 * gamma).powf(r), r, bstar_coefficients(a, r, gamma, k))
        } else {
            (
                2.0 * gamma / (2.0f64 * a).powf(1.0 / r),
                1.0 / r,
                dstar_coefficients(a, r, gamma, k),
            )
        };
        for i in 0..=k {
            let m_i = if i == 0 {
                c[0] + front
            } else {
                let mut acc = 0.0;
                let mut falling = 1.0;
                let mut fact = 1.0;
                for j in 0..i {
                    falling *= pow - j as f64;
                    fact *= (j + 1) as f64;
                    acc += falling / fact * tuples(&c, j + 1, i - j - 1);
                }
                c[i] + front * acc
            };
            ensure(
                m_i.abs() <= 1e-10,
                format!("M_{i} = {m_i} at (a,r,gamma)=({a},{r},{gamma})"),
            )?;
        }
    }
    let sc = SmoothnessClass::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let h = theoretical_bandwidth(&sc, 2.01, 4000).map_err(|e| e.to_string())?;
    ensure((h - 0.72582).abs() <= 1e-5, format!("r=1 bandwidth {h}"))?;
    Ok("coefficient recursions kill every residual".into())
}

fn cv_determinism(seed: u64) -> Check {
    let law = InitialLaw::Cauchy { scale: 5.0 };
    let sample =
        simulate_dyson_matrix(&law, 80, 1.0, stream_seed(seed, 8)).map_err(|e| e.to_string())?;
    let cv = CVConfig {
        bandwidths: equispaced(0.5, 2.0, 5),
        partitions: 3,
        seed: stream_seed(seed, 9),
    };
    let cfg = DeconvConfig {
        gamma: 2.01,
        t: 1.0,
        spatial: SpatialGrid::new(-12.0, 12.0, 121).map_err(|e| e.to_string())?,
        frequency: FrequencyGrid::new(2.0, 201).map_err(|e| e.to_string())?,
        kernel: Kernel::Sinc,
        solver: SolverOptions::with_acceleration(Acceleration::Newton),
    };
    let r1 = cv_select(&sample, &cv, &cfg).map_err(|e| e.to_string())?;
    let r2 = cv_select(&sample, &cv, &cfg).map_err(|e| e.to_string())?;
    ensure(r1.criterion == r2.criterion, "criterion differs")?;
    ensure(r1.selected_index == r2.selected_index, "selection differs")?;
    ensure(
        r1.criterion[r1.selected_index] <= r1.criterion.iter().cloned().fold(f64::INFINITY, f64::min) + 0.0,
        "selected is not the argmin",
    )?;
    Ok(format!("selected h = {} twice", r1.selected))
}

fn criterion_identity(seed: u64) -> Check {
    let law = InitialLaw::Cauchy { scale: 5.0 };
    let sample =
        simulate_dyson_matrix(&law, 60, 1.0, stream_seed(seed, 10)).map_err(|e| e.to_string())?;
    let cfg = DeconvConfig {
        gamma: 2.01,
        t: 1.0,
        spatial: SpatialGrid::new(-12.0, 12.0, 121).map_err(|e| e.to_string())?,
        frequency: FrequencyGrid::new(2.0, 201).map_err(|e| e.to_string())?,
        kernel: Kernel::Sinc,
        solver: SolverOptions::with_acceleration(Acceleration::Newton),
    };
    let p0 = |x: f64| law.density(x).unwrap();
    let h = 0.9;
    let j = oracle_j(&sample, h, p0, &cfg).map_err(|e| e.to_string())?;
    let est = estimate_p0(&sample.empirical_measure(), h, &cfg).map_err(|e| e.to_string())?;
    let ise_v = ise(&est, p0);
    let truth: Vec<f64> = cfg.spatial.points().iter().map(|&x| p0(x)).collect();
    let p0n = norm_sq(&truth, &cfg.spatial);
    ensure(
        (j + p0n - ise_v).abs() <= 1e-8,
        format!("identity residual {}", j + p0n - ise_v),
    )?;
    // Inner-product symmetry sanity.
    let ip1 = inner_product(&est.values, &truth, &cfg.spatial);
    let ip2 = inner_product(&truth, &est.values, &cfg.spatial);
    ensure((ip1 - ip2).abs() <= 1e-14, "inner product asymmetry")?;
    Ok("J + ||p0||^2 = ISE to 1e-8".into())
}
