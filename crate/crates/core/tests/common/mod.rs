//! Shared oracles and benchmark configurations for the integration tests.
//!
//! The quadrature/finite-difference oracles here evaluate the defining
//! integrals numerically and never touch the closed forms they are used to
//! check.

#![allow(dead_code)]

use ndarray::Array2;

use doobgen_core::mixture::{sample_target, MixtureTarget};
use doobgen_core::rng::stream_rng;
use doobgen_core::scalar::Scalar;
use doobgen_core::schedule::{NoiseSchedule, ProcessSpec};
use doobgen_core::spectral::{matern_spectrum, CovarianceSpectrum, FieldCoefficients};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Composite Simpson in log space: returns log ∫ exp(logf(y)) dy over
/// [lo, hi] with n odd nodes.
pub fn log_simpson<F: Fn(f64) -> f64>(logf: F, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n % 2 == 1 && n >= 3);
    let h = (hi - lo) / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| logf(lo + i as f64 * h)).collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (v - max).exp();
    }
    max + (acc * h / 3.0).ln()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Numerically evaluate log h(t,x) for the mixture target straight from its
/// defining integral ∫ p(t,x;T,y)/p_T(y) dμ(y): per coordinate a 1-D
/// quadrature of N(y; u_j(T,t)·x_j, q_j(T,t))·N(y; ±u_j, c_j)/N(y; 0, c_j),
/// then a log-sum over the two mixture components.
pub fn oracle_log_h(
    target: &MixtureTarget<f64>,
    spec: &ProcessSpec<f64>,
    t: f64,
    x: &[f64],
) -> f64 {
    let horizon = spec.horizon();
    let d = spec.dim();
    let mut log_components = Vec::with_capacity(2);
    for sign in [1.0f64, -1.0] {
        let mut log_prod = 0.0;
        for j in 0..d {
            let m = spec.evolution_factor(j, t, horizon).unwrap();
            let v = spec.transition_variance(j, t, horizon).unwrap();
            let c = spec.spectrum().eigenvalue(j);
            let w = sign * target.mean().coeffs[j];
            // log integrand of ∫ N(y; m·x_j, v)·exp(w·y/c − w²/(2c)) dy.
            let center = m * x[j] + v * w / c;
            let half_width = 16.0 * v.sqrt().max(1e-12);
            let logf = |y: f64| {
                -0.5 * (TWO_PI * v).ln() - (y - m * x[j]).powi(2) / (2.0 * v) + w * y / c
                    - w * w / (2.0 * c)
            };
            log_prod += log_simpson(logf, center - half_width, center + half_width, 8001);
        }
        let weight = if sign > 0.0 {
            target.alpha()
        } else {
            1.0 - target.alpha()
        };
        let log_w = if weight > 0.0 {
            weight.ln()
        } else {
            f64::NEG_INFINITY
        };
        log_components.push(log_w + log_prod);
    }
    log_sum_exp(log_components[0], log_components[1])
}

/// Central finite differences of [`oracle_log_h`] in every coordinate.
pub fn oracle_steering_fd(
    target: &MixtureTarget<f64>,
    spec: &ProcessSpec<f64>,
    t: f64,
    x: &[f64],
    eps: f64,
) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut plus = x.to_vec();
            plus[j] += eps;
            let mut minus = x.to_vec();
            minus[j] -= eps;
            (oracle_log_h(target, spec, t, &plus) - oracle_log_h(target, spec, t, &minus))
                / (2.0 * eps)
        })
        .collect()
}

/// log p(t, x; T, y) assembled from the per-coordinate Gaussian
/// log-densities N(y_j; u_j·x_j, q_j).
pub fn oracle_log_transition(
    spec: &ProcessSpec<f64>,
    x: &[f64],
    t: f64,
    y: &[f64],
) -> f64 {
    let horizon = spec.horizon();
    (0..spec.dim())
        .map(|j| {
            let u = spec.evolution_factor(j, t, horizon).unwrap();
            let q = spec.transition_variance(j, t, horizon).unwrap();
            -0.5 * (TWO_PI * q).ln() - (y[j] - u * x[j]).powi(2) / (2.0 * q)
        })
        .sum()
}

/// Relative error between two vectors in the Euclidean norm.
pub fn vector_rel_err(approx: &[f64], truth: &[f64]) -> f64 {
    let diff: f64 = approx
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Desk-scale covariance spectrum of the generation benchmarks: Matérn-type
/// plateau with σ₀² = 1000 and ρ₀ = 0.005 but ν₀ = 0.5, giving near-uniform
/// eigenvalues c_j ≈ 0.02-0.025 for j ≤ 32. With γ = 1 the drift diagonal
/// a_j = ½c_j⁻¹ ≈ 20-25 is uniform, so (i) the per-step stiffness
/// a_j·β·Δt ≲ 0.2 on a 250-step grid over T = 0.2 and (ii) after
/// ∫β = 2 the reweighted initial law is numerically indistinguishable from
/// N(0,C) and a short Langevin phase suffices.
pub fn desk_spectrum(dim: usize) -> CovarianceSpectrum<f64> {
    matern_spectrum(dim, 1000.0, 0.005, 0.5).unwrap()
}

/// Mixture benchmark: α = 0.1, smooth-bump mean fixed at 16 modes (zero
/// beyond), desk spectrum at the requested resolution. Keeping the mean
/// fixed makes the target the same function-space measure at every D, which
/// is what the dimension-robustness checks vary.
pub fn desk_target(dim: usize) -> MixtureTarget<f64> {
    assert!(dim >= 16);
    let mut mean = doobgen_core::mixture::bump_mean_coefficients::<f64>(16)
        .unwrap()
        .coeffs;
    mean.resize(dim, 0.0);
    MixtureTarget::new(
        0.1,
        FieldCoefficients::new(mean).unwrap(),
        desk_spectrum(dim),
    )
    .unwrap()
}

/// Spectrum with O(1) leading eigenvalues: after a short horizon the
/// reweighted initial law differs visibly from N(0,C), which is what the
/// Langevin-refinement checks need.
pub fn mismatch_spectrum(dim: usize) -> CovarianceSpectrum<f64> {
    matern_spectrum(dim, 400.0, 0.05, 0.5).unwrap()
}

pub fn mismatch_target(dim: usize) -> MixtureTarget<f64> {
    MixtureTarget::smooth_bump(0.1, mismatch_spectrum(dim)).unwrap()
}

/// Constant noise rate β = 10.
pub fn fcn_schedule(horizon: f64) -> NoiseSchedule<f64> {
    NoiseSchedule::constant(10.0, horizon).unwrap()
}

/// Time-reversed linear schedule β̃(t) = β₀ + (1 − t/T)(β₁ − β₀) with
/// β₀ = 0.1, β₁ = 20.
pub fn fns_schedule(horizon: f64) -> NoiseSchedule<f64> {
    NoiseSchedule::linear(0.1, 20.0, horizon).unwrap().reversed()
}

pub fn desk_process(dim: usize, schedule: NoiseSchedule<f64>) -> ProcessSpec<f64> {
    ProcessSpec::new(desk_spectrum(dim), schedule, 1.0).unwrap()
}

/// N i.i.d. target draws as a sample matrix.
pub fn target_matrix(target: &MixtureTarget<f64>, n: usize, seed: u64) -> Array2<f64> {
    let d = target.spectrum().dim();
    let mut m = Array2::zeros((n, d));
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let x = sample_target(target, &mut rng);
        for j in 0..d {
            m[(i, j)] = x.coeffs[j];
        }
    }
    m
}

/// Small calibrated target for the martingale/harmonicity Monte-Carlo
/// checks: Var h(t, X_t) stays ≲ 0.5 so 4 standard errors at 10^5 samples
/// are below 1%.
pub fn calibration_target() -> (MixtureTarget<f64>, ProcessSpec<f64>) {
    let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0, 0.5, 0.25]).unwrap();
    let mean = FieldCoefficients::new(vec![0.6, 0.3, 0.15]).unwrap();
    let target = MixtureTarget::new(0.3, mean, spectrum.clone()).unwrap();
    let schedule = NoiseSchedule::constant(1.0, 1.0).unwrap();
    let spec = ProcessSpec::new(spectrum, schedule, 1.0).unwrap();
    (target, spec)
}

/// Self-normalised importance-sampling estimate of a statistic under
/// dμ₀ʰ ∝ h(0,x)·dN(0,C): returns (estimate, standard error).
pub fn importance_mode_weight(
    target: &MixtureTarget<f64>,
    spec: &ProcessSpec<f64>,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    use doobgen_core::mixture::log_h_value;
    use doobgen_core::spectral::sample_gaussian;
    let mut weights = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut max_log = f64::NEG_INFINITY;
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let x = sample_gaussian(spec.spectrum(), &mut rng);
        let lw = log_h_value(target, spec, 0.0, &x).unwrap();
        max_log = max_log.max(lw);
        logs.push(lw);
        let dot: f64 = x
            .coeffs
            .iter()
            .zip(&target.mean().coeffs)
            .map(|(&a, &b)| a * b)
            .sum();
        values.push(if dot > 0.0 { 1.0 } else { 0.0 });
    }
    let mut total = 0.0;
    for lw in &logs {
        weights.push((lw - max_log).exp());
        total += weights.last().unwrap();
    }
    let estimate: f64 = weights
        .iter()
        .zip(&values)
        .map(|(w, v)| w * v)
        .sum::<f64>()
        / total;
    // Delta-method standard error of the self-normalised estimator.
    let se_sq: f64 = weights
        .iter()
        .zip(&values)
        .map(|(w, v)| {
            let wn = w / total;
            wn * wn * (v - estimate) * (v - estimate)
        })
        .sum();
    (estimate, se_sq.sqrt())
}

/// Mean and standard error of a slice of f64 values.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
