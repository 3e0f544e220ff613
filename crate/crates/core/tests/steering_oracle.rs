//! Oracle agreement for the closed-form h-transform quantities: the
//! steering function, initial score and h-values are checked against direct
//! quadrature of the defining integral plus central finite differences.

mod common;

use common::{oracle_log_h, oracle_steering_fd, vector_rel_err};
use doobgen_core::mixture::{
    h_value, initial_score, log_h_value, steering, MixtureTarget,
};
use doobgen_core::rng::stream_rng;
use doobgen_core::scalar::Scalar;
use doobgen_core::schedule::{NoiseSchedule, ProcessSpec};
use doobgen_core::spectral::{sample_gaussian, CovarianceSpectrum, FieldCoefficients};

fn oracle_benchmark(dim: usize) -> (MixtureTarget<f64>, ProcessSpec<f64>) {
    let spectrum = CovarianceSpectrum::from_eigenvalues(
        (1..=dim).map(|j| 1.2 / (j * j) as f64).collect(),
    )
    .unwrap();
    let mean = FieldCoefficients::new(
        (1..=dim)
            .map(|j| if j % 2 == 0 { -0.9 / j as f64 } else { 1.1 / j as f64 })
            .collect(),
    )
    .unwrap();
    let target = MixtureTarget::new(0.3, mean, spectrum.clone()).unwrap();
    let schedule = NoiseSchedule::linear(0.1, 20.0, 1.0).unwrap();
    let spec = ProcessSpec::new(spectrum, schedule, 0.6).unwrap();
    (target, spec)
}

#[test]
fn log_h_matches_quadrature() {
    let (target, spec) = oracle_benchmark(4);
    for seed in 0..20u64 {
        let mut rng = stream_rng(800, seed);
        let x = sample_gaussian(target.spectrum(), &mut rng);
        let t = 0.9 * f64::uniform_01(&mut rng);
        let closed = log_h_value(&target, &spec, t, &x).unwrap();
        let quad = oracle_log_h(&target, &spec, t, &x.coeffs);
        assert!(
            (closed - quad).abs() < 1e-8 * closed.abs().max(1.0),
            "t = {t}: closed {closed} vs quadrature {quad}"
        );
    }
}

#[test]
fn single_gaussian_steering_matches_oracle_tightly() {
    // α = 1 degenerates to one component; agreement at 1e-8.
    let (target, spec) = oracle_benchmark(4);
    let single =
        MixtureTarget::new(1.0, target.mean().clone(), target.spectrum().clone()).unwrap();
    for seed in 0..10u64 {
        let mut rng = stream_rng(801, seed);
        let x = sample_gaussian(single.spectrum(), &mut rng);
        let t = 0.85 * f64::uniform_01(&mut rng);
        let closed = steering(&single, &spec, t, &x).unwrap();
        let fd = oracle_steering_fd(&single, &spec, t, &x.coeffs, 1e-5);
        let rel = vector_rel_err(&closed.coeffs, &fd);
        assert!(rel < 1e-8, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn mixture_steering_matches_oracle() {
    let (target, spec) = oracle_benchmark(4);
    for seed in 0..40u64 {
        let mut rng = stream_rng(802, seed);
        let x = sample_gaussian(target.spectrum(), &mut rng);
        let t = 0.9 * f64::uniform_01(&mut rng);
        let closed = steering(&target, &spec, t, &x).unwrap();
        let fd = oracle_steering_fd(&target, &spec, t, &x.coeffs, 1e-5);
        let rel = vector_rel_err(&closed.coeffs, &fd);
        assert!(rel < 1e-5, "seed {seed}, t {t}: rel err {rel}");
    }
}

#[test]
fn initial_score_matches_oracle() {
    let (target, spec) = oracle_benchmark(4);
    for seed in 0..20u64 {
        let mut rng = stream_rng(803, seed);
        let x = sample_gaussian(target.spectrum(), &mut rng);
        let closed = initial_score(&target, &spec, &x).unwrap();
        let fd = oracle_steering_fd(&target, &spec, 0.0, &x.coeffs, 1e-5);
        let rel = vector_rel_err(&closed.coeffs, &fd);
        assert!(rel < 1e-5, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn h_of_stationary_law_is_one() {
    // Target equal to the stationary law (u = 0): h ≡ 1 for any α and x.
    let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0f64, 0.25]).unwrap();
    let target = MixtureTarget::new(0.37, FieldCoefficients::zeros(2), spectrum.clone()).unwrap();
    let spec = ProcessSpec::new(
        spectrum,
        NoiseSchedule::constant(1.0, 1.0).unwrap(),
        1.0,
    )
    .unwrap();
    for seed in 0..10u64 {
        let mut rng = stream_rng(804, seed);
        let x = sample_gaussian(target.spectrum(), &mut rng);
        let h = h_value(&target, &spec, 0.4, &x).unwrap();
        assert!((h - 1.0).abs() < 1e-12, "h = {h}");
    }
}
