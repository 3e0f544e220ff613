//! Exact simulation of the VP-SPDE and of its conditioned bridge.
//!
//! All laws here are Gaussian and diagonal in the spectral basis, so paths,
//! transitions X_t | X_s and bridge points X_t | X_T = y are sampled exactly
//! coordinate-wise; no time stepping is involved. The closed-form
//! transition score feeds the score-matching targets.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedule::{NoiseSchedule, ProcessSpec};
use crate::spectral::{CovarianceSpectrum, FieldCoefficients};

/// A trajectory sampled at a strictly increasing set of times.
#[derive(Debug, Clone)]
pub struct PathSample<T> {
    pub times: Vec<T>,
    /// time × mode coefficient matrix.
    pub states: Array2<T>,
}

/// A bridge draw X_t | X_T = y together with its pinning data.
#[derive(Debug, Clone)]
pub struct BridgePoint<T> {
    pub t: T,
    pub x: FieldCoefficients<T>,
    pub y: FieldCoefficients<T>,
}

fn check_dim<T: Scalar>(spec: &ProcessSpec<T>, x: &FieldCoefficients<T>) -> Result<()> {
    if x.dim() != spec.dim() {
        return Err(Error::Shape(format!(
            "state dim {} != process dim {}",
            x.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Draw X_t | X_s = x, coordinate-wise N(u_j(t,s)·x_j, q_j(t,s)).
pub fn transition_sample<T: Scalar, R: Rng + ?Sized>(
    spec: &ProcessSpec<T>,
    x: &FieldCoefficients<T>,
    s: T,
    t: T,
    rng: &mut R,
) -> Result<FieldCoefficients<T>> {
    check_dim(spec, x)?;
    let u = spec.evolution_factors(s, t)?;
    let q = spec.transition_variances(s, t)?;
    let coeffs = x
        .coeffs
        .iter()
        .zip(u.iter().zip(&q))
        .map(|(&xj, (&uj, &qj))| uj * xj + qj.sqrt() * T::standard_normal(rng))
        .collect();
    Ok(FieldCoefficients { coeffs })
}

/// Exact Markov chain of transition samples at the requested times.
///
/// The initial state is taken at time 0; the first requested time may itself
/// be 0, in which case the path starts with `x0` verbatim.
pub fn forward_sample<T: Scalar, R: Rng + ?Sized>(
    spec: &ProcessSpec<T>,
    x0: &FieldCoefficients<T>,
    times: &[T],
    rng: &mut R,
) -> Result<PathSample<T>> {
    check_dim(spec, x0)?;
    if times.is_empty() {
        return Err(Error::Input("empty time grid".into()));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Input("times must be strictly increasing".into()));
        }
    }
    if times[0] < T::zero() || *times.last().unwrap() > spec.horizon() {
        return Err(Error::Input("times outside [0, T]".into()));
    }
    let d = spec.dim();
    let mut states = Array2::zeros((times.len(), d));
    let mut current = x0.clone();
    let mut s = T::zero();
    for (k, &t) in times.iter().enumerate() {
        if t > s {
            current = transition_sample(spec, &current, s, t, rng)?;
            s = t;
        }
        for (j, &v) in current.coeffs.iter().enumerate() {
            states[(k, j)] = v;
        }
    }
    Ok(PathSample {
        times: times.to_vec(),
        states,
    })
}

/// Draw the Ornstein-Uhlenbeck bridge point X_t | X_T = y under the
/// stationary initial law N(0,C):
/// x_j ~ N(u_j(T,t)·y_j, c_j·(1 − u_j(T,t)²)).
pub fn bridge_sample<T: Scalar, R: Rng + ?Sized>(
    spec: &ProcessSpec<T>,
    y: &FieldCoefficients<T>,
    t: T,
    rng: &mut R,
) -> Result<BridgePoint<T>> {
    check_dim(spec, y)?;
    if t < T::zero() || t > spec.horizon() {
        return Err(Error::Domain(format!(
            "bridge time {t} outside [0, {}]",
            spec.horizon()
        )));
    }
    let u = spec.evolution_factors(t, spec.horizon())?;
    let q = spec.transition_variances(t, spec.horizon())?;
    let coeffs = y
        .coeffs
        .iter()
        .zip(u.iter().zip(&q))
        .map(|(&yj, (&uj, &qj))| uj * yj + qj.sqrt() * T::standard_normal(rng))
        .collect();
    Ok(BridgePoint {
        t,
        x: FieldCoefficients { coeffs },
        y: y.clone(),
    })
}

/// Tolerance below which t is considered to sit on the terminal singularity.
const SCORE_TIME_GUARD: f64 = 1e-9;

/// Closed-form transition score D_x log p(t, x; T, y), component-wise
/// u_j·(y_j − u_j·x_j) / q_j with u_j = u_j(T,t), q_j = q_j(T,t).
///
/// Rejected within 1e-9 of T where the transition variance degenerates.
pub fn transition_score<T: Scalar>(
    spec: &ProcessSpec<T>,
    x: &FieldCoefficients<T>,
    t: T,
    y: &FieldCoefficients<T>,
) -> Result<FieldCoefficients<T>> {
    check_dim(spec, x)?;
    check_dim(spec, y)?;
    if spec.horizon() - t < T::of(SCORE_TIME_GUARD) {
        return Err(Error::Singular(format!(
            "transition score at t = {t} too close to T = {}",
            spec.horizon()
        )));
    }
    let u = spec.evolution_factors(t, spec.horizon())?;
    let q = spec.transition_variances(t, spec.horizon())?;
    let coeffs = x
        .coeffs
        .iter()
        .zip(y.coeffs.iter())
        .zip(u.iter().zip(&q))
        .map(|((&xj, &yj), (&uj, &qj))| uj * (yj - uj * xj) / qj)
        .collect();
    FieldCoefficients::new(coeffs)
}

/// One ε-step of the mollifying equation
/// dY = −½C^{-γ} Y dt + √(C^{1-γ}) dW on [0, ε] (unit noise rate),
/// regularising targets supported on the Cameron-Martin space.
pub fn mollify<T: Scalar, R: Rng + ?Sized>(
    spectrum: &CovarianceSpectrum<T>,
    gamma: T,
    epsilon: T,
    y0: &FieldCoefficients<T>,
    rng: &mut R,
) -> Result<FieldCoefficients<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::Parameter(format!(
            "mollifier horizon epsilon = {epsilon} must be positive"
        )));
    }
    let schedule = NoiseSchedule::constant(T::one(), epsilon)?;
    let spec = ProcessSpec::new(spectrum.clone(), schedule, gamma)?;
    transition_sample(&spec, y0, T::zero(), epsilon, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::root_rng;
    use crate::schedule::NoiseSchedule;
    use crate::spectral::sample_gaussian;
    use approx::assert_relative_eq;

    fn unit_spec(horizon: f64) -> ProcessSpec<f64> {
        ProcessSpec::new(
            CovarianceSpectrum::from_eigenvalues(vec![1.0f64]).unwrap(),
            NoiseSchedule::constant(1.0, horizon).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_length_transition_is_identity() {
        let spec = unit_spec(2.0);
        let x = FieldCoefficients::new(vec![1.25]).unwrap();
        let mut rng = root_rng(0);
        let out = transition_sample(&spec, &x, 0.7, 0.7, &mut rng).unwrap();
        assert_eq!(out.coeffs, x.coeffs);
    }

    #[test]
    fn transition_variance_monte_carlo() {
        let spec = unit_spec(2.0);
        let x = FieldCoefficients::new(vec![0.0]).unwrap();
        let mut rng = root_rng(11);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let out = transition_sample(&spec, &x, 0.0, 1.0, &mut rng).unwrap();
            acc += out.coeffs[0] * out.coeffs[0];
        }
        let var = acc / n as f64;
        let expected = 1.0 - (-1.0f64).exp();
        assert!((var - expected).abs() < 0.02 * expected, "var {var}");
    }

    #[test]
    fn long_transition_reaches_stationarity() {
        let spec = ProcessSpec::new(
            CovarianceSpectrum::from_eigenvalues(vec![0.5f64]).unwrap(),
            NoiseSchedule::constant(700.0, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        let x = FieldCoefficients::new(vec![5.0]).unwrap();
        let mut rng = root_rng(12);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let out = transition_sample(&spec, &x, 0.0, 1.0, &mut rng).unwrap();
            acc += out.coeffs[0] * out.coeffs[0];
        }
        let var = acc / n as f64;
        assert!((var - 0.5).abs() < 0.02 * 0.5, "var {var}");
    }

    #[test]
    fn degenerate_path_at_time_zero() {
        let spec = unit_spec(1.0);
        let x0 = FieldCoefficients::new(vec![3.0]).unwrap();
        let mut rng = root_rng(1);
        let path = forward_sample(&spec, &x0, &[0.0], &mut rng).unwrap();
        assert_eq!(path.states[(0, 0)], 3.0);
    }

    #[test]
    fn forward_rejects_unsorted_times() {
        let spec = unit_spec(1.0);
        let x0 = FieldCoefficients::new(vec![0.0]).unwrap();
        let mut rng = root_rng(1);
        assert!(forward_sample(&spec, &x0, &[0.5, 0.2], &mut rng).is_err());
        assert!(forward_sample(&spec, &x0, &[0.2, 0.2], &mut rng).is_err());
        assert!(forward_sample(&spec, &x0, &[0.2, 1.5], &mut rng).is_err());
        assert!(forward_sample(&spec, &x0, &[], &mut rng).is_err());
    }

    #[test]
    fn stationary_marginals_are_preserved() {
        // X_0 ~ N(0,C) stays N(0,C) at every time for any schedule.
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![2.0, 0.5]).unwrap();
        let schedule = NoiseSchedule::linear(0.1, 20.0, 1.0).unwrap();
        let spec = ProcessSpec::new(spectrum.clone(), schedule, 0.5).unwrap();
        let mut rng = root_rng(21);
        let n = 10_000;
        let times = [0.25, 1.0];
        let mut acc = [[0.0f64; 2]; 2];
        for _ in 0..n {
            let x0 = sample_gaussian(&spectrum, &mut rng);
            let path = forward_sample(&spec, &x0, &times, &mut rng).unwrap();
            for (ti, _) in times.iter().enumerate() {
                for j in 0..2 {
                    acc[ti][j] += path.states[(ti, j)] * path.states[(ti, j)];
                }
            }
        }
        for ti in 0..2 {
            for j in 0..2 {
                let var = acc[ti][j] / n as f64;
                let c = spectrum.eigenvalue(j);
                assert!((var - c).abs() < 0.03 * c, "var {var} vs {c}");
            }
        }
    }

    #[test]
    fn bridge_pins_endpoint() {
        let spec = unit_spec(1.0);
        let y = FieldCoefficients::new(vec![-0.75]).unwrap();
        let mut rng = root_rng(2);
        let b = bridge_sample(&spec, &y, 1.0, &mut rng).unwrap();
        assert_eq!(b.x.coeffs, y.coeffs);
    }

    #[test]
    fn bridge_decorrelates_far_from_endpoint() {
        let spec = ProcessSpec::new(
            CovarianceSpectrum::from_eigenvalues(vec![1.0f64]).unwrap(),
            NoiseSchedule::constant(700.0, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        let y = FieldCoefficients::new(vec![50.0]).unwrap();
        let mut rng = root_rng(3);
        let n = 100_000;
        let (mut mean, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let b = bridge_sample(&spec, &y, 0.0, &mut rng).unwrap();
            mean += b.x.coeffs[0];
            sq += b.x.coeffs[0] * b.x.coeffs[0];
        }
        mean /= n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn bridge_moments_match_closed_form() {
        // c = 1, γ = 1, β = 1, T = 1, t = 0, y = 2:
        // mean = 2e^{-1/2} ≈ 1.2131, var = 1 − e^{-1} ≈ 0.63212.
        let spec = unit_spec(1.0);
        let y = FieldCoefficients::new(vec![2.0]).unwrap();
        let mut rng = root_rng(4);
        let n = 100_000;
        let (mut mean, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let b = bridge_sample(&spec, &y, 0.0, &mut rng).unwrap();
            mean += b.x.coeffs[0];
            sq += b.x.coeffs[0] * b.x.coeffs[0];
        }
        mean /= n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean - 1.2130613194252668).abs() < 0.02 * 1.2131, "mean {mean}");
        assert!((var - 0.6321205588285577).abs() < 0.02 * 0.63212, "var {var}");
    }

    #[test]
    fn score_vanishes_at_conditional_mean() {
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0, 0.25]).unwrap();
        let schedule = NoiseSchedule::constant(1.0, 1.0).unwrap();
        let spec = ProcessSpec::new(spectrum, schedule, 1.0).unwrap();
        let x = FieldCoefficients::new(vec![0.4f64, -1.1]).unwrap();
        let u = spec.evolution_factors(0.3, 1.0).unwrap();
        let y = FieldCoefficients::new(
            x.coeffs.iter().zip(&u).map(|(&xj, &uj)| uj * xj).collect(),
        )
        .unwrap();
        let s = transition_score(&spec, &x, 0.3, &y).unwrap();
        for v in s.coeffs {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn score_closed_form_value() {
        let spec = unit_spec(1.0);
        let x = FieldCoefficients::new(vec![0.0]).unwrap();
        let y = FieldCoefficients::new(vec![1.0]).unwrap();
        let s = transition_score(&spec, &x, 0.0, &y).unwrap();
        assert_relative_eq!(s.coeffs[0], 0.9595173756674719, max_relative = 1e-12);
    }

    #[test]
    fn score_rejects_terminal_time() {
        let spec = unit_spec(1.0);
        let x = FieldCoefficients::new(vec![0.0]).unwrap();
        assert!(transition_score(&spec, &x, 1.0, &x).is_err());
        assert!(transition_score(&spec, &x, 1.0 - 1e-12, &x).is_err());
        assert!(transition_score(&spec, &x, 1.0 - 1e-6, &x).is_ok());
    }

    #[test]
    fn mollifier_near_identity_for_tiny_epsilon() {
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0, 0.5]).unwrap();
        let y0 = FieldCoefficients::new(vec![0.7f64, -0.2]).unwrap();
        let mut rng = root_rng(5);
        let out = mollify(&spectrum, 1.0, 1e-12, &y0, &mut rng).unwrap();
        for (a, b) in out.coeffs.iter().zip(&y0.coeffs) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn mollifier_rejects_nonpositive_epsilon() {
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0f64]).unwrap();
        let y0 = FieldCoefficients::new(vec![0.0]).unwrap();
        let mut rng = root_rng(6);
        assert!(mollify(&spectrum, 1.0, 0.0, &y0, &mut rng).is_err());
        assert!(mollify(&spectrum, 1.0, -1.0, &y0, &mut rng).is_err());
    }

    #[test]
    fn mollifier_unit_variance_case() {
        // c = 1, γ = 1, ε = 1: Var = 1 − e^{-2·0.5·1} = 1 − e^{-1}.
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![1.0f64]).unwrap();
        let y0 = FieldCoefficients::new(vec![0.0]).unwrap();
        let mut rng = root_rng(7);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let out = mollify(&spectrum, 1.0, 1.0, &y0, &mut rng).unwrap();
            acc += out.coeffs[0] * out.coeffs[0];
        }
        let var = acc / n as f64;
        let expected = 1.0 - (-1.0f64).exp();
        assert!((var - expected).abs() < 0.02 * expected, "var {var}");
    }

    #[test]
    fn mollified_variance_ratio_strictly_inside_unit_interval() {
        let spectrum = CovarianceSpectrum::from_eigenvalues(vec![2.0, 1.0, 0.5]).unwrap();
        let schedule = NoiseSchedule::constant(1.0, 0.01).unwrap();
        let spec = ProcessSpec::new(spectrum.clone(), schedule, 1.0).unwrap();
        let q = spec.transition_variances(0.0, 0.01).unwrap();
        for (j, &qj) in q.iter().enumerate() {
            let ratio = qj / spectrum.eigenvalue(j);
            assert!(ratio > 0.0 && ratio < 1.0, "ratio {ratio}");
        }
    }
}
