//! Tractable two-component Gaussian mixture target
//!     μ = α·N(u, C) + (1−α)·N(−u, C)
//! sharing the covariance C of the reference measure, together with the
//! closed form of its h-function and steering function under the VP-SPDE.
//!
//! Writing m_j(t) = u_j(T,t) for the evolution factor and
//! g_j(t) = m_j(t)·u_j/c_j, the per-coordinate Gaussian integrals of the
//! h-function collapse to
//!
//!   log h(t,x) = −b(t) + logsumexp(ln α + G, ln(1−α) − G),
//!   G(t,x)     = Σ_j g_j(t)·x_j,
//!   b(t)       = ½·Σ_j m_j(t)²·u_j²/c_j,
//!
//! and the steering function D_x log h becomes
//!
//!   s_j(t,x) = tanh(G(t,x) + ½·ln(α/(1−α)))·g_j(t).
//!
//! Everything runs in log space; component likelihood ratios would overflow
//! double precision for well-separated modes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedule::ProcessSpec;
use crate::spectral::{
    project_field, sample_gaussian, BasisGrid, CovarianceSpectrum, FieldCoefficients,
};

/// The mixture target: weight α on the +u component, covariance C on both.
#[derive(Debug, Clone)]
pub struct MixtureTarget<T> {
    alpha: T,
    mean: FieldCoefficients<T>,
    spectrum: CovarianceSpectrum<T>,
}

impl<T: Scalar> MixtureTarget<T> {
    /// Build a target from explicit mean coefficients. α = 1 is accepted as
    /// the degenerate single-Gaussian case.
    pub fn new(
        alpha: T,
        mean: FieldCoefficients<T>,
        spectrum: CovarianceSpectrum<T>,
    ) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::Parameter(format!("alpha = {alpha} outside (0, 1]")));
        }
        if mean.dim() != spectrum.dim() {
            return Err(Error::Shape(format!(
                "mean dim {} != spectrum dim {}",
                mean.dim(),
                spectrum.dim()
            )));
        }
        let cm_norm_sq: T = mean
            .coeffs
            .iter()
            .zip(spectrum.eigenvalues())
            .map(|(&u, &c)| u * u / c)
            .sum();
        if !cm_norm_sq.is_finite() {
            return Err(Error::NonFinite(
                "Cameron-Martin norm of the mean at truncation".into(),
            ));
        }
        Ok(Self {
            alpha,
            mean,
            spectrum,
        })
    }

    /// Target whose mean is the smooth bump u(ξ) = 2ξ^{3/2}(π−ξ)^{3/2}
    /// projected onto the sine basis on a 4096-point grid.
    pub fn smooth_bump(alpha: T, spectrum: CovarianceSpectrum<T>) -> Result<Self> {
        let mean = bump_mean_coefficients(spectrum.dim())?;
        Self::new(alpha, mean, spectrum)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn mean(&self) -> &FieldCoefficients<T> {
        &self.mean
    }

    pub fn spectrum(&self) -> &CovarianceSpectrum<T> {
        &self.spectrum
    }

    /// Σ_j u_j²/c_j, the squared Cameron-Martin norm at truncation.
    pub fn cameron_martin_norm_sq(&self) -> T {
        self.mean
            .coeffs
            .iter()
            .zip(self.spectrum.eigenvalues())
            .map(|(&u, &c)| u * u / c)
            .sum()
    }
}

/// Coefficients of u(ξ) = 2ξ^{3/2}(π−ξ)^{3/2} in the sine basis.
pub fn bump_mean_coefficients<T: Scalar>(dim: usize) -> Result<FieldCoefficients<T>> {
    let grid = BasisGrid::with_points(dim, 4096.max(8 * dim))?;
    let pi = T::of(std::f64::consts::PI);
    let exponent = T::of(1.5);
    let two = T::of(2.0);
    let values: Vec<T> = grid
        .locations::<T>()
        .iter()
        .map(|&xi| two * xi.powf(exponent) * (pi - xi).powf(exponent))
        .collect();
    project_field(&values, &grid)
}

/// Draw from the mixture: with probability α return u + z, else −u + z,
/// with z ~ N(0,C) coordinate-wise.
pub fn sample_target<T: Scalar, R: Rng + ?Sized>(
    target: &MixtureTarget<T>,
    rng: &mut R,
) -> FieldCoefficients<T> {
    let pick_plus = T::uniform_01(rng) < target.alpha;
    let z = sample_gaussian(&target.spectrum, rng);
    let coeffs = target
        .mean
        .coeffs
        .iter()
        .zip(&z.coeffs)
        .map(|(&u, &zj)| if pick_plus { u + zj } else { zj - u })
        .collect();
    FieldCoefficients { coeffs }
}

fn check_compatible<T: Scalar>(target: &MixtureTarget<T>, spec: &ProcessSpec<T>) -> Result<()> {
    if target.spectrum.eigenvalues() != spec.spectrum().eigenvalues() {
        return Err(Error::Config(
            "mixture target and process spec must share the covariance spectrum".into(),
        ));
    }
    Ok(())
}

/// The time-dependent pull g_j(t) = u_j(T,t)·u_j/c_j and offset
/// b(t) = ½Σ g_j·u_j(T,t)·u_j.
fn pull<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    t: T,
) -> Result<(Vec<T>, T)> {
    let m = spec.evolution_factors(t, spec.horizon())?;
    let g: Vec<T> = m
        .iter()
        .zip(target.mean.coeffs.iter())
        .zip(spec.spectrum().eigenvalues())
        .map(|((&mj, &uj), &cj)| mj * uj / cj)
        .collect();
    let half = T::of(0.5);
    let b = g
        .iter()
        .zip(m.iter())
        .zip(target.mean.coeffs.iter())
        .map(|((&gj, &mj), &uj)| gj * mj * uj)
        .sum::<T>()
        * half;
    Ok((g, b))
}

fn log_sum_exp<T: Scalar>(a: T, b: T) -> T {
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

fn check_pre_terminal<T: Scalar>(spec: &ProcessSpec<T>, t: T) -> Result<()> {
    if t < T::zero() || t >= spec.horizon() {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, {})",
            spec.horizon()
        )));
    }
    Ok(())
}

/// log h(t,x); finite for arbitrarily separated modes.
pub fn log_h_value<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    t: T,
    x: &FieldCoefficients<T>,
) -> Result<T> {
    check_compatible(target, spec)?;
    check_pre_terminal(spec, t)?;
    if x.dim() != spec.dim() {
        return Err(Error::Shape("state dim mismatch".into()));
    }
    let (g, b) = pull(target, spec, t)?;
    let big_g: T = g
        .iter()
        .zip(x.coeffs.iter())
        .map(|(&gj, &xj)| gj * xj)
        .sum();
    let one_minus = T::one() - target.alpha;
    let log_plus = target.alpha.ln() + big_g;
    let log_minus = if one_minus > T::zero() {
        one_minus.ln() - big_g
    } else {
        T::neg_infinity()
    };
    Ok(log_sum_exp(log_plus, log_minus) - b)
}

/// h(t,x) = exp(log h); may round to +∞/0 only when the log itself exceeds
/// the exponent range of the scalar type.
pub fn h_value<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    t: T,
    x: &FieldCoefficients<T>,
) -> Result<T> {
    Ok(log_h_value(target, spec, t, x)?.exp())
}

/// Steering function s(t,x) = D_x log h(t,x), component-wise
/// tanh(G + ½ln(α/(1−α)))·g_j(t).
pub fn steering<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    t: T,
    x: &FieldCoefficients<T>,
) -> Result<FieldCoefficients<T>> {
    check_compatible(target, spec)?;
    check_pre_terminal(spec, t)?;
    if x.dim() != spec.dim() {
        return Err(Error::Shape("state dim mismatch".into()));
    }
    let (g, _) = pull(target, spec, t)?;
    Ok(steering_from_pull(target, &g, x))
}

/// Steering evaluation from a precomputed pull vector (one schedule integral
/// can then serve a whole batch at fixed t).
fn steering_from_pull<T: Scalar>(
    target: &MixtureTarget<T>,
    g: &[T],
    x: &FieldCoefficients<T>,
) -> FieldCoefficients<T> {
    let big_g: T = g
        .iter()
        .zip(x.coeffs.iter())
        .map(|(&gj, &xj)| gj * xj)
        .sum();
    let one_minus = T::one() - target.alpha;
    let offset = if one_minus > T::zero() {
        T::of(0.5) * (target.alpha / one_minus).ln()
    } else {
        T::infinity()
    };
    let weight = (big_g + offset).tanh();
    FieldCoefficients {
        coeffs: g.iter().map(|&gj| weight * gj).collect(),
    }
}

/// Batched steering at a common time.
pub fn steering_batch<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    t: T,
    xs: &[FieldCoefficients<T>],
) -> Result<Vec<FieldCoefficients<T>>> {
    check_compatible(target, spec)?;
    check_pre_terminal(spec, t)?;
    let (g, _) = pull(target, spec, t)?;
    Ok(xs
        .iter()
        .map(|x| steering_from_pull(target, &g, x))
        .collect())
}

/// s(0,x): the steering evaluated at the initial time.
pub fn initial_score<T: Scalar>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    x: &FieldCoefficients<T>,
) -> Result<FieldCoefficients<T>> {
    steering(target, spec, T::zero(), x)
}

/// Score of the reference measure N(0,C): −x_j/c_j. Combined with
/// [`initial_score`] it yields the full gradient of log dμ₀ʰ used by the
/// Langevin initialiser.
pub fn reference_score<T: Scalar>(
    spectrum: &CovarianceSpectrum<T>,
    x: &FieldCoefficients<T>,
) -> Result<FieldCoefficients<T>> {
    if x.dim() != spectrum.dim() {
        return Err(Error::Shape("state dim mismatch".into()));
    }
    Ok(FieldCoefficients {
        coeffs: x
            .coeffs
            .iter()
            .zip(spectrum.eigenvalues())
            .map(|(&xj, &cj)| -xj / cj)
            .collect(),
    })
}
