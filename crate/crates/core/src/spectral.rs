//! Spectral representation of H = L²([0,1]).
//!
//! All fields are expanded in the orthonormal trigonometric basis
//! e_j(ξ) = √2·sin(jπξ), j = 1..D, so that a Gaussian measure N(0,C) with C
//! diagonal in this basis is sampled coordinate-wise. Covariance spectra are
//! either Matérn-type or generic power laws.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discretisation of [0,1]: D retained modes and M interior grid points
/// ξ_m = m/(M+1), m = 1..M.
///
/// On this grid the trapezoidal rule degenerates to a plain sum (the basis
/// vanishes at both endpoints) and the discrete basis is orthonormal to
/// floating point accuracy whenever M ≥ D.
#[derive(Debug, Clone)]
pub struct BasisGrid {
    modes: usize,
    points: usize,
}

impl BasisGrid {
    /// Grid with an explicit number of interior points.
    pub fn with_points(modes: usize, points: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Parameter("basis needs at least one mode".into()));
        }
        if points < modes {
            return Err(Error::Parameter(format!(
                "grid with {points} points cannot resolve {modes} modes"
            )));
        }
        Ok(Self { modes, points })
    }

    /// Default quadrature resolution: M = max(256, 8D).
    pub fn new(modes: usize) -> Result<Self> {
        Self::with_points(modes, 256.max(8 * modes))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid locations ξ_m ∈ (0,1).
    pub fn locations<T: Scalar>(&self) -> Vec<T> {
        let h = T::one() / T::of((self.points + 1) as f64);
        (1..=self.points).map(|m| T::of(m as f64) * h).collect()
    }

    /// Quadrature weight (uniform; boundary terms vanish).
    pub fn weight<T: Scalar>(&self) -> T {
        T::one() / T::of((self.points + 1) as f64)
    }
}

/// Eigenvalues {c_j} of the covariance operator C in the sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpectrum<T> {
    eigenvalues: Vec<T>,
}

impl<T: Scalar> CovarianceSpectrum<T> {
    /// Wrap explicit eigenvalues. They must be positive and non-increasing.
    pub fn from_eigenvalues(eigenvalues: Vec<T>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Parameter("empty spectrum".into()));
        }
        for (j, &c) in eigenvalues.iter().enumerate() {
            if !(c > T::zero()) || !c.is_finite() {
                return Err(Error::Parameter(format!(
                    "eigenvalue c_{} = {c} must be positive and finite",
                    j + 1
                )));
            }
        }
        for w in eigenvalues.windows(2) {
            if w[1] > w[0] {
                return Err(Error::Parameter(
                    "eigenvalues must be non-increasing".into(),
                ));
            }
        }
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalue(&self, j: usize) -> T {
        self.eigenvalues[j]
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Σ_{j≤D} c_j.
    pub fn partial_trace(&self) -> T {
        self.eigenvalues.iter().copied().sum()
    }

    /// Tail ratio c_D/c_1, a trace-class proxy at truncation.
    pub fn tail_ratio(&self) -> T {
        *self.eigenvalues.last().unwrap() / self.eigenvalues[0]
    }
}

/// Matérn-type spectrum c_j = σ₀²·(ρ₀⁻² + (2πj)²)^{-(1/2+ν₀)}.
pub fn matern_spectrum<T: Scalar>(
    dim: usize,
    sigma0_sq: T,
    rho0: T,
    nu0: T,
) -> Result<CovarianceSpectrum<T>> {
    if dim == 0 {
        return Err(Error::Parameter("spectrum dimension must be >= 1".into()));
    }
    if !(sigma0_sq > T::zero()) || !(rho0 > T::zero()) || !(nu0 > T::zero()) {
        return Err(Error::Parameter(
            "matern parameters sigma0_sq, rho0, nu0 must be positive".into(),
        ));
    }
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    let rho_term = rho0.powi(-2);
    let exponent = -(T::of(0.5) + nu0);
    let eigenvalues = (1..=dim)
        .map(|j| {
            let wj = two_pi * T::of(j as f64);
            sigma0_sq * (rho_term + wj * wj).powf(exponent)
        })
        .collect();
    CovarianceSpectrum::from_eigenvalues(eigenvalues)
}

/// Power-law spectrum c_j = c1·j^{-decay}; requires decay > 1 so the full
/// trace stays summable.
pub fn power_spectrum<T: Scalar>(dim: usize, c1: T, decay: T) -> Result<CovarianceSpectrum<T>> {
    if dim == 0 {
        return Err(Error::Parameter("spectrum dimension must be >= 1".into()));
    }
    if !(c1 > T::zero()) {
        return Err(Error::Parameter("c1 must be positive".into()));
    }
    if !(decay > T::one()) {
        return Err(Error::Parameter(
            "decay must exceed 1 for a trace-class spectrum".into(),
        ));
    }
    let eigenvalues = (1..=dim)
        .map(|j| c1 * T::of(j as f64).powf(-decay))
        .collect();
    CovarianceSpectrum::from_eigenvalues(eigenvalues)
}

/// Coefficients ⟨x, e_j⟩ of a field in the sine basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> FieldCoefficients<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("field coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_sq(&self) -> T {
        self.coeffs.iter().map(|&x| x * x).sum()
    }
}

/// Draw x with independent coordinates x_j ~ N(0, c_j).
pub fn sample_gaussian<T: Scalar, R: Rng + ?Sized>(
    spec: &CovarianceSpectrum<T>,
    rng: &mut R,
) -> FieldCoefficients<T> {
    let coeffs = spec
        .eigenvalues()
        .iter()
        .map(|&c| c.sqrt() * T::standard_normal(rng))
        .collect();
    FieldCoefficients { coeffs }
}

/// Synthesize grid values f(ξ_m) = Σ_j x_j·√2·sin(jπξ_m).
pub fn coeffs_to_field<T: Scalar>(x: &FieldCoefficients<T>, grid: &BasisGrid) -> Result<Vec<T>> {
    if x.dim() != grid.modes() {
        return Err(Error::Shape(format!(
            "coefficient dim {} != grid modes {}",
            x.dim(),
            grid.modes()
        )));
    }
    let sqrt2 = T::of(std::f64::consts::SQRT_2);
    let pi = T::of(std::f64::consts::PI);
    let locations = grid.locations::<T>();
    Ok(locations
        .iter()
        .map(|&xi| {
            let mut acc = T::zero();
            for (j, &cj) in x.coeffs.iter().enumerate() {
                let freq = pi * T::of((j + 1) as f64);
                acc = acc + cj * sqrt2 * (freq * xi).sin();
            }
            acc
        })
        .collect())
}

/// Project grid values onto the basis: x_j ≈ ∫ f(ξ)·√2 sin(jπξ) dξ by the
/// trapezoidal rule (interior-point form; the integrand vanishes at 0 and 1).
pub fn project_field<T: Scalar>(field: &[T], grid: &BasisGrid) -> Result<FieldCoefficients<T>> {
    if field.len() != grid.points() {
        return Err(Error::Shape(format!(
            "field has {} values, grid has {} points",
            field.len(),
            grid.points()
        )));
    }
    let sqrt2 = T::of(std::f64::consts::SQRT_2);
    let pi = T::of(std::f64::consts::PI);
    let w = grid.weight::<T>();
    let locations = grid.locations::<T>();
    let coeffs = (1..=grid.modes())
        .map(|j| {
            let freq = pi * T::of(j as f64);
            let mut acc = T::zero();
            for (m, &xi) in locations.iter().enumerate() {
                acc = acc + field[m] * sqrt2 * (freq * xi).sin();
            }
            acc * w
        })
        .collect();
    FieldCoefficients::new(coeffs)
}
