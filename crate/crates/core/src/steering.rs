//! Steering sources for the forced dynamics: the closed-form mixture
//! steering, a trained network, or zero (the unforced reference process).

use crate::error::{Error, Result};
use crate::mixture::{steering, steering_batch, MixtureTarget};
use crate::nn::{forward, NetParams};
use crate::scalar::Scalar;
use crate::schedule::ProcessSpec;
use crate::spectral::FieldCoefficients;

/// A steering function s(t, x) evaluated in process time t ∈ [0, T).
pub trait Steering<T: Scalar> {
    fn dim(&self) -> usize;

    fn eval(&self, t: T, x: &FieldCoefficients<T>) -> Result<FieldCoefficients<T>>;

    /// Evaluate a whole batch at a common time.
    fn eval_batch(&self, t: T, xs: &[FieldCoefficients<T>]) -> Result<Vec<FieldCoefficients<T>>> {
        xs.iter().map(|x| self.eval(t, x)).collect()
    }
}

/// Closed-form steering of the Gaussian-mixture target.
pub struct AnalyticSteering<'a, T> {
    pub target: &'a MixtureTarget<T>,
    pub spec: &'a ProcessSpec<T>,
}

impl<T: Scalar> Steering<T> for AnalyticSteering<'_, T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn eval(&self, t: T, x: &FieldCoefficients<T>) -> Result<FieldCoefficients<T>> {
        steering(self.target, self.spec, t, x)
    }

    fn eval_batch(&self, t: T, xs: &[FieldCoefficients<T>]) -> Result<Vec<FieldCoefficients<T>>> {
        steering_batch(self.target, self.spec, t, xs)
    }
}

/// A trained score network; process time is rescaled to [0,1] exactly as
/// during training.
pub struct NetworkSteering<'a, T> {
    pub params: &'a NetParams<T>,
    pub horizon: T,
}

impl<T: Scalar> Steering<T> for NetworkSteering<'_, T> {
    fn dim(&self) -> usize {
        self.params.config().input_dim
    }

    fn eval(&self, t: T, x: &FieldCoefficients<T>) -> Result<FieldCoefficients<T>> {
        let out = forward(self.params, t / self.horizon, &x.coeffs)?;
        FieldCoefficients::new(out)
    }
}

/// s ≡ 0: the unforced reference process.
pub struct ZeroSteering {
    pub dim: usize,
}

impl<T: Scalar> Steering<T> for ZeroSteering {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _t: T, x: &FieldCoefficients<T>) -> Result<FieldCoefficients<T>> {
        if x.dim() != self.dim {
            return Err(Error::Shape("state dim mismatch".into()));
        }
        Ok(FieldCoefficients::zeros(self.dim))
    }
}
