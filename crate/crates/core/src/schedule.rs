//! Noise schedules β(t), their time integrals, and the per-mode kernel
//! quantities of the VP-SPDE
//!
//!   dX_t = −β(t)·½C^{-γ} X_t dt + √(β(t)·C^{1-γ}) dW_t,
//!
//! namely the evolution factors u_j(t,s) = exp(−a_j ∫_s^t β) and transition
//! variances q_j(t,s) = c_j(1 − u_j²(t,s)), with a_j = ½c_j^{-γ}.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::CovarianceSpectrum;

/// Functional form of β(t).
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind<T> {
    /// β(t) ≡ β.
    Constant { beta: T },
    /// β(t) = β₀ + (t/T)(β₁ − β₀).
    Linear { beta0: T, beta1: T },
    /// β(t) = −d/dt log ᾱ(t) with ᾱ(t) = cos²(((t/T + s)/(1+s))·π/2),
    /// s = 0.008, clipped to [1e-4, 20].
    Cosine,
}

/// A positive, bounded noise rate on [0, T], optionally time reversed
/// (β̃(t) = β(T − t)).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule<T> {
    kind: ScheduleKind<T>,
    horizon: T,
    reversed: bool,
}

const COSINE_OFFSET: f64 = 0.008;
const COSINE_CLIP_LO: f64 = 1e-4;
const COSINE_CLIP_HI: f64 = 20.0;
const SIMPSON_TOL: f64 = 1e-10;

impl<T: Scalar> NoiseSchedule<T> {
    pub fn constant(beta: T, horizon: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::Parameter("constant beta must be positive".into()));
        }
        Self::build(ScheduleKind::Constant { beta }, horizon)
    }

    pub fn linear(beta0: T, beta1: T, horizon: T) -> Result<Self> {
        if !(beta0 > T::zero()) || !(beta1 > T::zero()) {
            return Err(Error::Parameter("linear betas must be positive".into()));
        }
        Self::build(ScheduleKind::Linear { beta0, beta1 }, horizon)
    }

    pub fn cosine(horizon: T) -> Result<Self> {
        Self::build(ScheduleKind::Cosine, horizon)
    }

    fn build(kind: ScheduleKind<T>, horizon: T) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::Parameter("horizon must be positive".into()));
        }
        Ok(Self {
            kind,
            horizon,
            reversed: false,
        })
    }

    /// Time-reversed copy: β̃(t) = β(T − t).
    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn kind(&self) -> &ScheduleKind<T> {
        &self.kind
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    fn check_time(&self, t: T) -> Result<()> {
        if t < T::zero() || t > self.horizon || !t.is_finite() {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    fn beta_forward(&self, t: T) -> T {
        match self.kind {
            ScheduleKind::Constant { beta } => beta,
            ScheduleKind::Linear { beta0, beta1 } => beta0 + (t / self.horizon) * (beta1 - beta0),
            ScheduleKind::Cosine => {
                let s = T::of(COSINE_OFFSET);
                let half_pi = T::of(std::f64::consts::FRAC_PI_2);
                let theta = (t / self.horizon + s) / (T::one() + s) * half_pi;
                let raw = theta.tan() * T::of(std::f64::consts::PI)
                    / (self.horizon * (T::one() + s));
                raw.max(T::of(COSINE_CLIP_LO)).min(T::of(COSINE_CLIP_HI))
            }
        }
    }

    /// β(t) for t ∈ [0, T].
    pub fn beta(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        let tt = if self.reversed { self.horizon - t } else { t };
        Ok(self.beta_forward(tt))
    }

    fn integral_forward(&self, s: T, t: T) -> T {
        match self.kind {
            ScheduleKind::Constant { beta } => beta * (t - s),
            ScheduleKind::Linear { beta0, beta1 } => {
                let two = T::of(2.0);
                beta0 * (t - s) + (beta1 - beta0) * (t * t - s * s) / (two * self.horizon)
            }
            ScheduleKind::Cosine => {
                adaptive_simpson(&|r| self.beta_forward(r), s, t, T::of(SIMPSON_TOL))
            }
        }
    }

    /// ∫_s^t β(r) dr for 0 ≤ s ≤ t ≤ T. Closed form for constant and linear
    /// schedules; adaptive Simpson (tol 1e-10) for the clipped cosine.
    pub fn beta_integral(&self, s: T, t: T) -> Result<T> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::Domain(format!("integral needs s <= t, got {s} > {t}")));
        }
        if s == t {
            return Ok(T::zero());
        }
        if self.reversed {
            // ∫_s^t β(T−r) dr = ∫_{T−t}^{T−s} β(r) dr.
            Ok(self.integral_forward(self.horizon - t, self.horizon - s))
        } else {
            Ok(self.integral_forward(s, t))
        }
    }
}

/// Adaptive Simpson quadrature.
fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    fn simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, m: T, b: T) -> T {
        let six = T::of(6.0);
        let four = T::of(4.0);
        (b - a) / six * (f(a) + four * f(m) + f(b))
    }
    fn recurse<T: Scalar, F: Fn(T) -> T>(
        f: &F,
        a: T,
        b: T,
        whole: T,
        tol: T,
        depth: usize,
    ) -> T {
        let two = T::of(2.0);
        let m = (a + b) / two;
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let left = simpson(f, a, lm, m);
        let right = simpson(f, m, rm, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::of(15.0) * tol {
            left + right + delta / T::of(15.0)
        } else {
            recurse(f, a, m, left, tol / two, depth - 1)
                + recurse(f, m, b, right, tol / two, depth - 1)
        }
    }
    let m = (a + b) / T::of(2.0);
    recurse(f, a, b, simpson(f, a, m, b), tol, 48)
}

/// Everything needed to evaluate the VP-SPDE kernel per mode: spectrum,
/// schedule, roughness γ and the derived diagonals a_j = ½c_j^{-γ},
/// q_j = c_j^{1-γ}.
#[derive(Debug, Clone)]
pub struct ProcessSpec<T> {
    spectrum: CovarianceSpectrum<T>,
    schedule: NoiseSchedule<T>,
    gamma: T,
    drift: Vec<T>,
    noise: Vec<T>,
}

impl<T: Scalar> ProcessSpec<T> {
    pub fn new(
        spectrum: CovarianceSpectrum<T>,
        schedule: NoiseSchedule<T>,
        gamma: T,
    ) -> Result<Self> {
        if !(gamma > T::zero() && gamma <= T::one()) {
            return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 1]")));
        }
        let half = T::of(0.5);
        let drift: Vec<T> = spectrum
            .eigenvalues()
            .iter()
            .map(|&c| half * c.powf(-gamma))
            .collect();
        let noise: Vec<T> = spectrum
            .eigenvalues()
            .iter()
            .map(|&c| c.powf(T::one() - gamma))
            .collect();
        if drift.iter().any(|a| !(*a > T::zero()))
            || noise.iter().any(|q| !(*q > T::zero()) || !q.is_finite())
        {
            return Err(Error::Parameter(
                "derived drift/noise diagonals must be positive and finite".into(),
            ));
        }
        Ok(Self {
            spectrum,
            schedule,
            gamma,
            drift,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn horizon(&self) -> T {
        self.schedule.horizon()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn spectrum(&self) -> &CovarianceSpectrum<T> {
        &self.spectrum
    }

    pub fn schedule(&self) -> &NoiseSchedule<T> {
        &self.schedule
    }

    /// a_j = ½c_j^{-γ}.
    pub fn drift_eigenvalue(&self, mode: usize) -> T {
        self.drift[mode]
    }

    /// q_j = c_j^{1-γ}.
    pub fn noise_eigenvalue(&self, mode: usize) -> T {
        self.noise[mode]
    }

    /// u_j(t,s) = exp(−a_j ∫_s^t β(r) dr), evaluated through the log to stay
    /// exact down to full underflow.
    pub fn evolution_factor(&self, mode: usize, s: T, t: T) -> Result<T> {
        let int = self.schedule.beta_integral(s, t)?;
        Ok((-self.drift[mode] * int).exp())
    }

    /// q_j(t,s) = c_j·(1 − u_j(t,s)²), via expm1 so values near s = t keep
    /// full relative accuracy.
    pub fn transition_variance(&self, mode: usize, s: T, t: T) -> Result<T> {
        let int = self.schedule.beta_integral(s, t)?;
        let two = T::of(2.0);
        Ok(-self.spectrum.eigenvalue(mode) * (-two * self.drift[mode] * int).exp_m1())
    }

    /// All u_j(t,s) at once (one schedule integral).
    pub fn evolution_factors(&self, s: T, t: T) -> Result<Vec<T>> {
        let int = self.schedule.beta_integral(s, t)?;
        Ok(self.drift.iter().map(|&a| (-a * int).exp()).collect())
    }

    /// All q_j(t,s) at once (one schedule integral).
    pub fn transition_variances(&self, s: T, t: T) -> Result<Vec<T>> {
        let int = self.schedule.beta_integral(s, t)?;
        let two = T::of(2.0);
        Ok(self
            .drift
            .iter()
            .zip(self.spectrum.eigenvalues())
            .map(|(&a, &c)| -c * (-two * a * int).exp_m1())
            .collect())
    }
}
