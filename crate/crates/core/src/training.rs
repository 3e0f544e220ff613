//! Monte-Carlo estimation and minimisation of the score-matching loss
//!
//!   L(θ) = ∫₀ᵀ E |s_θ(t, X_t) − D_x log p(t, X_t; T, X_T)|²_{B*(t)} dt,
//!
//! sampled by bridge disintegration: draw y from the target, t uniformly on
//! [0, T − t_guard], x from the bridge X_t | X_T = y, and regress on the
//! closed-form transition score under the diagonal weights
//! w_j = β(t)·c_j^{1-γ}. The uniform time law makes T·(batch mean) an
//! unbiased estimator of the time integral.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::metrics::score_error;
use crate::mixture::{sample_target, MixtureTarget};
use crate::nn::{adam_step, backward, AdamState, NetParams, WeightedSample};
use crate::process::{bridge_sample, transition_score};
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Scalar;
use crate::schedule::ProcessSpec;
use crate::spectral::FieldCoefficients;
use crate::steering::{NetworkSteering, Steering};

/// Gap kept between sampled times and the terminal singularity.
pub const TIME_GUARD: f64 = 1e-4;

/// Largest time the sampler may draw: T − 1e-4.
pub fn t_max_clip<T: Scalar>(spec: &ProcessSpec<T>) -> T {
    spec.horizon() - T::of(TIME_GUARD)
}

/// Learning-rate schedule over the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// lr(i) = lr·½(1 + cos(π·i/iters)).
    CosineDecay,
}

/// Per-coordinate loss weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// w_j = β(t)·c_j^{1-γ}, the squared action of B*(t).
    BStar,
    /// w_j = 1 (ablation).
    Uniform,
}

/// Training hyperparameters. Times are always drawn uniformly on
/// [0, T − 1e-4); the guard keeps the transition score finite.
#[derive(Debug, Clone)]
pub struct TrainConfig<T> {
    pub batch_size: usize,
    pub iterations: usize,
    pub lr: T,
    pub lr_schedule: LrSchedule,
    pub weight_mode: WeightMode,
    pub clip_norm: T,
    pub seed: u64,
    /// Diagnostic cadence (iterations between score-error evaluations).
    pub diagnostic_every: usize,
    /// Held-out bridge points per diagnostic evaluation.
    pub diagnostic_points: usize,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(batch_size: usize, iterations: usize, lr: T, seed: u64) -> Self {
        Self {
            batch_size,
            iterations,
            lr,
            lr_schedule: LrSchedule::Constant,
            weight_mode: WeightMode::BStar,
            clip_norm: T::of(10.0),
            seed,
            diagnostic_every: 500,
            diagnostic_points: 2048,
        }
    }
}

/// Where target draws y ~ μ come from.
pub enum TargetSource<'a, T> {
    /// Analytic mixture sampler (also enables the score-error diagnostic).
    Mixture(&'a MixtureTarget<T>),
    /// Rows of a dataset matrix, drawn uniformly with replacement.
    Dataset(&'a Array2<T>),
}

impl<T: Scalar> TargetSource<'_, T> {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            TargetSource::Mixture(m) => {
                if m.spectrum().dim() != dim {
                    return Err(Error::Shape("target dim != process dim".into()));
                }
            }
            TargetSource::Dataset(rows) => {
                if rows.nrows() == 0 {
                    return Err(Error::Input("empty dataset".into()));
                }
                if rows.ncols() != dim {
                    return Err(Error::Shape("dataset dim != process dim".into()));
                }
            }
        }
        Ok(())
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldCoefficients<T> {
        match self {
            TargetSource::Mixture(m) => sample_target(m, rng),
            TargetSource::Dataset(rows) => {
                let i = (rng.random::<u64>() % rows.nrows() as u64) as usize;
                FieldCoefficients {
                    coeffs: rows.row(i).to_vec(),
                }
            }
        }
    }
}

/// One regression tuple of the disintegrated loss.
#[derive(Debug, Clone)]
pub struct LossSample<T> {
    pub t: T,
    pub x: FieldCoefficients<T>,
    pub y: FieldCoefficients<T>,
    pub target_score: FieldCoefficients<T>,
    pub weights: Vec<T>,
}

/// Draw `n` i.i.d. loss samples. Sample i uses the RNG stream derived from
/// (seed, i), so batches are reproducible bit-for-bit and independent of any
/// scheduling.
pub fn make_batch<T: Scalar>(
    source: &TargetSource<T>,
    spec: &ProcessSpec<T>,
    n: usize,
    seed: u64,
    weight_mode: WeightMode,
) -> Result<Vec<LossSample<T>>> {
    if n == 0 {
        return Err(Error::Input("batch size must be >= 1".into()));
    }
    source.validate(spec.dim())?;
    let t_max = t_max_clip(spec);
    let mut batch = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let y = source.draw(&mut rng);
        let t = T::uniform_01(&mut rng) * t_max;
        debug_assert!(t < spec.horizon());
        let point = bridge_sample(spec, &y, t, &mut rng)?;
        let target_score = transition_score(spec, &point.x, t, &y)?;
        if target_score.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transition score in batch".into()));
        }
        let beta = spec.schedule().beta(t)?;
        let weights = (0..spec.dim())
            .map(|j| match weight_mode {
                WeightMode::BStar => beta * spec.noise_eigenvalue(j),
                WeightMode::Uniform => T::one(),
            })
            .collect();
        batch.push(LossSample {
            t,
            x: point.x,
            y,
            target_score,
            weights,
        });
    }
    Ok(batch)
}

fn to_weighted<T: Scalar>(spec: &ProcessSpec<T>, batch: &[LossSample<T>]) -> Vec<WeightedSample<T>> {
    batch
        .iter()
        .map(|s| WeightedSample {
            t: s.t / spec.horizon(),
            x: s.x.coeffs.clone(),
            target: s.target_score.coeffs.clone(),
            weight: s.weights.clone(),
        })
        .collect()
}

/// Unbiased estimate of the loss for a steering function:
/// T · mean_i Σ_j w_ij·(s(t_i, x_i)_j − target_ij)².
pub fn loss_estimate_fn<T: Scalar, S: Steering<T> + ?Sized>(
    s_theta: &S,
    spec: &ProcessSpec<T>,
    batch: &[LossSample<T>],
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    let mut acc = T::zero();
    for sample in batch {
        let out = s_theta.eval(sample.t, &sample.x)?;
        for j in 0..out.dim() {
            let r = out.coeffs[j] - sample.target_score.coeffs[j];
            acc = acc + sample.weights[j] * r * r;
        }
    }
    Ok(spec.horizon() * acc / T::of(batch.len() as f64))
}

/// Loss estimate for a network.
pub fn loss_estimate<T: Scalar>(
    params: &NetParams<T>,
    spec: &ProcessSpec<T>,
    batch: &[LossSample<T>],
) -> Result<T> {
    let net = NetworkSteering {
        params,
        horizon: spec.horizon(),
    };
    loss_estimate_fn(&net, spec, batch)
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: NetParams<T>,
    /// (iteration, loss) per iteration.
    pub loss_trace: Vec<(usize, T)>,
    /// (iteration, E‖s_θ − s‖²) at the diagnostic cadence; empty without an
    /// analytic steering.
    pub score_error_trace: Vec<(usize, T)>,
    /// True if a non-finite loss forced an early stop; `params` then holds
    /// the last good snapshot.
    pub aborted: bool,
}

/// Adam loop on the Monte-Carlo loss. Gradients are clipped at a global
/// norm; every batch and diagnostic set derives its seeds from the config,
/// so a fixed config is bit-reproducible.
pub fn train<T: Scalar>(
    params: NetParams<T>,
    source: &TargetSource<T>,
    spec: &ProcessSpec<T>,
    cfg: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    if cfg.batch_size == 0 || cfg.iterations == 0 {
        return Err(Error::Parameter("batch size and iterations must be >= 1".into()));
    }
    source.validate(spec.dim())?;
    if params.config().input_dim != spec.dim() {
        return Err(Error::Config("network input dim != process dim".into()));
    }
    let mut params = params;
    let mut state = AdamState::new(params.len());
    let mut loss_trace = Vec::with_capacity(cfg.iterations);
    let mut score_error_trace = Vec::new();
    let mut snapshot = params.clone();
    let mut aborted = false;
    let horizon = spec.horizon();

    for iter in 0..cfg.iterations {
        if iter % cfg.diagnostic_every == 0 {
            if let Some(err) = diagnostic(&params, source, spec, cfg, iter)? {
                score_error_trace.push((iter, err));
            }
            snapshot = params.clone();
        }

        let batch_seed = derive_seed(cfg.seed, iter as u64);
        let batch = make_batch(source, spec, cfg.batch_size, batch_seed, cfg.weight_mode)?;
        let weighted = to_weighted(spec, &batch);
        let (raw_loss, mut grad) = backward(&params, &weighted)?;
        let loss = horizon * raw_loss;
        if !loss.is_finite() {
            params = snapshot;
            aborted = true;
            break;
        }
        loss_trace.push((iter, loss));

        // Gradient of the T-scaled objective, clipped at a global norm.
        let mut norm_sq = T::zero();
        for g in grad.iter_mut() {
            *g = *g * horizon;
            norm_sq = norm_sq + *g * *g;
        }
        let norm = norm_sq.sqrt();
        if norm > cfg.clip_norm {
            let scale = cfg.clip_norm / norm;
            for g in grad.iter_mut() {
                *g = *g * scale;
            }
        }

        let lr = match cfg.lr_schedule {
            LrSchedule::Constant => cfg.lr,
            LrSchedule::CosineDecay => {
                let frac = T::of(iter as f64 / cfg.iterations as f64);
                cfg.lr
                    * T::of(0.5)
                    * (T::one() + (T::of(std::f64::consts::PI) * frac).cos())
            }
        };
        adam_step(&mut params, &grad, &mut state, lr)?;
    }

    if !aborted {
        if let Some(err) = diagnostic(&params, source, spec, cfg, cfg.iterations)? {
            score_error_trace.push((cfg.iterations, err));
        }
    }

    Ok(TrainOutcome {
        params,
        loss_trace,
        score_error_trace,
        aborted,
    })
}

/// Held-out score-error diagnostic E‖s_θ − s‖² on a rotating-seed bridge
/// set; available only when the target is analytic.
fn diagnostic<T: Scalar>(
    params: &NetParams<T>,
    source: &TargetSource<T>,
    spec: &ProcessSpec<T>,
    cfg: &TrainConfig<T>,
    iter: usize,
) -> Result<Option<T>> {
    let TargetSource::Mixture(target) = source else {
        return Ok(None);
    };
    let rotation = (iter / cfg.diagnostic_every) as u64;
    let seed = derive_seed(cfg.seed ^ 0xD1A6_0000, rotation);
    let net = NetworkSteering {
        params,
        horizon: spec.horizon(),
    };
    let err = score_error(target, spec, &net, cfg.diagnostic_points, seed)?;
    Ok(Some(err))
}
