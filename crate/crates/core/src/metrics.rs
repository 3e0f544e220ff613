//! Evaluation metrics: averaged sliced Wasserstein distance, the score-error
//! diagnostic E‖s_θ − s‖², the mode-weight statistic of bimodal targets, and
//! per-coordinate moment/KS diagnostics.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mixture::{sample_target, steering, MixtureTarget};
use crate::process::bridge_sample;
use crate::rng::stream_rng;
use crate::scalar::Scalar;
use crate::schedule::ProcessSpec;
use crate::spectral::FieldCoefficients;
use crate::steering::Steering;
use crate::training::t_max_clip;

/// Sliced Wasserstein configuration.
#[derive(Debug, Clone)]
pub struct SWConfig {
    /// Number of random projection directions.
    pub slices: usize,
    /// Wasserstein order p ∈ {1, 2}.
    pub order: u32,
    pub seed: u64,
}

impl Default for SWConfig {
    fn default() -> Self {
        Self {
            slices: 128,
            order: 2,
            seed: 0,
        }
    }
}

impl SWConfig {
    fn validate(&self) -> Result<()> {
        if self.slices == 0 {
            return Err(Error::Parameter("slice count must be >= 1".into()));
        }
        if !(self.order == 1 || self.order == 2) {
            return Err(Error::Parameter("Wasserstein order must be 1 or 2".into()));
        }
        Ok(())
    }
}

/// Exact one-dimensional order-p Wasserstein distance between two sorted
/// empirical samples (quantile coupling; handles unequal sizes).
pub fn wasserstein_1d_sorted<T: Scalar>(a: &[T], b: &[T], order: u32) -> T {
    let (n, m) = (a.len(), b.len());
    let mut acc = T::zero();
    let (mut i, mut j) = (0usize, 0usize);
    let mut u_prev = T::zero();
    let nf = T::of(n as f64);
    let mf = T::of(m as f64);
    while i < n && j < m {
        let u_a = T::of((i + 1) as f64) / nf;
        let u_b = T::of((j + 1) as f64) / mf;
        let u = u_a.min(u_b);
        let diff = (a[i] - b[j]).abs();
        let seg = u - u_prev;
        acc = acc
            + match order {
                1 => seg * diff,
                _ => seg * diff * diff,
            };
        u_prev = u;
        if u_a <= u_b {
            i += 1;
        }
        if u_b <= u_a {
            j += 1;
        }
    }
    match order {
        1 => acc,
        _ => acc.sqrt(),
    }
}

/// Averaged sliced Wasserstein distance: mean over `slices` uniformly random
/// unit directions of the 1-D order-p distance between the projections.
/// Deterministic for a fixed seed.
pub fn sliced_wasserstein<T: Scalar>(
    a: &Array2<T>,
    b: &Array2<T>,
    cfg: &SWConfig,
) -> Result<T> {
    cfg.validate()?;
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::Input("empty sample set".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "sample dims differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let d = a.ncols();
    let mut total = T::zero();
    for s in 0..cfg.slices {
        let mut rng = stream_rng(cfg.seed, s as u64);
        let dir = loop {
            let v: Vec<T> = (0..d).map(|_| T::standard_normal(&mut rng)).collect();
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm > T::of(1e-12) {
                break v.into_iter().map(|x| x / norm).collect::<Vec<T>>();
            }
        };
        let mut pa: Vec<T> = a
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(&dir).map(|(&x, &d)| x * d).sum())
            .collect();
        let mut pb: Vec<T> = b
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(&dir).map(|(&x, &d)| x * d).sum())
            .collect();
        pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        total = total + wasserstein_1d_sorted(&pa, &pb, cfg.order);
    }
    Ok(total / T::of(cfg.slices as f64))
}

/// Monte-Carlo estimate of E‖s_θ(t, X_t) − s(t, X_t)‖² over the
/// bridge-disintegrated law: y ~ μ, t ~ U(0, T − 1e-4), x ~ X_t | X_T = y.
pub fn score_error<T: Scalar, S: Steering<T> + ?Sized>(
    target: &MixtureTarget<T>,
    spec: &ProcessSpec<T>,
    s_theta: &S,
    n: usize,
    seed: u64,
) -> Result<T> {
    if n == 0 {
        return Err(Error::Input("need n >= 1 evaluation points".into()));
    }
    let t_max = t_max_clip(spec);
    let mut acc = T::zero();
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let y = sample_target(target, &mut rng);
        let t = T::uniform_01(&mut rng) * t_max;
        let point = bridge_sample(spec, &y, t, &mut rng)?;
        let truth = steering(target, spec, t, &point.x)?;
        let approx = s_theta.eval(t, &point.x)?;
        let diff: T = truth
            .coeffs
            .iter()
            .zip(&approx.coeffs)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        acc = acc + diff;
    }
    Ok(acc / T::of(n as f64))
}

/// Fraction of sample rows on the +u side: ⟨x, u⟩ > 0.
pub fn mode_fraction<T: Scalar>(samples: &Array2<T>, u: &FieldCoefficients<T>) -> Result<T> {
    if samples.ncols() != u.dim() {
        return Err(Error::Shape("sample dim != mean dim".into()));
    }
    if samples.nrows() == 0 {
        return Err(Error::Input("empty sample set".into()));
    }
    if !(u.norm_sq() > T::zero()) {
        return Err(Error::Input(
            "mode fraction undefined for a zero mean".into(),
        ));
    }
    let mut count = 0usize;
    for row in samples.rows() {
        let dot: T = row.iter().zip(&u.coeffs).map(|(&a, &b)| a * b).sum();
        if dot > T::zero() {
            count += 1;
        }
    }
    Ok(T::of(count as f64) / T::of(samples.nrows() as f64))
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a − F_b|.
pub fn ks_statistic<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("empty sample in KS statistic".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = T::zero();
    while i < n && j < m {
        let x = sa[i].min(sb[j]);
        while i < n && sa[i] <= x {
            i += 1;
        }
        while j < m && sb[j] <= x {
            j += 1;
        }
        let fa = T::of(i as f64) / T::of(n as f64);
        let fb = T::of(j as f64) / T::of(m as f64);
        let gap = (fa - fb).abs();
        if gap > d {
            d = gap;
        }
    }
    Ok(d)
}

/// Critical value of the two-sample KS test at level alpha.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// KS statistic of each coordinate between two sample matrices.
pub fn per_coordinate_ks<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> Result<Vec<T>> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape("sample dims differ".into()));
    }
    (0..a.ncols())
        .map(|j| {
            let ca: Vec<T> = a.column(j).to_vec();
            let cb: Vec<T> = b.column(j).to_vec();
            ks_statistic(&ca, &cb)
        })
        .collect()
}
