//! Flat key=value run configuration.
//!
//! Configuration comes from an optional file (one `key = value` per line,
//! `#` comments) plus `--key=value` command line overrides. Unknown keys are
//! rejected by name. The effective configuration is echoed verbatim into
//! every run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use doobgen_core::mixture::{bump_mean_coefficients, MixtureTarget};
use doobgen_core::schedule::{NoiseSchedule, ProcessSpec};
use doobgen_core::spectral::{matern_spectrum, FieldCoefficients};
use doobgen_core::training::{LrSchedule, TrainConfig, WeightMode};
use doobgen_core::{Error, Result};

/// (key, default, help) registry; the single source of truth for known keys.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "0", "root seed for all derived RNG streams"),
    ("out.dir", "run-out", "output directory for this run"),
    ("deterministic", "true", "run sweep cells sequentially instead of in a worker pool"),
    ("process.d", "16", "number of retained spectral modes"),
    ("process.t", "0.2", "time horizon T"),
    ("process.gamma", "1.0", "noise roughness gamma in (0,1]"),
    ("schedule.kind", "linear", "noise schedule: constant | linear | cosine"),
    ("schedule.beta", "10.0", "constant schedule rate"),
    ("schedule.beta0", "0.1", "linear schedule start rate"),
    ("schedule.beta1", "20.0", "linear schedule end rate"),
    ("schedule.reversed", "true", "time-reverse the schedule (beta(T - t))"),
    ("mixture.alpha", "0.1", "weight of the +u component"),
    ("mixture.sigma0_sq", "10000", "Matern spectrum scale"),
    ("mixture.rho0", "0.005", "Matern length scale"),
    ("mixture.nu0", "0.5", "Matern smoothness"),
    ("mixture.mean_modes", "0", "truncate the bump mean to this many modes (0 = all D)"),
    ("train.batch", "64", "training batch size"),
    ("train.iters", "10000", "training iterations"),
    ("train.lr", "0.001", "Adam learning rate"),
    ("train.lr_schedule", "constant", "learning rate schedule: constant | cosine"),
    ("train.weighting", "bstar", "loss weighting: bstar | uniform"),
    ("train.clip_norm", "10.0", "global gradient clipping norm"),
    ("train.diag_every", "500", "iterations between score-error diagnostics"),
    ("train.diag_points", "2048", "held-out bridge points per diagnostic"),
    ("sampler.steps", "250", "semi-implicit Euler steps K"),
    ("sampler.langevin_steps", "50", "Langevin initialisation steps L"),
    ("sampler.langevin_delta", "0.1", "Langevin step size delta"),
    ("sampler.n", "5000", "number of generated samples"),
    ("sampler.steering", "analytic", "steering source: analytic | network"),
    ("sampler.checkpoint", "", "checkpoint path when steering = network"),
    ("metrics.slices", "128", "sliced Wasserstein projection count"),
    ("metrics.order", "2", "Wasserstein order: 1 | 2"),
    ("metrics.samples", "", "samples.csv to evaluate"),
    ("sim.n", "100", "forward paths to simulate"),
    ("sim.steps", "50", "time steps per simulated path"),
    ("sweep.d", "", "comma list of D values"),
    ("sweep.t", "", "comma list of horizons"),
    ("sweep.k", "", "comma list of Euler step counts"),
    ("sweep.l", "", "comma list of Langevin step counts"),
    ("sweep.schedule", "", "comma list of schedules (fcn | fns)"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn defaults() -> Self {
        let values = KEYS
            .iter()
            .map(|(k, d, _)| (k.to_string(), d.to_string()))
            .collect();
        Self { values }
    }

    fn check_key(key: &str) -> Result<()> {
        if KEYS.iter().any(|(k, _, _)| *k == key) {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown config key: {key}")))
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        Self::check_key(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn load_file(&mut self, path: &std::path::Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))?;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", ln + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key} = {:?} is not an integer", self.get(key))))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key} = {:?} is not an integer", self.get(key))))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key} = {:?} is not a number", self.get(key))))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Config(format!(
                "{key} = {other:?} is not true/false"
            ))),
        }
    }

    pub fn get_list_usize(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad entry {v:?}")))
            })
            .collect()
    }

    pub fn get_list_f64(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{key}: bad entry {v:?}")))
            })
            .collect()
    }

    pub fn get_list_str(&self, key: &str) -> Vec<String> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Vec::new();
        }
        raw.split(',').map(|v| v.trim().to_string()).collect()
    }

    /// Echo of the effective configuration: sorted `key = value` lines.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    /// Build a noise schedule from `schedule.*` and a horizon.
    pub fn schedule(&self, horizon: f64) -> Result<NoiseSchedule<f64>> {
        let base = match self.get("schedule.kind") {
            "constant" => NoiseSchedule::constant(self.get_f64("schedule.beta")?, horizon)?,
            "linear" => NoiseSchedule::linear(
                self.get_f64("schedule.beta0")?,
                self.get_f64("schedule.beta1")?,
                horizon,
            )?,
            "cosine" => NoiseSchedule::cosine(horizon)?,
            other => {
                return Err(Error::Config(format!(
                    "schedule.kind = {other:?} (want constant | linear | cosine)"
                )))
            }
        };
        Ok(if self.get_bool("schedule.reversed")? {
            base.reversed()
        } else {
            base
        })
    }

    /// Build the process spec from `process.*` and `schedule.*`.
    pub fn process(&self) -> Result<ProcessSpec<f64>> {
        self.process_with(self.get_usize("process.d")?, self.get_f64("process.t")?, None)
    }

    /// Process spec with explicit overrides (used by sweep cells).
    pub fn process_with(
        &self,
        dim: usize,
        horizon: f64,
        schedule: Option<NoiseSchedule<f64>>,
    ) -> Result<ProcessSpec<f64>> {
        let spectrum = matern_spectrum(
            dim,
            self.get_f64("mixture.sigma0_sq")?,
            self.get_f64("mixture.rho0")?,
            self.get_f64("mixture.nu0")?,
        )?;
        let schedule = match schedule {
            Some(s) => s,
            None => self.schedule(horizon)?,
        };
        ProcessSpec::new(spectrum, schedule, self.get_f64("process.gamma")?)
    }

    /// Build the mixture target from `mixture.*` at dimension `dim`.
    pub fn mixture(&self, dim: usize) -> Result<MixtureTarget<f64>> {
        let spectrum = matern_spectrum(
            dim,
            self.get_f64("mixture.sigma0_sq")?,
            self.get_f64("mixture.rho0")?,
            self.get_f64("mixture.nu0")?,
        )?;
        let mean_modes = self.get_usize("mixture.mean_modes")?;
        let alpha = self.get_f64("mixture.alpha")?;
        if mean_modes == 0 || mean_modes >= dim {
            MixtureTarget::smooth_bump(alpha, spectrum)
        } else {
            let mut mean = bump_mean_coefficients::<f64>(mean_modes)?.coeffs;
            mean.resize(dim, 0.0);
            MixtureTarget::new(alpha, FieldCoefficients::new(mean)?, spectrum)
        }
    }

    /// Build the training configuration from `train.*`.
    pub fn train_config(&self) -> Result<TrainConfig<f64>> {
        let mut cfg = TrainConfig::new(
            self.get_usize("train.batch")?,
            self.get_usize("train.iters")?,
            self.get_f64("train.lr")?,
            self.get_u64("seed")?,
        );
        cfg.lr_schedule = match self.get("train.lr_schedule") {
            "constant" => LrSchedule::Constant,
            "cosine" => LrSchedule::CosineDecay,
            other => {
                return Err(Error::Config(format!(
                    "train.lr_schedule = {other:?} (want constant | cosine)"
                )))
            }
        };
        cfg.weight_mode = match self.get("train.weighting") {
            "bstar" => WeightMode::BStar,
            "uniform" => WeightMode::Uniform,
            other => {
                return Err(Error::Config(format!(
                    "train.weighting = {other:?} (want bstar | uniform)"
                )))
            }
        };
        cfg.clip_norm = self.get_f64("train.clip_norm")?;
        cfg.diagnostic_every = self.get_usize("train.diag_every")?;
        cfg.diagnostic_points = self.get_usize("train.diag_points")?;
        Ok(cfg)
    }
}
