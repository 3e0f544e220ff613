//! The five subcommands: simulate, train, generate, evaluate, sweep.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;

use doobgen_core::csvio::{read_matrix, write_matrix, write_trace};
use doobgen_core::metrics::{mode_fraction, per_coordinate_ks, score_error, sliced_wasserstein, SWConfig};
use doobgen_core::mixture::MixtureTarget;
use doobgen_core::nn::{load_checkpoint, save_checkpoint, NetConfig, NetParams};
use doobgen_core::process::forward_sample;
use doobgen_core::rng::{derive_seed, stream_rng};
use doobgen_core::sampling::{generate, GenerationResult, SamplerConfig};
use doobgen_core::schedule::{NoiseSchedule, ProcessSpec};
use doobgen_core::spectral::sample_gaussian;
use doobgen_core::steering::{AnalyticSteering, NetworkSteering};
use doobgen_core::training::{train, TargetSource};
use doobgen_core::{Error, Result};

use crate::config::RunConfig;
use crate::rundir::{prepare, write_meta};

fn target_samples(target: &MixtureTarget<f64>, n: usize, seed: u64) -> Array2<f64> {
    let d = target.spectrum().dim();
    let mut m = Array2::zeros((n, d));
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let x = doobgen_core::mixture::sample_target(target, &mut rng);
        for j in 0..d {
            m[(i, j)] = x.coeffs[j];
        }
    }
    m
}

fn sw_config(cfg: &RunConfig, seed: u64) -> Result<SWConfig> {
    Ok(SWConfig {
        slices: cfg.get_usize("metrics.slices")?,
        order: cfg.get_u64("metrics.order")? as u32,
        seed,
    })
}

/// Draw stationary forward paths of the reference process and persist them
/// as CSV rows (path, t, x1..xD).
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg)?;
    let start = Instant::now();
    let spec = cfg.process()?;
    let seed = cfg.get_u64("seed")?;
    let n = cfg.get_usize("sim.n")?;
    let steps = cfg.get_usize("sim.steps")?;
    let horizon = spec.horizon();
    let times: Vec<f64> = (1..=steps)
        .map(|k| horizon * (k as f64 / steps as f64))
        .collect();

    let file = std::fs::File::create(dir.join("paths.csv"))?;
    let mut w = std::io::BufWriter::new(file);
    let header: Vec<String> = (1..=spec.dim()).map(|j| format!("x{j}")).collect();
    writeln!(w, "path,t,{}", header.join(","))?;
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let x0 = sample_gaussian(spec.spectrum(), &mut rng);
        let mut grid = vec![0.0];
        grid.extend_from_slice(&times);
        let path = forward_sample(&spec, &x0, &grid, &mut rng)?;
        for (row, &t) in path.times.iter().enumerate() {
            let cells: Vec<String> = (0..spec.dim())
                .map(|j| format!("{}", path.states[(row, j)]))
                .collect();
            writeln!(w, "{i},{t},{}", cells.join(","))?;
        }
    }
    w.flush()?;
    write_meta(
        &dir,
        "simulate",
        cfg,
        serde_json::json!({"paths": n, "steps": steps, "wall_ms": start.elapsed().as_millis() as u64}),
    )?;
    Ok(())
}

/// Train the score network against the configured mixture target.
pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg)?;
    let start = Instant::now();
    let spec = cfg.process()?;
    let dim = spec.dim();
    let target = cfg.mixture(dim)?;
    let seed = cfg.get_u64("seed")?;
    let net_cfg = NetConfig::for_dim(dim, derive_seed(seed, 0xA11));
    let params = NetParams::<f64>::init(&net_cfg)?;
    let train_cfg = cfg.train_config()?;
    let source = TargetSource::Mixture(&target);
    let outcome = train(params, &source, &spec, &train_cfg)?;
    if outcome.aborted {
        eprintln!("warning: non-finite loss; checkpoint holds the last good snapshot");
    }
    save_checkpoint(&dir.join("checkpoint.txt"), &outcome.params)?;
    write_trace(&dir.join("loss.csv"), "iteration,loss", &outcome.loss_trace)?;
    write_trace(
        &dir.join("score_error.csv"),
        "iteration,score_error",
        &outcome.score_error_trace,
    )?;
    write_meta(
        &dir,
        "train",
        cfg,
        serde_json::json!({
            "iterations": train_cfg.iterations,
            "aborted": outcome.aborted,
            "parameters": doobgen_core::nn::param_count(&net_cfg),
            "wall_ms": start.elapsed().as_millis() as u64,
        }),
    )?;
    Ok(())
}

fn generation(
    cfg: &RunConfig,
    spec: &ProcessSpec<f64>,
    target: &MixtureTarget<f64>,
    checkpoint: Option<&Path>,
    n: usize,
    steps: usize,
    langevin_steps: usize,
    seed: u64,
) -> Result<(GenerationResult<f64>, Option<NetParams<f64>>)> {
    let sampler = SamplerConfig::new(
        steps,
        langevin_steps,
        cfg.get_f64("sampler.langevin_delta")?,
        seed,
    );
    match checkpoint {
        None => {
            let steering = AnalyticSteering { target, spec };
            Ok((generate(spec, &steering, n, &sampler)?, None))
        }
        Some(path) => {
            let params = load_checkpoint::<f64>(path)?;
            if params.config().input_dim != spec.dim() {
                return Err(Error::Config(format!(
                    "checkpoint dim {} != process dim {}",
                    params.config().input_dim,
                    spec.dim()
                )));
            }
            let result = {
                let steering = NetworkSteering {
                    params: &params,
                    horizon: spec.horizon(),
                };
                generate(spec, &steering, n, &sampler)?
            };
            Ok((result, Some(params)))
        }
    }
}

/// Generate samples with analytic or trained steering.
pub fn cmd_generate(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg)?;
    let spec = cfg.process()?;
    let target = cfg.mixture(spec.dim())?;
    let checkpoint = match cfg.get("sampler.steering") {
        "analytic" => None,
        "network" => {
            let path = cfg.get("sampler.checkpoint");
            if path.is_empty() {
                return Err(Error::Config(
                    "sampler.steering = network needs sampler.checkpoint".into(),
                ));
            }
            Some(std::path::PathBuf::from(path))
        }
        other => {
            return Err(Error::Config(format!(
                "sampler.steering = {other:?} (want analytic | network)"
            )))
        }
    };
    let n = cfg.get_usize("sampler.n")?;
    let steps = cfg.get_usize("sampler.steps")?;
    let langevin_steps = cfg.get_usize("sampler.langevin_steps")?;
    let seed = cfg.get_u64("seed")?;
    let (result, _) = generation(
        cfg,
        &spec,
        &target,
        checkpoint.as_deref(),
        n,
        steps,
        langevin_steps,
        seed,
    )?;
    write_matrix(&dir.join("samples.csv"), &result.samples)?;
    write_meta(
        &dir,
        "generate",
        cfg,
        serde_json::json!({
            "samples": n,
            "euler_steps": steps,
            "langevin_steps": langevin_steps,
            "langevin_ms": result.langevin_ms as u64,
            "euler_ms": result.euler_ms as u64,
        }),
    )?;
    Ok(())
}

/// Evaluate persisted samples against freshly drawn target samples.
/// Metrics depend only on the files and the seed, so re-running reproduces
/// them bit-identically.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg)?;
    let samples_path = cfg.get("metrics.samples");
    if samples_path.is_empty() {
        return Err(Error::Config("evaluate needs metrics.samples".into()));
    }
    let samples = read_matrix::<f64>(Path::new(samples_path))?;
    let target = cfg.mixture(samples.ncols())?;
    let seed = cfg.get_u64("seed")?;
    let reference = target_samples(&target, samples.nrows(), derive_seed(seed, 0xE7A));
    let sw = sliced_wasserstein(&samples, &reference, &sw_config(cfg, derive_seed(seed, 0x51))?)?;
    let frac = mode_fraction(&samples, target.mean())?;
    let ks = per_coordinate_ks(&samples, &reference)?;
    let ks_max = ks.iter().cloned().fold(0.0f64, f64::max);
    let mut out = String::from("sw,mode_fraction,ks_max,n,slices,order,seed\n");
    out.push_str(&format!(
        "{sw},{frac},{ks_max},{},{},{},{seed}\n",
        samples.nrows(),
        cfg.get("metrics.slices"),
        cfg.get("metrics.order"),
    ));
    std::fs::write(dir.join("metrics.csv"), out)?;
    write_meta(
        &dir,
        "evaluate",
        cfg,
        serde_json::json!({"evaluated": samples_path, "rows": samples.nrows()}),
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
struct SweepCell {
    dim: usize,
    horizon: f64,
    steps: usize,
    langevin_steps: usize,
    schedule: String,
}

fn cell_schedule(cfg: &RunConfig, name: &str, horizon: f64) -> Result<NoiseSchedule<f64>> {
    match name {
        "fcn" => NoiseSchedule::constant(10.0, horizon),
        "fns" => Ok(NoiseSchedule::linear(0.1, 20.0, horizon)?.reversed()),
        "config" => cfg.schedule(horizon),
        other => Err(Error::Config(format!(
            "sweep.schedule entry {other:?} (want fcn | fns)"
        ))),
    }
}

fn run_cell(cfg: &RunConfig, cell: &SweepCell, seed: u64) -> Result<(f64, f64, f64, u64)> {
    let start = Instant::now();
    let schedule = cell_schedule(cfg, &cell.schedule, cell.horizon)?;
    let spec = cfg.process_with(cell.dim, cell.horizon, Some(schedule))?;
    let target = cfg.mixture(cell.dim)?;
    let n = cfg.get_usize("sampler.n")?;

    let trained = if cfg.get("sampler.steering") == "network" {
        let net_cfg = NetConfig::for_dim(cell.dim, derive_seed(seed, 0xA11));
        let params = NetParams::<f64>::init(&net_cfg)?;
        let mut train_cfg = cfg.train_config()?;
        train_cfg.seed = derive_seed(seed, 0x7124);
        let source = TargetSource::Mixture(&target);
        Some(train(params, &source, &spec, &train_cfg)?.params)
    } else {
        None
    };

    let sampler = SamplerConfig::new(
        cell.steps,
        cell.langevin_steps,
        cfg.get_f64("sampler.langevin_delta")?,
        derive_seed(seed, 0x6E4),
    );
    let (samples, err) = match &trained {
        Some(params) => {
            let steering = NetworkSteering {
                params,
                horizon: spec.horizon(),
            };
            let gen = generate(&spec, &steering, n, &sampler)?;
            let err = score_error(&target, &spec, &steering, 2048, derive_seed(seed, 0x5C0))?;
            (gen.samples, err)
        }
        None => {
            let steering = AnalyticSteering {
                target: &target,
                spec: &spec,
            };
            let gen = generate(&spec, &steering, n, &sampler)?;
            // The evaluated steering is the analytic one: zero error by
            // definition.
            (gen.samples, 0.0)
        }
    };
    let reference = target_samples(&target, n, derive_seed(seed, 0x4E5));
    let sw = sliced_wasserstein(&samples, &reference, &sw_config(cfg, derive_seed(seed, 0x51))?)?;
    let frac = mode_fraction(&samples, target.mean())?;
    Ok((sw, err, frac, start.elapsed().as_millis() as u64))
}

/// Run a grid of configurations and emit one CSV row per cell, in grid
/// order. Cells are independent with derived seeds; DOOBGEN_THREADS caps the
/// worker pool and `deterministic = true` forces sequential execution.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let dir = prepare(cfg)?;
    let dims = {
        let v = cfg.get_list_usize("sweep.d")?;
        if v.is_empty() {
            vec![cfg.get_usize("process.d")?]
        } else {
            v
        }
    };
    let horizons = {
        let v = cfg.get_list_f64("sweep.t")?;
        if v.is_empty() {
            vec![cfg.get_f64("process.t")?]
        } else {
            v
        }
    };
    let steps = {
        let v = cfg.get_list_usize("sweep.k")?;
        if v.is_empty() {
            vec![cfg.get_usize("sampler.steps")?]
        } else {
            v
        }
    };
    let langevin = {
        let v = cfg.get_list_usize("sweep.l")?;
        if v.is_empty() {
            vec![cfg.get_usize("sampler.langevin_steps")?]
        } else {
            v
        }
    };
    let schedules = {
        let v = cfg.get_list_str("sweep.schedule");
        if v.is_empty() {
            vec!["config".to_string()]
        } else {
            v
        }
    };

    let mut cells = Vec::new();
    for &dim in &dims {
        for &horizon in &horizons {
            for &k in &steps {
                for &l in &langevin {
                    for sched in &schedules {
                        cells.push(SweepCell {
                            dim,
                            horizon,
                            steps: k,
                            langevin_steps: l,
                            schedule: sched.clone(),
                        });
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }

    let seed = cfg.get_u64("seed")?;
    let sequential = cfg.get_bool("deterministic")?;
    let results: Vec<Result<(f64, f64, f64, u64)>> = if sequential {
        cells
            .iter()
            .enumerate()
            .map(|(i, cell)| run_cell(cfg, cell, derive_seed(seed, i as u64)))
            .collect()
    } else {
        let threads = std::env::var("DOOBGEN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            cells
                .par_iter()
                .enumerate()
                .map(|(i, cell)| run_cell(cfg, cell, derive_seed(seed, i as u64)))
                .collect()
        })
    };

    let file = std::fs::File::create(dir.join("sweep.csv"))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "d,t,k,l,schedule,sw,score_error,mode_fraction,wall_ms")?;
    for (cell, result) in cells.iter().zip(results) {
        let (sw, err, frac, ms) = result?;
        writeln!(
            w,
            "{},{},{},{},{},{sw},{err},{frac},{ms}",
            cell.dim, cell.horizon, cell.steps, cell.langevin_steps, cell.schedule
        )?;
    }
    w.flush()?;
    write_meta(&dir, "sweep", cfg, serde_json::json!({"cells": cells.len()}))?;
    Ok(())
}
