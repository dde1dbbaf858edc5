//! Mode dispatch and output files.
//!
//! Every mode except `mc` writes `<out>_stats.csv` with the header
//! `t,mean_energy,std_energy,mean_gradient,std_gradient,mode_active`.
//! `adaptive` adds `<out>_estimator.csv` with
//! `t,y_hat,t0_hat,epsilon,newton_iterations,residual,status`, where missing values are
//! written as `NaN`. `mc` writes `<out>_mc.csv` with `t,stat,value,stderr`.
//! Every run writes `<out>_manifest.txt` holding the resolved settings and
//! results as `key = value` lines. Numbers use 15 significant digits, and
//! CSV files depend only on the configuration, never on timing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::adaptive::{adaptive_run_from, ActiveModel, EstimateRecord, SwitchOutcome};
use crate::basis::{QuadTensor, TripleTensor};
use crate::burgers::{build_initial_field, BurgersSystem};
use crate::config::{ConfigError, Mode, RunConfig};
use crate::error::MzError;
use crate::field::PcField;
use crate::integrate::{evolve, StepperConfig};
use crate::monte_carlo::{mc_statistics, write_mc_csv};
use crate::reduction::{MemoryState, ReducedModel, ReductionSpec};
use crate::stats::{stat_sample, StatSample};

/// Why a run failed; [`RunError::exit_code`] maps it to the process status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numeric(MzError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    /// 1 for configuration and file problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 1,
            RunError::Numeric(_) => 2,
        }
    }
}

impl From<MzError> for RunError {
    fn from(e: MzError) -> Self {
        match e {
            MzError::InvalidArgument(message) => RunError::Config(ConfigError {
                key: None,
                origin: None,
                message,
            }),
            other => RunError::Numeric(other),
        }
    }
}

/// Files written and headline results of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub switch: Option<SwitchOutcome>,
    pub wall_seconds: f64,
}

/// `<prefix><suffix>` next to the prefix.
pub fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Header of the statistics file.
pub const STATS_HEADER: &str = "t,mean_energy,std_energy,mean_gradient,std_gradient,mode_active";
/// Header of the estimator log.
pub const ESTIMATOR_HEADER: &str = "t,y_hat,t0_hat,epsilon,newton_iterations,residual,status";

fn num(v: f64) -> String {
    format!("{v:.14e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), num)
}

fn write_stats(path: &Path, rows: &[(StatSample, ActiveModel)]) -> Result<(), RunError> {
    let mut w = create(path)?;
    let mut body = String::with_capacity(rows.len() * 110 + 80);
    body.push_str(STATS_HEADER);
    body.push('\n');
    for (s, model) in rows {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(s.t),
            num(s.mean_energy),
            num(s.std_energy()),
            num(s.mean_gradient),
            num(s.std_gradient()),
            model.as_str()
        ));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_estimator(path: &Path, log: &[EstimateRecord]) -> Result<(), RunError> {
    let mut w = create(path)?;
    let mut body = String::from(ESTIMATOR_HEADER);
    body.push('\n');
    for r in log {
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(r.t),
            opt(r.y_hat),
            opt(r.t0_hat),
            opt(r.epsilon),
            r.newton_iterations,
            opt(r.residual),
            r.status.as_str()
        ));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Evolves the full system and records statistics every observer stride.
pub fn full_statistics(cfg: &RunConfig) -> Result<Vec<(StatSample, ActiveModel)>, RunError> {
    let (n, m) = (cfg.n_modes, cfg.n_pc);
    let c = Arc::new(TripleTensor::new(m)?);
    let d = QuadTensor::new(m)?;
    let mut system = BurgersSystem::new(n, c, cfg.params(), cfg.convolution)?;
    let u0 = build_initial_field(n, m, cfg.alpha0, cfg.alpha1)?;
    let stepper = StepperConfig::new(cfg.dt, cfg.t_end, cfg.observer_stride)?;
    let mut scratch = PcField::zeros(n, m)?;
    let mut du = PcField::zeros(n, m)?;
    let mut rows = Vec::new();
    let mut observed = PcField::zeros(n, m)?;
    evolve(
        u0.as_slice(),
        |_, x, dx| {
            scratch.as_mut_slice().copy_from_slice(x);
            system.full_rhs(&scratch, &mut du);
            dx.copy_from_slice(du.as_slice());
        },
        &stepper,
        |t, x| {
            observed.as_mut_slice().copy_from_slice(x);
            rows.push((stat_sample(t, &observed, &d, cfg.lambda_stat), ActiveModel::Full));
        },
    )?;
    Ok(rows)
}

/// Evolves a reduced model from the projected initial condition, memory at rest.
pub fn reduced_statistics(cfg: &RunConfig, spec: ReductionSpec) -> Result<Vec<(StatSample, ActiveModel)>, RunError> {
    let (n, m, lambda) = (cfg.n_modes, cfg.n_pc, cfg.lambda);
    let c = Arc::new(TripleTensor::new(m)?);
    let d = QuadTensor::new(m)?;
    let mut system = BurgersSystem::new(n, c, cfg.params(), cfg.convolution)?;
    let u0 = build_initial_field(n, m, cfg.alpha0, cfg.alpha1)?;
    let mut model = ReducedModel::new(&mut system, spec)?;
    let w0 = MemoryState::zeros(n, lambda, spec.memory_blocks())?;
    let init = model.pack(&u0, &w0)?;
    let stepper = StepperConfig::new(cfg.dt, cfg.t_end, cfg.observer_stride)?;
    let block = n * lambda;
    let mut observed = PcField::zeros(n, lambda)?;
    let mut rows = Vec::new();
    evolve(&init, |t, x, dx| model.rhs(t, x, dx), &stepper, |t, x| {
        observed.as_mut_slice().copy_from_slice(&x[..block]);
        rows.push((stat_sample(t, &observed, &d, cfg.lambda_stat), ActiveModel::Reduced));
    })?;
    Ok(rows)
}

/// Runs the configured pipeline and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let clock = Instant::now();
    let stats_path = output_path(&cfg.out, "_stats.csv");
    let mut files = Vec::new();
    let mut results: Vec<String> = Vec::new();
    let mut switch = None;

    match cfg.mode {
        Mode::Full => {
            write_stats(&stats_path, &full_statistics(cfg)?)?;
            files.push(stats_path);
        }
        Mode::Markovian => {
            let spec = ReductionSpec::markovian(cfg.lambda, cfg.n_pc)?;
            write_stats(&stats_path, &reduced_statistics(cfg, spec)?)?;
            files.push(stats_path);
        }
        Mode::Memory => {
            let t0 = cfg.t0.expect("validated");
            let spec = ReductionSpec::with_memory(cfg.lambda, cfg.n_pc, t0, cfg.n0)?;
            write_stats(&stats_path, &reduced_statistics(cfg, spec)?)?;
            files.push(stats_path);
        }
        Mode::Adaptive => {
            let acfg = cfg.adaptive();
            let c = Arc::new(TripleTensor::new(cfg.n_pc)?);
            let d = QuadTensor::new(cfg.n_pc)?;
            let mut system = BurgersSystem::new(cfg.n_modes, c, cfg.params(), cfg.convolution)?;
            let u0 = build_initial_field(cfg.n_modes, cfg.n_pc, cfg.alpha0, cfg.alpha1)?;
            let out = adaptive_run_from(&acfg, &mut system, &d, u0)?;
            write_stats(&stats_path, &out.stats)?;
            files.push(stats_path);
            let est_path = output_path(&cfg.out, "_estimator.csv");
            write_estimator(&est_path, &out.log)?;
            files.push(est_path);

            let report = match out.outcome {
                SwitchOutcome::Switched(r) => {
                    results.push("switched = true".into());
                    Some(r)
                }
                SwitchOutcome::NoSwitch(best) => {
                    results.push("switched = false".into());
                    results.push(
                        "warning = the epsilon minimum was never confirmed; the full system ran to t_end and the values below are the best candidate".into(),
                    );
                    best
                }
            };
            if let Some(r) = report {
                results.push(format!("t0_hat = {}", num(r.t0_hat)));
                results.push(format!("t_min = {}", num(r.t_min)));
                results.push(format!("y_hat = {}", num(r.y_hat)));
                results.push(format!("epsilon_min = {}", num(r.epsilon_min)));
                results.push(format!("newton_iterations_max = {}", r.newton_iterations_max));
            }
            results.push(format!("phase1_steps = {}", out.phase1_steps));
            results.push(format!("phase2_steps = {}", out.phase2_steps));
            results.push(format!("full_step_seconds = {}", num(out.full_step_seconds)));
            results.push(format!("estimator_step_seconds = {}", num(out.estimator_step_seconds)));
            if out.phase2_steps > 0 {
                results.push(format!("reduced_step_seconds = {}", num(out.reduced_step_seconds)));
                results.push(format!(
                    "reduced_faster_than_full = {}",
                    out.reduced_step_seconds < out.full_step_seconds
                ));
            }
            switch = Some(out.outcome);
        }
        Mode::Mc => {
            let mcfg = cfg.monte_carlo();
            let steps = (cfg.t_end / cfg.dt).round() as usize;
            let times: Vec<f64> = (0..=steps)
                .step_by(cfg.observer_stride)
                .map(|s| s as f64 * cfg.dt)
                .collect();
            let points = mc_statistics(&mcfg, &times)?;
            let path = output_path(&cfg.out, "_mc.csv");
            let mut w = create(&path)?;
            write_mc_csv(&points, &mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
            files.push(path);
        }
    }

    let wall_seconds = clock.elapsed().as_secs_f64();
    let manifest = output_path(&cfg.out, "_manifest.txt");
    let mut text = String::from("# settings\n");
    for line in cfg.resolved_lines() {
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str("# results\n");
    for line in &results {
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&format!("wall_seconds = {}\n", num(wall_seconds)));
    for f in &files {
        text.push_str(&format!("output = {}\n", f.display()));
    }
    let mut w = create(&manifest)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&manifest))?;
    files.push(manifest);

    Ok(RunSummary {
        files,
        switch,
        wall_seconds,
    })
}
