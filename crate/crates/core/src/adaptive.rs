//! Adaptive run: evolve the full system while estimating `t₀`, then switch to
//! the reduced model once the estimate has settled.
//!
//! Phase 1 records estimator samples every step. After a warm-up it solves
//! for `ŷ` every `stride` steps and tracks `ε` between successive accepted
//! estimates. The instant `t_min` of the running minimum of `ε` is confirmed
//! once `ε` has stayed above that minimum for `confirm_window` consecutive
//! estimates. Phase 2 restarts from the full state stored at `t_min`, with the
//! memory variable initialized to the discrete memory integral at `ŷ(t_min)`,
//! and evolves only the reduced model.

use std::sync::Arc;
use std::time::Instant;

use crate::basis::{QuadTensor, TripleTensor};
use crate::burgers::{build_initial_field, BurgersParams, BurgersSystem, ConvolutionMethod};
use crate::error::{MzError, Result};
use crate::estimator::{epsilon, t0_from_y, EstimatorHistory};
use crate::field::PcField;
use crate::integrate::Heun;
use crate::reduction::{MemoryState, ReducedModel, ReductionSpec};
use crate::stats::{stat_sample, StatSample};

/// Parameters of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub n_modes: usize,
    pub n_pc: usize,
    pub lambda: usize,
    pub params: BurgersParams,
    pub dt: f64,
    pub t_end: f64,
    /// Chaos orders used for the statistics.
    pub lambda_stat: usize,
    /// Steps before the first estimate.
    pub warmup: usize,
    /// Consecutive estimates above the running minimum that confirm it.
    pub confirm_window: usize,
    /// Steps between estimates.
    pub stride: usize,
    /// Maximum number of stored estimator samples.
    pub history_cap: usize,
    /// Steps between statistics rows.
    pub observer_stride: usize,
    pub convolution: ConvolutionMethod,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            n_modes: 196,
            n_pc: 7,
            lambda: 2,
            params: BurgersParams::default(),
            dt: 0.001,
            t_end: 3.0,
            lambda_stat: 2,
            warmup: 50,
            confirm_window: 25,
            stride: 1,
            history_cap: 100_000,
            observer_stride: 10,
            convolution: ConvolutionMethod::Direct,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MzError::InvalidArgument(msg));
        if self.lambda == 0 || self.lambda >= self.n_pc {
            return bad(format!("adaptive runs need 1 <= lambda < M, got lambda={} M={}", self.lambda, self.n_pc));
        }
        if !(self.dt > 0.0) || !(self.t_end >= self.dt) {
            return bad(format!("invalid time grid dt={} t_end={}", self.dt, self.t_end));
        }
        if self.stride == 0 || self.observer_stride == 0 || self.confirm_window == 0 {
            return bad("strides and the confirmation window must be at least 1".into());
        }
        if self.lambda_stat == 0 {
            return bad("lambda_stat must be at least 1".into());
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Outcome of one estimation attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateStatus {
    Ok,
    NoRoot,
    Degenerate,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Ok => "ok",
            EstimateStatus::NoRoot => "no_root",
            EstimateStatus::Degenerate => "degenerate",
        }
    }
}

/// One row of the estimator log. `epsilon` belongs to the previous accepted
/// estimate: it compares that estimate with this one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub t: f64,
    pub y_hat: Option<f64>,
    pub t0_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub newton_iterations: usize,
    /// Normalized polynomial residual at `y_hat`.
    pub residual: Option<f64>,
    pub status: EstimateStatus,
}

/// The chosen switch point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchReport {
    pub t_min: f64,
    pub t0_hat: f64,
    pub y_hat: f64,
    pub epsilon_min: f64,
    /// Largest Newton iteration count among accepted estimates up to the decision.
    pub newton_iterations_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchOutcome {
    Switched(SwitchReport),
    /// The minimum was never confirmed; carries the best candidate seen.
    NoSwitch(Option<SwitchReport>),
}

/// Which model produced a statistics row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveModel {
    Full,
    Reduced,
}

impl ActiveModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActiveModel::Full => "full",
            ActiveModel::Reduced => "reduced",
        }
    }
}

/// Everything an adaptive run produces.
#[derive(Debug, Clone)]
pub struct AdaptiveOutput {
    pub outcome: SwitchOutcome,
    pub stats: Vec<(StatSample, ActiveModel)>,
    pub log: Vec<EstimateRecord>,
    /// Mean wall time of one full-system integration step, estimator excluded.
    pub full_step_seconds: f64,
    /// Mean wall time of estimator work per Phase 1 step.
    pub estimator_step_seconds: f64,
    /// Mean wall time of one reduced-model step.
    pub reduced_step_seconds: f64,
    pub phase1_steps: usize,
    pub phase2_steps: usize,
}

struct Candidate {
    step: usize,
    n_t: usize,
    y: f64,
    state: PcField,
}

/// Runs both phases from the standard uncertain initial condition.
pub fn adaptive_run(config: &AdaptiveConfig) -> Result<AdaptiveOutput> {
    config.validate()?;
    let c = Arc::new(TripleTensor::new(config.n_pc)?);
    let d = QuadTensor::new(config.n_pc)?;
    let mut system = BurgersSystem::new(config.n_modes, c, config.params, config.convolution)?;
    let u0 = build_initial_field(config.n_modes, config.n_pc, config.params.alpha0, config.params.alpha1)?;
    adaptive_run_from(config, &mut system, &d, u0)
}

/// Runs both phases from a given full initial state.
pub fn adaptive_run_from(
    config: &AdaptiveConfig,
    system: &mut BurgersSystem,
    d: &QuadTensor,
    u0: PcField,
) -> Result<AdaptiveOutput> {
    config.validate()?;
    let (n, m, lambda, dt) = (config.n_modes, config.n_pc, config.lambda, config.dt);
    if system.n_modes() != n || system.n_pc() != m || u0.n_modes() != n || u0.n_pc() != m {
        return Err(MzError::InvalidArgument("system, state and config shapes disagree".into()));
    }
    let total_steps = config.steps();
    let mut history = EstimatorHistory::new(dt, lambda, config.history_cap)?;
    let mut stats = Vec::new();
    let mut log = Vec::new();

    let mut u = u0;
    let mut heun = Heun::new(u.as_slice().len());
    let mut du = PcField::zeros(n, m)?;
    let mut scratch = PcField::zeros(n, m)?;
    let mut full_time = 0.0;
    let mut est_time = 0.0;

    let clock = Instant::now();
    history.record_sample(0.0, &u, system)?;
    est_time += clock.elapsed().as_secs_f64();
    stats.push((stat_sample(0.0, &u, d, config.lambda_stat), ActiveModel::Full));

    let mut previous: Option<Candidate> = None;
    let mut best: Option<(Candidate, f64)> = None;
    let mut newton_max = 0;
    let mut above = 0;
    let mut confirmed = false;
    let mut step = 0;

    while step < total_steps {
        let t = step as f64 * dt;
        let clock = Instant::now();
        heun.step(u.as_mut_slice(), t, dt, |_, x, dx| {
            scratch.as_mut_slice().copy_from_slice(x);
            system.full_rhs(&scratch, &mut du);
            dx.copy_from_slice(du.as_slice());
        })?;
        full_time += clock.elapsed().as_secs_f64();
        step += 1;
        let t = step as f64 * dt;

        let clock = Instant::now();
        history.record_sample(t, &u, system)?;
        if step % config.observer_stride == 0 {
            stats.push((stat_sample(t, &u, d, config.lambda_stat), ActiveModel::Full));
        }
        if step >= config.warmup && (step - config.warmup) % config.stride == 0 {
            let n_t = history.n_t().expect("nonempty history");
            match history.solve_y(history.y_hat) {
                Ok(sol) => {
                    newton_max = newton_max.max(sol.iterations);
                    let eps = previous.as_ref().map(|p| epsilon(p.y, sol.y, n_t));
                    history.y_hat = Some(sol.y);
                    log.push(EstimateRecord {
                        t,
                        y_hat: Some(sol.y),
                        t0_hat: Some(t0_from_y(sol.y, dt)?),
                        epsilon: eps,
                        newton_iterations: sol.iterations,
                        residual: Some(sol.residual),
                        status: EstimateStatus::Ok,
                    });
                    let current = Candidate {
                        step,
                        n_t,
                        y: sol.y,
                        state: u.clone(),
                    };
                    if let (Some(prev), Some(eps)) = (previous.take(), eps) {
                        history.epsilon_log.push((prev.step as f64 * dt, eps));
                        if best.as_ref().map_or(true, |(_, e)| eps < *e) {
                            best = Some((prev, eps));
                            above = 0;
                        } else {
                            above += 1;
                        }
                    }
                    previous = Some(current);
                }
                Err(MzError::NoRootInRange) => log.push(skipped(t, EstimateStatus::NoRoot)),
                Err(MzError::DegenerateEquation) => log.push(skipped(t, EstimateStatus::Degenerate)),
                Err(e) => return Err(e),
            }
            if above >= config.confirm_window {
                confirmed = true;
            }
        }
        est_time += clock.elapsed().as_secs_f64();
        if confirmed {
            break;
        }
    }
    let phase1_steps = step;
    let per_step = |time: f64, steps: usize| if steps > 0 { time / steps as f64 } else { 0.0 };

    let report = best.as_ref().map(|(cand, eps)| SwitchReport {
        t_min: cand.step as f64 * dt,
        t0_hat: t0_from_y(cand.y, dt).expect("accepted estimate lies in (0, 1)"),
        y_hat: cand.y,
        epsilon_min: *eps,
        newton_iterations_max: newton_max,
    });

    if !confirmed {
        return Ok(AdaptiveOutput {
            outcome: SwitchOutcome::NoSwitch(report),
            stats,
            log,
            full_step_seconds: per_step(full_time, phase1_steps),
            estimator_step_seconds: per_step(est_time, phase1_steps),
            reduced_step_seconds: 0.0,
            phase1_steps,
            phase2_steps: 0,
        });
    }

    let report = report.expect("confirmation implies a candidate");
    let (cand, _) = best.expect("confirmation implies a candidate");
    stats.retain(|(s, _)| s.t <= report.t_min + 0.5 * dt);

    let w0 = history.memory_integral_field(cand.y, cand.n_t)?;
    let spec = ReductionSpec::with_memory(lambda, m, report.t0_hat, 1)?;
    let mut model = ReducedModel::new(system, spec)?;
    let mut state = model.pack(&cand.state, &MemoryState::single(w0))?;
    let mut heun = Heun::new(state.len());
    let block = n * lambda;
    let mut reduced_time = 0.0;
    let mut step = cand.step;
    while step < total_steps {
        let t = step as f64 * dt;
        let clock = Instant::now();
        heun.step(&mut state, t, dt, |t, x, dx| model.rhs(t, x, dx))?;
        reduced_time += clock.elapsed().as_secs_f64();
        step += 1;
        if step % config.observer_stride == 0 {
            let u_hat = PcField::from_vec(n, lambda, state[..block].to_vec())?;
            let t = step as f64 * dt;
            stats.push((stat_sample(t, &u_hat, d, config.lambda_stat), ActiveModel::Reduced));
        }
    }
    let phase2_steps = step - cand.step;

    Ok(AdaptiveOutput {
        outcome: SwitchOutcome::Switched(report),
        stats,
        log,
        full_step_seconds: per_step(full_time, phase1_steps),
        estimator_step_seconds: per_step(est_time, phase1_steps),
        reduced_step_seconds: per_step(reduced_time, phase2_steps),
        phase1_steps,
        phase2_steps,
    })
}

fn skipped(t: f64, status: EstimateStatus) -> EstimateRecord {
    EstimateRecord {
        t,
        y_hat: None,
        t0_hat: None,
        epsilon: None,
        newton_iterations: 0,
        residual: None,
        status,
    }
}
