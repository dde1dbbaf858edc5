//! Monte Carlo reference statistics.
//!
//! Each sample draws `ξ ~ U[-1, 1]` and integrates the deterministic Galerkin
//! system from `(1 + ξ) sin x` with the same Heun stepper as the chaos
//! expansion. Draws come from ChaCha8 seeded with `seed_from_u64(seed)`, so a
//! seed fixes the sample set regardless of thread count. Samples run in
//! parallel; results are aggregated in sample order.

use std::io::Write;
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::TripleTensor;
use crate::burgers::{deterministic_initial_field, BurgersParams, BurgersSystem, ConvolutionMethod};
use crate::error::{MzError, Result};
use crate::field::PcField;
use crate::integrate::Heun;
use crate::stats::{mean_energy, mean_gradient};

/// Parameters of a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub n_modes: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Draw samples in pairs `(ξ, -ξ)`.
    pub antithetic: bool,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(MzError::InvalidArgument(format!(
                "need at least 2 samples for a variance, got {}",
                self.n_samples
            )));
        }
        if self.antithetic && self.n_samples % 2 != 0 {
            return Err(MzError::InvalidArgument("antithetic sampling needs an even sample count".into()));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(MzError::InvalidArgument(format!("invalid time grid dt={} t_end={}", self.dt, self.t_end)));
        }
        if self.nu < 0.0 {
            return Err(MzError::InvalidArgument(format!("viscosity must be non-negative, got {}", self.nu)));
        }
        Ok(())
    }

    fn group_size(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }
}

/// The `ξ` values used by [`mc_statistics`], in aggregation order.
pub fn draw_samples(cfg: &McConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let uniform = Uniform::new_inclusive(-1.0, 1.0);
    if cfg.antithetic {
        (0..cfg.n_samples / 2)
            .flat_map(|_| {
                let xi = uniform.sample(&mut rng);
                [xi, -xi]
            })
            .collect()
    } else {
        (0..cfg.n_samples).map(|_| uniform.sample(&mut rng)).collect()
    }
}

/// Energy `½ Σ 2π|u_k|²` of a deterministic field.
pub fn sample_energy(u: &PcField) -> f64 {
    mean_energy(u, 1)
}

/// Gradient norm `Σ 2π k²|u_k|²` of a deterministic field.
pub fn sample_gradient(u: &PcField) -> f64 {
    mean_gradient(u, 1)
}

/// Evolves the deterministic problem for one `ξ`, calling `observer(step, t, u)`
/// at step 0 and after every step.
pub fn sample_trajectory<O>(xi: f64, n_modes: usize, nu: f64, dt: f64, t_end: f64, observer: O) -> Result<PcField>
where
    O: FnMut(usize, f64, &PcField),
{
    let c = Arc::new(TripleTensor::new(1)?);
    let params = BurgersParams { nu, ..BurgersParams::default() };
    let mut system = BurgersSystem::new(n_modes, c, params, ConvolutionMethod::Direct)?;
    trajectory_with(&mut system, xi, dt, t_end, observer)
}

fn trajectory_with<O>(system: &mut BurgersSystem, xi: f64, dt: f64, t_end: f64, mut observer: O) -> Result<PcField>
where
    O: FnMut(usize, f64, &PcField),
{
    if !(-1.0..=1.0).contains(&xi) {
        return Err(MzError::InvalidArgument(format!("ξ must lie in [-1, 1], got {xi}")));
    }
    let n = system.n_modes();
    let mut u = deterministic_initial_field(n, 1.0 + xi)?;
    let mut scratch = u.clone();
    let mut du = u.clone();
    let mut heun = Heun::new(u.as_slice().len());
    let steps = (t_end / dt).round() as usize;
    observer(0, 0.0, &u);
    for step in 0..steps {
        heun.step(u.as_mut_slice(), step as f64 * dt, dt, |_, x, dx| {
            scratch.as_mut_slice().copy_from_slice(x);
            system.full_rhs(&scratch, &mut du);
            dx.copy_from_slice(du.as_slice());
        })?;
        observer(step + 1, (step + 1) as f64 * dt, &u);
    }
    Ok(u)
}

/// Estimate of a mean, a variance and a standard deviation with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMoments {
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub var_se: f64,
    pub std: f64,
    pub std_se: f64,
}

impl McMoments {
    /// Moments of `values`, whose consecutive runs of `group` entries are
    /// correlated (antithetic pairs) and independent across runs.
    pub fn from_values(values: &[f64], group: usize) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // standard errors from independent group averages of x and (x - mean)²
        let groups = values.len() / group;
        let group_mean = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            values.chunks(group).map(|c| c.iter().map(|&x| f(x)).sum::<f64>() / group as f64).collect()
        };
        let se = |v: Vec<f64>| -> f64 {
            let g = groups as f64;
            let m = v.iter().sum::<f64>() / g;
            let s2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (g - 1.0);
            (s2 / g).sqrt()
        };
        let mean_se = se(group_mean(&|x| x));
        let var_se = se(group_mean(&|x| (x - mean).powi(2)));
        let std = var.sqrt();
        let std_se = if std > 0.0 { var_se / (2.0 * std) } else { 0.0 };
        Self {
            mean,
            mean_se,
            var,
            var_se,
            std,
            std_se,
        }
    }
}

/// Monte Carlo statistics at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPoint {
    pub t: f64,
    pub energy: McMoments,
    pub gradient: McMoments,
}

/// Sample statistics of energy and gradient norm at each of `times`.
///
/// Every time must lie in `[0, t_end]`; it is evaluated at the nearest step.
pub fn mc_statistics(cfg: &McConfig, times: &[f64]) -> Result<Vec<McPoint>> {
    cfg.validate()?;
    let steps: Vec<usize> = times
        .iter()
        .map(|&t| {
            if !(0.0..=cfg.t_end + 1e-12).contains(&t) {
                Err(MzError::InvalidArgument(format!("output time {t} outside [0, {}]", cfg.t_end)))
            } else {
                Ok((t / cfg.dt).round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    let last = steps.iter().copied().max().unwrap_or(0);
    let horizon = last as f64 * cfg.dt;
    let c = Arc::new(TripleTensor::new(1)?);
    let params = BurgersParams { nu: cfg.nu, ..BurgersParams::default() };
    let make_system = || BurgersSystem::new(cfg.n_modes, c.clone(), params, ConvolutionMethod::Direct);
    make_system()?;

    let xis = draw_samples(cfg);
    let per_sample: Vec<Vec<(f64, f64)>> = xis
        .par_iter()
        .map_init(
            || make_system().expect("validated above"),
            |system, &xi| {
                let mut out = vec![(0.0, 0.0); steps.len()];
                trajectory_with(system, xi, cfg.dt, horizon, |step, _, u| {
                    for (slot, &s) in out.iter_mut().zip(&steps) {
                        if s == step {
                            *slot = (sample_energy(u), sample_gradient(u));
                        }
                    }
                })?;
                Ok(out)
            },
        )
        .collect::<Result<_>>()?;

    let group = cfg.group_size();
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let energy: Vec<f64> = per_sample.iter().map(|s| s[i].0).collect();
            let gradient: Vec<f64> = per_sample.iter().map(|s| s[i].1).collect();
            McPoint {
                t,
                energy: McMoments::from_values(&energy, group),
                gradient: McMoments::from_values(&gradient, group),
            }
        })
        .collect())
}

/// Writes `t,stat,value,stderr` rows for every statistic of every point.
pub fn write_mc_csv<W: Write>(points: &[McPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,stat,value,stderr")?;
    for p in points {
        for (name, m) in [("energy", &p.energy), ("gradient", &p.gradient)] {
            for (stat, value, se) in [
                ("mean", m.mean, m.mean_se),
                ("var", m.var, m.var_se),
                ("std", m.std, m.std_se),
            ] {
                writeln!(out, "{:.14e},{stat}_{name},{value:.14e},{se:.14e}", p.t)?;
            }
        }
    }
    Ok(())
}
