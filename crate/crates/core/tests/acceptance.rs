//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test -p mzuq --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use mzuq::adaptive::{adaptive_run, AdaptiveConfig, AdaptiveOutput, EstimateStatus, SwitchOutcome};
use mzuq::basis::{gauss_legendre_rule, triple_is_structural_zero, QuadTensor, TripleTensor};
use mzuq::burgers::{build_initial_field, BurgersParams, BurgersSystem, ConvolutionMethod};
use mzuq::config::RunConfig;
use mzuq::estimator::{MAX_NEWTON_ITER, CERTIFICATE_TOL};
use mzuq::integrate::{evolve, StepperConfig};
use mzuq::monte_carlo::{mc_statistics, McConfig};
use mzuq::reduction::{memory_derivatives, MemoryState, ReducedModel, ReductionSpec};
use mzuq::run::{full_statistics, reduced_statistics};
use mzuq::stats::{mean_energy, mean_gradient, stat_sample, var_energy, StatSample};
use mzuq::PcField;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(pairs: &[(&str, &str)]) -> RunConfig {
    let overrides: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    RunConfig::from_sources(None, &overrides).expect("valid acceptance config")
}

/// Evolves the full system, handing every state to `observe`.
fn full_run(n: usize, m: usize, nu: f64, dt: f64, t_end: f64, mut observe: impl FnMut(f64, &PcField)) -> PcField {
    let c = Arc::new(TripleTensor::new(m).unwrap());
    let params = BurgersParams { nu, ..BurgersParams::default() };
    let mut sys = BurgersSystem::new(n, c, params, ConvolutionMethod::Direct).unwrap();
    let u0 = build_initial_field(n, m, 1.0, 1.0).unwrap();
    let mut scratch = PcField::zeros(n, m).unwrap();
    let mut du = PcField::zeros(n, m).unwrap();
    let mut seen = PcField::zeros(n, m).unwrap();
    let end = evolve(
        u0.as_slice(),
        |_, x, d| {
            scratch.as_mut_slice().copy_from_slice(x);
            sys.full_rhs(&scratch, &mut du);
            d.copy_from_slice(du.as_slice());
        },
        &StepperConfig::new(dt, t_end, 1).unwrap(),
        |t, x| {
            seen.as_mut_slice().copy_from_slice(x);
            observe(t, &seen);
        },
    )
    .unwrap();
    PcField::from_vec(n, m, end).unwrap()
}

fn reference_adaptive() -> AdaptiveOutput {
    adaptive_run(&AdaptiveConfig::default()).expect("adaptive run")
}

fn criterion_1(out: &AdaptiveOutput) -> Outcome {
    match out.outcome {
        SwitchOutcome::Switched(r) => check(
            (0.34..=0.42).contains(&r.t0_hat),
            format!("t0_hat = {:.4} (t_min = {:.3}, y_hat = {:.6}) in [0.34, 0.42]", r.t0_hat, r.t_min, r.y_hat),
        ),
        SwitchOutcome::NoSwitch(best) => Err(format!("no switch; best candidate {best:?}")),
    }
}

fn criterion_2() -> Outcome {
    let (n, m) = (196, 7);
    let u0 = build_initial_field(n, m, 1.0, 1.0).unwrap();
    let d = QuadTensor::new(m).unwrap();
    let e = mean_energy(&u0, 2);
    let v = var_energy(&u0, &d, 2);
    let (e_ref, v_ref) = (2.0 * PI / 3.0, 16.0 * PI * PI / 45.0);
    let rel_e = (e - e_ref).abs() / e_ref;
    let rel_v = (v - v_ref).abs() / v_ref;
    let mc = McConfig {
        n_samples: 2000,
        seed: 2024,
        n_modes: n,
        nu: 0.03,
        dt: 0.001,
        t_end: 0.0,
        antithetic: false,
    };
    let p = mc_statistics(&mc, &[0.0]).unwrap()[0];
    let z_e = (p.energy.mean - e_ref).abs() / p.energy.mean_se;
    let z_v = (p.energy.var - v_ref).abs() / p.energy.var_se;
    check(
        rel_e < 1e-10 && rel_v < 1e-10 && z_e < 3.0 && z_v < 3.0,
        format!("PCE rel err mean {rel_e:.1e}, var {rel_v:.1e}; MC |z| mean {z_e:.2}, var {z_v:.2}"),
    )
}

fn criterion_3() -> Outcome {
    let (n, m, dt) = (32, 4, 0.001);
    let mut full = Vec::new();
    full_run(n, m, 0.03, dt, 1.0, |_, u| full.push(u.as_slice().to_vec()));
    let c = Arc::new(TripleTensor::new(m).unwrap());
    let mut sys = BurgersSystem::new(n, c, BurgersParams::default(), ConvolutionMethod::Direct).unwrap();
    let mut model = ReducedModel::new(&mut sys, ReductionSpec::markovian(m, m).unwrap()).unwrap();
    let u0 = build_initial_field(n, m, 1.0, 1.0).unwrap();
    let init = model.pack(&u0, &MemoryState::zeros(n, m, 0).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    evolve(&init, |t, x, d| model.rhs(t, x, d), &StepperConfig::new(dt, 1.0, 1).unwrap(), |_, x| {
        for (a, b) in x.iter().zip(&full[idx]) {
            worst = worst.max((a - b).norm());
        }
        idx += 1;
    })
    .unwrap();
    check(
        worst <= 1e-12 && idx == full.len(),
        format!("max |reduced - full| = {worst:.1e} over {idx} states"),
    )
}

fn criterion_4() -> Outcome {
    let (n, m, nu, dt) = (64, 7, 0.1, 0.001);
    let d = QuadTensor::new(m).unwrap();
    let times = [0.5, 1.0];
    let mut pce: Vec<StatSample> = Vec::new();
    full_run(n, m, nu, dt, 1.0, |t, u| {
        if times.iter().any(|s| (s - t).abs() < dt / 2.0) {
            pce.push(stat_sample(t, u, &d, m));
        }
    });
    let mc = McConfig {
        n_samples: 2000,
        seed: 7,
        n_modes: n,
        nu,
        dt,
        t_end: 1.0,
        antithetic: false,
    };
    let points = mc_statistics(&mc, &times).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, p) in pce.iter().zip(&points) {
        let z_mean = (s.mean_energy - p.energy.mean).abs() / p.energy.mean_se;
        let z_std = (s.std_energy() - p.energy.std).abs() / p.energy.std_se;
        ok &= z_mean < 3.0 && z_std < 3.0;
        parts.push(format!("t={}: |z| mean {z_mean:.2}, std {z_std:.2}", p.t));
    }
    check(ok && pce.len() == 2, parts.join("; "))
}

/// Trapezoidal integral of `|a - b|` over rows with `t <= t_max`.
fn integrated_gap(a: &[f64], b: &[f64], times: &[f64], t_max: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..times.len() {
        if times[i] > t_max + 1e-9 {
            break;
        }
        let h = times[i] - times[i - 1];
        total += 0.5 * h * ((a[i] - b[i]).abs() + (a[i - 1] - b[i - 1]).abs());
    }
    total
}

fn criterion_5(t0_hat: Option<f64>) -> Outcome {
    let Some(t0) = t0_hat else {
        return Err("no memory length available from criterion 1".into());
    };
    let base = [("mode", "full"), ("t_end", "2.0"), ("observer_stride", "1")];
    let full_cfg = config(&base);
    let series = |rows: Vec<(StatSample, _)>| -> (Vec<f64>, Vec<f64>) {
        rows.iter().map(|(s, _)| (s.t, s.mean_gradient)).unzip()
    };
    let (times, full) = series(full_statistics(&full_cfg).unwrap());
    let (_, markov) = series(reduced_statistics(&full_cfg, ReductionSpec::markovian(2, 7).unwrap()).unwrap());
    let (_, memory) = series(reduced_statistics(&full_cfg, ReductionSpec::with_memory(2, 7, t0, 1).unwrap()).unwrap());
    let gap_markov = integrated_gap(&markov, &full, &times, 2.0);
    let gap_memory = integrated_gap(&memory, &full, &times, 2.0);
    check(
        gap_memory < gap_markov,
        format!("integrated |Δ mean gradient| on [0, 2]: memory {gap_memory:.4e} < markovian {gap_markov:.4e} (t0 = {t0:.4})"),
    )
}

fn quadrature_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=24 {
        let rule = gauss_legendre_rule(n).map_err(|e| e.to_string())?;
        for p in 0..2 * n {
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            worst = worst.max((rule.integrate(|x| x.powi(p as i32)) - exact).abs());
        }
    }
    check(worst < 1e-13, format!("max error on x^p, p <= 2n-1, n <= 24: {worst:.1e}"))
}

fn tensor_pattern() -> Outcome {
    let c = TripleTensor::new(8).map_err(|e| e.to_string())?;
    let mut pattern_ok = true;
    for l in 0..8 {
        for m in 0..8 {
            for r in 0..8 {
                let zero = triple_is_structural_zero(l, m, r);
                let v = c.get(l, m, r);
                pattern_ok &= if zero { v == 0.0 } else { v.abs() > 1e-12 };
            }
        }
    }
    let values = [(c.get(0, 0, 0), 1.0), (c.get(1, 1, 0), 1.0 / 3.0), (c.get(1, 2, 1), 2.0 / 5.0)];
    let worst = values.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        pattern_ok && worst < 1e-14,
        format!("pattern matches: {pattern_ok}; c000, c110, c121 max error {worst:.1e}"),
    )
}

fn inviscid_conservation() -> Outcome {
    let (n, m) = (32, 4);
    let mut first = None;
    let mut drift: f64 = 0.0;
    full_run(n, m, 0.0, 0.001, 1.0, |_, u| {
        let e = mean_energy(u, m);
        let e0 = *first.get_or_insert(e);
        drift = drift.max((e - e0).abs() / e0);
    });
    check(drift < 1e-8, format!("relative mean-energy drift over 1000 steps at N=32: {drift:.2e}"))
}

fn reality_preservation() -> Outcome {
    let mut worst: f64 = 0.0;
    full_run(32, 4, 0.03, 0.001, 1.0, |_, u| worst = worst.max(u.reality_defect()));
    check(worst < 1e-13, format!("max reality defect over 1000 steps: {worst:.1e}"))
}

fn heun_order() -> Outcome {
    let err = |dt: f64| {
        let cfg = StepperConfig::new(dt, 1.0, usize::MAX).unwrap();
        let u = evolve(
            &[Complex64::new(1.0, 0.0)],
            |_, x, d| d[0] = -x[0],
            &cfg,
            |_, _| {},
        )
        .unwrap();
        (u[0].re - (-1.0f64).exp()).abs()
    };
    let ratios: Vec<f64> = [0.1, 0.05, 0.01].iter().map(|&dt| err(dt) / err(dt / 2.0)).collect();
    check(
        ratios.iter().all(|r| (3.6..=4.4).contains(r)),
        format!("error ratios under halving: {ratios:.3?}"),
    )
}

fn memory_ode_convergence() -> Outcome {
    // dw/dt = -(2/t0) w + 2 cos t against 2 ∫₀ᵗ e^{-λ(t-s)} cos s ds, λ = 2/t0
    let (t0, t_end): (f64, f64) = (0.5, 2.0);
    let lam = 2.0 / t0;
    let exact = 2.0 * (lam * t_end.cos() + t_end.sin() - lam * (-lam * t_end).exp()) / (lam * lam + 1.0);
    let err = |dt: f64| {
        let w = evolve(
            &[Complex64::new(0.0, 0.0)],
            |t, w, dw| memory_derivatives(w, &[Complex64::new(t.cos(), 0.0)], 1, t0, dw),
            &StepperConfig::new(dt, t_end, usize::MAX).unwrap(),
            |_, _| {},
        )
        .unwrap();
        (w[0].re - exact).abs()
    };
    let ratios: Vec<f64> = [0.005, 0.0025, 0.00125].iter().map(|&dt| err(dt) / err(dt / 2.0)).collect();
    check(
        ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        format!("terminal error ratios under halving: {ratios:.3?}"),
    )
}

fn newton_certificate(out: &AdaptiveOutput) -> Outcome {
    let accepted: Vec<_> = out.log.iter().filter(|r| r.status == EstimateStatus::Ok).collect();
    let max_iter = accepted.iter().map(|r| r.newton_iterations).max().unwrap_or(0);
    let max_res = accepted.iter().filter_map(|r| r.residual).map(f64::abs).fold(0.0, f64::max);
    check(
        !accepted.is_empty() && max_res < CERTIFICATE_TOL && max_iter <= 8 && max_iter <= MAX_NEWTON_ITER,
        format!("{} accepted estimates, max residual {max_res:.1e}, max iterations {max_iter}", accepted.len()),
    )
}

fn dissipation_identity() -> Outcome {
    // d/dt mean energy = -ν mean gradient when all orders are counted
    let (n, m, nu, dt) = (32, 4, 0.1, 0.001);
    let mut energy = Vec::new();
    let mut gradient = Vec::new();
    full_run(n, m, nu, dt, 1.0, |_, u| {
        energy.push(mean_energy(u, m));
        gradient.push(mean_gradient(u, m));
    });
    let mut worst: f64 = 0.0;
    for i in 1..energy.len() - 1 {
        let rate = (energy[i + 1] - energy[i - 1]) / (2.0 * dt);
        let predicted = -nu * gradient[i];
        worst = worst.max((rate - predicted).abs() / predicted.abs());
    }
    check(worst < 1e-3, format!("max relative mismatch of dE/dt and -ν G: {worst:.1e}"))
}

fn criterion_7(out: &AdaptiveOutput) -> Outcome {
    check(
        out.phase2_steps > 0 && out.reduced_step_seconds < out.full_step_seconds,
        format!(
            "reduced step {:.3e} s vs full step {:.3e} s (speed-up {:.1}x)",
            out.reduced_step_seconds,
            out.full_step_seconds,
            out.full_step_seconds / out.reduced_step_seconds
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failures = 0;
    let mut report = |label: &str, outcome: Outcome| {
        match &outcome {
            Ok(detail) => println!("PASS  {label}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {label}: {detail}");
            }
        }
    };

    let adaptive = reference_adaptive();
    let t0_hat = match adaptive.outcome {
        SwitchOutcome::Switched(r) => Some(r.t0_hat),
        SwitchOutcome::NoSwitch(_) => None,
    };
    report("1 memory length estimate", criterion_1(&adaptive));
    report("2 initial statistics", criterion_2());
    report("3 fully resolved reduced model equals full system", criterion_3());
    report("4 chaos expansion agrees with Monte Carlo", criterion_4());
    report("5 memory improves the mean gradient curve", criterion_5(t0_hat));
    report("6a quadrature exactness", quadrature_exactness());
    report("6b triple-product tensor", tensor_pattern());
    report("6c inviscid energy conservation", inviscid_conservation());
    report("6d reality preservation", reality_preservation());
    report("6e Heun order", heun_order());
    report("6f memory ODE convergence", memory_ode_convergence());
    report("6g Newton certificate", newton_certificate(&adaptive));
    report("6h energy-gradient dissipation identity", dissipation_identity());
    report("7 reduced step faster than full step", criterion_7(&adaptive));

    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
