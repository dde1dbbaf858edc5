//! Fixed-step modified Euler (Heun / explicit trapezoidal) integration over
//! flat complex state vectors.

use num_complex::Complex64;

use crate::error::{MzError, Result};

/// Step size, horizon and observer stride for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64, stride: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MzError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !(t_end >= dt) {
            return Err(MzError::InvalidArgument(format!(
                "final time {t_end} is shorter than one step {dt}"
            )));
        }
        if stride == 0 {
            return Err(MzError::InvalidArgument("observer stride must be at least 1".into()));
        }
        Ok(Self { dt, t_end, stride })
    }

    /// `round(t_end / dt)`
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Reusable Heun stepper holding its stage buffers.
#[derive(Debug, Clone)]
pub struct Heun {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    stage: Vec<Complex64>,
}

impl Heun {
    pub fn new(len: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            k1: vec![zero; len],
            k2: vec![zero; len],
            stage: vec![zero; len],
        }
    }

    /// Advances `state` from `t` to `t + dt` in place:
    /// `u + dt/2 (f(t, u) + f(t + dt, u + dt f(t, u)))`.
    ///
    /// `rhs(t, u, du)` must overwrite every entry of `du`.
    pub fn step<F>(&mut self, state: &mut [Complex64], t: f64, dt: f64, mut rhs: F) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        assert_eq!(state.len(), self.k1.len(), "state length changed");
        rhs(t, state, &mut self.k1);
        for ((s, u), k) in self.stage.iter_mut().zip(state.iter()).zip(&self.k1) {
            *s = u + k * dt;
        }
        rhs(t + dt, &self.stage, &mut self.k2);
        let half = 0.5 * dt;
        let mut finite = true;
        for ((u, a), b) in state.iter_mut().zip(&self.k1).zip(&self.k2) {
            *u += (a + b) * half;
            finite &= u.re.is_finite() && u.im.is_finite();
        }
        if finite {
            Ok(())
        } else {
            Err(MzError::IntegrationFailure { t: t + dt })
        }
    }
}

/// One Heun step returning the new state.
pub fn heun_step<F>(state: &[Complex64], rhs: F, t: f64, dt: f64) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let mut next = state.to_vec();
    Heun::new(state.len()).step(&mut next, t, dt, rhs)?;
    Ok(next)
}

/// Integrates from `t = 0` to `config.t_end`, calling `observer(t, state)` at
/// `t = 0` and after every `config.stride` steps.
pub fn evolve<F, O>(state: &[Complex64], mut rhs: F, config: &StepperConfig, mut observer: O) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]),
{
    let mut u = state.to_vec();
    let mut stepper = Heun::new(u.len());
    observer(0.0, &u);
    for step in 0..config.steps() {
        let t = step as f64 * config.dt;
        stepper.step(&mut u, t, config.dt, &mut rhs)?;
        if (step + 1) % config.stride == 0 {
            observer((step + 1) as f64 * config.dt, &u);
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decay(_t: f64, u: &[Complex64], du: &mut [Complex64]) {
        for (d, x) in du.iter_mut().zip(u) {
            *d = -x;
        }
    }

    fn one() -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0)]
    }

    #[test]
    fn single_step_examples() {
        let u = heun_step(&one(), decay, 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(u[0].re, 0.905, epsilon = 1e-15);

        let zero_rhs = |_: f64, _: &[Complex64], du: &mut [Complex64]| du.fill(Complex64::new(0.0, 0.0));
        assert_eq!(heun_step(&one(), zero_rhs, 0.0, 0.1).unwrap(), one());

        let constant = |_: f64, _: &[Complex64], du: &mut [Complex64]| du.fill(Complex64::new(1.0, 0.0));
        let u = heun_step(&[Complex64::new(0.0, 0.0)], constant, 0.0, 0.5).unwrap();
        assert_eq!(u[0].re, 0.5);
    }

    #[test]
    fn non_finite_result_reports_time() {
        let blowup = |_: f64, _: &[Complex64], du: &mut [Complex64]| du.fill(Complex64::new(f64::NAN, 0.0));
        let err = heun_step(&one(), blowup, 0.25, 0.5).unwrap_err();
        assert_eq!(err, MzError::IntegrationFailure { t: 0.75 });

        let cfg = StepperConfig::new(0.1, 1.0, 1).unwrap();
        let err = evolve(&one(), blowup, &cfg, |_, _| {}).unwrap_err();
        assert!(matches!(err, MzError::IntegrationFailure { .. }));
    }

    #[test]
    fn linear_decay_over_unit_time() {
        let cfg = StepperConfig::new(0.001, 1.0, 1000).unwrap();
        let u = evolve(&one(), decay, &cfg, |_, _| {}).unwrap();
        assert!((u[0].re - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn observer_call_count() {
        for (steps, stride) in [(10, 1), (10, 3), (1000, 10), (7, 7), (7, 8)] {
            let cfg = StepperConfig::new(0.01, steps as f64 * 0.01, stride).unwrap();
            let mut calls = 0;
            evolve(&one(), decay, &cfg, |_, _| calls += 1).unwrap();
            assert_eq!(calls, steps / stride + 1, "steps={steps} stride={stride}");
        }
    }

    #[test]
    fn second_order_convergence() {
        let err = |dt: f64| {
            let cfg = StepperConfig::new(dt, 1.0, usize::MAX).unwrap();
            let u = evolve(&one(), decay, &cfg, |_, _| {}).unwrap();
            (u[0].re - (-1.0f64).exp()).abs()
        };
        for dt in [0.1, 0.05, 0.01] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((3.6..=4.4).contains(&ratio), "dt={dt} ratio={ratio}");
        }
    }

    #[test]
    fn bitwise_deterministic() {
        let rotate = |_: f64, u: &[Complex64], du: &mut [Complex64]| {
            for (d, x) in du.iter_mut().zip(u) {
                *d = Complex64::new(0.0, 1.3) * x - x * x * 0.1;
            }
        };
        let cfg = StepperConfig::new(0.003, 2.0, 1).unwrap();
        let init = vec![Complex64::new(0.3, -0.2); 5];
        let a = evolve(&init, rotate, &cfg, |_, _| {}).unwrap();
        let b = evolve(&init, rotate, &cfg, |_, _| {}).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(0.0, 1.0, 1).is_err());
        assert!(StepperConfig::new(0.1, 0.05, 1).is_err());
        assert!(StepperConfig::new(0.1, 1.0, 0).is_err());
        assert_eq!(StepperConfig::new(0.001, 3.0, 10).unwrap().steps(), 3000);
    }
}
