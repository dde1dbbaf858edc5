//! Mean and variance of the energy and of the squared gradient norm, read off
//! the chaos coefficients.
//!
//! With `E(ξ) = ½ ∫ u² dx = π Σ_k |u_k(ξ)|²` and
//! `G(ξ) = ∫ u_x² dx = 2π Σ_k k² |u_k(ξ)|²`, orthogonality of the Legendre
//! basis gives the means as weighted sums of `|u_{kr}|²`, and the second
//! moments as contractions with the fourth-moment tensor `d`.
//!
//! Only chaos rows `r < lambda_stat` enter; rows a field does not carry count
//! as zero.

use std::f64::consts::PI;

use crate::basis::QuadTensor;
use crate::field::PcField;

/// Statistics at one instant. Variances are clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSample {
    pub t: f64,
    pub mean_energy: f64,
    pub var_energy: f64,
    pub mean_gradient: f64,
    pub var_gradient: f64,
}

impl StatSample {
    pub fn std_energy(&self) -> f64 {
        self.var_energy.sqrt()
    }

    pub fn std_gradient(&self) -> f64 {
        self.var_gradient.sqrt()
    }
}

/// Roundoff floor below which a negative variance is treated as zero.
pub const VARIANCE_FLOOR: f64 = -1e-10;

fn weighted_mean(u: &PcField, lambda_stat: usize, weight: impl Fn(i64) -> f64) -> f64 {
    let mut total = 0.0;
    for r in 0..lambda_stat.min(u.n_pc()) {
        let row_sum: f64 = u
            .row(r)
            .iter()
            .enumerate()
            .map(|(idx, z)| weight(u.wavenumber(idx)) * z.norm_sqr())
            .sum();
        total += row_sum / (2 * r + 1) as f64;
    }
    total
}

/// `Σ_{r1..r4} A_{r1r2} A_{r3r4} d_{r1r2r3r4}` with `A_{ab} = Σ_k weight_k u_{ka} conj(u_{kb})`.
fn weighted_second_moment(u: &PcField, d: &QuadTensor, lambda_stat: usize, weight: impl Fn(i64) -> f64) -> f64 {
    let n = lambda_stat.min(u.n_pc());
    assert!(n <= d.order(), "quad tensor built for fewer orders than requested");
    let mut a = vec![num_complex::Complex64::new(0.0, 0.0); n * n];
    for r1 in 0..n {
        for r2 in 0..n {
            a[r1 * n + r2] = u
                .row(r1)
                .iter()
                .zip(u.row(r2))
                .enumerate()
                .map(|(idx, (x, y))| x * y.conj() * weight(u.wavenumber(idx)))
                .sum();
        }
    }
    let mut total = num_complex::Complex64::new(0.0, 0.0);
    for r1 in 0..n {
        for r2 in 0..n {
            for r3 in 0..n {
                for r4 in 0..n {
                    let dv = d.get(r1, r2, r3, r4);
                    if dv != 0.0 {
                        total += a[r1 * n + r2] * a[r3 * n + r4] * dv;
                    }
                }
            }
        }
    }
    debug_assert!(
        total.im.abs() <= 1e-10 * total.re.abs().max(1.0),
        "imaginary residue {} in second moment",
        total.im
    );
    total.re
}

/// `E[E] = ½ Σ_k Σ_{r<Λ} 2π |u_{kr}|² / (2r+1)`
pub fn mean_energy(u: &PcField, lambda_stat: usize) -> f64 {
    PI * weighted_mean(u, lambda_stat, |_| 1.0)
}

/// `Var[E] = ¼ (2π)² Σ A A d - E[E]²`, unclamped.
pub fn var_energy(u: &PcField, d: &QuadTensor, lambda_stat: usize) -> f64 {
    let mean = mean_energy(u, lambda_stat);
    PI * PI * weighted_second_moment(u, d, lambda_stat, |_| 1.0) - mean * mean
}

/// `E[G] = Σ_k Σ_{r<Λ} 2π k² |u_{kr}|² / (2r+1)`
pub fn mean_gradient(u: &PcField, lambda_stat: usize) -> f64 {
    2.0 * PI * weighted_mean(u, lambda_stat, |k| (k * k) as f64)
}

/// `Var[G] = (2π)² Σ A A d - E[G]²` with `k²` weights inside `A`, unclamped.
pub fn var_gradient(u: &PcField, d: &QuadTensor, lambda_stat: usize) -> f64 {
    let mean = mean_gradient(u, lambda_stat);
    4.0 * PI * PI * weighted_second_moment(u, d, lambda_stat, |k| (k * k) as f64) - mean * mean
}

/// All four statistics, variances clamped to be non-negative.
pub fn stat_sample(t: f64, u: &PcField, d: &QuadTensor, lambda_stat: usize) -> StatSample {
    StatSample {
        t,
        mean_energy: mean_energy(u, lambda_stat),
        var_energy: var_energy(u, d, lambda_stat).max(0.0),
        mean_gradient: mean_gradient(u, lambda_stat),
        var_gradient: var_gradient(u, d, lambda_stat).max(0.0),
    }
}
