//! On-the-fly estimation of the memory length `t₀` from a full-system run.
//!
//! Along the full trajectory we record, at every step `t_j = j δt`,
//!
//! * `f_{kr}(t_j) = 2 PLQLû(t_j)`: the memory integrand at zero lag,
//! * `q_{kr}(t_j) = Pe^{tL}QLu(t_j)`: the exact unresolved contribution to the
//!   resolved tendency,
//! * the resolved coefficients `u_{kr}(t_j)`.
//!
//! The one-subinterval reduced model replaces `q` by the convolution
//! `∫₀ᵗ e^{-λ₀(t-s)} f(s) ds`, `λ₀ = 2/t₀`. Discretizing it with the trapezoidal
//! rule and writing `y = e^{-λ₀ δt}` turns it into a polynomial in `y`:
//!
//! ```text
//! I_{kr}(y) = δt/2 [ f(t_n) + 2 Σ_{j=1}^{n-1} y^{n-j} f(t_j) + yⁿ f(t_0) ]
//! ```
//!
//! Requiring that the reduced model reproduce the tendency of `Σ |u_{kr}|²`,
//! `Σ 2Re{I ū} = Σ 2Re{q ū}`, gives one real polynomial equation whose root
//! `ŷ ∈ (0, 1)` yields `t̂₀ = -2δt / ln ŷ`.

use num_complex::Complex64;

use crate::burgers::BurgersSystem;
use crate::error::{MzError, Result};
use crate::field::PcField;
use crate::reduction::project;

/// Convergence threshold on the Newton step.
pub const STEP_TOL: f64 = 1e-14;
/// Convergence threshold on the normalized polynomial residual.
pub const RESIDUAL_TOL: f64 = 1e-13;
/// Residual an accepted root must satisfy.
pub const CERTIFICATE_TOL: f64 = 1e-12;
/// Newton starting point when there is no previous estimate.
pub const DEFAULT_SEED: f64 = 0.5;
/// Iteration budget for Newton (and for the bracketed fallback).
pub const MAX_NEWTON_ITER: usize = 20;
/// Number of uniform intervals in the sign-change scan of `[0, 1]`.
pub const SCAN_INTERVALS: usize = 64;
/// Below this scale both sides of the matching equation count as zero.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Quantities recorded at one sampling instant, each over the resolved orders.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSample {
    pub t: f64,
    /// `2 PLQL` on the projected state.
    pub f: PcField,
    /// `Pe^{tL}QL` on the full state.
    pub q: PcField,
    /// Resolved coefficients.
    pub u: PcField,
}

/// Uniformly spaced record of the full-system run used by the estimator.
#[derive(Debug, Clone)]
pub struct EstimatorHistory {
    dt: f64,
    lambda: usize,
    cap: usize,
    samples: Vec<EstimatorSample>,
    /// Latest accepted estimate `ŷ`.
    pub y_hat: Option<f64>,
    /// `(t, ε(t))` for every pair of successive accepted estimates.
    pub epsilon_log: Vec<(f64, f64)>,
}

/// A root of the matching polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YSolution {
    pub y: f64,
    pub iterations: usize,
    /// Residual of the normalized polynomial at `y`.
    pub residual: f64,
}

impl EstimatorHistory {
    /// Empty history with sampling step `dt`, resolved orders `lambda` and at
    /// most `cap` samples.
    pub fn new(dt: f64, lambda: usize, cap: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(MzError::InvalidArgument(format!("sampling step must be positive, got {dt}")));
        }
        if lambda == 0 {
            return Err(MzError::InvalidArgument("need at least one resolved order".into()));
        }
        Ok(Self {
            dt,
            lambda,
            cap,
            samples: Vec::new(),
            y_hat: None,
            epsilon_log: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn samples(&self) -> &[EstimatorSample] {
        &self.samples
    }

    /// Index `n_t` of the newest sample (`t = n_t δt`), if any.
    pub fn n_t(&self) -> Option<usize> {
        self.samples.len().checked_sub(1)
    }

    /// Appends a sample supplied directly; `t` must be the next grid point.
    pub fn push_sample(&mut self, sample: EstimatorSample) -> Result<()> {
        let expected = self.samples.len() as f64 * self.dt;
        if (sample.t - expected).abs() > 1e-9 * self.dt.max(expected) {
            return Err(MzError::NonUniformSample {
                expected,
                got: sample.t,
            });
        }
        if self.samples.len() >= self.cap {
            return Err(MzError::HistoryCapExceeded { cap: self.cap });
        }
        for field in [&sample.f, &sample.q, &sample.u] {
            if field.n_pc() != self.lambda {
                return Err(MzError::InvalidArgument(format!(
                    "sample fields must carry {} resolved orders, got {}",
                    self.lambda,
                    field.n_pc()
                )));
            }
        }
        if let Some(first) = self.samples.first() {
            if first.f.n_modes() != sample.f.n_modes() {
                return Err(MzError::InvalidArgument("sample band size changed".into()));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Evaluates and stores `f`, `q` and `û` for the full state at time `t`.
    pub fn record_sample(&mut self, t: f64, full_state: &PcField, system: &mut BurgersSystem) -> Result<()> {
        let n = full_state.n_modes();
        let lambda = self.lambda;
        let mut f = PcField::zeros(n, lambda)?;
        let mut q = PcField::zeros(n, lambda)?;
        let projected = project(full_state, lambda);
        system.plql_kernel(&projected, lambda, &mut f);
        for z in f.as_mut_slice() {
            *z *= 2.0;
        }
        system.petql_term(full_state, lambda, &mut q);
        let u = full_state.with_orders(lambda)?;
        self.push_sample(EstimatorSample { t, f, q, u })
    }

    /// `I_{kr}(y)` at the newest sample.
    pub fn memory_integral(&self, y: f64, k: i64, r: usize) -> Complex64 {
        let n_t = self.n_t().expect("empty history");
        let idx = self.samples[0].f.index_of(k).expect("wavenumber outside band");
        self.integral_at(y, n_t, |s| s.f.row(r)[idx])
    }

    /// `I(y)` over every resolved `(k, r)`, using the samples up to index `upto`.
    pub fn memory_integral_field(&self, y: f64, upto: usize) -> Result<PcField> {
        let proto = &self.samples[upto].f;
        let mut out = PcField::zeros(proto.n_modes(), self.lambda)?;
        let len = out.as_slice().len();
        for pos in 0..len {
            out.as_mut_slice()[pos] = self.integral_at(y, upto, |s| s.f.as_slice()[pos]);
        }
        Ok(out)
    }

    fn integral_at(&self, y: f64, n: usize, value: impl Fn(&EstimatorSample) -> Complex64) -> Complex64 {
        assert!(n >= 1, "the memory integral needs at least two samples");
        // Horner over j = 0..n: weights 1, 2, ..., 2, 1
        let mut acc = value(&self.samples[0]);
        for j in 1..n {
            acc = acc * y + value(&self.samples[j]) * 2.0;
        }
        acc = acc * y + value(&self.samples[n]);
        acc * (self.dt / 2.0)
    }

    /// The matching polynomial at the newest sample.
    pub fn matching_polynomial(&self) -> Result<MatchingPolynomial> {
        let n_t = self.n_t().filter(|&n| n >= 1).ok_or_else(|| {
            MzError::InvalidArgument("matching needs at least two samples".into())
        })?;
        self.matching_polynomial_at(n_t)
    }

    /// The matching polynomial with `u` and `q` taken at sample `n`.
    pub fn matching_polynomial_at(&self, n: usize) -> Result<MatchingPolynomial> {
        if n == 0 || n >= self.samples.len() {
            return Err(MzError::InvalidArgument(format!("no matching polynomial at sample {n}")));
        }
        let current = &self.samples[n];
        let u = current.u.as_slice();
        let projection = |field: &PcField| -> f64 {
            field
                .as_slice()
                .iter()
                .zip(u)
                .map(|(a, b)| 2.0 * (a * b.conj()).re)
                .sum()
        };
        let target = projection(&current.q);
        let half = self.dt / 2.0;
        // coefficient of y^p is the weighted projection of f(t_{n-p})
        let raw: Vec<f64> = (0..=n)
            .map(|p| {
                let weight = if p == 0 || p == n { 1.0 } else { 2.0 };
                half * weight * projection(&self.samples[n - p].f)
            })
            .collect();
        MatchingPolynomial::new(raw, target)
    }

    /// Solves the matching equation at the newest sample.
    ///
    /// Newton starts from `seed` (the previous estimate); without a seed the
    /// largest bracketed root in `(0, 1)` is taken.
    pub fn solve_y(&self, seed: Option<f64>) -> Result<YSolution> {
        self.matching_polynomial()?.solve(seed)
    }
}

/// `P(y) = Σ_p a_p y^p - target`, stored normalized by `Σ|a_p| + |target|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingPolynomial {
    /// Ascending coefficients with the target folded into the constant term.
    coeffs: Vec<f64>,
    scale: f64,
}

impl MatchingPolynomial {
    /// `raw[p]` multiplies `y^p`; `target` is the right-hand side.
    pub fn new(raw: Vec<f64>, target: f64) -> Result<Self> {
        if !target.is_finite() || raw.iter().any(|c| !c.is_finite()) {
            return Err(MzError::InvalidArgument("matching equation has non-finite terms".into()));
        }
        let scale = raw.iter().map(|c| c.abs()).sum::<f64>() + target.abs();
        if scale < DEGENERACY_TOL {
            return Err(MzError::DegenerateEquation);
        }
        let mut coeffs: Vec<f64> = raw.iter().map(|c| c / scale).collect();
        coeffs[0] -= target / scale;
        Ok(Self { coeffs, scale })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Normalization factor applied to the raw equation.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Normalized `(P(y), P'(y))`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * y + p;
            p = p * y + c;
        }
        (p, dp)
    }

    fn converged(step: f64, residual: f64) -> bool {
        step.abs() < STEP_TOL || residual.abs() < RESIDUAL_TOL
    }

    /// Plain Newton from `y0`; `None` if it leaves `(0, 1)` or stalls.
    fn newton(&self, y0: f64) -> Option<YSolution> {
        let mut y = y0;
        for it in 1..=MAX_NEWTON_ITER {
            let (p, dp) = self.eval(y);
            if p.abs() < RESIDUAL_TOL {
                return Some(YSolution { y, iterations: it - 1, residual: p });
            }
            if dp == 0.0 || !dp.is_finite() {
                return None;
            }
            let step = p / dp;
            y -= step;
            if !(y > 0.0 && y < 1.0) {
                return None;
            }
            let residual = self.eval(y).0;
            if Self::converged(step, residual) {
                return Some(YSolution { y, iterations: it, residual });
            }
        }
        None
    }

    /// Newton safeguarded by bisection inside a sign-changing bracket.
    fn bracketed(&self, mut lo: f64, mut hi: f64) -> YSolution {
        let (plo, _) = self.eval(lo);
        if plo == 0.0 {
            return YSolution { y: lo, iterations: 0, residual: 0.0 };
        }
        let rising = plo < 0.0;
        let mut y = 0.5 * (lo + hi);
        let mut iterations = 0;
        for it in 1..=(4 * MAX_NEWTON_ITER + 64) {
            iterations = it;
            let (p, dp) = self.eval(y);
            if p.abs() < RESIDUAL_TOL {
                return YSolution { y, iterations, residual: p };
            }
            if (p < 0.0) == rising {
                lo = y;
            } else {
                hi = y;
            }
            let newton = y - p / dp;
            let next = if dp != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = next - y;
            y = next;
            if step.abs() < STEP_TOL || hi - lo < STEP_TOL {
                break;
            }
        }
        YSolution { y, iterations, residual: self.eval(y).0 }
    }

    /// Sign-changing subintervals of a uniform scan of `[0, 1]`; an interior
    /// grid point where `P` vanishes exactly is returned as a zero-width bracket.
    fn brackets(&self) -> Vec<(f64, f64)> {
        let grid: Vec<(f64, f64)> = (0..=SCAN_INTERVALS)
            .map(|i| {
                let y = i as f64 / SCAN_INTERVALS as f64;
                (y, self.eval(y).0)
            })
            .collect();
        let mut out = Vec::new();
        for (i, w) in grid.windows(2).enumerate() {
            let ((ya, a), (yb, b)) = (w[0], w[1]);
            if i > 0 && a == 0.0 {
                out.push((ya, ya));
            }
            if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
                out.push((ya, yb));
            }
        }
        out
    }

    /// Root in `(0, 1)` by Newton from `seed` (0.5 when absent), falling back
    /// to the sign-change bracket nearest the seed.
    pub fn solve(&self, seed: Option<f64>) -> Result<YSolution> {
        let y0 = seed.filter(|y| *y > 0.0 && *y < 1.0).unwrap_or(DEFAULT_SEED);
        let sol = match self.newton(y0) {
            Some(sol) => sol,
            None => {
                let brackets = self.brackets();
                let nearest = brackets.iter().min_by(|a, b| {
                    distance_to_interval(y0, **a).total_cmp(&distance_to_interval(y0, **b))
                });
                match nearest {
                    Some(&(lo, hi)) => self.bracketed(lo, hi),
                    None => return Err(MzError::NoRootInRange),
                }
            }
        };
        if sol.y > 0.0 && sol.y < 1.0 && sol.residual.abs() < CERTIFICATE_TOL {
            Ok(sol)
        } else {
            Err(MzError::NoRootInRange)
        }
    }
}

fn distance_to_interval(y: f64, (lo, hi): (f64, f64)) -> f64 {
    if y < lo {
        lo - y
    } else if y > hi {
        y - hi
    } else {
        0.0
    }
}

/// `t̂₀ = -2δt / ln ŷ` for `ŷ ∈ (0, 1)`.
pub fn t0_from_y(y: f64, dt: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(MzError::InvalidArgument(format!("decay factor must lie in (0, 1), got {y}")));
    }
    // y - 1 is exact for y >= 0.5, so ln_1p keeps full relative accuracy near 1
    let log = if y >= 0.5 { (y - 1.0).ln_1p() } else { y.ln() };
    Ok(-2.0 * dt / log)
}

/// `ŷ = exp(-2δt / t₀)`, the inverse of [`t0_from_y`].
pub fn y_from_t0(t0: f64, dt: f64) -> f64 {
    (-2.0 * dt / t0).exp()
}

/// `ε = max_{l ∈ 1..=n_t} |y_currˡ - y_prevˡ|`
pub fn epsilon(y_prev: f64, y_curr: f64, n_t: usize) -> f64 {
    let mut pp = 1.0;
    let mut pc = 1.0;
    let mut worst: f64 = 0.0;
    for _ in 0..n_t {
        pp *= y_prev;
        pc *= y_curr;
        worst = worst.max((pc - pp).abs());
    }
    worst
}
