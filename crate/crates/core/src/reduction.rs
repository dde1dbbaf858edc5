//! Mori-Zwanzig reduced model for the first `Λ` chaos orders.
//!
//! The projection `P` replaces every unresolved coefficient (`r ≥ Λ`) by zero.
//! With that choice the reduced dynamics read
//!
//! ```text
//! dû/dt      = PLû + Σ_i w⁽ⁱ⁾
//! dw⁽ⁱ⁾/dt   = -(2/Δt₀) w⁽ⁱ⁾ + (-1)^{i+1} 2 PLQLû + Σ_{j<i} (4/Δt₀)(-1)^{i+j+1} w⁽ʲ⁾
//! ```
//!
//! for `i = 1..n₀` and `Δt₀ = t₀ / n₀`: a finite memory of length `t₀` whose
//! convolution integral is replaced by auxiliary ODEs through the trapezoidal
//! rule on each subinterval. Higher memory levels are closed by zero.

use num_complex::Complex64;

use crate::burgers::BurgersSystem;
use crate::error::{MzError, Result};
use crate::field::PcField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Resolved set and memory parameters of a reduced model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionSpec {
    /// Number of resolved chaos orders `Λ`.
    pub lambda: usize,
    /// Number of chaos orders `M` of the full system.
    pub n_pc: usize,
    /// Memory length `t₀`.
    pub t0: f64,
    /// Number of memory subintervals `n₀`.
    pub n0: usize,
    pub memory_enabled: bool,
}

impl ReductionSpec {
    /// Reduced model keeping only the Markovian term.
    pub fn markovian(lambda: usize, n_pc: usize) -> Result<Self> {
        let spec = Self {
            lambda,
            n_pc,
            t0: f64::INFINITY,
            n0: 1,
            memory_enabled: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Reduced model with first-order memory of length `t0` over `n0` subintervals.
    pub fn with_memory(lambda: usize, n_pc: usize, t0: f64, n0: usize) -> Result<Self> {
        let spec = Self {
            lambda,
            n_pc,
            t0,
            n0,
            memory_enabled: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0 || self.lambda > self.n_pc {
            return Err(MzError::InvalidArgument(format!(
                "resolved orders must satisfy 1 <= lambda <= M, got lambda={} M={}",
                self.lambda, self.n_pc
            )));
        }
        if self.memory_enabled {
            if self.lambda >= self.n_pc {
                return Err(MzError::InvalidArgument(
                    "a memory term needs unresolved orders (lambda < M)".into(),
                ));
            }
            if !(self.t0 > 0.0 && self.t0.is_finite()) {
                return Err(MzError::InvalidArgument(format!(
                    "memory length must be positive, got {}",
                    self.t0
                )));
            }
            if self.n0 == 0 {
                return Err(MzError::InvalidArgument("need at least one memory subinterval".into()));
            }
        }
        Ok(())
    }

    /// Subinterval length `Δt₀ = t₀ / n₀`.
    pub fn subinterval(&self) -> f64 {
        self.t0 / self.n0 as f64
    }

    /// Number of memory blocks carried in the reduced state.
    pub fn memory_blocks(&self) -> usize {
        if self.memory_enabled {
            self.n0
        } else {
            0
        }
    }
}

/// Applies `P`: zeroes every chaos row `r ≥ lambda`.
pub fn project(u: &PcField, lambda: usize) -> PcField {
    let mut out = u.clone();
    for r in lambda.min(u.n_pc())..u.n_pc() {
        out.row_mut(r).fill(ZERO);
    }
    out
}

impl BurgersSystem {
    /// Markovian term `PLû`: the full right-hand side with both chaos sums
    /// restricted to resolved orders. Writes rows `0..lambda` of `du`.
    pub fn markovian_rhs(&mut self, u_hat: &PcField, lambda: usize, du: &mut PcField) {
        self.galerkin_rhs(u_hat, lambda, du);
    }

    /// `PLQLû`, written to rows `0..lambda` of `out`.
    ///
    /// Only the resolved rows of `u_hat` are read. The intermediate
    /// `(PLû)_{pl}` for `l ≥ Λ` has no viscous part since the projected
    /// unresolved coefficients vanish.
    pub fn plql_kernel(&mut self, u_hat: &PcField, lambda: usize, out: &mut PcField) {
        let m = self.n_pc();
        assert!(lambda <= m);
        if lambda == m {
            for r in 0..lambda {
                out.row_mut(r).fill(ZERO);
            }
            return;
        }
        let mut pl = std::mem::replace(&mut self.aux, PcField::zeros(2, 1).expect("valid shape"));
        self.advective_sum(u_hat, u_hat, 0..lambda, 0..lambda, lambda..m, 1.0, &mut pl, false);
        self.advective_sum(&pl, u_hat, lambda..m, 0..lambda, 0..lambda, 2.0, out, false);
        self.aux = pl;
    }

    /// `Pe^{tL}QLu`: the part of the resolved tendency driven by unresolved
    /// orders, evaluated on a full-system state. Writes rows `0..lambda` of `out`.
    pub fn petql_term(&mut self, u: &PcField, lambda: usize, out: &mut PcField) {
        let m = self.n_pc();
        assert!(lambda <= m && u.n_pc() == m);
        if lambda == m {
            for r in 0..lambda {
                out.row_mut(r).fill(ZERO);
            }
            return;
        }
        self.advective_sum(u, u, lambda..m, 0..lambda, 0..lambda, 2.0, out, false);
        self.advective_sum(u, u, lambda..m, lambda..m, 0..lambda, 1.0, out, true);
    }
}

/// Memory ODE right-hand side for `n0` blocks stored back to back in `w`.
///
/// `kernel` is `PLQLû` (same length as one block), `dt0` the subinterval length.
pub fn memory_derivatives(w: &[Complex64], kernel: &[Complex64], n0: usize, dt0: f64, dw: &mut [Complex64]) {
    let len = kernel.len();
    assert_eq!(w.len(), n0 * len);
    assert_eq!(dw.len(), n0 * len);
    let decay = 2.0 / dt0;
    let feed = 4.0 / dt0;
    for i in 1..=n0 {
        let sign_i = if i % 2 == 1 { 1.0 } else { -1.0 };
        let block = (i - 1) * len..i * len;
        for (pos, idx) in block.clone().enumerate() {
            dw[idx] = w[idx] * -decay + kernel[pos] * (2.0 * sign_i);
        }
        for j in 1..i {
            // (-1)^{i+j+1}
            let sign = if (i + j + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let src = (j - 1) * len;
            for (pos, idx) in block.clone().enumerate() {
                dw[idx] += w[src + pos] * (feed * sign);
            }
        }
    }
}

/// Memory variables `w⁽ⁱ⁾_{kr}` for `i = 1..n₀`, each a field over the resolved orders.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    blocks: Vec<PcField>,
}

impl MemoryState {
    pub fn zeros(n_modes: usize, lambda: usize, n0: usize) -> Result<Self> {
        Ok(Self {
            blocks: (0..n0)
                .map(|_| PcField::zeros(n_modes, lambda))
                .collect::<Result<_>>()?,
        })
    }

    /// A single-subinterval state with `w⁽¹⁾ = w`.
    pub fn single(w: PcField) -> Self {
        Self { blocks: vec![w] }
    }

    pub fn blocks(&self) -> &[PcField] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [PcField] {
        &mut self.blocks
    }

    /// `w₀ = Σ_i w⁽ⁱ⁾`
    pub fn total(&self) -> Option<PcField> {
        let mut iter = self.blocks.iter();
        let mut acc = iter.next()?.clone();
        for b in iter {
            for (a, x) in acc.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *a += x;
            }
        }
        Some(acc)
    }
}

/// Evaluates the reduced right-hand side `(dû, dw)`.
pub fn reduced_rhs(
    system: &mut BurgersSystem,
    u_hat: &PcField,
    w: &MemoryState,
    spec: &ReductionSpec,
) -> Result<(PcField, MemoryState)> {
    let mut model = ReducedModel::new(system, *spec)?;
    let state = model.pack(u_hat, w)?;
    let mut dstate = vec![ZERO; state.len()];
    model.rhs(0.0, &state, &mut dstate);
    let (du, dw) = model.unpack(&dstate)?;
    let dw = if spec.memory_enabled {
        dw
    } else {
        MemoryState::zeros(u_hat.n_modes(), spec.lambda, w.blocks.len())?
    };
    Ok((du, dw))
}

/// Reduced model over a flat state `[û | w⁽¹⁾ | … | w⁽ⁿ⁰⁾]`, each block holding
/// `Λ` chaos rows of the Fourier band.
pub struct ReducedModel<'a> {
    system: &'a mut BurgersSystem,
    spec: ReductionSpec,
    u_hat: PcField,
    du: PcField,
    kernel: PcField,
}

impl<'a> ReducedModel<'a> {
    pub fn new(system: &'a mut BurgersSystem, spec: ReductionSpec) -> Result<Self> {
        spec.validate()?;
        if spec.n_pc != system.n_pc() {
            return Err(MzError::InvalidArgument(format!(
                "reduction spec has M={} but the system has M={}",
                spec.n_pc,
                system.n_pc()
            )));
        }
        let n = system.n_modes();
        Ok(Self {
            u_hat: PcField::zeros(n, spec.lambda)?,
            du: PcField::zeros(n, spec.lambda)?,
            kernel: PcField::zeros(n, spec.lambda)?,
            system,
            spec,
        })
    }

    pub fn spec(&self) -> &ReductionSpec {
        &self.spec
    }

    fn block_len(&self) -> usize {
        self.system.n_modes() * self.spec.lambda
    }

    pub fn state_len(&self) -> usize {
        self.block_len() * (1 + self.spec.memory_blocks())
    }

    /// Flattens a resolved field and memory state into the integration vector.
    /// `u_hat` may carry more than `Λ` rows; only the resolved ones are kept.
    pub fn pack(&self, u_hat: &PcField, w: &MemoryState) -> Result<Vec<Complex64>> {
        let blocks = self.spec.memory_blocks();
        if blocks > 0 && w.blocks.len() != blocks {
            return Err(MzError::InvalidArgument(format!(
                "expected {blocks} memory blocks, got {}",
                w.blocks.len()
            )));
        }
        let mut state = Vec::with_capacity(self.state_len());
        state.extend_from_slice(u_hat.with_orders(self.spec.lambda)?.as_slice());
        for b in w.blocks.iter().take(blocks) {
            state.extend_from_slice(b.with_orders(self.spec.lambda)?.as_slice());
        }
        Ok(state)
    }

    pub fn unpack(&self, state: &[Complex64]) -> Result<(PcField, MemoryState)> {
        let n = self.system.n_modes();
        let len = self.block_len();
        let u_hat = PcField::from_vec(n, self.spec.lambda, state[..len].to_vec())?;
        let blocks = state[len..]
            .chunks(len)
            .map(|c| PcField::from_vec(n, self.spec.lambda, c.to_vec()))
            .collect::<Result<_>>()?;
        Ok((u_hat, MemoryState { blocks }))
    }

    /// Flat right-hand side suitable for [`crate::integrate::Heun::step`].
    pub fn rhs(&mut self, _t: f64, state: &[Complex64], dstate: &mut [Complex64]) {
        let len = self.block_len();
        let lambda = self.spec.lambda;
        self.u_hat.as_mut_slice().copy_from_slice(&state[..len]);
        self.system.markovian_rhs(&self.u_hat, lambda, &mut self.du);
        dstate[..len].copy_from_slice(self.du.as_slice());
        if !self.spec.memory_enabled {
            return;
        }
        let n0 = self.spec.n0;
        let w = &state[len..];
        for block in w.chunks(len) {
            for (d, x) in dstate[..len].iter_mut().zip(block) {
                *d += x;
            }
        }
        self.system.plql_kernel(&self.u_hat, lambda, &mut self.kernel);
        memory_derivatives(w, self.kernel.as_slice(), n0, self.spec.subinterval(), &mut dstate[len..]);
    }
}
