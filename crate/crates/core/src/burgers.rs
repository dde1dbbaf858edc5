//! Fourier-Galerkin viscous Burgers equation with a Legendre chaos expansion.
//!
//! For `u(x, t, ξ) = Σ_k Σ_r u_{kr}(t) L_r(ξ) e^{ikx}` the stochastic Galerkin
//! system reads
//!
//! ```text
//! du_{kr}/dt = -(ik/2) Σ_{l,m} Σ_{p+q=k} u_{pl} u_{qm} c_{lmr} - ν k² u_{kr}
//! ```
//!
//! where the wavenumber sum is Galerkin-truncated: only `p, q` inside the band
//! contribute. The same chaos-bilinear form, restricted to subsets of
//! chaos orders, is the building block of the reduced-model terms in
//! [`crate::reduction`].

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::basis::TripleTensor;
use crate::error::{MzError, Result};
use crate::field::PcField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Physical parameters of the uncertain Burgers problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    /// Viscosity; zero is allowed for conservation checks.
    pub nu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
}

impl Default for BurgersParams {
    fn default() -> Self {
        Self {
            nu: 0.03,
            alpha0: 1.0,
            alpha1: 1.0,
        }
    }
}

/// Chaos coefficients of `u0(x, ξ) = (α0 + α1 ξ) sin x`.
pub fn build_initial_field(n_modes: usize, n_pc: usize, alpha0: f64, alpha1: f64) -> Result<PcField> {
    if n_modes < 4 {
        return Err(MzError::InvalidArgument(format!(
            "need at least 4 Fourier modes, got {n_modes}"
        )));
    }
    if n_pc < 2 {
        return Err(MzError::InvalidArgument(
            "the initial condition is linear in ξ and needs at least 2 chaos orders".into(),
        ));
    }
    let mut u = PcField::zeros(n_modes, n_pc)?;
    // sin x = (e^{ix} - e^{-ix}) / 2i
    for (r, alpha) in [(0, alpha0), (1, alpha1)] {
        u.set(1, r, Complex64::new(0.0, -alpha / 2.0));
        u.set(-1, r, Complex64::new(0.0, alpha / 2.0));
    }
    Ok(u)
}

/// Single-order field for the deterministic problem `u0(x) = amplitude · sin x`.
pub fn deterministic_initial_field(n_modes: usize, amplitude: f64) -> Result<PcField> {
    if n_modes < 4 {
        return Err(MzError::InvalidArgument(format!(
            "need at least 4 Fourier modes, got {n_modes}"
        )));
    }
    let mut u = PcField::zeros(n_modes, 1)?;
    u.set(1, 0, Complex64::new(0.0, -amplitude / 2.0));
    u.set(-1, 0, Complex64::new(0.0, amplitude / 2.0));
    Ok(u)
}

/// Galerkin-truncated convolution over one band:
/// `out[k] = Σ_{p+q=k, p,q ∈ F} a[p] b[q]`, with band index `k + N/2`.
pub fn truncated_convolution(a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
    let n = a.len();
    assert_eq!(b.len(), n);
    assert_eq!(out.len(), n);
    let half = n / 2;
    for (kidx, slot) in out.iter_mut().enumerate() {
        // q index = kidx + half - pidx must lie in [0, n)
        let lo = (kidx + half + 1).saturating_sub(n);
        let hi = (kidx + half).min(n - 1);
        let mut acc = ZERO;
        for pidx in lo..=hi {
            acc += a[pidx] * b[kidx + half - pidx];
        }
        *slot = acc;
    }
}

/// How wavenumber convolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    /// Direct truncated sum, `O(N²)` per chaos pair.
    #[default]
    Direct,
    /// Products on a zero-padded grid of `2N` points; identical up to roundoff.
    Fft,
}

impl std::str::FromStr for ConvolutionMethod {
    type Err = MzError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "fft" => Ok(Self::Fft),
            other => Err(MzError::InvalidArgument(format!(
                "unknown convolution method `{other}` (expected direct or fft)"
            ))),
        }
    }
}

struct FftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    phys_a: Vec<Vec<Complex64>>,
    phys_b: Vec<Vec<Complex64>>,
    acc: Vec<Complex64>,
}

impl FftPlan {
    fn new(n_modes: usize, n_pc: usize) -> Self {
        let len = 2 * n_modes;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            len,
            forward,
            inverse,
            scratch: vec![ZERO; scratch_len],
            phys_a: vec![vec![ZERO; len]; n_pc],
            phys_b: vec![vec![ZERO; len]; n_pc],
            acc: vec![ZERO; len],
        }
    }
}

fn to_physical(row: &[Complex64], buf: &mut [Complex64], inverse: &dyn Fft<f64>, scratch: &mut [Complex64]) {
    let n = row.len();
    let len = buf.len();
    buf.fill(ZERO);
    for (idx, &v) in row.iter().enumerate() {
        let k = idx as i64 - (n / 2) as i64;
        buf[k.rem_euclid(len as i64) as usize] = v;
    }
    inverse.process_with_scratch(buf, scratch);
}

/// Evaluates sums of the form `Σ_{l∈L, m∈M} c_{lmr} (a_l ⋆ b_m)` per chaos row `r`.
struct ChaosBilinear {
    n_modes: usize,
    method: ConvolutionMethod,
    conv: Vec<Complex64>,
    fft: Option<FftPlan>,
    targets: Vec<(usize, f64)>,
}

impl ChaosBilinear {
    fn new(n_modes: usize, n_pc: usize, method: ConvolutionMethod) -> Self {
        Self {
            n_modes,
            method,
            conv: vec![ZERO; n_modes],
            fft: matches!(method, ConvolutionMethod::Fft).then(|| FftPlan::new(n_modes, n_pc)),
            targets: Vec::new(),
        }
    }

    /// `out[r] += scale · Σ_{l∈ls, m∈ms} c_{lmr} (a_l ⋆ b_m)` for `r ∈ rs`.
    ///
    /// When `same` is set, `a` and `b` are the same field and `ls == ms`, and
    /// each unordered pair is convolved once.
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &mut self,
        c: &TripleTensor,
        a: &PcField,
        b: &PcField,
        ls: Range<usize>,
        ms: Range<usize>,
        rs: Range<usize>,
        scale: f64,
        out: &mut PcField,
    ) {
        let same = std::ptr::eq(a, b) && ls == ms;
        match self.method {
            ConvolutionMethod::Direct => self.accumulate_direct(c, a, b, ls, ms, rs, scale, same, out),
            ConvolutionMethod::Fft => self.accumulate_fft(c, a, b, ls, ms, rs, scale, same, out),
        }
    }

    fn collect_targets(targets: &mut Vec<(usize, f64)>, c: &TripleTensor, l: usize, m: usize, rs: &Range<usize>, weight: f64) {
        targets.clear();
        for r in rs.clone() {
            let v = c.get(l, m, r);
            if v != 0.0 {
                targets.push((r, weight * v));
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate_direct(
        &mut self,
        c: &TripleTensor,
        a: &PcField,
        b: &PcField,
        ls: Range<usize>,
        ms: Range<usize>,
        rs: Range<usize>,
        scale: f64,
        same: bool,
        out: &mut PcField,
    ) {
        for l in ls {
            for m in ms.clone() {
                let weight = match (same, l.cmp(&m)) {
                    (true, std::cmp::Ordering::Greater) => continue,
                    (true, std::cmp::Ordering::Less) => 2.0,
                    _ => 1.0,
                };
                Self::collect_targets(&mut self.targets, c, l, m, &rs, weight * scale);
                if self.targets.is_empty() {
                    continue;
                }
                truncated_convolution(a.row(l), b.row(m), &mut self.conv);
                for &(r, coef) in &self.targets {
                    for (o, v) in out.row_mut(r).iter_mut().zip(&self.conv) {
                        *o += v * coef;
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate_fft(
        &mut self,
        c: &TripleTensor,
        a: &PcField,
        b: &PcField,
        ls: Range<usize>,
        ms: Range<usize>,
        rs: Range<usize>,
        scale: f64,
        same: bool,
        out: &mut PcField,
    ) {
        let plan = self.fft.as_mut().expect("fft plan");
        let n = self.n_modes;
        for l in ls.clone() {
            to_physical(a.row(l), &mut plan.phys_a[l], plan.inverse.as_ref(), &mut plan.scratch);
        }
        if !same {
            for m in ms.clone() {
                to_physical(b.row(m), &mut plan.phys_b[m], plan.inverse.as_ref(), &mut plan.scratch);
            }
        }
        let inv_len = 1.0 / plan.len as f64;
        for r in rs {
            plan.acc.fill(ZERO);
            let mut any = false;
            for l in ls.clone() {
                for m in ms.clone() {
                    let weight = match (same, l.cmp(&m)) {
                        (true, std::cmp::Ordering::Greater) => continue,
                        (true, std::cmp::Ordering::Less) => 2.0,
                        _ => 1.0,
                    };
                    let coef = c.get(l, m, r);
                    if coef == 0.0 {
                        continue;
                    }
                    any = true;
                    let w = weight * coef;
                    let pb = if same { &plan.phys_a[m] } else { &plan.phys_b[m] };
                    for ((acc, x), y) in plan.acc.iter_mut().zip(&plan.phys_a[l]).zip(pb) {
                        *acc += x * y * w;
                    }
                }
            }
            if !any {
                continue;
            }
            plan.forward.process_with_scratch(&mut plan.acc, &mut plan.scratch);
            let row = out.row_mut(r);
            for (idx, o) in row.iter_mut().enumerate() {
                let k = idx as i64 - (n / 2) as i64;
                *o += plan.acc[k.rem_euclid(plan.len as i64) as usize] * (scale * inv_len);
            }
        }
    }
}

/// Right-hand side evaluator for the chaos-coupled Burgers system.
///
/// Holds the triple-product tensor and scratch buffers; evaluation methods
/// take `&mut self` but are pure in their field arguments.
pub struct BurgersSystem {
    n_modes: usize,
    c: Arc<TripleTensor>,
    params: BurgersParams,
    bilinear: ChaosBilinear,
    /// `-i k / 2` per band index
    advect: Vec<Complex64>,
    /// `k²` per band index
    k2: Vec<f64>,
    nonlinear: PcField,
    pub(crate) aux: PcField,
}

impl BurgersSystem {
    pub fn new(n_modes: usize, c: Arc<TripleTensor>, params: BurgersParams, method: ConvolutionMethod) -> Result<Self> {
        let n_pc = c.order();
        if !(params.nu >= 0.0) {
            return Err(MzError::InvalidArgument(format!(
                "viscosity must be non-negative, got {}",
                params.nu
            )));
        }
        let nonlinear = PcField::zeros(n_modes, n_pc)?;
        let (advect, k2) = (0..n_modes)
            .map(|idx| {
                let k = nonlinear.wavenumber(idx) as f64;
                (Complex64::new(0.0, -k / 2.0), k * k)
            })
            .unzip();
        Ok(Self {
            n_modes,
            bilinear: ChaosBilinear::new(n_modes, n_pc, method),
            aux: nonlinear.clone(),
            nonlinear,
            c,
            params,
            advect,
            k2,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of chaos orders `M` of the full system.
    pub fn n_pc(&self) -> usize {
        self.c.order()
    }

    pub fn params(&self) -> BurgersParams {
        self.params
    }

    pub fn tensor(&self) -> &TripleTensor {
        &self.c
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.bilinear.method
    }

    /// Time derivative of the full system, including the viscous term.
    pub fn full_rhs(&mut self, u: &PcField, du: &mut PcField) {
        self.galerkin_rhs(u, self.n_pc(), du);
    }

    pub fn full_rhs_owned(&mut self, u: &PcField) -> PcField {
        let mut du = PcField::zeros(self.n_modes, self.n_pc()).expect("valid shape");
        self.full_rhs(u, &mut du);
        du
    }

    /// The Galerkin right-hand side with every chaos sum restricted to `0..orders`,
    /// written to the first `orders` rows of `du`.
    pub(crate) fn galerkin_rhs(&mut self, u: &PcField, orders: usize, du: &mut PcField) {
        assert!(orders <= self.n_pc() && orders <= u.n_pc() && orders <= du.n_pc());
        assert_eq!(u.n_modes(), self.n_modes);
        let mut nl = std::mem::replace(&mut self.nonlinear, PcField::zeros(2, 1).expect("valid shape"));
        for r in 0..orders {
            nl.row_mut(r).fill(ZERO);
        }
        self.bilinear
            .accumulate(&self.c, u, u, 0..orders, 0..orders, 0..orders, 1.0, &mut nl);
        let nu = self.params.nu;
        for r in 0..orders {
            let src = u.row(r);
            let nlr = nl.row(r);
            for (idx, d) in du.row_mut(r).iter_mut().enumerate() {
                *d = self.advect[idx] * nlr[idx] - src[idx] * (nu * self.k2[idx]);
            }
            du.row_mut(r)[0] = ZERO;
        }
        self.nonlinear = nl;
    }

    /// `out[r] = scale · (-ik/2) Σ_{l∈ls, m∈ms} c_{lmr} (a_l ⋆ b_m)` for `r ∈ rs`;
    /// other rows of `out` are left untouched. No viscous part.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn advective_sum(
        &mut self,
        a: &PcField,
        b: &PcField,
        ls: Range<usize>,
        ms: Range<usize>,
        rs: Range<usize>,
        scale: f64,
        out: &mut PcField,
        accumulate: bool,
    ) {
        let mut nl = std::mem::replace(&mut self.nonlinear, PcField::zeros(2, 1).expect("valid shape"));
        for r in rs.clone() {
            nl.row_mut(r).fill(ZERO);
        }
        self.bilinear.accumulate(&self.c, a, b, ls, ms, rs.clone(), scale, &mut nl);
        for r in rs {
            let nlr = nl.row(r);
            let row = out.row_mut(r);
            for (idx, o) in row.iter_mut().enumerate() {
                let v = self.advect[idx] * nlr[idx];
                if accumulate {
                    *o += v;
                } else {
                    *o = v;
                }
            }
            row[0] = ZERO;
        }
        self.nonlinear = nl;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sin_row(n: usize) -> Vec<Complex64> {
        let mut row = vec![ZERO; n];
        row[n / 2 + 1] = c(0.0, -0.5);
        row[n / 2 - 1] = c(0.0, 0.5);
        row
    }

    /// Brute-force oracle: enumerate every (p, q) pair in the band.
    fn brute_convolution(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = a.len() as i64;
        let kmin = -n / 2;
        let mut out = vec![ZERO; a.len()];
        for p in kmin..kmin + n {
            for q in kmin..kmin + n {
                let k = p + q;
                if (kmin..kmin + n).contains(&k) {
                    out[(k - kmin) as usize] += a[(p - kmin) as usize] * b[(q - kmin) as usize];
                }
            }
        }
        out
    }

    fn system(n: usize, m: usize, nu: f64, method: ConvolutionMethod) -> BurgersSystem {
        let params = BurgersParams { nu, ..Default::default() };
        BurgersSystem::new(n, Arc::new(TripleTensor::new(m).unwrap()), params, method).unwrap()
    }

    pub(crate) fn random_real_field(n: usize, m: usize, seed: u64) -> PcField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u = PcField::zeros(n, m).unwrap();
        for r in 0..m {
            u.set(0, r, c(rng.gen_range(-1.0..1.0), 0.0));
            for k in 1..(n / 2) as i64 {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (k as f64);
                u.set(k, r, v);
                u.set(-k, r, v.conj());
            }
        }
        u
    }

    #[test]
    fn initial_field_coefficients() {
        let u = build_initial_field(8, 2, 1.0, 1.0).unwrap();
        assert_eq!(u.get(1, 0), c(0.0, -0.5));
        assert_eq!(u.get(-1, 1), c(0.0, 0.5));
        assert_eq!(u.get(2, 0), ZERO);
        assert_eq!(u.reality_defect(), 0.0);

        let det = build_initial_field(8, 2, 1.0, 0.0).unwrap();
        assert!(det.row(1).iter().all(|z| z.norm() == 0.0));
        assert!(build_initial_field(8, 1, 1.0, 1.0).is_err());
        assert!(build_initial_field(2, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn convolution_examples() {
        let a = sin_row(4); // F = [-2, 1]
        let mut out = vec![ZERO; 4];
        truncated_convolution(&a, &a, &mut out);
        assert_abs_diff_eq!(out[2].re, 0.5, epsilon = 1e-15); // k = 0
        assert_abs_diff_eq!(out[0].re, -0.25, epsilon = 1e-15); // k = -2
        assert_eq!(out[3], ZERO); // k = 1
    }

    #[test]
    fn convolution_matches_brute_force() {
        for n in [4, 6, 10, 16] {
            let u = random_real_field(n, 2, n as u64);
            let mut out = vec![ZERO; n];
            truncated_convolution(u.row(0), u.row(1), &mut out);
            for (x, y) in out.iter().zip(brute_convolution(u.row(0), u.row(1))) {
                assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_sin_generates_second_harmonic() {
        let mut sys = system(8, 1, 0.0, ConvolutionMethod::Direct);
        let u = deterministic_initial_field(8, 1.0).unwrap();
        let du = sys.full_rhs_owned(&u);
        assert_abs_diff_eq!(du.get(2, 0).im, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(du.get(2, 0).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(du.get(-2, 0).im, -0.25, epsilon = 1e-15);
        assert_eq!(du.get(0, 0), ZERO);
    }

    #[test]
    fn viscous_decay_of_first_mode() {
        let mut sys = system(8, 2, 0.03, ConvolutionMethod::Direct);
        let u = build_initial_field(8, 2, 1.0, 0.0).unwrap();
        let du = sys.full_rhs_owned(&u);
        assert_abs_diff_eq!(du.get(1, 0).re, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(du.get(1, 0).im, 0.015, epsilon = 1e-15);
    }

    #[test]
    fn zero_mode_has_no_tendency() {
        let mut sys = system(16, 3, 0.1, ConvolutionMethod::Direct);
        let u = random_real_field(16, 3, 4);
        let du = sys.full_rhs_owned(&u);
        for r in 0..3 {
            assert_eq!(du.get(0, r), ZERO);
        }
    }

    #[test]
    fn single_order_reduces_to_scalar_burgers() {
        let n = 12;
        let u = random_real_field(n, 1, 9);
        let mut sys = system(n, 1, 0.07, ConvolutionMethod::Direct);
        let du = sys.full_rhs_owned(&u);
        let conv = brute_convolution(u.row(0), u.row(0));
        for idx in 1..n {
            let k = u.wavenumber(idx) as f64;
            let expected = c(0.0, -k / 2.0) * conv[idx] - u.row(0)[idx] * (0.07 * k * k);
            assert_abs_diff_eq!((du.row(0)[idx] - expected).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn fft_path_matches_direct() {
        for (n, m) in [(8, 1), (16, 3), (32, 4), (30, 7)] {
            let u = random_real_field(n, m, 77);
            let direct = system(n, m, 0.05, ConvolutionMethod::Direct).full_rhs_owned(&u);
            let fft = system(n, m, 0.05, ConvolutionMethod::Fft).full_rhs_owned(&u);
            assert!(direct.max_abs_diff(&fft) < 1e-12, "n={n} m={m}");
        }
    }

    fn weighted_inner(du: &PcField, u: &PcField) -> f64 {
        (0..u.n_pc())
            .map(|r| {
                let w = 1.0 / (2 * r + 1) as f64;
                du.row(r).iter().zip(u.row(r)).map(|(a, b)| (a * b.conj()).re).sum::<f64>() * w
            })
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rhs_preserves_reality(seed in any::<u64>(), half in 2usize..16, m in 1usize..5) {
            let n = 2 * half;
            let mut u = random_real_field(n, m, seed);
            u.pin_unpaired_mode();
            let du = system(n, m, 0.03, ConvolutionMethod::Direct).full_rhs_owned(&u);
            prop_assert!(du.reality_defect() < 1e-13);
        }

        #[test]
        fn inviscid_energy_is_conserved(seed in any::<u64>(), half in 2usize..16, m in 1usize..5) {
            let n = 2 * half;
            let u = random_real_field(n, m, seed);
            let du = system(n, m, 0.0, ConvolutionMethod::Direct).full_rhs_owned(&u);
            prop_assert!(weighted_inner(&du, &u).abs() < 1e-10);
        }

        #[test]
        fn dissipation_identity(seed in any::<u64>(), half in 2usize..16, m in 1usize..5, nu in 0.001f64..0.5) {
            let n = 2 * half;
            let u = random_real_field(n, m, seed);
            let du = system(n, m, nu, ConvolutionMethod::Direct).full_rhs_owned(&u);
            let dissipation: f64 = (0..m)
                .map(|r| {
                    u.row(r).iter().enumerate()
                        .map(|(idx, z)| (u.wavenumber(idx) as f64).powi(2) * z.norm_sqr())
                        .sum::<f64>() / (2 * r + 1) as f64
                })
                .sum();
            prop_assert!((weighted_inner(&du, &u) + nu * dissipation).abs() < 1e-10);
        }
    }
}
