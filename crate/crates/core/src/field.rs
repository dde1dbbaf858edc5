//! Polynomial-chaos coefficient field `u[k][r]` over a Fourier band.

use num_complex::Complex64;

use crate::error::{MzError, Result};

/// Complex coefficients `u_{k r}` for wavenumbers `k ∈ [-N/2, N/2 - 1]` and
/// chaos orders `r ∈ 0..M`.
///
/// Storage is row-major by chaos order: row `r` is the contiguous Fourier
/// band of that order, with index `k + N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcField {
    n_modes: usize,
    n_pc: usize,
    coeffs: Vec<Complex64>,
}

impl PcField {
    pub fn zeros(n_modes: usize, n_pc: usize) -> Result<Self> {
        validate_shape(n_modes, n_pc)?;
        Ok(Self {
            n_modes,
            n_pc,
            coeffs: vec![Complex64::new(0.0, 0.0); n_modes * n_pc],
        })
    }

    /// Wraps a flat buffer laid out as `n_pc` rows of `n_modes` values.
    pub fn from_vec(n_modes: usize, n_pc: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        validate_shape(n_modes, n_pc)?;
        if coeffs.len() != n_modes * n_pc {
            return Err(MzError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                n_modes * n_pc,
                coeffs.len()
            )));
        }
        Ok(Self {
            n_modes,
            n_pc,
            coeffs,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_pc(&self) -> usize {
        self.n_pc
    }

    /// Smallest wavenumber of the band, `-N/2`.
    pub fn k_min(&self) -> i64 {
        -(self.n_modes as i64 / 2)
    }

    /// Wavenumber stored at band index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        idx as i64 + self.k_min()
    }

    /// Band index of wavenumber `k`, if it is in the band.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let idx = k - self.k_min();
        (0..self.n_modes as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn get(&self, k: i64, r: usize) -> Complex64 {
        let idx = self.index_of(k).expect("wavenumber outside band");
        self.row(r)[idx]
    }

    pub fn set(&mut self, k: i64, r: usize, value: Complex64) {
        let idx = self.index_of(k).expect("wavenumber outside band");
        self.row_mut(r)[idx] = value;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.coeffs[r * self.n_modes..(r + 1) * self.n_modes]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        &mut self.coeffs[r * self.n_modes..(r + 1) * self.n_modes]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Zeroes the unpaired mode `k = -N/2` in every chaos row.
    pub fn pin_unpaired_mode(&mut self) {
        for r in 0..self.n_pc {
            self.row_mut(r)[0] = Complex64::new(0.0, 0.0);
        }
    }

    /// Largest violation of `u_{-k} = conj(u_k)` (including `|u_{-N/2}|`).
    pub fn reality_defect(&self) -> f64 {
        let half = self.n_modes / 2;
        let mut worst: f64 = 0.0;
        for r in 0..self.n_pc {
            let row = self.row(r);
            worst = worst.max(row[0].norm());
            for k in 0..half {
                let pos = row[half + k];
                let neg = row[half - k];
                worst = worst.max((neg - pos.conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Copy keeping only the first `n_pc` chaos rows (padding with zero rows if larger).
    pub fn with_orders(&self, n_pc: usize) -> Result<Self> {
        let mut out = Self::zeros(self.n_modes, n_pc)?;
        for r in 0..n_pc.min(self.n_pc) {
            out.row_mut(r).copy_from_slice(self.row(r));
        }
        Ok(out)
    }

    /// Max-norm of the entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n_modes, other.n_modes);
        assert_eq!(self.n_pc, other.n_pc);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn validate_shape(n_modes: usize, n_pc: usize) -> Result<()> {
    if n_modes < 2 || n_modes % 2 != 0 {
        return Err(MzError::InvalidArgument(format!(
            "number of Fourier modes must be even and at least 2, got {n_modes}"
        )));
    }
    if n_pc == 0 {
        return Err(MzError::InvalidArgument(
            "number of chaos orders must be positive".into(),
        ));
    }
    Ok(())
}
