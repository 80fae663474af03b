//! Correlation statistics and deterministic spectra of a mask.
//!
//! Counts (`a[k]`, `R_{k,l}`, `gamma_k`) are exact integers. Spectra are
//! double-precision DFTs evaluated directly; twiddles are looked up by the
//! integer phase `(nu * n) mod N` so no phase error accumulates.

use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

use crate::masks::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SpectraError {
    #[error("delay index 0 is the blind range")]
    BlindRange,
    #[error("delay index {index} outside 1..{period}")]
    DelayOutOfRange { index: usize, period: usize },
}

/// Checks that `k` is a usable delay: `1 <= k <= N - 1`.
pub fn check_delay(k: usize, period: usize) -> Result<(), SpectraError> {
    match k {
        0 => Err(SpectraError::BlindRange),
        k if k >= period => Err(SpectraError::DelayOutOfRange { index: k, period }),
        _ => Ok(()),
    }
}

/// Periodic autocorrelation `a[k] = sum_n m_t[n] m_t[n-k]`, `k = 0..N-1`.
pub fn autocorr(mask: &Mask) -> Vec<usize> {
    let n = mask.period();
    let support = mask.support();
    let mut a = vec![0usize; n];
    for &i in &support {
        for &j in &support {
            a[(i + n - j) % n] += 1;
        }
    }
    a
}

/// `R_{k,l} = sum_n m_r[n] m_t[n-k] m_t[n-l]`: echo samples received at
/// delay `k` that overlap a transmit slot of the reference at delay `l`.
pub fn cross_term(mask: &Mask, k: usize, l: usize) -> Result<usize, SpectraError> {
    let n = mask.period();
    check_delay(k, n)?;
    check_delay(l, n)?;
    let (k, l) = (k as i64, l as i64);
    Ok((0..n as i64).filter(|&i| mask.at(i) == 0 && mask.at(i - k) == 1 && mask.at(i - l) == 1).count())
}

/// `gamma_k[n] = m_r[n] m_t[n-k]` over one period: the received part of an
/// echo delayed by `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSequence {
    pub delay: usize,
    pub values: Vec<u8>,
}

impl GammaSequence {
    /// Number of received echo samples per period, `rho N - a[k]`.
    pub fn count(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }
}

/// Any `k` is accepted and reduced mod N; `k = 0` gives the all-zero
/// sequence.
pub fn gamma(mask: &Mask, k: usize) -> GammaSequence {
    let n = mask.period();
    let k = (k % n) as i64;
    let values = (0..n as i64).map(|i| (1 - mask.at(i)) * mask.at(i - k)).collect();
    GammaSequence { delay: k as usize, values }
}

/// `exp(-j 2 pi i / len)` for `i = 0..len`.
pub(crate) fn twiddles(len: usize) -> Vec<Complex64> {
    (0..len).map(|i| Complex64::from_polar(1.0, -TAU * i as f64 / len as f64)).collect()
}

fn dft_bin(values: &[u8], nu: usize, table: &[Complex64]) -> Complex64 {
    let n = values.len();
    let nu = nu % n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        if v != 0 {
            acc += table[(nu * i) % n];
        }
    }
    acc
}

/// `S_{k,N}(nu) = sum_{n<N} gamma_k[n] exp(-j 2 pi nu n / N)`; `nu` is
/// reduced mod N.
pub fn s_kn(mask: &Mask, k: usize, nu: usize) -> Complex64 {
    let g = gamma(mask, k);
    dft_bin(&g.values, nu, &twiddles(mask.period()))
}

/// All bins `S_{k,N}(0..N)`.
pub fn s_kn_all(mask: &Mask, k: usize) -> Vec<Complex64> {
    let g = gamma(mask, k);
    let table = twiddles(mask.period());
    (0..mask.period()).map(|nu| dft_bin(&g.values, nu, &table)).collect()
}

/// `S_{k,MN}(nu)` over a CPI of `pulses` periods, without forming the
/// length-MN sum: `gamma_k` is N-periodic, so the MN-point DFT vanishes off
/// multiples of M and equals `M * S_{k,N}(nu / M)` on them.
pub fn s_kmn(mask: &Mask, k: usize, pulses: usize, nu: usize) -> Complex64 {
    assert!(pulses >= 1, "a CPI needs at least one period");
    let nu = nu % (pulses * mask.period());
    if !nu.is_multiple_of(pulses) {
        return Complex64::new(0.0, 0.0);
    }
    s_kn(mask, k, nu / pulses) * pulses as f64
}

/// `f(a) = (w - a)(N - w + a)`, exact.
pub fn doppler_energy_exact(period: usize, weight: usize, a: usize) -> u64 {
    debug_assert!(a <= weight);
    let received = (weight - a) as u64;
    received * (period as u64 - received)
}

/// `sum_{nu=1}^{N-1} |S_{k,N}(nu)|^2` in closed form, `(rho N - a[k])(N - rho N + a[k])`.
pub fn doppler_energy_f(mask: &Mask, k: usize) -> f64 {
    let a = autocorr(mask)[k % mask.period()];
    doppler_energy_exact(mask.period(), mask.weight(), a) as f64
}

/// Per-mask correlation tables.
///
/// `cross` is the full `N x N` table of `R_{k,l}` with row and column 0
/// left at zero (blind range).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralSummary {
    period: usize,
    weight: usize,
    autocorr: Vec<usize>,
    cross: Vec<usize>,
}

impl SpectralSummary {
    pub fn new(mask: &Mask) -> Self {
        let n = mask.period();
        let support = mask.support();
        let mut cross = vec![0usize; n * n];
        // For each listening slot i, the delays whose echo lands there are
        // exactly i - s for s in the support.
        let mut delays = Vec::with_capacity(support.len());
        for i in (0..n).filter(|&i| mask.bits()[i] == 0) {
            delays.clear();
            delays.extend(support.iter().map(|&s| (i + n - s) % n));
            for &k in &delays {
                for &l in &delays {
                    cross[k * n + l] += 1;
                }
            }
        }
        SpectralSummary { period: n, weight: mask.weight(), autocorr: autocorr(mask), cross }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn duty(&self) -> f64 {
        self.weight as f64 / self.period as f64
    }

    pub fn autocorr(&self) -> &[usize] {
        &self.autocorr
    }

    pub fn a(&self, k: usize) -> usize {
        self.autocorr[k % self.period]
    }

    /// `R_{k,l}`, validated.
    pub fn cross_term(&self, k: usize, l: usize) -> Result<usize, SpectraError> {
        check_delay(k, self.period)?;
        check_delay(l, self.period)?;
        Ok(self.cross[k * self.period + l])
    }

    /// Received echo samples per period at delay `k`: `rho N - a[k]`.
    pub fn received(&self, k: usize) -> usize {
        self.weight - self.a(k)
    }

    pub fn doppler_energy(&self, k: usize) -> u64 {
        doppler_energy_exact(self.period, self.weight, self.a(k))
    }

    /// `sum_{k != l} R_{k,l}` over `k, l in 1..N`.
    pub fn off_diagonal_cross_sum(&self) -> u64 {
        let n = self.period;
        let mut total = 0u64;
        for k in 1..n {
            for l in (1..n).filter(|&l| l != k) {
                total += self.cross[k * n + l] as u64;
            }
        }
        total
    }

    /// Largest `R_{k,l}` with `k != l`, both nonzero.
    pub fn max_off_diagonal_cross(&self) -> usize {
        let n = self.period;
        (1..n)
            .flat_map(|k| (1..n).filter(move |&l| l != k).map(move |l| (k, l)))
            .map(|(k, l)| self.cross[k * n + l])
            .max()
            .unwrap_or(0)
    }
}

/// `rho (1 - rho) (rho N - 1) N^2` in integers: `w (N - w) (w - 1)`.
pub fn off_diagonal_cross_sum_formula(period: usize, weight: usize) -> u64 {
    (weight * (period - weight)) as u64 * (weight as u64 - 1)
}
